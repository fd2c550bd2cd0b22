//! Robustness verification for ensembles of ReLU classifiers against
//! randomized L1-bounded attacks.
//!
//! The crate builds a mixed-integer encoding of "there is a randomized attack
//! whose misclassification value reaches alpha", solves it in-process or via
//! an external LP/SMT solver, and re-checks every witness by forward passes.

pub mod attacks;
pub mod emitters;
pub mod encoder;
pub mod error;
pub mod fixtures;
pub mod gadgets;
pub mod milp;
pub mod nnmodel;
pub mod oracle;
pub mod pipeline;

pub use attacks::{
    DeterministicAttack, LossSignature, RandomizedAttack, VerificationSpec, WitnessFile,
};
pub use emitters::{BackendKind, SolutionDialect, SolverBackend};
pub use encoder::{ConstraintSystem, Domain, LinExpr, Relation, VarId, DEFAULT_MARGIN};
pub use error::{Error, Result};
pub use milp::{MilpVerdict, SolveMode, SolverOptions, StandardFormLP};
pub use nnmodel::{Classification, Ensemble, IntervalBox, Label, LabelledDataset, Layer, NeuralNetwork};
pub use oracle::CheckReport;
pub use pipeline::{BaselineKind, Verdict, VerifyOutcome};
