//! End-to-end orchestration: encode, solve, extract, audit.

use serde::Serialize;

use crate::attacks::{
    best_deterministic_attacker, loss_signature, misclassification_value, uniform_attacker, DeterministicAttack,
    RandomizedAttack, VerificationSpec,
};
use crate::emitters::{run_external, BackendKind, SolverBackend};
use crate::encoder::{
    add_max_objective, encode_base_with_slack, encode_single_classifier_with_slack, extract_deterministic,
    extract_randomized, ConstraintSystem, IntervalBounds, LOSS_STRICTNESS,
};
use crate::error::{Error, Result};
use crate::milp::{solve_matrix_game, solve_milp, MilpVerdict, SolveMode, SolveStats, SolverOptions};
use crate::nnmodel::{Ensemble, LabelledDataset};
use crate::oracle::{check_certificate, CheckReport};

/// Witness values within this distance of alpha are flagged.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Slack used when retrying a witness that sat on a decision boundary.
pub const RETRY_LOSS_SLACK: f64 = LOSS_STRICTNESS;

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub attack: RandomizedAttack,
    pub report: CheckReport,
    /// The value equals alpha up to [`BOUNDARY_TOL`].
    pub exact_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    NotRobust(Witness),
    Robust,
    Unknown(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::NotRobust(_) => "NOT ROBUST",
            Verdict::Robust => "ROBUST",
            Verdict::Unknown(_) => "UNKNOWN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SystemSize {
    pub variables: usize,
    pub constraints: usize,
    pub binaries: usize,
}

impl SystemSize {
    pub fn of(cs: &ConstraintSystem) -> Self {
        SystemSize {
            variables: cs.num_vars(),
            constraints: cs.constraints().len(),
            binaries: cs.binaries().count(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub verdict: Verdict,
    pub stats: SolveStats,
    /// Objective of the accepted solution in maximize mode.
    pub objective: Option<f64>,
    pub system: SystemSize,
    pub attempts: usize,
}

/// Runs the verdict-producing system through the configured backend.
pub fn solve_system(cs: &ConstraintSystem, mode: SolveMode, backend: &SolverBackend) -> MilpVerdict {
    match backend.kind {
        BackendKind::Internal => {
            let opts = SolverOptions {
                time_budget: backend.time_budget,
                node_limit: None,
            };
            solve_milp(cs, mode, &opts)
        }
        _ => run_external(backend, cs),
    }
}

fn feasible_values(v: &MilpVerdict) -> Option<(&[f64], f64)> {
    match v {
        MilpVerdict::Feasible { values, objective, .. } => Some((values, *objective)),
        MilpVerdict::Unknown {
            incumbent: Some((values, objective)),
            ..
        } => Some((values, *objective)),
        _ => None,
    }
}

/// Decides `(epsilon, alpha)`-robustness with `spec.num_attacks` attacks.
/// Every NOT ROBUST verdict carries a witness that passed
/// [`check_certificate`].
pub fn verify(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    spec: &VerificationSpec,
    mode: SolveMode,
    backend: &SolverBackend,
) -> Result<VerifyOutcome> {
    let mut stats = SolveStats::default();
    let mut last_failure = String::new();
    let mut system = None;
    for (attempt, slack) in [0.0, RETRY_LOSS_SLACK].into_iter().enumerate() {
        let mut cs = encode_base_with_slack(ensemble, data, spec, &IntervalBounds, slack)?;
        if mode == SolveMode::Maximize {
            add_max_objective(&mut cs);
        }
        system.get_or_insert(SystemSize::of(&cs));
        log::info!(
            "attempt {}: {} variables, {} constraints, {} binaries",
            attempt + 1,
            cs.num_vars(),
            cs.constraints().len(),
            cs.binaries().count()
        );
        let verdict = solve_system(&cs, mode, backend);
        let s = verdict.stats();
        stats.nodes += s.nodes;
        stats.lp_iterations += s.lp_iterations;
        stats.incumbents += s.incumbents;
        stats.elapsed += s.elapsed;
        let done = |verdict, objective| VerifyOutcome {
            verdict,
            stats: stats.clone(),
            objective,
            system: system.unwrap(),
            attempts: attempt + 1,
        };
        if let Some((values, objective)) = feasible_values(&verdict) {
            let attack = extract_randomized(&cs, values, spec.epsilon)?;
            let report = check_certificate(ensemble, data, &attack, spec)?;
            if report.pass {
                let exact_boundary = (report.value - spec.alpha).abs() <= BOUNDARY_TOL;
                let objective = (mode == SolveMode::Maximize).then_some(objective);
                return Ok(done(
                    Verdict::NotRobust(Witness {
                        attack,
                        report,
                        exact_boundary,
                    }),
                    objective,
                ));
            }
            log::info!(
                "solver witness failed the certificate check (value {}, alpha {}); retrying with loss slack",
                report.value,
                spec.alpha
            );
            last_failure = format!("solver witness failed the certificate check (value {})", report.value);
            continue;
        }
        return Ok(match verdict {
            MilpVerdict::Infeasible { .. } if attempt == 0 => done(Verdict::Robust, None),
            MilpVerdict::Infeasible { .. } => done(
                Verdict::Unknown(format!("{last_failure}; no witness clear of the decision boundary")),
                None,
            ),
            MilpVerdict::Unknown { reason, .. } => done(Verdict::Unknown(reason.to_string()), None),
            MilpVerdict::Feasible { .. } => unreachable!("handled above"),
        });
    }
    Ok(VerifyOutcome {
        verdict: Verdict::Unknown(last_failure),
        stats,
        objective: None,
        system: system.expect("at least one attempt"),
        attempts: 2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Uniform,
    Bda,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMilpResult {
    pub objective: f64,
    pub value: f64,
    pub attack: RandomizedAttack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub kind: BaselineKind,
    /// One optimal single-classifier attack per ensemble member.
    pub per_classifier: Vec<DeterministicAttack>,
    pub attack: RandomizedAttack,
    pub value: f64,
    pub max_milp: Option<MaxMilpResult>,
}

/// Per-classifier optimal attacks, solved in parallel.
pub fn per_classifier_attacks(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    epsilon: f64,
    margin: f64,
    backend: &SolverBackend,
) -> Result<Vec<DeterministicAttack>> {
    data.validate_for(ensemble)?;
    let solve_one = |c: usize| -> Result<DeterministicAttack> {
        let net = &ensemble.networks()[c];
        let cs = encode_single_classifier_with_slack(net, data, epsilon, margin, &IntervalBounds, RETRY_LOSS_SLACK)?;
        let verdict = solve_system(&cs, SolveMode::Maximize, backend);
        match feasible_values(&verdict) {
            Some((values, objective)) => {
                log::info!("classifier {c}: single attack misclassifies {objective} points");
                Ok(extract_deterministic(&cs, values, 0, epsilon))
            }
            None => match verdict {
                MilpVerdict::Unknown { reason, .. } => {
                    Err(Error::Solver(format!("single-classifier solve for classifier {c}: {reason}")))
                }
                _ => Err(Error::Solver(format!(
                    "single-classifier system for classifier {c} is infeasible"
                ))),
            },
        }
    };
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..ensemble.len()).map(|c| s.spawn(move || solve_one(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("baseline worker panicked"))
            .collect()
    })
}

/// Best probabilities for a fixed attack set. Keeps the input distribution
/// when the game does not improve on it.
pub fn reoptimize_probs(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    attack: RandomizedAttack,
    margin: f64,
) -> Result<(RandomizedAttack, f64)> {
    let current = misclassification_value(ensemble, data, &attack, margin)?;
    let n = data.len() as f64;
    let matrix = attack
        .attacks()
        .iter()
        .map(|a| Ok(loss_signature(ensemble, data, a, margin)?.0.iter().map(|&k| k as f64 / n).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let game = solve_matrix_game(&matrix)?;
    let mut probs: Vec<f64> = game.probs.iter().map(|p| p.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let candidate = RandomizedAttack::new(attack.attacks().to_vec(), probs)?;
    let value = misclassification_value(ensemble, data, &candidate, margin)?;
    Ok(if value > current { (candidate, value) } else { (attack, current) })
}

/// Uniform or best-deterministic baseline, optionally next to the optimum of
/// the maximising encoding with `max_milp_attacks` attacks.
pub fn baseline(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    epsilon: f64,
    margin: f64,
    kind: BaselineKind,
    max_milp_attacks: Option<usize>,
    backend: &SolverBackend,
) -> Result<BaselineReport> {
    let per_classifier = per_classifier_attacks(ensemble, data, epsilon, margin, backend)?;
    let (attack, value) = match kind {
        BaselineKind::Uniform => {
            let ra = uniform_attacker(per_classifier.clone())?;
            let v = misclassification_value(ensemble, data, &ra, margin)?;
            (ra, v)
        }
        BaselineKind::Bda => {
            let (a, v) = best_deterministic_attacker(ensemble, data, &per_classifier, margin)?;
            (RandomizedAttack::deterministic(a), v)
        }
    };
    let max_milp = match max_milp_attacks {
        None => None,
        Some(n) => {
            // Requiring the baseline value keeps the system feasible and makes
            // the reported optimum at least as strong as the baseline.
            let spec = VerificationSpec {
                epsilon,
                alpha: (value - 1e-9).max(0.0),
                num_attacks: n,
                margin,
            };
            let out = verify(ensemble, data, &spec, SolveMode::Maximize, backend)?;
            match out.verdict {
                Verdict::NotRobust(w) => {
                    let (attack, value) = reoptimize_probs(ensemble, data, w.attack, margin)?;
                    Some(MaxMilpResult {
                        objective: out.objective.unwrap_or(f64::NAN),
                        value,
                        attack,
                    })
                }
                Verdict::Robust => return Err(Error::Solver("maximising system at the baseline value was infeasible".into())),
                Verdict::Unknown(r) => return Err(Error::Solver(format!("maximising solve: {r}"))),
            }
        }
    };
    Ok(BaselineReport {
        kind,
        per_classifier,
        attack,
        value,
        max_milp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn internal() -> SolverBackend {
        SolverBackend::internal(None)
    }

    #[test]
    fn verify_two_classifiers() {
        let (e, d) = fixtures::two_linear_classifiers();
        let spec = VerificationSpec::new(2.0, 0.5, 2, 1e-4).unwrap();
        let out = verify(&e, &d, &spec, SolveMode::Feasibility, &internal()).unwrap();
        match out.verdict {
            Verdict::NotRobust(w) => {
                assert!((w.report.value - 0.5).abs() < 1e-6);
                assert!(w.exact_boundary);
            }
            v => panic!("{v:?}"),
        }
        let spec = VerificationSpec::new(2.0, 0.51, 2, 1e-4).unwrap();
        let out = verify(&e, &d, &spec, SolveMode::Feasibility, &internal()).unwrap();
        assert_eq!(out.verdict, Verdict::Robust);
    }

    #[test]
    fn verify_perfect_ensemble_is_robust() {
        let (e, d) = fixtures::perfect_ensemble(2, 2);
        let spec = VerificationSpec::new(10.0, 0.1, 2, 1e-4).unwrap();
        let out = verify(&e, &d, &spec, SolveMode::Feasibility, &internal()).unwrap();
        assert_eq!(out.verdict, Verdict::Robust);
    }

    #[test]
    fn baselines_on_two_classifiers() {
        let (e, d) = fixtures::two_linear_classifiers();
        let ua = baseline(&e, &d, 2.0, 1e-4, BaselineKind::Uniform, Some(2), &internal()).unwrap();
        assert!((ua.value - 0.5).abs() < 1e-9);
        let mm = ua.max_milp.unwrap();
        assert!((mm.objective - 1.0).abs() < 1e-6);
        assert!(mm.value >= ua.value);
        assert!((mm.value - 0.5).abs() < 1e-9);
        let bda = baseline(&e, &d, 2.0, 1e-4, BaselineKind::Bda, None, &internal()).unwrap();
        assert_eq!(bda.value, 0.0);
    }
}
