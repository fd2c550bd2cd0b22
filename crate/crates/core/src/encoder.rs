//! Solver-agnostic constraint systems and the mixed-integer encoding of the
//! attack-existence problem.
//!
//! A [`ConstraintSystem`] is a flat list of typed variables and linear
//! constraints. Non-linear pieces (ReLU, max-pooling, absolute values, the
//! zero-one loss and the probability-times-loss product) are linearised with
//! big-M constraints; each such piece is also recorded as a [`Gadget`] so the
//! SMT emitter can write the native `ite` form instead.

use std::collections::HashMap;

use crate::attacks::{DeterministicAttack, RandomizedAttack, VerificationSpec};
use crate::error::{Error, Result};
use crate::nnmodel::{propagate_bounds, Ensemble, IntervalBox, Label, LabelledDataset, Layer, NeuralNetwork};

/// Default separation margin for "correctly classified".
pub const DEFAULT_MARGIN: f64 = 1e-4;

/// Extra gap demanded when a loss binary is 0, so correct classification is
/// a strict inequality even at margin 0.
pub const LOSS_STRICTNESS: f64 = 1e-5;

/// Big-M constant for the probability/binary product.
pub const PRODUCT_BIG_M: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Continuous { lo: f64, hi: f64 },
    Binary,
}

impl Domain {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Continuous { lo, hi } => (lo, hi),
            Domain::Binary => (0.0, 1.0),
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Domain::Binary)
    }
}

/// Which encoding copy a variable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Site {
    pub classifier: usize,
    pub attack: usize,
    pub point: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    Attack { attack: usize, point: usize, coord: usize },
    AbsValue { attack: usize, point: usize, coord: usize },
    Probability { attack: usize },
    Input { attack: usize, point: usize, coord: usize },
    Activation { site: Site, layer: usize, neuron: usize },
    ReluPhase { site: Site, layer: usize, neuron: usize },
    PoolSelect { site: Site, layer: usize, neuron: usize, slot: usize },
    Loss { site: Site },
    LossWitness { site: Site, label: usize },
    Product { site: Site },
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
    pub role: VarRole,
}

/// `constant + sum(coef * var)`, with at most one term per variable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(v: VarId) -> Self {
        LinExpr::new().plus(v, 1.0)
    }

    /// Adds `coef * v`, merging with an existing term for `v`.
    pub fn add(&mut self, v: VarId, coef: f64) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.0 == v) {
            t.1 += coef;
        } else {
            self.terms.push((v, coef));
        }
    }

    pub fn plus(mut self, v: VarId, coef: f64) -> Self {
        self.add(v, coef);
        self
    }

    pub fn offset(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * values[v.0]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `lhs (<=|>=|=) 0`; any right-hand-side constant lives in `lhs.constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub lhs: LinExpr,
    pub relation: Relation,
}

impl Constraint {
    pub fn violation(&self, values: &[f64]) -> f64 {
        let v = self.lhs.eval(values);
        match self.relation {
            Relation::Le => v.max(0.0),
            Relation::Ge => (-v).max(0.0),
            Relation::Eq => v.abs(),
        }
    }
}

/// A non-linear piece and the linear constraints that linearise it.
#[derive(Debug, Clone, PartialEq)]
pub enum Gadget {
    /// `out = max(0, input)`, `phase = [input >= 0]`.
    Relu {
        out: VarId,
        input: VarId,
        phase: VarId,
        constraints: Vec<usize>,
    },
    /// `out = max(inputs)`; `select[s]` marks the first maximal input.
    Max {
        out: VarId,
        inputs: Vec<VarId>,
        select: Vec<VarId>,
        constraints: Vec<usize>,
    },
    /// `out = |input|`.
    Abs {
        out: VarId,
        input: VarId,
        constraints: Vec<usize>,
    },
    /// `out = prob * binary`.
    Product {
        out: VarId,
        prob: VarId,
        binary: VarId,
        constraints: Vec<usize>,
    },
    /// `loss = 0` iff `outputs[truth] - outputs[k] >= correct_gap` for all
    /// `k != truth`; `witnesses[k] = [outputs[truth] - outputs[k] <= loss_gap]`.
    Loss {
        loss: VarId,
        outputs: Vec<VarId>,
        truth: usize,
        correct_gap: f64,
        loss_gap: f64,
        witnesses: Vec<(usize, VarId)>,
        constraints: Vec<usize>,
    },
}

impl Gadget {
    pub fn replaced_constraints(&self) -> &[usize] {
        match self {
            Gadget::Relu { constraints, .. }
            | Gadget::Max { constraints, .. }
            | Gadget::Abs { constraints, .. }
            | Gadget::Product { constraints, .. }
            | Gadget::Loss { constraints, .. } => constraints,
        }
    }
}

/// A big-M constant and the range it has to dominate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM {
    pub constraint: usize,
    pub value: f64,
    pub guarded_width: f64,
}

/// Where the attack-level variables live, indexed `[i][j][k]` for attack `i`,
/// point `j`, coordinate `k` and `[c][i][j]` for per-classifier copies.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttackLayout {
    pub num_classifiers: usize,
    pub num_attacks: usize,
    pub num_points: usize,
    pub dim: usize,
    pub deltas: Vec<Vec<Vec<VarId>>>,
    pub probs: Vec<VarId>,
    pub losses: Vec<Vec<Vec<VarId>>>,
    pub products: Vec<Vec<Vec<VarId>>>,
    pub outputs: Vec<Vec<Vec<Vec<VarId>>>>,
}

#[derive(Debug, Clone, Default)]
pub struct ConstraintSystem {
    vars: Vec<Variable>,
    by_name: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    /// Maximised when present.
    pub objective: Option<LinExpr>,
    gadgets: Vec<Gadget>,
    big_ms: Vec<BigM>,
    pub layout: AttackLayout,
}

/// First violated requirement found by [`ConstraintSystem::audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditFailure {
    pub what: String,
    pub amount: f64,
}

impl std::fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} violated by {:e}", self.what, self.amount)
    }
}

impl ConstraintSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, domain: Domain, role: VarRole) -> Result<VarId> {
        let name = name.into();
        if let Domain::Continuous { lo, hi } = domain {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::invalid(format!("variable {name} has empty domain [{lo}, {hi}]")));
            }
        }
        if self.by_name.contains_key(&name) {
            return Err(Error::invalid(format!("duplicate variable name {name}")));
        }
        let id = VarId(self.vars.len());
        self.by_name.insert(name.clone(), id);
        self.vars.push(Variable { name, domain, role });
        Ok(id)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, lhs: LinExpr, relation: Relation) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            lhs,
            relation,
        });
        self.constraints.len() - 1
    }

    fn add_big_m(&mut self, constraint: usize, value: f64, guarded_width: f64, what: &str) -> Result<()> {
        if !value.is_finite() || !guarded_width.is_finite() {
            return Err(Error::UnboundedBigM { name: what.to_string() });
        }
        self.big_ms.push(BigM {
            constraint,
            value,
            guarded_width,
        });
        Ok(())
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn gadgets(&self) -> &[Gadget] {
        &self.gadgets
    }

    pub fn big_ms(&self) -> &[BigM] {
        &self.big_ms
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.domain.is_binary())
            .map(|(i, _)| VarId(i))
    }

    /// Pins a variable to one value.
    pub fn fix_var(&mut self, id: VarId, value: f64) {
        self.vars[id.0].domain = Domain::Continuous { lo: value, hi: value };
    }

    pub fn set_domain(&mut self, id: VarId, domain: Domain) {
        self.vars[id.0].domain = domain;
    }

    pub fn count_roles(&self, pred: impl Fn(&VarRole) -> bool) -> usize {
        self.vars.iter().filter(|v| pred(&v.role)).count()
    }

    /// Structural checks: declared variables, finite coefficients, big-M validity.
    pub fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        for c in &self.constraints {
            if !c.lhs.constant.is_finite() {
                return Err(Error::invalid(format!("constraint {} has a non-finite constant", c.name)));
            }
            for (v, coef) in &c.lhs.terms {
                if v.0 >= n {
                    return Err(Error::invalid(format!("constraint {} references an undeclared variable", c.name)));
                }
                if !coef.is_finite() {
                    return Err(Error::invalid(format!("constraint {} has a non-finite coefficient", c.name)));
                }
            }
        }
        for m in &self.big_ms {
            if !(m.value.is_finite() && m.value >= m.guarded_width) {
                return Err(Error::invalid(format!(
                    "big-M {} of constraint {} does not cover width {}",
                    m.value, self.constraints[m.constraint].name, m.guarded_width
                )));
            }
        }
        Ok(())
    }

    /// Checks bounds, integrality and every constraint within `tol`.
    pub fn audit(&self, values: &[f64], tol: f64) -> std::result::Result<(), AuditFailure> {
        if values.len() != self.vars.len() {
            return Err(AuditFailure {
                what: format!("assignment length {} (expected {})", values.len(), self.vars.len()),
                amount: f64::INFINITY,
            });
        }
        for (v, &x) in self.vars.iter().zip(values) {
            if !x.is_finite() {
                return Err(AuditFailure {
                    what: format!("value of {}", v.name),
                    amount: f64::INFINITY,
                });
            }
            let (lo, hi) = v.domain.bounds();
            let out = (lo - x).max(x - hi).max(0.0);
            if out > tol {
                return Err(AuditFailure {
                    what: format!("bounds of {}", v.name),
                    amount: out,
                });
            }
            if v.domain.is_binary() {
                let frac = x.min(1.0 - x).abs();
                if frac > tol {
                    return Err(AuditFailure {
                        what: format!("integrality of {}", v.name),
                        amount: frac,
                    });
                }
            }
        }
        for c in &self.constraints {
            let viol = c.violation(values);
            if viol > tol {
                return Err(AuditFailure {
                    what: format!("constraint {}", c.name),
                    amount: viol,
                });
            }
        }
        Ok(())
    }
}

fn finite_range(lo: f64, hi: f64, name: &str) -> Result<()> {
    if lo.is_finite() && hi.is_finite() {
        Ok(())
    } else {
        Err(Error::UnboundedBigM { name: name.to_string() })
    }
}

/// Encodes one network copy and returns its output variables.
///
/// `bounds` must hold one box per layer boundary as produced by
/// [`propagate_bounds`] over a region containing every admissible input.
pub fn encode_network(
    cs: &mut ConstraintSystem,
    net: &NeuralNetwork,
    input_vars: &[VarId],
    bounds: &[IntervalBox],
    tag: &str,
    site: Site,
) -> Result<Vec<VarId>> {
    if input_vars.len() != net.input_dim() {
        return Err(Error::Shape(format!(
            "{} input variables for a network with {} inputs",
            input_vars.len(),
            net.input_dim()
        )));
    }
    if bounds.len() != net.layers().len() + 1 {
        return Err(Error::Shape(format!(
            "{} bound boxes for {} layers",
            bounds.len(),
            net.layers().len()
        )));
    }
    let mut cur = input_vars.to_vec();
    for (l, (layer, shape)) in net.layers().iter().zip(net.shapes()).enumerate() {
        let (pre, post) = (&bounds[l], &bounds[l + 1]);
        let act = |n: usize| VarRole::Activation {
            site,
            layer: l,
            neuron: n,
        };
        let mut next = Vec::with_capacity(post.len());
        match layer {
            Layer::Dense { .. } | Layer::Conv2d { .. } => {
                let rows = layer.affine_rows(shape).expect("affine layer");
                for (n, row) in rows.into_iter().enumerate() {
                    let name = format!("act_{tag}_l{l}_n{n}");
                    finite_range(post.lower[n], post.upper[n], &name)?;
                    let y = cs.add_var(
                        name,
                        Domain::Continuous {
                            lo: post.lower[n],
                            hi: post.upper[n],
                        },
                        act(n),
                    )?;
                    let mut e = LinExpr::constant(row.bias).plus(y, -1.0);
                    for (idx, coef) in row.terms {
                        e.add(cur[idx], coef);
                    }
                    cs.add_constraint(format!("c_aff_{tag}_l{l}_n{n}"), e, Relation::Eq);
                    next.push(y);
                }
            }
            Layer::Relu => {
                for (n, &z) in cur.iter().enumerate() {
                    let (lo, hi) = (pre.lower[n], pre.upper[n]);
                    let name = format!("act_{tag}_l{l}_n{n}");
                    finite_range(lo, hi, &name)?;
                    if hi <= 0.0 {
                        next.push(cs.add_var(name, Domain::Continuous { lo: 0.0, hi: 0.0 }, act(n))?);
                    } else if lo >= 0.0 {
                        let y = cs.add_var(name, Domain::Continuous { lo, hi }, act(n))?;
                        cs.add_constraint(
                            format!("c_relu_id_{tag}_l{l}_n{n}"),
                            LinExpr::var(y).plus(z, -1.0),
                            Relation::Eq,
                        );
                        next.push(y);
                    } else {
                        let y = cs.add_var(name.clone(), Domain::Continuous { lo: 0.0, hi }, act(n))?;
                        let b = cs.add_var(
                            format!("rb_{tag}_l{l}_n{n}"),
                            Domain::Binary,
                            VarRole::ReluPhase {
                                site,
                                layer: l,
                                neuron: n,
                            },
                        )?;
                        let ge = cs.add_constraint(
                            format!("c_relu_ge_{tag}_l{l}_n{n}"),
                            LinExpr::var(y).plus(z, -1.0),
                            Relation::Ge,
                        );
                        // y <= z - lo (1 - b)
                        let up_z = cs.add_constraint(
                            format!("c_relu_ub_{tag}_l{l}_n{n}"),
                            LinExpr::var(y).plus(z, -1.0).plus(b, -lo).offset(lo),
                            Relation::Le,
                        );
                        // y <= hi b
                        let up_b = cs.add_constraint(
                            format!("c_relu_on_{tag}_l{l}_n{n}"),
                            LinExpr::var(y).plus(b, -hi),
                            Relation::Le,
                        );
                        cs.add_big_m(up_z, -lo, -lo, &name)?;
                        cs.add_big_m(up_b, hi, hi, &name)?;
                        cs.gadgets.push(Gadget::Relu {
                            out: y,
                            input: z,
                            phase: b,
                            constraints: vec![ge, up_z, up_b],
                        });
                        next.push(y);
                    }
                }
            }
            Layer::MaxPool { .. } => {
                let windows = layer.pool_windows(shape).expect("pooling layer");
                for (n, win) in windows.iter().enumerate() {
                    let name = format!("act_{tag}_l{l}_n{n}");
                    let (ylo, yhi) = (post.lower[n], post.upper[n]);
                    finite_range(ylo, yhi, &name)?;
                    let y = cs.add_var(name.clone(), Domain::Continuous { lo: ylo, hi: yhi }, act(n))?;
                    if win.len() == 1 {
                        cs.add_constraint(
                            format!("c_pool_id_{tag}_l{l}_n{n}"),
                            LinExpr::var(y).plus(cur[win[0]], -1.0),
                            Relation::Eq,
                        );
                        next.push(y);
                        continue;
                    }
                    let max_hi = win.iter().map(|&s| pre.upper[s]).fold(f64::NEG_INFINITY, f64::max);
                    let mut constraints = Vec::new();
                    let mut select = Vec::new();
                    let mut sum = LinExpr::constant(-1.0);
                    for (slot, &s) in win.iter().enumerate() {
                        let z = cur[s];
                        constraints.push(cs.add_constraint(
                            format!("c_pool_ge_{tag}_l{l}_n{n}_s{slot}"),
                            LinExpr::var(y).plus(z, -1.0),
                            Relation::Ge,
                        ));
                        let b = cs.add_var(
                            format!("mb_{tag}_l{l}_n{n}_s{slot}"),
                            Domain::Binary,
                            VarRole::PoolSelect {
                                site,
                                layer: l,
                                neuron: n,
                                slot,
                            },
                        )?;
                        sum.add(b, 1.0);
                        let m = max_hi - pre.lower[s];
                        // y <= z_s + M (1 - b_s)
                        let ub = cs.add_constraint(
                            format!("c_pool_ub_{tag}_l{l}_n{n}_s{slot}"),
                            LinExpr::var(y).plus(z, -1.0).plus(b, m).offset(-m),
                            Relation::Le,
                        );
                        cs.add_big_m(ub, m, max_hi - pre.lower[s], &name)?;
                        constraints.push(ub);
                        select.push(b);
                    }
                    constraints.push(cs.add_constraint(format!("c_pool_one_{tag}_l{l}_n{n}"), sum, Relation::Eq));
                    cs.gadgets.push(Gadget::Max {
                        out: y,
                        inputs: win.iter().map(|&s| cur[s]).collect(),
                        select,
                        constraints,
                    });
                    next.push(y);
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// `sum_k |delta_k| <= epsilon` through auxiliary `t_k >= |delta_k|`.
pub fn encode_abs_l1(cs: &mut ConstraintSystem, delta_vars: &[VarId], epsilon: f64, tag: &str) -> Result<Vec<VarId>> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let mut total = LinExpr::constant(-epsilon);
    let mut ts = Vec::with_capacity(delta_vars.len());
    for (k, &d) in delta_vars.iter().enumerate() {
        let role = match cs.var(d).role {
            VarRole::Attack { attack, point, coord } => VarRole::AbsValue { attack, point, coord },
            _ => VarRole::Free,
        };
        let t = cs.add_var(format!("t_{tag}_k{k}"), Domain::Continuous { lo: 0.0, hi: epsilon }, role)?;
        let pos = cs.add_constraint(format!("c_absp_{tag}_k{k}"), LinExpr::var(t).plus(d, -1.0), Relation::Ge);
        let neg = cs.add_constraint(format!("c_absn_{tag}_k{k}"), LinExpr::var(t).plus(d, 1.0), Relation::Ge);
        cs.gadgets.push(Gadget::Abs {
            out: t,
            input: d,
            constraints: vec![pos, neg],
        });
        total.add(t, 1.0);
        ts.push(t);
    }
    cs.add_constraint(format!("c_l1_{tag}"), total, Relation::Le);
    Ok(ts)
}

/// Binary loss variable for the outputs of one network copy; `truth` is 1-based
/// and `output_box` bounds the outputs.
///
/// A loss of 1 needs some gap `y_truth - y_k <= margin - loss_slack`; a
/// positive slack keeps witnesses away from the classification boundary.
#[allow(clippy::too_many_arguments)]
pub fn encode_loss(
    cs: &mut ConstraintSystem,
    output_vars: &[VarId],
    output_box: &IntervalBox,
    truth: Label,
    margin: f64,
    loss_slack: f64,
    tag: &str,
    site: Site,
) -> Result<VarId> {
    if output_vars.len() < 2 {
        return Err(Error::invalid("loss encoding needs at least 2 labels"));
    }
    if truth == 0 || truth > output_vars.len() {
        return Err(Error::invalid(format!("label out of range: {truth}")));
    }
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::invalid(format!("margin must be >= 0, got {margin}")));
    }
    let t = truth - 1;
    let (lo, hi) = (&output_box.lower, &output_box.upper);
    let name = format!("loss_{tag}");
    let loss = cs.add_var(name.clone(), Domain::Binary, VarRole::Loss { site })?;
    let correct_gap = margin + LOSS_STRICTNESS;
    let loss_gap = margin - loss_slack.max(0.0);
    let mut constraints = Vec::new();
    let mut witnesses = Vec::new();
    let mut any = LinExpr::new().plus(loss, -1.0);
    for k in (0..output_vars.len()).filter(|&k| k != t) {
        let gap_lo = lo[t] - hi[k];
        let gap_hi = hi[t] - lo[k];
        finite_range(gap_lo, gap_hi, &name)?;
        let gap = LinExpr::var(output_vars[t]).plus(output_vars[k], -1.0);

        // loss = 0  =>  gap >= correct_gap
        let m0 = (correct_gap - gap_lo).max(0.0);
        let c0 = cs.add_constraint(
            format!("c_loss_ok_{tag}_k{k}"),
            gap.clone().plus(loss, m0).offset(-correct_gap),
            Relation::Ge,
        );
        cs.add_big_m(c0, m0, (correct_gap - gap_lo).max(0.0), &name)?;
        constraints.push(c0);

        // s_k = 1  =>  gap <= loss_gap
        let s = cs.add_var(
            format!("s_{tag}_k{k}"),
            Domain::Binary,
            VarRole::LossWitness { site, label: k + 1 },
        )?;
        let m1 = (gap_hi - loss_gap).max(0.0);
        let c1 = cs.add_constraint(
            format!("c_loss_mis_{tag}_k{k}"),
            gap.plus(s, m1).offset(-loss_gap - m1),
            Relation::Le,
        );
        cs.add_big_m(c1, m1, (gap_hi - loss_gap).max(0.0), &name)?;
        constraints.push(c1);
        witnesses.push((k, s));
        any.add(s, 1.0);
    }
    // loss = 1  =>  some s_k = 1
    cs.add_constraint(format!("c_loss_any_{tag}"), any, Relation::Ge);
    cs.gadgets.push(Gadget::Loss {
        loss,
        outputs: output_vars.to_vec(),
        truth: t,
        correct_gap,
        loss_gap,
        witnesses,
        constraints,
    });
    Ok(loss)
}

/// `c = p * b` for `p` in [0, 1] and binary `b`.
pub fn encode_product(cs: &mut ConstraintSystem, p: VarId, b: VarId, tag: &str, site: Site) -> Result<VarId> {
    let m = PRODUCT_BIG_M;
    let c = cs.add_var(format!("q_{tag}"), Domain::Continuous { lo: 0.0, hi: 1.0 }, VarRole::Product { site })?;
    // c >= p - M (1 - b)
    let a = cs.add_constraint(
        format!("c_prod_lo_{tag}"),
        LinExpr::var(c).plus(p, -1.0).plus(b, -m).offset(m),
        Relation::Ge,
    );
    // c <= p + M (1 - b)
    let u = cs.add_constraint(
        format!("c_prod_hi_{tag}"),
        LinExpr::var(c).plus(p, -1.0).plus(b, m).offset(-m),
        Relation::Le,
    );
    // c <= M b
    let z = cs.add_constraint(format!("c_prod_off_{tag}"), LinExpr::var(c).plus(b, -m), Relation::Le);
    for k in [a, u, z] {
        cs.add_big_m(k, m, 1.0, &format!("q_{tag}"))?;
    }
    cs.gadgets.push(Gadget::Product {
        out: c,
        prob: p,
        binary: b,
        constraints: vec![a, u, z],
    });
    Ok(c)
}

/// Supplies per-layer bounds for a network over an input region.
pub trait BoundsProvider {
    fn bounds(&self, net: &NeuralNetwork, input: &IntervalBox) -> Result<Vec<IntervalBox>>;
}

/// Plain interval propagation.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntervalBounds;

impl BoundsProvider for IntervalBounds {
    fn bounds(&self, net: &NeuralNetwork, input: &IntervalBox) -> Result<Vec<IntervalBox>> {
        propagate_bounds(net, input)
    }
}

fn check_query(ensemble: &Ensemble, data: &LabelledDataset, epsilon: f64, margin: f64) -> Result<()> {
    data.validate_for(ensemble)?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::invalid(format!("margin must be >= 0, got {margin}")));
    }
    Ok(())
}

/// Declares `delta_i^{j,k}` in `[-eps, eps]` plus the L1 constraint for one
/// attack, and one input vector `x^j + delta_i^j` per point.
fn declare_attack(
    cs: &mut ConstraintSystem,
    data: &LabelledDataset,
    epsilon: f64,
    i: usize,
) -> Result<(Vec<Vec<VarId>>, Vec<Vec<VarId>>)> {
    let mut deltas = Vec::with_capacity(data.len());
    let mut inputs = Vec::with_capacity(data.len());
    for (j, x) in data.points().iter().enumerate() {
        let mut row = Vec::with_capacity(x.len());
        let mut ins = Vec::with_capacity(x.len());
        for (k, &xk) in x.iter().enumerate() {
            let d = cs.add_var(
                format!("d_i{i}_j{j}_k{k}"),
                Domain::Continuous { lo: -epsilon, hi: epsilon },
                VarRole::Attack { attack: i, point: j, coord: k },
            )?;
            let u = cs.add_var(
                format!("in_i{i}_j{j}_k{k}"),
                Domain::Continuous {
                    lo: xk - epsilon,
                    hi: xk + epsilon,
                },
                VarRole::Input { attack: i, point: j, coord: k },
            )?;
            cs.add_constraint(
                format!("c_in_i{i}_j{j}_k{k}"),
                LinExpr::var(u).plus(d, -1.0).offset(-xk),
                Relation::Eq,
            );
            row.push(d);
            ins.push(u);
        }
        encode_abs_l1(cs, &row, epsilon, &format!("i{i}_j{j}"))?;
        deltas.push(row);
        inputs.push(ins);
    }
    Ok((deltas, inputs))
}

struct CopyVars {
    outputs: Vec<VarId>,
    loss: VarId,
}

#[allow(clippy::too_many_arguments)]
fn encode_copy(
    cs: &mut ConstraintSystem,
    net: &NeuralNetwork,
    inputs: &[VarId],
    x: &[f64],
    truth: Label,
    epsilon: f64,
    margin: f64,
    site: Site,
    bounds: &dyn BoundsProvider,
    loss_slack: f64,
) -> Result<CopyVars> {
    let boxes = bounds.bounds(net, &IntervalBox::around(x, epsilon))?;
    let tag = format!("c{}_i{}_j{}", site.classifier, site.attack, site.point);
    let outputs = encode_network(cs, net, inputs, &boxes, &tag, site)?;
    let loss = encode_loss(cs, &outputs, boxes.last().unwrap(), truth, margin, loss_slack, &tag, site)?;
    Ok(CopyVars { outputs, loss })
}

/// The full attack-existence system: a feasible assignment is an
/// `epsilon`-bounded randomized attack with `num_attacks` attacks whose
/// misclassification value is at least `alpha`.
pub fn encode_base(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    spec: &VerificationSpec,
    bounds: &dyn BoundsProvider,
) -> Result<ConstraintSystem> {
    encode_base_with_slack(ensemble, data, spec, bounds, 0.0)
}

/// [`encode_base`] with a loss slack (see [`encode_loss`]).
pub fn encode_base_with_slack(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    spec: &VerificationSpec,
    bounds: &dyn BoundsProvider,
    loss_slack: f64,
) -> Result<ConstraintSystem> {
    check_query(ensemble, data, spec.epsilon, spec.margin)?;
    if !(0.0..=1.0).contains(&spec.alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {}", spec.alpha)));
    }
    if spec.num_attacks == 0 {
        return Err(Error::invalid("number of attacks must be positive"));
    }
    let (na, nx, nc) = (spec.num_attacks, data.len(), ensemble.len());
    let mut cs = ConstraintSystem::new();
    let mut layout = AttackLayout {
        num_classifiers: nc,
        num_attacks: na,
        num_points: nx,
        dim: data.dim(),
        losses: vec![vec![Vec::with_capacity(nx); na]; nc],
        products: vec![vec![Vec::with_capacity(nx); na]; nc],
        outputs: vec![vec![Vec::with_capacity(nx); na]; nc],
        ..Default::default()
    };
    let mut prob_sum = LinExpr::constant(-1.0);
    for i in 0..na {
        let p = cs.add_var(format!("p_{i}"), Domain::Continuous { lo: 0.0, hi: 1.0 }, VarRole::Probability { attack: i })?;
        prob_sum.add(p, 1.0);
        layout.probs.push(p);
    }
    let mut inputs_all = Vec::with_capacity(na);
    for i in 0..na {
        let (deltas, inputs) = declare_attack(&mut cs, data, spec.epsilon, i)?;
        layout.deltas.push(deltas);
        inputs_all.push(inputs);
    }
    cs.add_constraint("c_prob_sum", prob_sum, Relation::Eq);
    for (c, net) in ensemble.networks().iter().enumerate() {
        let mut total = LinExpr::constant(-spec.alpha * nx as f64);
        for i in 0..na {
            for (j, (x, &truth)) in data.points().iter().zip(data.labels()).enumerate() {
                let site = Site {
                    classifier: c,
                    attack: i,
                    point: j,
                };
                let copy = encode_copy(
                    &mut cs,
                    net,
                    &inputs_all[i][j],
                    x,
                    truth,
                    spec.epsilon,
                    spec.margin,
                    site,
                    bounds,
                    loss_slack,
                )?;
                let tag = format!("c{c}_i{i}_j{j}");
                let q = encode_product(&mut cs, layout.probs[i], copy.loss, &tag, site)?;
                total.add(q, 1.0);
                layout.losses[c][i].push(copy.loss);
                layout.products[c][i].push(q);
                layout.outputs[c][i].push(copy.outputs);
            }
        }
        cs.add_constraint(format!("c_alpha_c{c}"), total, Relation::Ge);
    }
    cs.layout = layout;
    cs.validate()?;
    Ok(cs)
}

/// Maximise the summed expected loss over all classifiers.
pub fn add_max_objective(cs: &mut ConstraintSystem) {
    let mut obj = LinExpr::new();
    for q in cs.layout.products.iter().flatten().flatten() {
        obj.add(*q, 1.0);
    }
    cs.objective = Some(obj);
}

/// One attack against one classifier, maximising the number of misclassified points.
pub fn encode_single_classifier(
    classifier: &NeuralNetwork,
    data: &LabelledDataset,
    epsilon: f64,
    margin: f64,
    bounds: &dyn BoundsProvider,
) -> Result<ConstraintSystem> {
    encode_single_classifier_with_slack(classifier, data, epsilon, margin, bounds, 0.0)
}

/// [`encode_single_classifier`] with a loss slack (see [`encode_loss`]).
pub fn encode_single_classifier_with_slack(
    classifier: &NeuralNetwork,
    data: &LabelledDataset,
    epsilon: f64,
    margin: f64,
    bounds: &dyn BoundsProvider,
    loss_slack: f64,
) -> Result<ConstraintSystem> {
    let ensemble = Ensemble::new(vec![classifier.clone()])?;
    check_query(&ensemble, data, epsilon, margin)?;
    let mut cs = ConstraintSystem::new();
    let (deltas, inputs) = declare_attack(&mut cs, data, epsilon, 0)?;
    let mut layout = AttackLayout {
        num_classifiers: 1,
        num_attacks: 1,
        num_points: data.len(),
        dim: data.dim(),
        deltas: vec![deltas],
        losses: vec![vec![Vec::new()]],
        outputs: vec![vec![Vec::new()]],
        ..Default::default()
    };
    let mut obj = LinExpr::new();
    for (j, (x, &truth)) in data.points().iter().zip(data.labels()).enumerate() {
        let site = Site {
            classifier: 0,
            attack: 0,
            point: j,
        };
        let copy = encode_copy(&mut cs, classifier, &inputs[j], x, truth, epsilon, margin, site, bounds, loss_slack)?;
        obj.add(copy.loss, 1.0);
        layout.losses[0][0].push(copy.loss);
        layout.outputs[0][0].push(copy.outputs);
    }
    cs.objective = Some(obj);
    cs.layout = layout;
    cs.validate()?;
    Ok(cs)
}

/// Reads the attack `i` out of an assignment. Rows whose L1 norm exceeds
/// `epsilon` by solver round-off are scaled back onto the budget.
pub fn extract_deterministic(cs: &ConstraintSystem, values: &[f64], i: usize, epsilon: f64) -> DeterministicAttack {
    let rows = cs.layout.deltas[i]
        .iter()
        .map(|row| {
            let mut r: Vec<f64> = row.iter().map(|v| values[v.0]).collect();
            let norm: f64 = r.iter().map(|x| x.abs()).sum();
            if norm > epsilon {
                let s = epsilon / norm;
                r.iter_mut().for_each(|x| *x *= s);
            }
            r
        })
        .collect();
    DeterministicAttack::new(rows)
}

/// Reads the randomized attack out of an assignment of an [`encode_base`]
/// system, clamping round-off in the probabilities and renormalising.
pub fn extract_randomized(cs: &ConstraintSystem, values: &[f64], epsilon: f64) -> Result<RandomizedAttack> {
    let layout = &cs.layout;
    if layout.probs.len() != layout.num_attacks {
        return Err(Error::invalid("system carries no probability variables"));
    }
    let mut probs: Vec<f64> = layout.probs.iter().map(|p| values[p.0].clamp(0.0, 1.0)).collect();
    let sum: f64 = probs.iter().sum();
    if sum <= 0.0 {
        return Err(Error::Solver("assignment has an all-zero distribution".into()));
    }
    probs.iter_mut().for_each(|p| *p /= sum);
    let attacks = (0..layout.num_attacks)
        .map(|i| extract_deterministic(cs, values, i, epsilon))
        .collect();
    RandomizedAttack::new(attacks, probs)
}
