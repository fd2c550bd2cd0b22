//! In-process LP/MILP solving: a dense bounded-variable primal simplex,
//! depth-first branch and bound over binaries, and the zero-sum matrix game.

use std::fmt;
use std::time::{Duration, Instant};

use crate::encoder::{ConstraintSystem, Relation};
use crate::error::{Error, Result};

pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const OBJECTIVE_TOL: f64 = 1e-9;
/// Tolerance of the final constraint audit on every feasible answer.
pub const AUDIT_TOL: f64 = 1e-6;

const PIVOT_TOL: f64 = 1e-9;
const STEP_TOL: f64 = 1e-12;
const STALL_LIMIT: usize = 50;
const MAX_ITERATIONS: usize = 500_000;
const REFRESH_EVERY: usize = 64;

/// Human-readable tolerance summary for diagnostics output.
pub fn tolerance_summary() -> String {
    format!(
        "feasibility {FEASIBILITY_TOL:e}, integrality {INTEGRALITY_TOL:e}, objective {OBJECTIVE_TOL:e}, audit {AUDIT_TOL:e}"
    )
}

/// `maximize objective . x` subject to sparse rows and variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardFormLP {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub senses: Vec<Relation>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StandardFormLP {
    /// `num_vars` variables in `[0, inf)` with a zero objective.
    pub fn new(num_vars: usize) -> Self {
        StandardFormLP {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, sense: Relation, rhs: f64) {
        self.rows.push(terms);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Shape("bound vectors do not match the variable count".into()));
        }
        if self.senses.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return Err(Error::Shape("row, sense and rhs counts differ".into()));
        }
        if self.objective.iter().chain(&self.rhs).any(|v| !v.is_finite()) {
            return Err(Error::invalid("objective and rhs must be finite"));
        }
        for (k, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                if j >= n || !a.is_finite() {
                    return Err(Error::invalid(format!("row {k} has an invalid entry")));
                }
            }
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::invalid(format!("variable {j} has empty bounds [{l}, {u}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    Timeout,
    IterationLimit,
    Numerical(String),
    Backend(String),
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnknownReason::Timeout => write!(f, "timeout"),
            UnknownReason::IterationLimit => write!(f, "iteration limit"),
            UnknownReason::Numerical(m) => write!(f, "numerical trouble: {m}"),
            UnknownReason::Backend(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Unknown(UnknownReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values; meaningful only when optimal.
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

pub fn solve_lp(lp: &StandardFormLP, time_budget: Option<Duration>) -> Result<LpSolution> {
    lp.validate()?;
    let deadline = time_budget.map(|d| Instant::now() + d);
    Ok(solve_with_bounds(lp, &lp.lower, &lp.upper, deadline))
}

struct Simplex<'a> {
    lp: &'a StandardFormLP,
    m: usize,
    n: usize,
    cols: usize,
    /// Row-major `m x cols` tableau, always equal to `B^-1 [A | I | diag(sigma)]`.
    t: Vec<f64>,
    sigma: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<Option<usize>>,
    cost: Vec<f64>,
    d: Vec<f64>,
    bland: bool,
    stall: usize,
    iterations: usize,
    deadline: Option<Instant>,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a StandardFormLP, lower: &[f64], upper: &[f64], deadline: Option<Instant>) -> Self {
        let (m, n) = (lp.num_rows(), lp.num_vars());
        let cols = n + 2 * m;
        let mut lo = Vec::with_capacity(cols);
        let mut hi = Vec::with_capacity(cols);
        lo.extend_from_slice(lower);
        hi.extend_from_slice(upper);
        for s in &lp.senses {
            let (l, u) = match s {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(u);
        }
        lo.extend(std::iter::repeat_n(0.0, m));
        hi.extend(std::iter::repeat_n(f64::INFINITY, m));

        let mut x = vec![0.0; cols];
        for j in 0..n {
            x[j] = if lo[j].is_finite() {
                lo[j]
            } else if hi[j].is_finite() {
                hi[j]
            } else {
                0.0
            };
        }
        let mut t = vec![0.0; m * cols];
        let mut sigma = vec![1.0; m];
        let mut basis = Vec::with_capacity(m);
        let mut row_of = vec![None; cols];
        for r in 0..m {
            let residual = lp.rhs[r] - lp.rows[r].iter().map(|&(j, a)| a * x[j]).sum::<f64>();
            let slack = n + r;
            let art = n + m + r;
            let slack_ok = residual >= lo[slack] && residual <= hi[slack];
            // Basis column for this row is the slack when it absorbs the
            // residual, otherwise a sign-adjusted artificial.
            let sign = if slack_ok {
                hi[art] = 0.0;
                1.0
            } else if residual >= 0.0 {
                1.0
            } else {
                -1.0
            };
            sigma[r] = if slack_ok { 1.0 } else { sign };
            let scale = sign;
            let row = &mut t[r * cols..(r + 1) * cols];
            for &(j, a) in &lp.rows[r] {
                row[j] += a * scale;
            }
            row[slack] = scale;
            row[art] = sigma[r] * scale;
            if slack_ok {
                x[slack] = residual;
                basis.push(slack);
                row_of[slack] = Some(r);
            } else {
                x[art] = residual.abs();
                basis.push(art);
                row_of[art] = Some(r);
            }
        }
        Simplex {
            lp,
            m,
            n,
            cols,
            t,
            sigma,
            lo,
            hi,
            x,
            basis,
            row_of,
            cost: vec![0.0; cols],
            d: vec![0.0; cols],
            bland: false,
            stall: 0,
            iterations: 0,
            deadline,
        }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.t[r * self.cols..(r + 1) * self.cols]
    }

    fn set_costs(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.d = self.cost.clone();
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.cols..(r + 1) * self.cols];
                for (dj, a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// Recomputes basic values from the original rows using the inverse
    /// carried in the artificial columns.
    fn refresh(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut rhs = self.lp.rhs.clone();
        for (r, row) in self.lp.rows.iter().enumerate() {
            for &(j, a) in row {
                if self.row_of[j].is_none() {
                    rhs[r] -= a * self.x[j];
                }
            }
            let slack = n + r;
            if self.row_of[slack].is_none() {
                rhs[r] -= self.x[slack];
            }
            let art = n + m + r;
            if self.row_of[art].is_none() {
                rhs[r] -= self.sigma[r] * self.x[art];
            }
        }
        for r in 0..m {
            let row = self.row(r);
            let v: f64 = (0..m).map(|k| row[n + m + k] * self.sigma[k] * rhs[k]).sum();
            let b = self.basis[r];
            self.x[b] = v;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.t[r * cols + j];
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            for a in row.iter_mut() {
                *a /= p;
            }
            row[j] = 1.0;
        }
        let pivot_row: Vec<f64> = self.row(r).to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + j];
            if f != 0.0 {
                let row = &mut self.t[i * cols..(i + 1) * cols];
                for (a, pr) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * pr;
                }
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (dj, pr) in self.d.iter_mut().zip(&pivot_row) {
                *dj -= f * pr;
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.row_of[leaving] = None;
        self.row_of[j] = Some(r);
        self.basis[r] = j;
    }

    fn choose_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols {
            if self.row_of[j].is_some() || self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = if dj > OBJECTIVE_TOL && self.x[j] < self.hi[j] {
                1.0
            } else if dj < -OBJECTIVE_TOL && self.x[j] > self.lo[j] {
                -1.0
            } else {
                continue;
            };
            if self.bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, s)| dj.abs() > s) {
                best = Some((j, dir, dj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn iterate(&mut self) -> Step {
        let Some((j, dir)) = self.choose_entering() else {
            return Step::Optimal;
        };
        let mut step = self.hi[j] - self.lo[j];
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let a = dir * self.t[r * self.cols + j];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[r];
            let lim = if a > 0.0 {
                if !self.lo[b].is_finite() {
                    continue;
                }
                (self.x[b] - self.lo[b]) / a
            } else {
                if !self.hi[b].is_finite() {
                    continue;
                }
                (self.hi[b] - self.x[b]) / -a
            }
            .max(0.0);
            let better = match leave {
                _ if lim < step - STEP_TOL => true,
                Some((lr, la)) if (lim - step).abs() <= STEP_TOL => {
                    if self.bland {
                        b < self.basis[lr]
                    } else {
                        a.abs() > la.abs()
                    }
                }
                _ => false,
            };
            if better {
                step = lim;
                leave = Some((r, a));
            }
        }
        if !step.is_finite() {
            return Step::Unbounded;
        }
        if step <= STEP_TOL {
            self.stall += 1;
            if self.stall > STALL_LIMIT && !self.bland {
                log::debug!("simplex stalled for {} iterations; switching to Bland's rule", self.stall);
                self.bland = true;
            }
        } else {
            self.stall = 0;
        }
        self.x[j] += dir * step;
        for r in 0..self.m {
            let a = self.t[r * self.cols + j];
            if a != 0.0 {
                let b = self.basis[r];
                self.x[b] -= dir * step * a;
            }
        }
        match leave {
            Some((r, a)) => {
                let b = self.basis[r];
                self.x[b] = if a > 0.0 { self.lo[b] } else { self.hi[b] };
                self.pivot(r, j);
            }
            None => {
                // bound flip
                self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
            }
        }
        Step::Moved
    }

    fn run(&mut self) -> std::result::Result<bool, UnknownReason> {
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(UnknownReason::IterationLimit);
            }
            if self.iterations.is_multiple_of(16) {
                if let Some(dl) = self.deadline {
                    if Instant::now() >= dl {
                        return Err(UnknownReason::Timeout);
                    }
                }
            }
            match self.iterate() {
                Step::Optimal => {
                    self.refresh();
                    return Ok(true);
                }
                Step::Unbounded => return Ok(false),
                Step::Moved => {}
            }
            self.iterations += 1;
            if self.iterations.is_multiple_of(REFRESH_EVERY) {
                self.refresh();
            }
        }
    }

    fn drive_out_artificials(&mut self) {
        let (n, m) = (self.n, self.m);
        for r in 0..m {
            let b = self.basis[r];
            if b < n + m {
                continue;
            }
            let row = self.row(r);
            let mut pick: Option<(usize, f64)> = None;
            for (j, &a) in row.iter().enumerate().take(n + m) {
                if self.row_of[j].is_none() && a.abs() > 1e-7 && pick.is_none_or(|(_, pa)| a.abs() > pa) {
                    pick = Some((j, a.abs()));
                }
            }
            if let Some((j, _)) = pick {
                self.x[b] = 0.0;
                self.pivot(r, j);
            }
        }
        for k in 0..m {
            self.hi[n + m + k] = 0.0;
            if self.row_of[n + m + k].is_none() {
                self.x[n + m + k] = 0.0;
            }
        }
        self.refresh();
    }
}

fn solve_with_bounds(lp: &StandardFormLP, lower: &[f64], upper: &[f64], deadline: Option<Instant>) -> LpSolution {
    let n = lp.num_vars();
    let unknown = |reason, iterations| LpSolution {
        status: LpStatus::Unknown(reason),
        values: vec![0.0; n],
        objective: f64::NAN,
        iterations,
    };
    let mut sx = Simplex::new(lp, lower, upper, deadline);
    let (m, cols) = (sx.m, sx.cols);
    if sx.basis.iter().any(|&b| b >= n + m) {
        let mut phase1 = vec![0.0; cols];
        phase1[n + m..].iter_mut().for_each(|c| *c = -1.0);
        sx.set_costs(phase1);
        match sx.run() {
            Ok(true) => {}
            Ok(false) => return unknown(UnknownReason::Numerical("phase one unbounded".into()), sx.iterations),
            Err(reason) => return unknown(reason, sx.iterations),
        }
        let infeasibility: f64 = (n + m..cols).map(|j| sx.x[j].abs()).sum();
        if infeasibility > FEASIBILITY_TOL {
            return LpSolution {
                status: LpStatus::Infeasible,
                values: vec![0.0; n],
                objective: f64::NAN,
                iterations: sx.iterations,
            };
        }
        sx.drive_out_artificials();
    }
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.objective);
    sx.set_costs(cost);
    sx.stall = 0;
    match sx.run() {
        Ok(true) => {
            let values = sx.x[..n].to_vec();
            let objective = lp.objective.iter().zip(&values).map(|(c, v)| c * v).sum();
            LpSolution {
                status: LpStatus::Optimal,
                values,
                objective,
                iterations: sx.iterations,
            }
        }
        Ok(false) => LpSolution {
            status: LpStatus::Unbounded,
            values: vec![0.0; n],
            objective: f64::INFINITY,
            iterations: sx.iterations,
        },
        Err(reason) => unknown(reason, sx.iterations),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Feasibility,
    Maximize,
}

#[derive(Debug, Clone, Default)]
pub struct SolverOptions {
    pub time_budget: Option<Duration>,
    pub node_limit: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub incumbents: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MilpVerdict {
    Feasible {
        values: Vec<f64>,
        objective: f64,
        stats: SolveStats,
    },
    Infeasible {
        stats: SolveStats,
    },
    Unknown {
        reason: UnknownReason,
        incumbent: Option<(Vec<f64>, f64)>,
        stats: SolveStats,
    },
}

impl MilpVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, MilpVerdict::Feasible { .. })
    }

    pub fn stats(&self) -> &SolveStats {
        match self {
            MilpVerdict::Feasible { stats, .. }
            | MilpVerdict::Infeasible { stats }
            | MilpVerdict::Unknown { stats, .. } => stats,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MilpVerdict::Feasible { .. } => "feasible",
            MilpVerdict::Infeasible { .. } => "infeasible",
            MilpVerdict::Unknown { .. } => "unknown",
        }
    }

    pub(crate) fn unknown(reason: UnknownReason) -> Self {
        MilpVerdict::Unknown {
            reason,
            incumbent: None,
            stats: SolveStats::default(),
        }
    }
}

/// An integral solution reported during search.
#[derive(Debug)]
pub struct Incumbent<'a> {
    pub values: &'a [f64],
    pub objective: f64,
    pub nodes: u64,
}

/// The LP relaxation of a system. Feasibility mode uses a zero objective.
pub fn lp_relaxation(cs: &ConstraintSystem, mode: SolveMode) -> StandardFormLP {
    let n = cs.num_vars();
    let mut lp = StandardFormLP::new(n);
    for (j, v) in cs.vars().iter().enumerate() {
        let (l, u) = v.domain.bounds();
        lp.lower[j] = l;
        lp.upper[j] = u;
    }
    if mode == SolveMode::Maximize {
        if let Some(obj) = &cs.objective {
            for &(v, c) in &obj.terms {
                lp.objective[v.0] += c;
            }
        }
    }
    for c in cs.constraints() {
        let terms = c.lhs.terms.iter().map(|&(v, a)| (v.0, a)).collect();
        lp.add_row(terms, c.relation, -c.lhs.constant);
    }
    lp
}

fn objective_of(cs: &ConstraintSystem, mode: SolveMode, values: &[f64]) -> f64 {
    match (mode, &cs.objective) {
        (SolveMode::Maximize, Some(obj)) => obj.eval(values),
        _ => 0.0,
    }
}

pub fn solve_milp(cs: &ConstraintSystem, mode: SolveMode, opts: &SolverOptions) -> MilpVerdict {
    solve_milp_with(cs, mode, opts, &mut |_| {})
}

/// Depth-first branch and bound. `on_incumbent` runs on this thread for every
/// improving integral solution.
pub fn solve_milp_with(
    cs: &ConstraintSystem,
    mode: SolveMode,
    opts: &SolverOptions,
    on_incumbent: &mut dyn FnMut(&Incumbent<'_>),
) -> MilpVerdict {
    let start = Instant::now();
    let deadline = opts.time_budget.map(|d| start + d);
    let base = lp_relaxation(cs, mode);
    if let Err(e) = base.validate() {
        return MilpVerdict::unknown(UnknownReason::Numerical(e.to_string()));
    }
    let binaries: Vec<usize> = cs.binaries().map(|v| v.0).collect();
    let obj_const = match (mode, &cs.objective) {
        (SolveMode::Maximize, Some(o)) => o.constant,
        _ => 0.0,
    };
    let mut stats = SolveStats::default();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut stack = vec![(base.lower.clone(), base.upper.clone())];

    let finish = |stats: &mut SolveStats| stats.elapsed = start.elapsed();
    let give_up = |reason, best: Option<(Vec<f64>, f64)>, mut stats: SolveStats| {
        stats.elapsed = start.elapsed();
        MilpVerdict::Unknown {
            reason,
            incumbent: best,
            stats,
        }
    };

    while let Some((lo, hi)) = stack.pop() {
        if deadline.is_some_and(|dl| Instant::now() >= dl) {
            return give_up(UnknownReason::Timeout, best, stats);
        }
        if opts.node_limit.is_some_and(|lim| stats.nodes >= lim) {
            return give_up(UnknownReason::IterationLimit, best, stats);
        }
        stats.nodes += 1;
        let sol = solve_with_bounds(&base, &lo, &hi, deadline);
        stats.lp_iterations += sol.iterations as u64;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return give_up(UnknownReason::Numerical("unbounded relaxation".into()), best, stats);
            }
            LpStatus::Unknown(reason) => return give_up(reason, best, stats),
            LpStatus::Optimal => {}
        }
        let bound = sol.objective + obj_const;
        if mode == SolveMode::Maximize {
            if let Some((_, inc)) = &best {
                if bound <= inc + OBJECTIVE_TOL {
                    continue;
                }
            }
        }
        let mut branch: Option<(usize, f64)> = None;
        for &b in &binaries {
            let v = sol.values[b];
            let frac = v.min(1.0 - v);
            if frac > INTEGRALITY_TOL && branch.is_none_or(|(_, f)| frac > f) {
                branch = Some((b, frac));
            }
        }
        if let Some((b, _)) = branch {
            let v = sol.values[b];
            let mut down_hi = hi.clone();
            down_hi[b] = 0.0;
            let mut up_lo = lo.clone();
            up_lo[b] = 1.0;
            // The child nearer the relaxation value is explored first.
            if v >= 0.5 {
                stack.push((lo, down_hi));
                stack.push((up_lo, hi));
            } else {
                stack.push((up_lo, hi));
                stack.push((lo, down_hi));
            }
            continue;
        }

        // Integral relaxation: pin binaries exactly and re-solve the rest.
        let mut plo = lo;
        let mut phi = hi;
        for &b in &binaries {
            let r = sol.values[b].round().clamp(0.0, 1.0);
            plo[b] = r;
            phi[b] = r;
        }
        let polished = solve_with_bounds(&base, &plo, &phi, deadline);
        stats.lp_iterations += polished.iterations as u64;
        let mut values = if polished.status == LpStatus::Optimal {
            polished.values
        } else {
            let mut v = sol.values.clone();
            for &b in &binaries {
                v[b] = plo[b];
            }
            v
        };
        for &b in &binaries {
            values[b] = plo[b];
        }
        if let Err(fail) = cs.audit(&values, AUDIT_TOL) {
            log::error!("internal audit failed on an integral relaxation: {fail}");
            return give_up(UnknownReason::Numerical(format!("internal audit failed: {fail}")), best, stats);
        }
        let objective = objective_of(cs, mode, &values);
        stats.incumbents += 1;
        on_incumbent(&Incumbent {
            values: &values,
            objective,
            nodes: stats.nodes,
        });
        match mode {
            SolveMode::Feasibility => {
                finish(&mut stats);
                return MilpVerdict::Feasible {
                    values,
                    objective,
                    stats,
                };
            }
            SolveMode::Maximize => {
                if best.as_ref().is_none_or(|(_, inc)| objective > *inc) {
                    best = Some((values, objective));
                }
            }
        }
    }
    finish(&mut stats);
    match best {
        Some((values, objective)) => MilpVerdict::Feasible {
            values,
            objective,
            stats,
        },
        None => MilpVerdict::Infeasible { stats },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    pub probs: Vec<f64>,
    pub value: f64,
}

/// Optimal mixed row strategy of `max_P min_c sum_i P_i M[i][c]`.
pub fn solve_matrix_game(matrix: &[Vec<f64>]) -> Result<GameSolution> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("matrix game needs at least one row and one column"));
    }
    if matrix.iter().any(|r| r.len() != cols) {
        return Err(Error::Shape("matrix game rows have different lengths".into()));
    }
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix game entries must be finite"));
    }
    let lo = matrix.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = matrix.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    // variables: P_0..P_{rows-1}, v
    let mut lp = StandardFormLP::new(rows + 1);
    lp.upper[..rows].iter_mut().for_each(|u| *u = 1.0);
    lp.lower[rows] = lo;
    lp.upper[rows] = hi;
    lp.objective[rows] = 1.0;
    for c in 0..cols {
        let mut terms: Vec<(usize, f64)> = (0..rows).filter(|&i| matrix[i][c] != 0.0).map(|i| (i, matrix[i][c])).collect();
        terms.push((rows, -1.0));
        lp.add_row(terms, Relation::Ge, 0.0);
    }
    lp.add_row((0..rows).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0);
    let sol = solve_lp(&lp, None)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("matrix game LP ended with {:?}", sol.status)));
    }
    let mut probs: Vec<f64> = sol.values[..rows].iter().map(|p| p.max(0.0)).collect();
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= sum);
    let value = (0..cols)
        .map(|c| probs.iter().zip(matrix).map(|(p, r)| p * r[c]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(GameSolution { probs, value })
}
