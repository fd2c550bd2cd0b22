//! Brute-force ground truth: grid attacks over the L1 ball, optimal
//! randomisation over a finite candidate set, and witness checking.
//!
//! The grid only under-approximates the attacker, so its values are lower
//! bounds. A grid value can show that an ensemble is not robust; it can never
//! show that it is.

use std::collections::HashMap;

use serde::Serialize;

use crate::attacks::{
    is_epsilon_bounded, l1_norm, loss_matrix, misclassification_value, value_from_signatures, DeterministicAttack,
    LossSignature, RandomizedAttack, VerificationSpec,
};
use crate::error::{Error, Result};
use crate::milp::solve_matrix_game;
use crate::nnmodel::{Ensemble, LabelledDataset};

pub const GRID_LIMIT: u128 = 10_000_000;
/// Largest dataset for which per-point loss patterns are combined exhaustively.
pub const EXACT_PRODUCT_POINTS: usize = 3;
pub const CERTIFICATE_TOL: f64 = 1e-6;

/// Number of integer vectors in dimension `dim` with L1 norm at most `radius`.
fn lattice_count(dim: usize, radius: u64) -> u128 {
    // counts[r] = points with norm <= r in the current dimension
    let r = radius as usize;
    let mut counts = vec![1u128; r + 1];
    for _ in 0..dim {
        let mut next = vec![0u128; r + 1];
        for (budget, slot) in next.iter_mut().enumerate() {
            let mut total = counts[budget];
            for a in 1..=budget {
                total = total.saturating_add(counts[budget - a].saturating_mul(2));
            }
            *slot = total;
        }
        counts = next;
    }
    counts[r]
}

/// All vectors in `(step Z)^dim` with L1 norm at most `epsilon`, in
/// lexicographic order.
pub fn enumerate_grid_attacks(dim: usize, epsilon: f64, step: f64) -> Result<Vec<Vec<f64>>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid(format!("grid step must be positive, got {step}")));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let ratio = epsilon / step;
    if ratio > 1e9 {
        return Err(Error::GridTooLarge {
            count: u128::MAX,
            limit: GRID_LIMIT,
        });
    }
    let radius = (ratio + 1e-9).floor() as u64;
    let count = lattice_count(dim, radius);
    if count > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            count,
            limit: GRID_LIMIT,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = vec![0i64; dim];
    fn rec(k: usize, left: i64, cur: &mut Vec<i64>, step: f64, out: &mut Vec<Vec<f64>>) {
        if k == cur.len() {
            out.push(cur.iter().map(|&a| a as f64 * step).collect());
            return;
        }
        for a in -left..=left {
            cur[k] = a;
            rec(k + 1, left - a.abs(), cur, step, out);
        }
        cur[k] = 0;
    }
    rec(0, radius as i64, &mut cur, step, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub attack: RandomizedAttack,
    pub value: f64,
    /// False when the candidate set was built greedily, in which case the
    /// value is only a heuristic lower bound on the grid optimum.
    pub exhaustive: bool,
    pub candidates: usize,
}

struct PointPatterns {
    // distinct per-classifier loss vectors and the first grid row producing each
    patterns: Vec<(Vec<u8>, usize)>,
}

fn point_patterns(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    grid: &[Vec<f64>],
    margin: f64,
) -> Result<Vec<PointPatterns>> {
    let single = |j: usize| -> Result<PointPatterns> {
        let point = LabelledDataset::new(vec![data.points()[j].clone()], vec![data.labels()[j]])?;
        let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut patterns = Vec::new();
        for (g, row) in grid.iter().enumerate() {
            let l = loss_matrix(ensemble, &point, &DeterministicAttack::new(vec![row.clone()]), margin)?
                .pop()
                .expect("one point");
            if !seen.contains_key(&l) {
                seen.insert(l.clone(), g);
                patterns.push((l, g));
            }
        }
        Ok(PointPatterns { patterns })
    };
    let n = data.len();
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(n);
    if workers <= 1 {
        return (0..n).map(single).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..n).map(|j| s.spawn(move || single(j))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Optimal randomisation over grid attacks, computed through the matrix game
/// over distinct loss signatures.
pub fn brute_force_optimal(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    epsilon: f64,
    step: f64,
    margin: f64,
) -> Result<BruteForceResult> {
    data.validate_for(ensemble)?;
    let grid = enumerate_grid_attacks(data.dim(), epsilon, step)?;
    let per_point = point_patterns(ensemble, data, &grid, margin)?;
    let nc = ensemble.len();
    let product = per_point
        .iter()
        .fold(1u128, |acc, p| acc.saturating_mul(p.patterns.len() as u128));
    let exhaustive = data.len() <= EXACT_PRODUCT_POINTS && product <= GRID_LIMIT;

    // Each candidate picks one pattern index per point.
    let mut choices: Vec<Vec<usize>> = Vec::new();
    if exhaustive {
        let mut idx = vec![0usize; data.len()];
        loop {
            choices.push(idx.clone());
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < per_point[k].patterns.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    } else {
        // For every pattern seen anywhere, aim each point at it.
        let mut targets: Vec<&Vec<u8>> = per_point.iter().flat_map(|p| p.patterns.iter().map(|(l, _)| l)).collect();
        targets.sort();
        targets.dedup();
        for target in targets {
            let pick = per_point
                .iter()
                .map(|p| {
                    let score = |l: &Vec<u8>| {
                        let hit: usize = l.iter().zip(target).map(|(a, b)| (a & b) as usize).sum();
                        let total: usize = l.iter().map(|&a| a as usize).sum();
                        (hit, total)
                    };
                    let mut best = 0;
                    for (k, (l, _)) in p.patterns.iter().enumerate() {
                        if score(l) > score(&p.patterns[best].0) {
                            best = k;
                        }
                    }
                    best
                })
                .collect();
            choices.push(pick);
        }
    }

    let mut by_sig: HashMap<LossSignature, usize> = HashMap::new();
    let mut sigs: Vec<LossSignature> = Vec::new();
    let mut attacks: Vec<DeterministicAttack> = Vec::new();
    for choice in choices {
        let mut sig = vec![0usize; nc];
        for (p, &k) in per_point.iter().zip(&choice) {
            for (s, &l) in sig.iter_mut().zip(&p.patterns[k].0) {
                *s += l as usize;
            }
        }
        let sig = LossSignature(sig);
        if by_sig.contains_key(&sig) {
            continue;
        }
        by_sig.insert(sig.clone(), sigs.len());
        sigs.push(sig);
        let rows = per_point
            .iter()
            .zip(&choice)
            .map(|(p, &k)| grid[p.patterns[k].1].clone())
            .collect();
        attacks.push(DeterministicAttack::new(rows));
    }

    let matrix: Vec<Vec<f64>> = sigs.iter().map(|s| s.0.iter().map(|&v| v as f64).collect()).collect();
    let game = solve_matrix_game(&matrix)?;
    let mut support = Vec::new();
    let mut probs = Vec::new();
    let mut support_sigs = Vec::new();
    for ((a, p), s) in attacks.into_iter().zip(&game.probs).zip(&sigs) {
        if *p > 1e-12 {
            support.push(a);
            probs.push(*p);
            support_sigs.push(s.clone());
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let value = value_from_signatures(&support_sigs, &probs, data.len());
    if !exhaustive {
        log::info!("candidate product too large or more than {EXACT_PRODUCT_POINTS} points; brute-force value is a heuristic lower bound");
    }
    Ok(BruteForceResult {
        attack: RandomizedAttack::new(support, probs)?,
        value,
        exhaustive,
        candidates: sigs.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub value: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub max_l1: f64,
    pub epsilon_ok: bool,
    pub distribution_ok: bool,
    pub pass: bool,
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Recomputes a witness by forward passes only.
pub fn check_certificate(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    ra: &RandomizedAttack,
    spec: &VerificationSpec,
) -> Result<CheckReport> {
    data.validate_for(ensemble)?;
    ra.check_shape(data)?;
    let value = misclassification_value(ensemble, data, ra, spec.margin)?;
    let epsilon_ok = is_epsilon_bounded(ra, spec.epsilon);
    let distribution_ok = ra.check_distribution().is_ok();
    let max_l1 = ra
        .attacks()
        .iter()
        .flat_map(|a| a.perturbations.iter())
        .map(|r| l1_norm(r))
        .fold(0.0, f64::max);
    Ok(CheckReport {
        value,
        alpha: spec.alpha,
        epsilon: spec.epsilon,
        max_l1,
        epsilon_ok,
        distribution_ok,
        pass: epsilon_ok && distribution_ok && value >= spec.alpha - CERTIFICATE_TOL,
    })
}
