//! Attack semantics: deterministic and randomized attacks, the zero-one loss,
//! the misclassification value, attack-set reduction by loss signature and
//! the two baseline attackers.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnmodel::{self, Classification, Ensemble, Label, LabelledDataset, NeuralNetwork};

/// Tolerance on the probability simplex.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// One perturbation row per data point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeterministicAttack {
    pub perturbations: Vec<Vec<f64>>,
}

impl DeterministicAttack {
    pub fn new(perturbations: Vec<Vec<f64>>) -> Self {
        DeterministicAttack { perturbations }
    }

    pub fn zero(num_points: usize, dim: usize) -> Self {
        DeterministicAttack {
            perturbations: vec![vec![0.0; dim]; num_points],
        }
    }

    /// Same perturbation applied to every point.
    pub fn uniform_rows(row: &[f64], num_points: usize) -> Self {
        DeterministicAttack {
            perturbations: vec![row.to_vec(); num_points],
        }
    }

    pub fn check_shape(&self, data: &LabelledDataset) -> Result<()> {
        if self.perturbations.len() != data.len() {
            return Err(Error::Shape(format!(
                "attack has {} rows but the dataset has {} points",
                self.perturbations.len(),
                data.len()
            )));
        }
        if let Some(j) = self.perturbations.iter().position(|r| r.len() != data.dim()) {
            return Err(Error::Shape(format!(
                "attack row {j} has dimension {} but points have dimension {}",
                self.perturbations[j].len(),
                data.dim()
            )));
        }
        Ok(())
    }

    /// Largest L1 norm over the rows.
    pub fn max_l1(&self) -> f64 {
        self.perturbations
            .iter()
            .map(|r| l1_norm(r))
            .fold(0.0, f64::max)
    }
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// A finite set of deterministic attacks with a distribution over them.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedAttack {
    attacks: Vec<DeterministicAttack>,
    probs: Vec<f64>,
}

impl RandomizedAttack {
    pub fn new(attacks: Vec<DeterministicAttack>, probs: Vec<f64>) -> Result<Self> {
        let ra = RandomizedAttack { attacks, probs };
        ra.check_distribution()?;
        Ok(ra)
    }

    /// Builds without validating the distribution, for certificate checking
    /// of untrusted witnesses.
    pub fn new_unchecked(attacks: Vec<DeterministicAttack>, probs: Vec<f64>) -> Self {
        RandomizedAttack { attacks, probs }
    }

    pub fn deterministic(attack: DeterministicAttack) -> Self {
        RandomizedAttack {
            attacks: vec![attack],
            probs: vec![1.0],
        }
    }

    pub fn check_distribution(&self) -> Result<()> {
        if self.attacks.is_empty() {
            return Err(Error::invalid("randomized attack needs at least one attack"));
        }
        if self.attacks.len() != self.probs.len() {
            return Err(Error::invalid(format!(
                "{} attacks but {} probabilities",
                self.attacks.len(),
                self.probs.len()
            )));
        }
        if let Some(i) = self.probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid(format!("probability {i} is negative or not finite")));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn check_shape(&self, data: &LabelledDataset) -> Result<()> {
        self.attacks.iter().try_for_each(|a| a.check_shape(data))
    }

    pub fn attacks(&self) -> &[DeterministicAttack] {
        &self.attacks
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.attacks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attacks.is_empty()
    }
}

/// Attack budget and threshold for one verification query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationSpec {
    /// L1 budget per data point.
    pub epsilon: f64,
    pub alpha: f64,
    pub num_attacks: usize,
    pub margin: f64,
}

impl VerificationSpec {
    pub fn new(epsilon: f64, alpha: f64, num_attacks: usize, margin: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if num_attacks == 0 {
            return Err(Error::invalid("number of attacks must be positive"));
        }
        if !(margin.is_finite() && margin >= 0.0) {
            return Err(Error::invalid(format!("margin must be >= 0, got {margin}")));
        }
        Ok(VerificationSpec {
            epsilon,
            alpha,
            num_attacks,
            margin,
        })
    }
}

/// Per-classifier loss totals `M_c(delta)` of one deterministic attack.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LossSignature(pub Vec<usize>);

fn perturbed(x: &[f64], delta: &[f64]) -> Vec<f64> {
    x.iter().zip(delta).map(|(a, b)| a + b).collect()
}

/// 0 iff the attacked point is classified as `truth`, 1 otherwise
/// (including an undefined argmax).
pub fn zero_one_loss(c: &NeuralNetwork, x: &[f64], delta_row: &[f64], truth: Label, margin: f64) -> Result<u8> {
    if x.len() != delta_row.len() {
        return Err(Error::Shape(format!(
            "point has dimension {} but perturbation has {}",
            x.len(),
            delta_row.len()
        )));
    }
    Ok(match c.classify(&perturbed(x, delta_row), margin)? {
        Classification::Label(l) if l == truth => 0,
        _ => 1,
    })
}

/// Per-point loss of every classifier: `out[j][c]`.
pub fn loss_matrix(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    attack: &DeterministicAttack,
    margin: f64,
) -> Result<Vec<Vec<u8>>> {
    attack.check_shape(data)?;
    data.points()
        .iter()
        .zip(data.labels())
        .zip(&attack.perturbations)
        .map(|((x, &t), d)| {
            ensemble
                .networks()
                .iter()
                .map(|c| zero_one_loss(c, x, d, t, margin))
                .collect()
        })
        .collect()
}

pub fn loss_signature(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    attack: &DeterministicAttack,
    margin: f64,
) -> Result<LossSignature> {
    let per_point = loss_matrix(ensemble, data, attack, margin)?;
    let mut totals = vec![0usize; ensemble.len()];
    for row in per_point {
        for (t, l) in totals.iter_mut().zip(row) {
            *t += l as usize;
        }
    }
    Ok(LossSignature(totals))
}

/// `min_c (1/|X|) sum_j sum_i P_i * loss(c, x^j, delta_i^j)`.
pub fn misclassification_value(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    ra: &RandomizedAttack,
    margin: f64,
) -> Result<f64> {
    ra.check_shape(data)?;
    let n = data.len() as f64;
    let mut best = f64::INFINITY;
    for c in ensemble.networks() {
        let mut total = 0.0;
        for (j, (x, &t)) in data.points().iter().zip(data.labels()).enumerate() {
            for (attack, &p) in ra.attacks.iter().zip(&ra.probs) {
                total += p * f64::from(zero_one_loss(c, x, &attack.perturbations[j], t, margin)?);
            }
        }
        best = best.min(total / n);
    }
    Ok(best)
}

/// The same value computed from loss signatures: `min_c sum_i P_i M_c(delta_i) / |X|`.
pub fn misclassification_value_by_signature(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    ra: &RandomizedAttack,
    margin: f64,
) -> Result<f64> {
    let sigs = ra
        .attacks
        .iter()
        .map(|a| loss_signature(ensemble, data, a, margin))
        .collect::<Result<Vec<_>>>()?;
    Ok(value_from_signatures(&sigs, &ra.probs, data.len()))
}

pub fn value_from_signatures(sigs: &[LossSignature], probs: &[f64], num_points: usize) -> f64 {
    let num_c = sigs.first().map_or(0, |s| s.0.len());
    (0..num_c)
        .map(|c| {
            sigs.iter()
                .zip(probs)
                .map(|(s, p)| p * s.0[c] as f64)
                .sum::<f64>()
                / num_points as f64
        })
        .fold(f64::INFINITY, f64::min)
}

/// Every attack with positive probability keeps each row within the L1 budget.
pub fn is_epsilon_bounded(ra: &RandomizedAttack, epsilon: f64) -> bool {
    ra.attacks
        .iter()
        .zip(&ra.probs)
        .filter(|(_, &p)| p > 0.0)
        .all(|(a, _)| a.perturbations.iter().all(|r| l1_norm(r) <= epsilon))
}

/// `(|X| + 1)^|C|`, the number of distinct loss signatures.
pub fn attack_count_bound(num_points: usize, num_classifiers: usize) -> Result<u128> {
    if num_points == 0 || num_classifiers == 0 {
        return Err(Error::invalid("attack count bound needs at least one point and one classifier"));
    }
    let exp = u32::try_from(num_classifiers)
        .map_err(|_| Error::Overflow(format!("{num_classifiers} classifiers")))?;
    (num_points as u128 + 1)
        .checked_pow(exp)
        .ok_or_else(|| Error::Overflow(format!("({num_points} + 1)^{num_classifiers}")))
}

/// Merges attacks with identical loss signatures, keeping the first
/// representative of each group with the summed probability.
pub fn reduce_attack_set(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    ra: &RandomizedAttack,
    margin: f64,
) -> Result<RandomizedAttack> {
    let mut index: HashMap<LossSignature, usize> = HashMap::new();
    let mut attacks = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    for (a, &p) in ra.attacks.iter().zip(&ra.probs) {
        let sig = loss_signature(ensemble, data, a, margin)?;
        match index.get(&sig) {
            Some(&k) => probs[k] += p,
            None => {
                index.insert(sig, attacks.len());
                attacks.push(a.clone());
                probs.push(p);
            }
        }
    }
    Ok(RandomizedAttack { attacks, probs })
}

/// Uniform distribution over one attack per classifier.
pub fn uniform_attacker(per_classifier_attacks: Vec<DeterministicAttack>) -> Result<RandomizedAttack> {
    if per_classifier_attacks.is_empty() {
        return Err(Error::invalid("uniform attacker needs at least one attack"));
    }
    let p = 1.0 / per_classifier_attacks.len() as f64;
    let probs = vec![p; per_classifier_attacks.len()];
    Ok(RandomizedAttack {
        attacks: per_classifier_attacks,
        probs,
    })
}

/// The candidate with the largest `min_c M_c(delta) / |X|`; ties go to the
/// lowest index.
pub fn best_deterministic_attacker(
    ensemble: &Ensemble,
    data: &LabelledDataset,
    candidates: &[DeterministicAttack],
    margin: f64,
) -> Result<(DeterministicAttack, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, cand) in candidates.iter().enumerate() {
        let sig = loss_signature(ensemble, data, cand, margin)?;
        let v = sig.0.iter().copied().min().unwrap_or(0) as f64 / data.len() as f64;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (i, v) = best.ok_or_else(|| Error::invalid("no candidate attacks"))?;
    Ok((candidates[i].clone(), v))
}

/// Witness file: `{"attacks": [...], "probs": [...], "value": v, "epsilon": e}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub attacks: Vec<DeterministicAttack>,
    pub probs: Vec<f64>,
    pub value: f64,
    pub epsilon: f64,
}

impl WitnessFile {
    pub fn new(ra: &RandomizedAttack, value: f64, epsilon: f64) -> Self {
        WitnessFile {
            attacks: ra.attacks.clone(),
            probs: ra.probs.clone(),
            value,
            epsilon,
        }
    }

    pub fn randomized_attack(&self) -> RandomizedAttack {
        RandomizedAttack::new_unchecked(self.attacks.clone(), self.probs.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        nnmodel::parse_json(text, Path::new("<witness>"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        nnmodel::parse_json(&nnmodel::read_file(path)?, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        nnmodel::write_file(path.as_ref(), &self.to_json())
    }
}
