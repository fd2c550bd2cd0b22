//! Signature-based reduction of randomized attacks, checked in exact
//! arithmetic, and agreement of the two value computations.

mod common;

use ensrob_core::attacks::{
    attack_count_bound, loss_signature, misclassification_value, misclassification_value_by_signature,
    reduce_attack_set,
};
use ensrob_core::{DeterministicAttack, Ensemble, LabelledDataset, RandomizedAttack};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MARGIN: f64 = 1e-4;
const DYADIC_BITS: u32 = 10;

/// Probabilities `k / 2^bits` summing to exactly one.
fn dyadic_probs(rng: &mut impl Rng, n: usize) -> Vec<u64> {
    let total = 1u64 << DYADIC_BITS;
    let mut cuts: Vec<u64> = (0..n - 1).map(|_| rng.gen_range(0..=total)).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut out = Vec::with_capacity(n);
    for c in cuts.into_iter().chain([total]) {
        out.push(c - prev);
        prev = c;
    }
    out
}

fn exact_value(e: &Ensemble, d: &LabelledDataset, ra: &RandomizedAttack) -> BigRational {
    let denom = BigInt::from(1u64 << DYADIC_BITS) * BigInt::from(d.len());
    let mut best: Option<BigRational> = None;
    for c in 0..e.len() {
        let mut acc = BigRational::zero();
        for (a, &p) in ra.attacks().iter().zip(ra.probs()) {
            let sig = loss_signature(e, d, a, MARGIN).unwrap();
            let numer = (p * f64::from(1u32 << DYADIC_BITS)).round() as i64;
            acc += BigRational::new(BigInt::from(numer) * BigInt::from(sig.0[c]), denom.clone());
        }
        best = Some(match best {
            Some(b) if b < acc => b,
            _ => acc,
        });
    }
    best.unwrap()
}

fn random_randomized_attack(rng: &mut impl Rng, d: &LabelledDataset, epsilon: f64) -> RandomizedAttack {
    let n = rng.gen_range(1..=12);
    let attacks = (0..n)
        .map(|_| {
            DeterministicAttack::new(
                (0..d.len())
                    .map(|_| common::random_delta(rng, d.dim(), epsilon))
                    .collect(),
            )
        })
        .collect();
    let probs = dyadic_probs(rng, n)
        .into_iter()
        .map(|k| k as f64 / f64::from(1u32 << DYADIC_BITS))
        .collect();
    RandomizedAttack::new(attacks, probs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduction_preserves_value_exactly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = rng.gen_range(1..=3);
        let (e, d) = common::random_instance(&mut rng, 2, 2, dim, 2);
        let ra = random_randomized_attack(&mut rng, &d, 2.0);
        let reduced = reduce_attack_set(&e, &d, &ra, MARGIN).unwrap();
        prop_assert!(reduced.len() as u128 <= attack_count_bound(2, 2).unwrap());
        prop_assert!(reduced.len() <= ra.len());
        prop_assert_eq!(exact_value(&e, &d, &ra), exact_value(&e, &d, &reduced));
        let before = misclassification_value(&e, &d, &ra, MARGIN).unwrap();
        let after = misclassification_value(&e, &d, &reduced, MARGIN).unwrap();
        prop_assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn two_value_routes_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = rng.gen_range(1..=3);
        let classifiers = rng.gen_range(2..=3);
        let points = rng.gen_range(1..=3);
        let (e, d) = common::random_instance(&mut rng, classifiers, points, dim, 3);
        let ra = random_randomized_attack(&mut rng, &d, 1.0);
        let direct = misclassification_value(&e, &d, &ra, MARGIN).unwrap();
        let by_sig = misclassification_value_by_signature(&e, &d, &ra, MARGIN).unwrap();
        prop_assert!((direct - by_sig).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&direct));
    }
}

#[test]
fn bound_formula() {
    assert_eq!(attack_count_bound(4, 3).unwrap(), 125);
    assert_eq!(attack_count_bound(2, 2).unwrap(), 9);
    assert!(attack_count_bound(0, 5).is_err());
    assert!(attack_count_bound(10, 200).is_err());
}
