//! Integer partitions, cycle types, and the brute-force oracle.
//!
//! Averages of class functions over all `n!` permutations reduce to sums
//! over partitions `lambda` of `n` weighted by `1/z_lambda`, where
//! `z_lambda = prod m^{C_m} C_m!` counts the symmetries of the cycle type.
//! That reduction makes an exhaustive oracle feasible for small `n`; it is
//! the independent check for every series-based law in this crate.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::law::{ExactLaw, Outcome};
use super::ExactError;
use crate::model::{RestrictionSet, WeightModel};

/// Largest degree accepted by the brute-force oracle.
pub const BRUTE_FORCE_MAX_N: u64 = 12;

/// A cycle type: a partition of `n` in decreasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleType {
    parts: Vec<u64>,
    n: u64,
}

impl CycleType {
    pub fn new(mut parts: Vec<u64>) -> Self {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        assert!(parts.iter().all(|&p| p >= 1), "parts must be positive");
        let n = parts.iter().sum();
        CycleType { parts, n }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Parts in decreasing order.
    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    pub fn total_cycles(&self) -> u64 {
        self.parts.len() as u64
    }

    /// Multiplicities `C_m` of each part length.
    pub fn counts(&self) -> BTreeMap<u64, u64> {
        let mut counts = BTreeMap::new();
        for &p in &self.parts {
            *counts.entry(p).or_insert(0) += 1;
        }
        counts
    }

    /// `z_lambda = prod m^{C_m} C_m!`, the conjugacy-class index: the class
    /// of this type has `n!/z_lambda` elements.
    pub fn z_lambda(&self) -> BigUint {
        let mut z = BigUint::one();
        for (m, c) in self.counts() {
            z *= BigUint::from(m).pow(c as u32);
            for j in 1..=c {
                z *= BigUint::from(j);
            }
        }
        z
    }
}

/// Iterate all partitions of `n`, parts in decreasing order.
pub fn partitions(n: u64) -> Vec<CycleType> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn go(remaining: u64, max_part: u64, current: &mut Vec<u64>, out: &mut Vec<CycleType>) {
        if remaining == 0 {
            out.push(CycleType::new(current.clone()));
            return;
        }
        let mut p = remaining.min(max_part);
        while p >= 1 {
            current.push(p);
            go(remaining - p, p, current, out);
            current.pop();
            p -= 1;
        }
    }
    go(n, n, &mut current, &mut out);
    out
}

/// Statistics the oracle (and the series engine) can evaluate on a cycle type.
#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    /// The full cycle type.
    CycleType,
    /// The vector `(C_m)` over the listed lengths.
    CountsOn(Vec<u64>),
    /// The total number of cycles.
    TotalCycles,
    /// The number of cycles with length in the given block.
    BlockCount(BTreeSet<u64>),
    /// The cycle containing element 1: its length.
    CycleOfOne,
    /// The `depth` largest cycle lengths, zero-padded.
    OrderedLengths(usize),
}

fn evaluate(stat: &Statistic, ct: &CycleType) -> Outcome {
    match stat {
        Statistic::CycleType => Outcome::Lengths(ct.parts().to_vec()),
        Statistic::CountsOn(ms) => {
            let counts = ct.counts();
            Outcome::Counts(ms.iter().map(|m| *counts.get(m).unwrap_or(&0)).collect())
        }
        Statistic::TotalCycles => Outcome::Count(ct.total_cycles()),
        Statistic::BlockCount(block) => Outcome::Count(
            ct.counts()
                .iter()
                .filter(|(m, _)| block.contains(m))
                .map(|(_, c)| c)
                .sum(),
        ),
        Statistic::CycleOfOne => unreachable!("handled by length-biased weighting"),
        Statistic::OrderedLengths(depth) => {
            let mut ls = ct.parts().to_vec();
            ls.resize(*depth, 0);
            ls.truncate(*depth);
            Outcome::Lengths(ls)
        }
    }
}

/// Weight of a cycle type under the measure: `prod theta[part] * 1{part
/// admissible} / z_lambda`, before normalization.
fn type_weight_q(model: &WeightModel, a: &RestrictionSet, ct: &CycleType) -> BigRational {
    let mut w = BigRational::one();
    for &p in ct.parts() {
        if !a.contains(p) {
            return BigRational::zero();
        }
        w *= model.theta_q(p);
    }
    w / BigRational::from_integer(BigInt::from(ct.z_lambda()))
}

/// Normalization constant by exhaustive enumeration.
pub fn brute_force_h_n(model: &WeightModel, a: &RestrictionSet) -> Result<BigRational, ExactError> {
    let n = a.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(ExactError::BruteForceTooLarge { n });
    }
    Ok(partitions(n)
        .iter()
        .map(|ct| type_weight_q(model, a, ct))
        .fold(BigRational::zero(), |acc, w| acc + w))
}

/// Exact law of a statistic by exhaustive enumeration over partitions.
pub fn brute_force_law(
    model: &WeightModel,
    a: &RestrictionSet,
    stat: &Statistic,
) -> Result<ExactLaw, ExactError> {
    let n = a.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(ExactError::BruteForceTooLarge { n });
    }
    let h_n = brute_force_h_n(model, a)?;
    if h_n.is_zero() {
        return Err(ExactError::DegenerateMeasure { n });
    }
    let mut map: BTreeMap<Outcome, BigRational> = BTreeMap::new();
    for ct in partitions(n) {
        let w = type_weight_q(model, a, &ct);
        if w.is_zero() {
            continue;
        }
        if let Statistic::CycleOfOne = stat {
            // element 1 lies in a cycle of length k with probability
            // proportional to k * C_k within this type
            for (k, c) in ct.counts() {
                let share = BigRational::new(BigInt::from(k * c), BigInt::from(n));
                *map.entry(Outcome::Count(k))
                    .or_insert_with(BigRational::zero) += &w * share / &h_n;
            }
        } else {
            let o = evaluate(stat, &ct);
            *map.entry(o).or_insert_with(BigRational::zero) += &w / &h_n;
        }
    }
    ExactLaw::from_map_q(map)
}
