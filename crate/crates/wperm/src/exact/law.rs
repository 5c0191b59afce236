//! Finite discrete laws with exact-rational or float probabilities.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::ExactError;

/// An outcome of a cycle statistic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    /// A scalar count (total cycles, a block count, one coordinate).
    Count(u64),
    /// A tuple of counts, e.g. `(C_{m_1}, ..., C_{m_d})`.
    Counts(Vec<u64>),
    /// A tuple of cycle lengths in decreasing order (a cycle type, or its
    /// leading entries).
    Lengths(Vec<u64>),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &[u64]| xs.iter().map(u64::to_string).collect::<Vec<_>>().join("|");
        match self {
            Outcome::Count(k) => write!(f, "{k}"),
            Outcome::Counts(ks) => write!(f, "{}", join(ks)),
            Outcome::Lengths(ls) => write!(f, "{}", join(ls)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawProbs {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

/// A probability law on finitely many outcomes. Outcomes are sorted, have
/// nonzero mass, and the masses sum to one (exactly in the rational kind,
/// within 1e-12 in the float kind).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLaw {
    outcomes: Vec<Outcome>,
    probs: LawProbs,
}

impl ExactLaw {
    pub fn from_map_q(map: BTreeMap<Outcome, BigRational>) -> Result<Self, ExactError> {
        let mut outcomes = Vec::new();
        let mut probs = Vec::new();
        let mut total = BigRational::zero();
        for (o, p) in map {
            if p.is_negative() {
                return Err(ExactError::InvalidLaw("negative probability".into()));
            }
            total += &p;
            if !p.is_zero() {
                outcomes.push(o);
                probs.push(p);
            }
        }
        if total != BigRational::from_integer(1.into()) {
            return Err(ExactError::InvalidLaw(format!(
                "exact law sums to {total}, not 1"
            )));
        }
        Ok(ExactLaw {
            outcomes,
            probs: LawProbs::Exact(probs),
        })
    }

    pub fn from_map_f(map: BTreeMap<Outcome, f64>) -> Result<Self, ExactError> {
        let mut outcomes = Vec::new();
        let mut probs = Vec::new();
        let mut total = 0.0;
        for (o, p) in map {
            if p < -1e-12 || !p.is_finite() {
                return Err(ExactError::InvalidLaw(format!("bad probability {p}")));
            }
            total += p;
            if p > 0.0 {
                outcomes.push(o);
                probs.push(p);
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(ExactError::InvalidLaw(format!(
                "float law sums to {total}, |sum-1| > 1e-12"
            )));
        }
        Ok(ExactLaw {
            outcomes,
            probs: LawProbs::Float(probs),
        })
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn probs(&self) -> &LawProbs {
        &self.probs
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.probs, LawProbs::Exact(_))
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn prob_f64(&self, outcome: &Outcome) -> f64 {
        match self.outcomes.binary_search(outcome) {
            Err(_) => 0.0,
            Ok(i) => match &self.probs {
                LawProbs::Exact(ps) => ps[i].to_f64().unwrap_or(0.0),
                LawProbs::Float(ps) => ps[i],
            },
        }
    }

    pub fn prob_q(&self, outcome: &Outcome) -> Result<BigRational, ExactError> {
        let LawProbs::Exact(ps) = &self.probs else {
            return Err(ExactError::InvalidLaw("not an exact-kind law".into()));
        };
        Ok(match self.outcomes.binary_search(outcome) {
            Err(_) => BigRational::zero(),
            Ok(i) => ps[i].clone(),
        })
    }

    pub fn iter_f64(&self) -> impl Iterator<Item = (&Outcome, f64)> + '_ {
        self.outcomes.iter().enumerate().map(move |(i, o)| {
            let p = match &self.probs {
                LawProbs::Exact(ps) => ps[i].to_f64().unwrap_or(0.0),
                LawProbs::Float(ps) => ps[i],
            };
            (o, p)
        })
    }

    /// Expectation of a scalar function of the outcome.
    pub fn expect(&self, f: impl Fn(&Outcome) -> f64) -> f64 {
        self.iter_f64().map(|(o, p)| f(o) * p).sum()
    }

    /// Total variation distance over the merged support, in floats.
    pub fn tv_f64(&self, other: &ExactLaw) -> f64 {
        let mut support: Vec<&Outcome> = self.outcomes.iter().chain(&other.outcomes).collect();
        support.sort();
        support.dedup();
        0.5 * support
            .iter()
            .map(|o| (self.prob_f64(o) - other.prob_f64(o)).abs())
            .sum::<f64>()
    }

    /// Exact total variation distance; both laws must be rational-kind.
    pub fn tv_q(&self, other: &ExactLaw) -> Result<BigRational, ExactError> {
        let mut support: Vec<&Outcome> = self.outcomes.iter().chain(&other.outcomes).collect();
        support.sort();
        support.dedup();
        let mut acc = BigRational::zero();
        for o in support {
            acc += (self.prob_q(o)? - other.prob_q(o)?).abs();
        }
        Ok(acc / BigRational::from_integer(2.into()))
    }

    /// CSV rows `outcome,probability` with 17-significant-digit floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,probability\n");
        for (o, p) in self.iter_f64() {
            out.push_str(&format!("{o},{p:.16e}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn exact_law_must_sum_to_one() {
        let mut map = BTreeMap::new();
        map.insert(Outcome::Count(1), q(1, 3));
        map.insert(Outcome::Count(2), q(1, 2));
        assert!(ExactLaw::from_map_q(map.clone()).is_err());
        map.insert(Outcome::Count(3), q(1, 6));
        let law = ExactLaw::from_map_q(map).unwrap();
        assert_eq!(law.len(), 3);
        assert_eq!(law.prob_q(&Outcome::Count(2)).unwrap(), q(1, 2));
        assert_eq!(law.prob_q(&Outcome::Count(9)).unwrap(), q(0, 1));
    }

    #[test]
    fn zero_mass_outcomes_are_dropped() {
        let mut map = BTreeMap::new();
        map.insert(Outcome::Count(0), q(0, 1));
        map.insert(Outcome::Count(1), q(1, 1));
        let law = ExactLaw::from_map_q(map).unwrap();
        assert_eq!(law.outcomes(), &[Outcome::Count(1)]);
    }

    #[test]
    fn tv_between_laws() {
        let mut a = BTreeMap::new();
        a.insert(Outcome::Count(0), q(1, 2));
        a.insert(Outcome::Count(1), q(1, 2));
        let mut b = BTreeMap::new();
        b.insert(Outcome::Count(1), q(1, 2));
        b.insert(Outcome::Count(2), q(1, 2));
        let a = ExactLaw::from_map_q(a).unwrap();
        let b = ExactLaw::from_map_q(b).unwrap();
        assert_eq!(a.tv_q(&b).unwrap(), q(1, 2));
        assert!((a.tv_f64(&b) - 0.5).abs() < 1e-15);
        assert!(a.tv_q(&a).unwrap().is_zero());
    }
}
