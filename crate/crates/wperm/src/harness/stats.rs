//! Statistical primitives for the verification checks: incomplete gamma,
//! normal CDF, chi-square goodness of fit, Kolmogorov-Smirnov and total
//! variation distances, and exact-rational Poisson masses.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::asymptotics::ln_gamma_real;
use crate::exact::{ExactLaw, Outcome};

/// Regularized lower incomplete gamma P(a, x), by series for `x < a+1`
/// and continued fraction otherwise.
pub fn reg_gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn reg_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cont_fraction(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    for n in 1..10_000 {
        term *= x / (a + n as f64);
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma_real(a)).exp()
}

fn gamma_cont_fraction(a: f64, x: f64) -> f64 {
    // modified Lentz
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma_real(a)).exp()
}

/// Complementary error function through the incomplete gamma.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else {
        reg_gamma_q(0.5, x * x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

/// Pearson chi-square goodness of fit of observed counts against expected
/// probabilities. Cells with expected count below `min_expected` are pooled
/// into one cell before the statistic is formed.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64], min_expected: f64) -> ChiSquare {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0u64;
    let mut pooled_obs = 0.0;
    let mut pooled_exp = 0.0;
    for (&obs, &p) in observed.iter().zip(expected_probs) {
        let exp = p * total as f64;
        if exp < min_expected {
            pooled_obs += obs as f64;
            pooled_exp += exp;
        } else {
            stat += (obs as f64 - exp).powi(2) / exp;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    let dof = cells.saturating_sub(1).max(1);
    ChiSquare {
        statistic: stat,
        dof,
        p_value: reg_gamma_q(dof as f64 / 2.0, stat / 2.0),
    }
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((f - i as f64 / n).abs());
        sup = sup.max(((i + 1) as f64 / n - f).abs());
    }
    sup
}

/// Two-sample Kolmogorov-Smirnov statistic (both samples get sorted).
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// Total variation distance between two empirical distributions given as
/// count maps, by exact summation over the merged support.
pub fn empirical_tv<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> f64 {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    assert!(na > 0 && nb > 0);
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| {
            let pa = *a.get(k).unwrap_or(&0) as f64 / na as f64;
            let pb = *b.get(k).unwrap_or(&0) as f64 / nb as f64;
            (pa - pb).abs()
        })
        .sum::<f64>()
}

/// Sample mean and (unbiased) variance.
pub fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Pearson correlation coefficient.
pub fn pearson_corr(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, vx) = mean_and_var(xs);
    let (my, vy) = mean_and_var(ys);
    let n = xs.len() as f64;
    let cov = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (n - 1.0);
    cov / (vx * vy).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Poisson pmf in floats, via logs for stability.
pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_gamma_real(k as f64 + 1.0)).exp()
}

/// `e^(-lambda)` as an exact rational, by the Taylor partial sum with at
/// least `extra_terms` terms beyond the point where terms start shrinking;
/// the truncation error is below the last alternating term.
pub fn exp_neg_rational(lambda: &BigRational, extra_terms: u64) -> BigRational {
    assert!(!lambda.is_negative());
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    let mut j = BigRational::zero();
    let lambda_ceil = lambda.to_f64().unwrap_or(0.0).ceil() as u64;
    for i in 1..=(lambda_ceil + extra_terms) {
        j += BigRational::one();
        term = -(term * lambda) / &j;
        sum += &term;
        let _ = i;
    }
    sum
}

/// Total variation distance between an exact law over count tuples and a
/// product of Poisson laws with rational means, computed in exact
/// rationals. The law's support is finite; the Poisson mass outside it is
/// added as the residual. `precision_terms` controls the rational
/// approximation of `e^(-lambda)`; its error is bounded by
/// `lambda^T / T!`, which the caller sizes far below the distances of
/// interest.
pub fn tv_law_vs_product_poisson_q(
    law: &ExactLaw,
    lambdas: &[BigRational],
    precision_terms: u64,
) -> Result<BigRational, crate::exact::ExactError> {
    // per-coordinate pmf tables lambda^k/k! e^(-lambda), filled incrementally
    let mut pmf: Vec<Vec<BigRational>> = lambdas
        .iter()
        .map(|l| vec![exp_neg_rational(l, precision_terms)])
        .collect();
    for o in law.outcomes() {
        let Outcome::Counts(ks) = o else {
            return Err(crate::exact::ExactError::InvalidLaw(
                "product-Poisson comparison needs count tuples".into(),
            ));
        };
        assert_eq!(ks.len(), lambdas.len());
        for (i, &k) in ks.iter().enumerate() {
            while pmf[i].len() <= k as usize {
                let j = pmf[i].len();
                let next = pmf[i][j - 1].clone() * &lambdas[i]
                    / BigRational::from_integer(BigInt::from(j));
                pmf[i].push(next);
            }
        }
    }
    let mut sum_abs = BigRational::zero();
    let mut covered = BigRational::zero();
    for o in law.outcomes() {
        let Outcome::Counts(ks) = o else {
            unreachable!()
        };
        let mut q = BigRational::one();
        for (i, &k) in ks.iter().enumerate() {
            q *= &pmf[i][k as usize];
        }
        sum_abs += (law.prob_q(o)? - &q).abs();
        covered += q;
    }
    let residual = BigRational::one() - covered;
    Ok((sum_abs + residual) / BigRational::from_integer(2.into()))
}
