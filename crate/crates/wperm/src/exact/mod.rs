//! Exact finite-`n` laws of cycle statistics.
//!
//! Everything here rests on one identity: the generating function of the
//! normalization constants is `sum h_n t^n = exp(g - L_D)`, where `g` is
//! the weight generating function and `L_D` the series over excluded
//! lengths. Coefficient extraction from that exponential (and from marker
//! variants of it) yields normalization tables, laws of cycle statistics,
//! and characteristic functions, exactly in rational arithmetic for
//! moderate `n` and in rescaled floats for large `n`.

pub mod law;
pub mod partition;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, LazyLock, RwLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::model::{log_h_series_f, log_h_series_q, RestrictionSet, WeightModel};
use crate::series::{to_complex_series, CoeffConvention, Series, SeriesError};

pub use law::{ExactLaw, LawProbs, Outcome};
pub use partition::{brute_force_h_n, brute_force_law, partitions, CycleType, Statistic};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    /// `h_n = 0`: the restriction admits no permutation of this degree, so
    /// the measure is undefined.
    #[error("degenerate measure: h_{n} = 0, no admissible permutation")]
    DegenerateMeasure { n: u64 },
    #[error("brute force oracle limited to n <= {max}, got {n}", max = partition::BRUTE_FORCE_MAX_N)]
    BruteForceTooLarge { n: u64 },
    #[error("marker length {m} is not admissible under the restriction")]
    MarkerOutsideRestriction { m: u64 },
    #[error("block index sets overlap")]
    OverlappingBlocks,
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Exact normalization table: `h_0..=h_N` for one model and restriction.
#[derive(Debug, Clone)]
pub struct HTableQ {
    h: Vec<BigRational>,
}

impl HTableQ {
    pub fn truncation(&self) -> usize {
        self.h.len() - 1
    }

    pub fn h(&self, m: usize) -> &BigRational {
        &self.h[m]
    }
}

/// Float normalization table with rescaled storage: entry `m` holds
/// `h_m * scale^m`, which stays of moderate size when `scale` is the
/// singularity radius.
#[derive(Debug, Clone)]
pub struct HTableF {
    h_scaled: Vec<f64>,
    scale: f64,
}

impl HTableF {
    pub fn truncation(&self) -> usize {
        self.h_scaled.len() - 1
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn h_scaled(&self, m: usize) -> f64 {
        self.h_scaled[m]
    }

    /// True `h_m`; may overflow for large `m` when the scale is not 1.
    pub fn h_true(&self, m: usize) -> f64 {
        self.h_scaled[m] / self.scale.powi(m as i32)
    }
}

type CacheKey = (String, String);

static H_CACHE_Q: LazyLock<RwLock<HashMap<CacheKey, Arc<HTableQ>>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));
static H_CACHE_F: LazyLock<RwLock<HashMap<CacheKey, Arc<HTableF>>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

/// Tables for degree-independent restriction families are cached under the
/// family key, so a ladder of degrees reuses the longest table computed so
/// far as a prefix; degree-dependent sets cache under their full digest.
fn cache_key(model: &WeightModel, a: &RestrictionSet) -> CacheKey {
    let set_key = a
        .family_key()
        .map(str::to_owned)
        .unwrap_or_else(|| a.digest().to_owned());
    (model.spec_string().to_owned(), set_key)
}

/// Exact table of `h_0..=h_n` (possibly longer when a ladder already
/// computed a larger prefix), cached per (model, restriction family).
pub fn h_table_q(model: &WeightModel, a: &RestrictionSet) -> Arc<HTableQ> {
    let n = a.n() as usize;
    let key = cache_key(model, a);
    if let Some(t) = H_CACHE_Q.read().unwrap().get(&key) {
        if t.truncation() >= n {
            return Arc::clone(t);
        }
    }
    let h = h_table_q_integer_path(model, a).unwrap_or_else(|| {
        log_h_series_q(model, a)
            .exp()
            .expect("zero constant term")
            .coeffs()
            .to_vec()
    });
    let table = Arc::new(HTableQ { h });
    let mut cache = H_CACHE_Q.write().unwrap();
    let slot = cache.entry(key).or_insert_with(|| Arc::clone(&table));
    if slot.truncation() < n {
        *slot = Arc::clone(&table);
    }
    Arc::clone(slot)
}

/// Fast path for the exact table: when the admissible weights share a
/// small common denominator `q`, the rescaled values `h_m m! q^m` obey an
/// integer recurrence (no gcd reductions in the hot loop):
/// `F_m = sum_k p_k q^(k-1) (m-1)!/(m-k)! F_{m-k}` with `p_k = theta_k q`.
fn h_table_q_integer_path(model: &WeightModel, a: &RestrictionSet) -> Option<Vec<BigRational>> {
    use num_bigint::BigUint;
    use num_integer::Integer;
    let n = a.n() as usize;
    let mut q = BigUint::one();
    for k in a.admissible() {
        let denom = model.theta_q(k).denom().magnitude().clone();
        q = q.lcm(&denom);
    }
    // q^n would dominate the integer sizes when q is large (float-derived
    // weights); fall back to plain rational arithmetic there
    if q.bits() as usize * n > 250_000 {
        return None;
    }
    let q = BigInt::from(q);
    let p: Vec<BigInt> = (1..=n as u64)
        .map(|k| {
            if a.contains(k) {
                let theta = model.theta_q(k);
                (theta.numer() * &q) / theta.denom()
            } else {
                BigInt::from(0)
            }
        })
        .collect();
    let mut scaled: Vec<BigInt> = Vec::with_capacity(n + 1);
    scaled.push(BigInt::from(1));
    for m in 1..=n {
        let mut acc = BigInt::from(0);
        let mut falling = BigInt::from(1); // (m-1)!/(m-k)!
        let mut q_pow = BigInt::from(1); // q^(k-1)
        for k in 1..=m {
            if p[k - 1] != BigInt::from(0) {
                acc += &p[k - 1] * &q_pow * &falling * &scaled[m - k];
            }
            falling *= BigInt::from((m - k) as u64);
            if falling == BigInt::from(0) {
                break; // terms beyond k = m vanish anyway
            }
            q_pow *= &q;
        }
        scaled.push(acc);
    }
    let mut denom = BigInt::from(1); // m! q^m
    let mut out = Vec::with_capacity(n + 1);
    for (m, value) in scaled.into_iter().enumerate() {
        if m > 0 {
            denom *= BigInt::from(m as u64) * &q;
        }
        out.push(BigRational::new(value, denom.clone()));
    }
    Some(out)
}

/// Rescaled float table of `h_0..=h_n` (possibly longer), cached per
/// (model, restriction family).
pub fn h_table_f(model: &WeightModel, a: &RestrictionSet) -> Arc<HTableF> {
    let n = a.n() as usize;
    let key = cache_key(model, a);
    if let Some(t) = H_CACHE_F.read().unwrap().get(&key) {
        if t.truncation() >= n {
            return Arc::clone(t);
        }
    }
    let scale = model.radius();
    let series = log_h_series_f(model, a, scale)
        .exp()
        .expect("zero constant term");
    let table = Arc::new(HTableF {
        h_scaled: series.coeffs().to_vec(),
        scale,
    });
    let mut cache = H_CACHE_F.write().unwrap();
    let slot = cache.entry(key).or_insert_with(|| Arc::clone(&table));
    if slot.truncation() < n {
        *slot = Arc::clone(&table);
    }
    Arc::clone(slot)
}

/// Exact normalization constant `h_n`. Zero is a valid return; consumers
/// that need a proper measure must treat it as degenerate.
pub fn h_n_q(model: &WeightModel, a: &RestrictionSet) -> BigRational {
    let n = a.n() as usize;
    h_table_q(model, a).h(n).clone()
}

/// `h_n * r^n` in floats, paired with the scale `r`.
pub fn h_n_scaled_f(model: &WeightModel, a: &RestrictionSet) -> (f64, f64) {
    let n = a.n() as usize;
    let t = h_table_f(model, a);
    (t.h_scaled(n), t.scale())
}

fn nonzero_h_q(model: &WeightModel, a: &RestrictionSet) -> Result<BigRational, ExactError> {
    let h = h_n_q(model, a);
    if h.is_zero() {
        return Err(ExactError::DegenerateMeasure { n: a.n() });
    }
    Ok(h)
}

fn nonzero_h_f(model: &WeightModel, a: &RestrictionSet) -> Result<f64, ExactError> {
    let (h, _) = h_n_scaled_f(model, a);
    if h == 0.0 {
        return Err(ExactError::DegenerateMeasure { n: a.n() });
    }
    Ok(h)
}

/// Law of the length of the cycle containing element 1:
/// `P[len = k] = theta[k]/n * h_{n-k}/h_n` for admissible `k`.
pub fn ell1_law_q(model: &WeightModel, a: &RestrictionSet) -> Result<ExactLaw, ExactError> {
    let n = a.n();
    let h_n = nonzero_h_q(model, a)?;
    let table = h_table_q(model, a);
    let mut map = BTreeMap::new();
    for k in a.admissible() {
        let p = model.theta_q(k) * table.h((n - k) as usize)
            / (&h_n * BigRational::from_integer(BigInt::from(n)));
        map.insert(Outcome::Count(k), p);
    }
    ExactLaw::from_map_q(map)
}

/// Float-kind law of the cycle containing element 1, stable for large `n`.
pub fn ell1_law_f(model: &WeightModel, a: &RestrictionSet) -> Result<ExactLaw, ExactError> {
    let n = a.n();
    let h_n = nonzero_h_f(model, a)?;
    let table = h_table_f(model, a);
    let mut map = BTreeMap::new();
    let mut total = 0.0;
    let mut weights = Vec::new();
    for k in a.admissible() {
        // theta[k] h_{n-k} / (n h_n) = theta[k] r^k * h~_{n-k} / (n h~_n)
        let w = model.theta_r_pow_m(k) * table.h_scaled((n - k) as usize);
        total += w;
        weights.push((k, w));
    }
    // renormalize: total equals n * h~_n up to rounding
    debug_assert!((total / (n as f64 * h_n) - 1.0).abs() < 1e-9);
    for (k, w) in weights {
        map.insert(Outcome::Count(k), w / total);
    }
    ExactLaw::from_map_f(map)
}

/// Falling-factorial moment `E[(len_1 - 1)_b]`, float kind.
pub fn ell1_falling_factorial_moment_f(
    model: &WeightModel,
    a: &RestrictionSet,
    b: u32,
) -> Result<f64, ExactError> {
    assert!(b >= 1);
    let n = a.n();
    let h_n = nonzero_h_f(model, a)?;
    let table = h_table_f(model, a);
    let mut acc = 0.0;
    for k in a.admissible() {
        if k < b as u64 + 1 {
            continue;
        }
        // (k-1)_b = (k-1)(k-2)...(k-b)
        let mut ff = 1.0;
        for j in 1..=b as u64 {
            ff *= (k - j) as f64;
        }
        acc += ff * model.theta_r_pow_m(k) * table.h_scaled((n - k) as usize);
    }
    Ok(acc / (n as f64 * h_n))
}

/// Moment `E[(len_1 / n)^b]`, float kind.
pub fn ell1_power_moment_f(
    model: &WeightModel,
    a: &RestrictionSet,
    b: u32,
) -> Result<f64, ExactError> {
    let n = a.n();
    let h_n = nonzero_h_f(model, a)?;
    let table = h_table_f(model, a);
    let mut acc = 0.0;
    for k in a.admissible() {
        let p = model.theta_r_pow_m(k) * table.h_scaled((n - k) as usize) / (n as f64 * h_n);
        acc += (k as f64 / n as f64).powi(b as i32) * p;
    }
    Ok(acc)
}

/// Exact law of the total number of cycles, via `[t^n] u^j / j!` with
/// `u = g - L_D`.
pub fn law_of_t_q(model: &WeightModel, a: &RestrictionSet) -> Result<ExactLaw, ExactError> {
    let n = a.n() as usize;
    let h_n = nonzero_h_q(model, a)?;
    let u = log_h_series_q(model, a);
    let mut map = BTreeMap::new();
    let mut power = Series::<BigRational>::one(n, 1.0)?;
    let mut factorial = BigRational::one();
    for j in 1..=n {
        power = power.mul(&u)?;
        factorial *= BigRational::from_integer(BigInt::from(j));
        let c = power.coefficient(n, CoeffConvention::True)?;
        if !c.is_zero() {
            map.insert(Outcome::Count(j as u64), c / (&factorial * &h_n));
        }
    }
    ExactLaw::from_map_q(map)
}

/// Float-kind law of the total number of cycles.
pub fn law_of_t_f(model: &WeightModel, a: &RestrictionSet) -> Result<ExactLaw, ExactError> {
    let n = a.n() as usize;
    let h_n = nonzero_h_f(model, a)?;
    let u = log_h_series_f(model, a, model.radius());
    let mut map = BTreeMap::new();
    let mut power = Series::<f64>::one(n, model.radius())?;
    let mut factorial = 1.0;
    for j in 1..=n {
        power = power.mul(&u)?;
        factorial *= j as f64;
        let c = power.coefficient(n, CoeffConvention::Scaled)?;
        if c != 0.0 {
            map.insert(Outcome::Count(j as u64), c / (factorial * h_n));
        }
    }
    ExactLaw::from_map_f(map)
}

/// Exact law of the number of cycles with length in `block`.
pub fn block_count_law_q(
    model: &WeightModel,
    a: &RestrictionSet,
    block: &BTreeSet<u64>,
) -> Result<ExactLaw, ExactError> {
    let n = a.n() as usize;
    let h_n = nonzero_h_q(model, a)?;
    let in_block = a.admissible().filter(|m| block.contains(m));
    let l_block = model.l_series_q(in_block, n);
    let rest = log_h_series_q(model, a).sub(&l_block)?;
    let outside = rest.exp()?;
    let mut map = BTreeMap::new();
    let mut term = outside.clone();
    let c0 = term.coefficient(n, CoeffConvention::True)?;
    if !c0.is_zero() {
        map.insert(Outcome::Count(0), c0 / &h_n);
    }
    for j in 1..=n {
        term = term.mul(&l_block)?;
        let inv_j = BigRational::new(1.into(), BigInt::from(j));
        term = term.scalar_mul(&inv_j);
        let c = term.coefficient(n, CoeffConvention::True)?;
        if !c.is_zero() {
            map.insert(Outcome::Count(j as u64), c / &h_n);
        }
    }
    ExactLaw::from_map_q(map)
}

/// Exact joint law of the cycle counts over the marker lengths `ms`.
/// Computed by splitting the exponent into the marker part (expanded
/// explicitly) and the remainder:
/// `P[(k_m)] = prod (theta[m]/m)^{k_m}/k_m! * h'_{n-s}/h_n` with
/// `s = sum m k_m` and `h'` the table with the markers excluded.
pub fn joint_cycle_count_law_q(
    model: &WeightModel,
    a: &RestrictionSet,
    ms: &[u64],
) -> Result<ExactLaw, ExactError> {
    for &m in ms {
        if !a.contains(m) {
            return Err(ExactError::MarkerOutsideRestriction { m });
        }
    }
    let n = a.n();
    let h_n = nonzero_h_q(model, a)?;
    let rest_table = h_table_q(model, &a.without(ms));
    let factors: Vec<BigRational> = ms
        .iter()
        .map(|&m| model.theta_q(m) / BigRational::from_integer(BigInt::from(m)))
        .collect();
    let mut map = BTreeMap::new();
    let mut ks = vec![0u64; ms.len()];
    enumerate_counts_q(
        &mut map,
        &mut ks,
        0,
        n,
        BigRational::one(),
        ms,
        &factors,
        rest_table.as_ref(),
        &h_n,
    );
    ExactLaw::from_map_q(map)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_counts_q(
    map: &mut BTreeMap<Outcome, BigRational>,
    ks: &mut Vec<u64>,
    idx: usize,
    budget: u64,
    weight: BigRational,
    ms: &[u64],
    factors: &[BigRational],
    rest_table: &HTableQ,
    h_n: &BigRational,
) {
    if idx == ms.len() {
        let p = weight * rest_table.h(budget as usize) / h_n;
        if !p.is_zero() {
            map.insert(Outcome::Counts(ks.clone()), p);
        }
        return;
    }
    let m = ms[idx];
    let mut w = weight.clone();
    let mut k = 0u64;
    loop {
        ks[idx] = k;
        enumerate_counts_q(
            map,
            ks,
            idx + 1,
            budget - m * k,
            w.clone(),
            ms,
            factors,
            rest_table,
            h_n,
        );
        k += 1;
        if m * k > budget {
            break;
        }
        // accumulate (theta/m)^k / k!
        w = w * &factors[idx] / BigRational::from_integer(BigInt::from(k));
    }
    ks[idx] = 0;
}

/// Float-kind joint law of the cycle counts over the marker lengths.
pub fn joint_cycle_count_law_f(
    model: &WeightModel,
    a: &RestrictionSet,
    ms: &[u64],
) -> Result<ExactLaw, ExactError> {
    for &m in ms {
        if !a.contains(m) {
            return Err(ExactError::MarkerOutsideRestriction { m });
        }
    }
    let n = a.n();
    let h_n = nonzero_h_f(model, a)?;
    let rest_table = h_table_f(model, &a.without(ms));
    // theta[m] r^m / m per marker keeps every factor of moderate size
    let factors: Vec<f64> = ms
        .iter()
        .map(|&m| model.theta_r_pow_m(m) / m as f64)
        .collect();
    let mut map = BTreeMap::new();
    let mut ks = vec![0u64; ms.len()];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        map: &mut BTreeMap<Outcome, f64>,
        ks: &mut Vec<u64>,
        idx: usize,
        budget: u64,
        weight: f64,
        ms: &[u64],
        factors: &[f64],
        rest: &HTableF,
        h_n: f64,
    ) {
        if idx == ms.len() {
            let p = weight * rest.h_scaled(budget as usize) / h_n;
            if p != 0.0 {
                map.insert(Outcome::Counts(ks.clone()), p);
            }
            return;
        }
        let m = ms[idx];
        let mut w = weight;
        let mut k = 0u64;
        loop {
            ks[idx] = k;
            rec(map, ks, idx + 1, budget - m * k, w, ms, factors, rest, h_n);
            k += 1;
            if m * k > budget {
                break;
            }
            w = w * factors[idx] / k as f64;
        }
        ks[idx] = 0;
    }
    rec(
        &mut map,
        &mut ks,
        0,
        n,
        1.0,
        ms,
        &factors,
        rest_table.as_ref(),
        h_n,
    );
    ExactLaw::from_map_f(map)
}

/// Characteristic function of the total cycle number at one point:
/// `E[exp(isT)] = [t^n] exp(e^{is} (g - L_D)) / h_n`.
pub fn char_t(model: &WeightModel, a: &RestrictionSet, s: f64) -> Result<Complex64, ExactError> {
    Ok(char_t_grid(model, a, &[s])?[0])
}

/// Characteristic function of the total cycle number on a grid of points,
/// reusing the exponent series across the grid.
pub fn char_t_grid(
    model: &WeightModel,
    a: &RestrictionSet,
    s_grid: &[f64],
) -> Result<Vec<Complex64>, ExactError> {
    let n = a.n() as usize;
    let h_n = nonzero_h_f(model, a)?;
    let u = to_complex_series(&log_h_series_f(model, a, model.radius()));
    s_grid
        .iter()
        .map(|&s| {
            let w = Complex64::new(0.0, s).exp();
            let num = u
                .scalar_mul(&w)
                .exp()?
                .coefficient(n, CoeffConvention::Scaled)?;
            Ok(num / h_n)
        })
        .collect()
}

/// Joint characteristic function of block counts:
/// `E[exp(i sum s_j B_j)] = [t^n] exp(g - L_D + sum (e^{is_j}-1) L_{A and block_j}) / h_n`.
/// Blocks must be disjoint subsets of `1..=n`.
pub fn char_blocks(
    model: &WeightModel,
    a: &RestrictionSet,
    blocks: &[(BTreeSet<u64>, f64)],
) -> Result<Complex64, ExactError> {
    let n = a.n() as usize;
    let mut seen = BTreeSet::new();
    for (block, _) in blocks {
        for &m in block {
            if !seen.insert(m) {
                return Err(ExactError::OverlappingBlocks);
            }
        }
    }
    let h_n = nonzero_h_f(model, a)?;
    let mut exponent = to_complex_series(&log_h_series_f(model, a, model.radius()));
    for (block, s) in blocks {
        let members = a.admissible().filter(|m| block.contains(m));
        let l = to_complex_series(&model.l_series_f(members, n, model.radius()));
        let marker = Complex64::new(0.0, *s).exp() - Complex64::new(1.0, 0.0);
        exponent = exponent.add(&l.scalar_mul(&marker))?;
    }
    let num = exponent.exp()?.coefficient(n, CoeffConvention::Scaled)?;
    Ok(num / h_n)
}

/// Joint characteristic function of the even-block and odd-block cycle
/// counts at full range, computed through `w1 g(t) + w2 g(-t)` with
/// `w1 = (e^{is1}+e^{is2})/2`, `w2 = (e^{is1}-e^{is2})/2`. Requires the
/// unrestricted measure. Equal to the block route (the exponents differ
/// only in degrees beyond `n`).
pub fn char_even_odd_two_sided(
    model: &WeightModel,
    n: u64,
    s1: f64,
    s2: f64,
) -> Result<Complex64, ExactError> {
    let a = crate::model::RestrictionRule::Full.at(n);
    let h_n = nonzero_h_f(model, &a)?;
    let g = to_complex_series(&model.g_series_f(n as usize, model.radius()));
    let w1 = (Complex64::new(0.0, s1).exp() + Complex64::new(0.0, s2).exp()) / 2.0;
    let w2 = (Complex64::new(0.0, s1).exp() - Complex64::new(0.0, s2).exp()) / 2.0;
    let exponent = g.scalar_mul(&w1).add(&g.alternate().scalar_mul(&w2))?;
    let num = exponent
        .exp()?
        .coefficient(n as usize, CoeffConvention::Scaled)?;
    Ok(num / h_n)
}

/// Mean of the total cycle number from the exact law (small `n` only).
pub fn mean_t_q(model: &WeightModel, a: &RestrictionSet) -> Result<BigRational, ExactError> {
    let law = law_of_t_q(model, a)?;
    let mut acc = BigRational::zero();
    for (o, _) in law.iter_f64() {
        if let Outcome::Count(k) = o {
            acc += law.prob_q(o)? * BigRational::from_integer(BigInt::from(*k));
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RestrictionRule;
    use num_traits::ToPrimitive;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn uniform_full(n: u64) -> (WeightModel, RestrictionSet) {
        (WeightModel::uniform(), RestrictionRule::Full.at(n))
    }

    #[test]
    fn h_n_uniform_is_one() {
        let (model, a) = uniform_full(20);
        let table = h_table_q(&model, &a);
        for m in 0..=20 {
            assert_eq!(*table.h(m), q(1, 1), "h_{m}");
        }
        let (hs, scale) = h_n_scaled_f(&model, &a);
        assert_eq!(scale, 1.0);
        assert!((hs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn h_n_ewens_is_rising_factorial_over_factorial() {
        // h_n = theta(theta+1)...(theta+n-1)/n!; cross-checked by brute force
        let model = WeightModel::parse("ewens:theta=2").unwrap();
        for n in 1..=8u64 {
            let a = RestrictionRule::Full.at(n);
            let mut expected = BigRational::one();
            for j in 0..n {
                expected *= q(2 + j as i64, 1 + j as i64);
            }
            assert_eq!(h_n_q(&model, &a), expected);
            assert_eq!(brute_force_h_n(&model, &a).unwrap(), expected);
        }
    }

    #[test]
    fn h_matches_brute_force_across_models_and_restrictions() {
        let models = [
            WeightModel::uniform(),
            WeightModel::parse("ewens:theta=2").unwrap(),
            WeightModel::parse("perturbed:theta=1,overrides=1:3;2:1/2").unwrap(),
        ];
        let rules = [
            RestrictionRule::Full,
            RestrictionRule::ParityOdd,
            RestrictionRule::parse("exclude:2").unwrap(),
        ];
        for model in &models {
            for rule in &rules {
                for n in 1..=8u64 {
                    let a = rule.at(n);
                    assert_eq!(
                        h_n_q(model, &a),
                        brute_force_h_n(model, &a).unwrap(),
                        "{} {} n={n}",
                        model.spec_string(),
                        rule.spec_string()
                    );
                }
            }
        }
    }

    #[test]
    fn h_restricted_to_one_and_three() {
        // only 3 of the 6 permutations of S_3 survive
        let model = WeightModel::uniform();
        let a = RestrictionRule::parse("list:1,3").unwrap().at(3);
        assert_eq!(h_n_q(&model, &a), q(1, 2));
    }

    #[test]
    fn ell1_law_examples() {
        // uniform full: P[len=k] = 1/n
        let (model, a) = uniform_full(10);
        let law = ell1_law_q(&model, &a).unwrap();
        for k in 1..=10 {
            assert_eq!(law.prob_q(&Outcome::Count(k)).unwrap(), q(1, 10));
        }
        // n=1: point mass
        let (model, a) = uniform_full(1);
        let law = ell1_law_q(&model, &a).unwrap();
        assert_eq!(law.prob_q(&Outcome::Count(1)).unwrap(), q(1, 1));
        // uniform, n=3, A={1,3}: P[1] = 1/3, P[3] = 2/3
        let model = WeightModel::uniform();
        let a = RestrictionRule::parse("list:1,3").unwrap().at(3);
        let law = ell1_law_q(&model, &a).unwrap();
        assert_eq!(law.prob_q(&Outcome::Count(1)).unwrap(), q(1, 3));
        assert_eq!(law.prob_q(&Outcome::Count(3)).unwrap(), q(2, 3));
    }

    #[test]
    fn ell1_law_matches_brute_force() {
        let models = [
            WeightModel::parse("ewens:theta=2").unwrap(),
            WeightModel::parse("perturbed:theta=1,overrides=1:3;2:1/2").unwrap(),
        ];
        for model in &models {
            for n in 2..=8u64 {
                let a = RestrictionRule::ParityOdd.at(n);
                let series = ell1_law_q(model, &a).unwrap();
                let oracle = brute_force_law(model, &a, &Statistic::CycleOfOne).unwrap();
                assert_eq!(series, oracle, "{} n={n}", model.spec_string());
            }
        }
    }

    #[test]
    fn ell1_float_agrees_with_exact() {
        let model = WeightModel::parse("ewens:theta=2").unwrap();
        let a = RestrictionRule::Full.at(50);
        let exact = ell1_law_q(&model, &a).unwrap();
        let float = ell1_law_f(&model, &a).unwrap();
        assert!(exact.tv_f64(&float) < 1e-12);
    }

    #[test]
    fn ell1_moment_examples() {
        // empty sum when b+1 > n
        let (model, a) = uniform_full(3);
        assert_eq!(ell1_falling_factorial_moment_f(&model, &a, 3).unwrap(), 0.0);
        // uniform: E[len-1] = (n-1)/2
        let (model, a) = uniform_full(100);
        let m1 = ell1_falling_factorial_moment_f(&model, &a, 1).unwrap();
        assert!((m1 - 49.5).abs() < 1e-9);
        // ewens(theta): E[len-1] approaches n/(theta+1)
        let model = WeightModel::parse("ewens:theta=2").unwrap();
        let a = RestrictionRule::Full.at(4000);
        let m1 = ell1_falling_factorial_moment_f(&model, &a, 1).unwrap();
        assert!(
            (m1 / (4000.0 / 3.0) - 1.0).abs() < 0.01,
            "E[len-1] = {m1} vs {}",
            4000.0 / 3.0
        );
    }

    #[test]
    fn law_of_t_matches_brute_force() {
        let models = [
            WeightModel::uniform(),
            WeightModel::parse("perturbed:theta=1,overrides=1:3;2:1/2").unwrap(),
        ];
        let rules = [
            RestrictionRule::Full,
            RestrictionRule::parse("exclude:2").unwrap(),
        ];
        for model in &models {
            for rule in &rules {
                for n in 1..=8u64 {
                    let a = rule.at(n);
                    let series = law_of_t_q(model, &a).unwrap();
                    let oracle = brute_force_law(model, &a, &Statistic::TotalCycles).unwrap();
                    assert_eq!(series, oracle);
                }
            }
        }
    }

    #[test]
    fn joint_law_examples() {
        // M = {n}: P[C_n = 1] = theta_n / (n h_n)
        let model = WeightModel::parse("ewens:theta=2").unwrap();
        let a = RestrictionRule::Full.at(5);
        let law = joint_cycle_count_law_q(&model, &a, &[5]).unwrap();
        let h5 = h_n_q(&model, &a);
        let expected = q(2, 5) / &h5;
        assert_eq!(law.prob_q(&Outcome::Counts(vec![1])).unwrap(), expected);
        // uniform n=3, M={1}: P = 1/3, 1/2, 1/6 for C1 = 0, 1, 3
        let (model, a) = uniform_full(3);
        let law = joint_cycle_count_law_q(&model, &a, &[1]).unwrap();
        assert_eq!(law.prob_q(&Outcome::Counts(vec![0])).unwrap(), q(1, 3));
        assert_eq!(law.prob_q(&Outcome::Counts(vec![1])).unwrap(), q(1, 2));
        assert_eq!(law.prob_q(&Outcome::Counts(vec![3])).unwrap(), q(1, 6));
        // M empty: trivial law
        let law = joint_cycle_count_law_q(&model, &a, &[]).unwrap();
        assert_eq!(law.prob_q(&Outcome::Counts(vec![])).unwrap(), q(1, 1));
        // marker outside restriction is rejected
        let odd = RestrictionRule::ParityOdd.at(4);
        assert!(matches!(
            joint_cycle_count_law_q(&model, &odd, &[2]),
            Err(ExactError::MarkerOutsideRestriction { m: 2 })
        ));
    }

    #[test]
    fn joint_law_matches_brute_force() {
        let model = WeightModel::parse("ewens:theta=2").unwrap();
        let a = RestrictionRule::Full.at(7);
        let law = joint_cycle_count_law_q(&model, &a, &[1, 2]).unwrap();
        let oracle = brute_force_law(&model, &a, &Statistic::CountsOn(vec![1, 2])).unwrap();
        assert_eq!(law, oracle);
    }

    #[test]
    fn block_count_law_matches_brute_force() {
        let model = WeightModel::parse("perturbed:theta=1,overrides=1:3;2:1/2").unwrap();
        let a = RestrictionRule::Full.at(8);
        let block: BTreeSet<u64> = [1, 2, 3].into_iter().collect();
        let law = block_count_law_q(&model, &a, &block).unwrap();
        let oracle = brute_force_law(&model, &a, &Statistic::BlockCount(block)).unwrap();
        assert_eq!(law, oracle);
    }

    #[test]
    fn char_t_examples() {
        // s = 0: characteristic function is 1
        let (model, a) = uniform_full(6);
        let c = char_t(&model, &a, 0.0).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // n = 1: e^{is}
        let (model, a1) = uniform_full(1);
        let s = 0.7;
        let c = char_t(&model, &a1, s).unwrap();
        assert!((c - Complex64::new(0.0, s).exp()).norm() < 1e-12);
        // uniform n=3: (2 e^{is} + 3 e^{2is} + e^{3is}) / 6
        let (_, a3) = uniform_full(3);
        for &s in &[0.3, 1.1, -2.0] {
            let c = char_t(&model, &a3, s).unwrap();
            let e = Complex64::new(0.0, s).exp();
            let expected = (2.0 * e + 3.0 * e * e + e * e * e) / 6.0;
            assert!((c - expected).norm() < 1e-12, "s={s}");
        }
        // |char| <= 1 on a grid
        for &s in &[0.1, 0.5, 2.0, 3.0] {
            assert!(char_t(&model, &a3, s).unwrap().norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn char_t_derivative_matches_mean() {
        // -i d/ds char_T at 0 equals E[T], by central finite difference
        let model = WeightModel::parse("ewens:theta=2").unwrap();
        let a = RestrictionRule::Full.at(8);
        let eps = 1e-5;
        let grid = char_t_grid(&model, &a, &[eps, -eps]).unwrap();
        let derivative = (grid[0] - grid[1]) / Complex64::new(0.0, 2.0 * eps);
        let mean = mean_t_q(&model, &a).unwrap().to_f64().unwrap();
        assert!(
            (derivative.re - mean).abs() < 1e-6 && derivative.im.abs() < 1e-6,
            "derivative {derivative} vs mean {mean}"
        );
    }

    #[test]
    fn char_blocks_examples() {
        let (model, a) = uniform_full(3);
        // all s_j = 0
        let ones: BTreeSet<u64> = [1].into_iter().collect();
        let c = char_blocks(&model, &a, &[(ones.clone(), 0.0)]).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // single block 1..=n equals char_T
        let full_block: BTreeSet<u64> = (1..=3).collect();
        for &s in &[0.4, 1.3] {
            let via_blocks = char_blocks(&model, &a, &[(full_block.clone(), s)]).unwrap();
            let direct = char_t(&model, &a, s).unwrap();
            assert!((via_blocks - direct).norm() < 1e-12);
        }
        // block {1}: E[e^{is C_1}] = (2 + 3 e^{is} + e^{3is}) / 6
        for &s in &[0.9, -0.4] {
            let c = char_blocks(&model, &a, &[(ones.clone(), s)]).unwrap();
            let e = Complex64::new(0.0, s).exp();
            let expected = (2.0 + 3.0 * e + e.powi(3)) / 6.0;
            assert!((c - expected).norm() < 1e-12);
        }
        // overlapping blocks rejected
        let b1: BTreeSet<u64> = [1, 2].into_iter().collect();
        let b2: BTreeSet<u64> = [2, 3].into_iter().collect();
        assert!(matches!(
            char_blocks(&model, &a, &[(b1, 0.1), (b2, 0.2)]),
            Err(ExactError::OverlappingBlocks)
        ));
    }

    #[test]
    fn char_blocks_partition_additivity() {
        // blocks partitioning 1..=n with equal s reproduce char_T
        let model = WeightModel::parse("ewens:theta=2").unwrap();
        let a = RestrictionRule::Full.at(7);
        let s = 0.8;
        let even: BTreeSet<u64> = (1..=7).filter(|m| m % 2 == 0).collect();
        let odd: BTreeSet<u64> = (1..=7).filter(|m| m % 2 == 1).collect();
        let joint = char_blocks(&model, &a, &[(even, s), (odd, s)]).unwrap();
        let direct = char_t(&model, &a, s).unwrap();
        assert!((joint - direct).norm() < 1e-12);
    }

    #[test]
    fn even_odd_two_sided_route_matches_blocks_route() {
        let model = WeightModel::parse("ewens:theta=2").unwrap();
        let n = 40u64;
        let a = RestrictionRule::Full.at(n);
        let even: BTreeSet<u64> = (1..=n).filter(|m| m % 2 == 0).collect();
        let odd: BTreeSet<u64> = (1..=n).filter(|m| m % 2 == 1).collect();
        for &(s1, s2) in &[(0.0, 0.0), (0.5, -0.3), (0.7, 0.7)] {
            let via_blocks =
                char_blocks(&model, &a, &[(even.clone(), s1), (odd.clone(), s2)]).unwrap();
            let via_two_sided = char_even_odd_two_sided(&model, n, s1, s2).unwrap();
            assert!(
                (via_blocks - via_two_sided).norm() < 1e-10,
                "s1={s1} s2={s2}: {via_blocks} vs {via_two_sided}"
            );
        }
    }

    #[test]
    fn degenerate_measure_is_typed() {
        let model = WeightModel::uniform();
        let a = RestrictionRule::parse("list:2").unwrap().at(3);
        assert!(matches!(
            ell1_law_q(&model, &a),
            Err(ExactError::DegenerateMeasure { n: 3 })
        ));
        assert!(matches!(
            char_t(&model, &a, 0.3),
            Err(ExactError::DegenerateMeasure { n: 3 })
        ));
    }

    #[test]
    fn laws_sum_to_one() {
        let model = WeightModel::parse("perturbed:theta=1,overrides=1:3;2:1/2").unwrap();
        let a = RestrictionRule::ParityOdd.at(7);
        // construction enforces the sum; spot-check float conversions
        let laws = [
            ell1_law_q(&model, &a).unwrap(),
            law_of_t_q(&model, &a).unwrap(),
            joint_cycle_count_law_q(&model, &a, &[1, 3]).unwrap(),
        ];
        for law in &laws {
            let total: f64 = law.iter_f64().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
