//! Dense truncated formal power series.
//!
//! A [`Series`] stores coefficients for indices `0..=truncation_order`
//! together with a rescaling factor `scale`: the stored coefficient at
//! index `n` represents `(true coefficient) * scale^n`. Working in the
//! rescaled variable keeps coefficients of order one when the generating
//! function has its singularity at `scale`, which would otherwise under-
//! or overflow floats for large truncation orders. Exact kinds always use
//! `scale = 1`.
//!
//! Binary operations require equal scales; a mismatch is an error, never a
//! silent coercion. Mixed truncation orders truncate to the shorter series.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Errors from series construction and arithmetic.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("series scale mismatch: {0} vs {1}")]
    ScaleMismatch(f64, f64),
    #[error("exact-kind series must have scale 1, got {0}")]
    ExactKindScaled(f64),
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("exp requires a zero constant term")]
    NonzeroConstantTerm,
    #[error("log requires constant term 1")]
    ConstantTermNotOne,
    #[error("coefficient index {index} beyond truncation order {truncation}")]
    IndexBeyondTruncation { index: usize, truncation: usize },
}

/// Scalar kinds a series can hold: exact rationals, real floats, or
/// complex floats.
pub trait SeriesScalar: Clone + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    /// Exact kinds (rationals) admit no rescaling and no rounding.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add_ref(&self, rhs: &Self) -> Self;
    fn sub_ref(&self, rhs: &Self) -> Self;
    fn mul_ref(&self, rhs: &Self) -> Self;
    fn div_ref(&self, rhs: &Self) -> Self;
    fn from_int(value: u64) -> Self;
    /// Divide by a float factor; exact kinds only ever see factor 1.
    fn div_f64(&self, factor: f64) -> Self;
}

impl SeriesScalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div_ref(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn from_int(value: u64) -> Self {
        BigRational::from_integer(value.into())
    }
    fn div_f64(&self, factor: f64) -> Self {
        debug_assert_eq!(factor, 1.0, "exact kind is never rescaled");
        self.clone()
    }
}

impl SeriesScalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div_ref(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn from_int(value: u64) -> Self {
        value as f64
    }
    fn div_f64(&self, factor: f64) -> Self {
        self / factor
    }
}

impl SeriesScalar for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div_ref(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn from_int(value: u64) -> Self {
        Complex64::new(value as f64, 0.0)
    }
    fn div_f64(&self, factor: f64) -> Self {
        self / factor
    }
}

/// Which convention [`Series::coefficient`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffConvention {
    /// The true coefficient, i.e. stored value divided by `scale^n`.
    True,
    /// The stored, rescaled value.
    Scaled,
}

/// A dense truncated power series. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T: SeriesScalar> {
    coeffs: Vec<T>,
    scale: f64,
}

impl<T: SeriesScalar> Series<T> {
    /// Build a series from coefficients `c_0..=c_N`, stored at the given scale.
    pub fn from_coeffs(coeffs: Vec<T>, scale: f64) -> Result<Self, SeriesError> {
        if scale.is_nan() || scale <= 0.0 || !scale.is_finite() {
            return Err(SeriesError::InvalidScale(scale));
        }
        if T::EXACT && scale != 1.0 {
            return Err(SeriesError::ExactKindScaled(scale));
        }
        assert!(
            !coeffs.is_empty(),
            "a series has at least the constant term"
        );
        Ok(Series { coeffs, scale })
    }

    pub fn zero(truncation: usize, scale: f64) -> Result<Self, SeriesError> {
        Self::from_coeffs(vec![T::zero(); truncation + 1], scale)
    }

    pub fn one(truncation: usize, scale: f64) -> Result<Self, SeriesError> {
        let mut coeffs = vec![T::zero(); truncation + 1];
        coeffs[0] = T::one();
        Self::from_coeffs(coeffs, scale)
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient at index `n`, in the requested convention.
    pub fn coefficient(&self, n: usize, convention: CoeffConvention) -> Result<T, SeriesError> {
        if n > self.truncation_order() {
            return Err(SeriesError::IndexBeyondTruncation {
                index: n,
                truncation: self.truncation_order(),
            });
        }
        let stored = self.coeffs[n].clone();
        Ok(match convention {
            CoeffConvention::Scaled => stored,
            CoeffConvention::True => stored.div_f64(self.scale.powi(n as i32)),
        })
    }

    fn check_scale(&self, rhs: &Self) -> Result<(), SeriesError> {
        if self.scale != rhs.scale {
            return Err(SeriesError::ScaleMismatch(self.scale, rhs.scale));
        }
        Ok(())
    }

    /// Coefficientwise sum, truncated to the shorter operand.
    pub fn add(&self, rhs: &Self) -> Result<Self, SeriesError> {
        self.check_scale(rhs)?;
        let n = self.truncation_order().min(rhs.truncation_order());
        let coeffs = (0..=n)
            .map(|i| self.coeffs[i].add_ref(&rhs.coeffs[i]))
            .collect();
        Self::from_coeffs(coeffs, self.scale)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, SeriesError> {
        self.check_scale(rhs)?;
        let n = self.truncation_order().min(rhs.truncation_order());
        let coeffs = (0..=n)
            .map(|i| self.coeffs[i].sub_ref(&rhs.coeffs[i]))
            .collect();
        Self::from_coeffs(coeffs, self.scale)
    }

    /// Cauchy product, truncated to the shorter operand. Schoolbook O(N^2).
    pub fn mul(&self, rhs: &Self) -> Result<Self, SeriesError> {
        self.check_scale(rhs)?;
        let n = self.truncation_order().min(rhs.truncation_order());
        let mut coeffs = vec![T::zero(); n + 1];
        for (i, a) in self.coeffs.iter().take(n + 1).enumerate() {
            if a.is_zero() {
                continue;
            }
            for (b, c) in rhs.coeffs.iter().zip(coeffs[i..].iter_mut()) {
                *c = c.add_ref(&a.mul_ref(b));
            }
        }
        Self::from_coeffs(coeffs, self.scale)
    }

    /// Multiply every coefficient by a scalar.
    pub fn scalar_mul(&self, factor: &T) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c.mul_ref(factor)).collect();
        Series {
            coeffs,
            scale: self.scale,
        }
    }

    /// exp of a series with zero constant term, via the recurrence
    /// `n F_n = sum_{k=1}^{n} k g_k F_{n-k}` obtained from `F' = g' F`.
    /// Exact in the rational kind.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let n = self.truncation_order();
        // k * g_k, precomputed once.
        let kg: Vec<T> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, g)| T::from_int(k as u64).mul_ref(g))
            .collect();
        let mut out = vec![T::zero(); n + 1];
        out[0] = T::one();
        for m in 1..=n {
            let mut acc = T::zero();
            for (factor, prior) in kg[1..=m].iter().zip(out[..m].iter().rev()) {
                if factor.is_zero() {
                    continue;
                }
                acc = acc.add_ref(&factor.mul_ref(prior));
            }
            out[m] = acc.div_ref(&T::from_int(m as u64));
        }
        Self::from_coeffs(out, self.scale)
    }

    /// log of a series with constant term 1; inverse of [`Series::exp`]
    /// to the truncation order.
    pub fn log(&self) -> Result<Self, SeriesError> {
        if self.coeffs[0] != T::one() {
            return Err(SeriesError::ConstantTermNotOne);
        }
        let n = self.truncation_order();
        let mut kg = vec![T::zero(); n + 1];
        let mut out = vec![T::zero(); n + 1];
        for m in 1..=n {
            // n g_n = n F_n - sum_{k=1}^{n-1} k g_k F_{n-k}
            let mut acc = T::from_int(m as u64).mul_ref(&self.coeffs[m]);
            for (factor, prior) in kg[1..m].iter().zip(self.coeffs[1..m].iter().rev()) {
                if factor.is_zero() {
                    continue;
                }
                acc = acc.sub_ref(&factor.mul_ref(prior));
            }
            kg[m] = acc;
            out[m] = kg[m].div_ref(&T::from_int(m as u64));
        }
        Self::from_coeffs(out, self.scale)
    }

    /// The series of `f(-t)`: odd stored coefficients change sign
    /// (the rescaling factor is unaffected).
    pub fn alternate(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i % 2 == 1 {
                    T::zero().sub_ref(c)
                } else {
                    c.clone()
                }
            })
            .collect();
        Series {
            coeffs,
            scale: self.scale,
        }
    }

    pub fn truncated(&self, truncation: usize) -> Self {
        let n = truncation.min(self.truncation_order());
        Series {
            coeffs: self.coeffs[..=n].to_vec(),
            scale: self.scale,
        }
    }
}

/// Convert a rational series to floats (same scale semantics, scale 1).
pub fn to_f64_series(s: &Series<BigRational>) -> Series<f64> {
    let coeffs = s
        .coeffs()
        .iter()
        .map(|c| num_traits::ToPrimitive::to_f64(c).expect("rational out of f64 range"))
        .collect();
    Series::from_coeffs(coeffs, s.scale()).expect("valid scale")
}

/// Lift a real series to complex coefficients.
pub fn to_complex_series(s: &Series<f64>) -> Series<Complex64> {
    let coeffs = s.coeffs().iter().map(|&c| Complex64::new(c, 0.0)).collect();
    Series::from_coeffs(coeffs, s.scale()).expect("valid scale")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn qs(coeffs: &[(i64, i64)]) -> Series<BigRational> {
        Series::from_coeffs(coeffs.iter().map(|&(n, d)| q(n, d)).collect(), 1.0).unwrap()
    }

    #[test]
    fn add_cancellation_and_identity() {
        // (1 + t) + (1 - t) = 2
        let a = qs(&[(1, 1), (1, 1)]);
        let b = qs(&[(1, 1), (-1, 1)]);
        assert_eq!(a.add(&b).unwrap(), qs(&[(2, 1), (0, 1)]));
        // a + 0 = a
        let zero = Series::<BigRational>::zero(1, 1.0).unwrap();
        assert_eq!(a.add(&zero).unwrap(), a);
    }

    #[test]
    fn add_termwise() {
        // (t + t^3/3) + (t^2/2) = t + t^2/2 + t^3/3
        let a = qs(&[(0, 1), (1, 1), (0, 1), (1, 3)]);
        let b = qs(&[(0, 1), (0, 1), (1, 2), (0, 1)]);
        assert_eq!(a.add(&b).unwrap(), qs(&[(0, 1), (1, 1), (1, 2), (1, 3)]));
    }

    #[test]
    fn mul_geometric_inverse() {
        // (1 - t) * (1 + t + t^2 + ...) = 1
        let n = 12;
        let mut one_minus_t = vec![q(0, 1); n + 1];
        one_minus_t[0] = q(1, 1);
        one_minus_t[1] = q(-1, 1);
        let a = Series::from_coeffs(one_minus_t, 1.0).unwrap();
        let b = Series::from_coeffs(vec![q(1, 1); n + 1], 1.0).unwrap();
        assert_eq!(a.mul(&b).unwrap(), Series::one(n, 1.0).unwrap());
    }

    #[test]
    fn mul_identity_and_square() {
        let a = qs(&[(3, 1), (1, 2), ((7), 5)]);
        let one = Series::one(2, 1.0).unwrap();
        assert_eq!(a.mul(&one).unwrap(), a);
        // (1 + t)^2 = 1 + 2t + t^2
        let b = qs(&[(1, 1), (1, 1), (0, 1)]);
        assert_eq!(b.mul(&b).unwrap(), qs(&[(1, 1), (2, 1), (1, 1)]));
    }

    #[test]
    fn exp_of_zero_is_one() {
        let z = Series::<BigRational>::zero(5, 1.0).unwrap();
        assert_eq!(z.exp().unwrap(), Series::one(5, 1.0).unwrap());
    }

    #[test]
    fn exp_of_log_series_is_geometric() {
        // exp(sum t^m / m) = 1/(1-t): all coefficients 1
        let n = 20;
        let coeffs: Vec<BigRational> = (0..=n)
            .map(|m| if m == 0 { q(0, 1) } else { q(1, m as i64) })
            .collect();
        let g = Series::from_coeffs(coeffs, 1.0).unwrap();
        let f = g.exp().unwrap();
        for m in 0..=n {
            assert_eq!(f.coefficient(m, CoeffConvention::True).unwrap(), q(1, 1));
        }
    }

    #[test]
    fn exp_coefficient_with_gap() {
        // [t^3] exp(t + t^3/3) = 1/2: permutations of S_3 with all cycle
        // lengths in {1,3} are the identity and the two 3-cycles, 3/3! = 1/2.
        let g = qs(&[(0, 1), (1, 1), (0, 1), (1, 3)]);
        let f = g.exp().unwrap();
        assert_eq!(f.coefficient(3, CoeffConvention::True).unwrap(), q(1, 2));
        assert_eq!(f.coefficient(0, CoeffConvention::True).unwrap(), q(1, 1));
    }

    #[test]
    fn exp_rejects_nonzero_constant() {
        let g = qs(&[(1, 1), (1, 1)]);
        assert_eq!(g.exp().unwrap_err(), SeriesError::NonzeroConstantTerm);
    }

    #[test]
    fn log_basics() {
        // log(1) = 0
        let one = Series::<BigRational>::one(4, 1.0).unwrap();
        assert_eq!(one.log().unwrap(), Series::zero(4, 1.0).unwrap());
        // log(1/(1-t)) = sum t^m/m
        let n = 15;
        let f = Series::from_coeffs(vec![q(1, 1); n + 1], 1.0).unwrap();
        let g = f.log().unwrap();
        for m in 1..=n {
            assert_eq!(
                g.coefficient(m, CoeffConvention::True).unwrap(),
                q(1, m as i64)
            );
        }
        // log requires constant term one
        let bad = qs(&[(2, 1), (1, 1)]);
        assert_eq!(bad.log().unwrap_err(), SeriesError::ConstantTermNotOne);
    }

    #[test]
    fn log_exp_round_trip() {
        // log(exp(t + t^2)) = t + t^2
        let g = qs(&[(0, 1), (1, 1), (1, 1), (0, 1), (0, 1)]);
        assert_eq!(g.exp().unwrap().log().unwrap(), g);
    }

    #[test]
    fn exp_matches_taylor_sum() {
        // exp recurrence agrees with the direct truncated sum of g^k / k!.
        let n = 24;
        let coeffs: Vec<BigRational> = (0..=n)
            .map(|m| match m {
                0 => q(0, 1),
                m => q(if m % 3 == 0 { -1 } else { 2 }, (m * m) as i64),
            })
            .collect();
        let g = Series::from_coeffs(coeffs, 1.0).unwrap();
        let mut taylor = Series::one(n, 1.0).unwrap();
        let mut power = Series::one(n, 1.0).unwrap();
        let mut factorial = q(1, 1);
        for k in 1..=n {
            power = power.mul(&g).unwrap();
            factorial *= q(k as i64, 1);
            let inv = q(1, 1) / factorial.clone();
            taylor = taylor.add(&power.scalar_mul(&inv)).unwrap();
        }
        assert_eq!(g.exp().unwrap(), taylor);
    }

    #[test]
    fn coefficient_bounds_and_conventions() {
        let s = Series::<f64>::from_coeffs(vec![1.0, 4.0], 2.0).unwrap();
        assert_eq!(s.coefficient(1, CoeffConvention::Scaled).unwrap(), 4.0);
        assert_eq!(s.coefficient(1, CoeffConvention::True).unwrap(), 2.0);
        assert!(matches!(
            s.coefficient(2, CoeffConvention::True),
            Err(SeriesError::IndexBeyondTruncation { .. })
        ));
    }

    #[test]
    fn scale_rules() {
        let a = Series::<f64>::one(3, 0.5).unwrap();
        let b = Series::<f64>::one(3, 1.0).unwrap();
        assert_eq!(a.add(&b).unwrap_err(), SeriesError::ScaleMismatch(0.5, 1.0));
        assert!(matches!(
            Series::<BigRational>::one(3, 0.5),
            Err(SeriesError::ExactKindScaled(_))
        ));
        assert!(matches!(
            Series::<f64>::one(3, -1.0),
            Err(SeriesError::InvalidScale(_))
        ));
    }

    #[test]
    fn rescaled_exp_matches_unscaled() {
        // Same true coefficients computed at scale 1 and at scale 1/2.
        let n = 30;
        let rho: f64 = 0.5;
        let g1: Vec<f64> = (0..=n)
            .map(|m| if m == 0 { 0.0 } else { 1.0 / m as f64 })
            .collect();
        let g_scaled: Vec<f64> = g1
            .iter()
            .enumerate()
            .map(|(m, c)| c * rho.powi(m as i32))
            .collect();
        let f1 = Series::from_coeffs(g1, 1.0).unwrap().exp().unwrap();
        let f2 = Series::from_coeffs(g_scaled, rho).unwrap().exp().unwrap();
        for m in 0..=n {
            let a = f1.coefficient(m, CoeffConvention::True).unwrap();
            let b = f2.coefficient(m, CoeffConvention::True).unwrap();
            assert!(
                (a - b).abs() <= 1e-10 * a.abs().max(1.0),
                "m={m}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn alternate_flips_odd_indices() {
        let s = qs(&[(1, 1), (2, 1), (3, 1), (4, 1)]);
        assert_eq!(s.alternate(), qs(&[(1, 1), (-2, 1), (3, 1), (-4, 1)]));
    }
}
