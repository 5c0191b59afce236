//! Evaluable leading-order asymptotics.
//!
//! The central estimate: for a weight model in the declared singularity
//! class and marked length sets `D^(1)..D^(k)` whose maxima grow slowly,
//!
//! ```text
//! [t^(n-b)] exp(w g(t) + sum_j v_j L_{D^(j)}(t))
//!   = e^{Kw} n^{w vartheta - 1} / r^(n-b)
//!     * exp(sum_j v_j L_{D^(j)}(r)) * (1/Gamma(w vartheta) + O(dbar/n)).
//! ```
//!
//! Every prediction here is a leading term with its error order carried as
//! a symbolic tag; orders are validated empirically by ladder regressions,
//! never added numerically (the constants are unknown). Predictions are
//! returned in rescaled form, `[t^(n-b)] * r^(n-b)`, to pair with series
//! stored at scale `r`.

pub mod gamma;

use num_complex::Complex64;
use serde::Serialize;

use crate::model::WeightModel;

pub use gamma::{complex_gamma, ln_gamma_real, reciprocal_gamma, GammaPole};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AsymptoticsError {
    #[error(transparent)]
    Gamma(#[from] GammaPole),
    #[error("prediction evaluated to a non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("alternating sum for g(-r) did not settle within horizon {horizon} (residual {residual:.3e})")]
    DivergentAlternatingSum { horizon: u64, residual: f64 },
}

/// Symbolic error order of a leading-term prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorOrder {
    /// `O(dbar_n / n)` with `dbar_n` the largest marked length.
    DBarOverN,
    /// `O(n^e)` for the given exponent `e`.
    NPow(f64),
    /// `o(1)`.
    SmallO1,
}

impl std::fmt::Display for ErrorOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ErrorOrder::DBarOverN => write!(f, "O(dbar_n/n)"),
            ErrorOrder::NPow(e) => write!(f, "O(n^{e})"),
            ErrorOrder::SmallO1 => write!(f, "o(1)"),
        }
    }
}

/// A leading-term value with its claimed error order and an echo of the
/// inputs that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub quantity: String,
    pub n: u64,
    pub value_re: f64,
    pub value_im: f64,
    /// Coefficient predictions are rescaled: the value corresponds to
    /// `[t^index] * r^index`. Characteristic-function predictions are
    /// plain values.
    pub rescaled: bool,
    pub error_order: String,
    pub inputs_digest: String,
    pub warnings: Vec<String>,
}

impl Prediction {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }

    fn build(
        quantity: &str,
        n: u64,
        value: Complex64,
        rescaled: bool,
        error_order: ErrorOrder,
        digest: String,
        warnings: Vec<String>,
    ) -> Result<Self, AsymptoticsError> {
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(AsymptoticsError::NonFinite(format!(
                "{quantity} at n={n}: {value}"
            )));
        }
        Ok(Prediction {
            quantity: quantity.to_owned(),
            n,
            value_re: value.re,
            value_im: value.im,
            rescaled,
            error_order: error_order.to_string(),
            inputs_digest: digest,
            warnings,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("prediction serializes")
    }
}

/// Documented validation bound for the marker magnitudes `|w|, |v_j|`;
/// the uniformity radius of the underlying estimate is not quantified, so
/// predictions warn beyond this.
pub const MARKER_BOUND: f64 = 2.0;

fn marker_warnings(w: Complex64, v: &[Complex64], dbar: u64, n: u64) -> Vec<String> {
    let mut warnings = Vec::new();
    if w.norm() > MARKER_BOUND || v.iter().any(|vj| vj.norm() > MARKER_BOUND) {
        warnings.push(format!(
            "marker magnitude beyond validated bound {MARKER_BOUND}"
        ));
    }
    // growth sanity at this single n; ladders check the trend
    let phi = crate::model::growth_condition_diagnostic(dbar.max(1), n.max(2), 1.0);
    if phi > -1.0 {
        warnings.push(format!(
            "slow-growth condition doubtful: log n - n/dbar = {phi:.3}"
        ));
    }
    warnings
}

fn dbar(d_sets: &[Vec<u64>]) -> u64 {
    d_sets
        .iter()
        .map(|d| d.iter().copied().max().unwrap_or(1))
        .max()
        .unwrap_or(1)
}

/// Leading term of `[t^(n-b)] exp(w g + sum_j v_j L_{D^(j)})`, rescaled by
/// `r^(n-b)`. `d_sets` are the marked length sets (each paired with its
/// `v_j`). At a pole of `1/Gamma` the prediction is 0, the formula's own
/// limit.
pub fn predict_coefficient(
    model: &WeightModel,
    d_sets: &[Vec<u64>],
    w: Complex64,
    v: &[Complex64],
    n: u64,
    b: u64,
) -> Result<Prediction, AsymptoticsError> {
    if d_sets.len() != v.len() {
        return Err(AsymptoticsError::InvalidParameter(
            "one v per marked set".into(),
        ));
    }
    if b >= n {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "b = {b} must be below n = {n}"
        )));
    }
    let vartheta = model.vartheta();
    let ln_n = (n as f64).ln();
    let exponent_sum: Complex64 = d_sets
        .iter()
        .zip(v)
        .map(|(d, vj)| vj * model.l_at_r(d.iter().copied()))
        .sum();
    let value = (w * model.k_const()).exp()
        * ((w * vartheta - 1.0) * ln_n).exp()
        * exponent_sum.exp()
        * reciprocal_gamma(w * vartheta);
    let digest = format!("coeff|{}|w={w}|v={v:?}|n={n}|b={b}", model.spec_string());
    Prediction::build(
        "coefficient",
        n,
        value,
        true,
        ErrorOrder::DBarOverN,
        digest,
        marker_warnings(w, v, dbar(d_sets), n),
    )
}

/// Leading term of the normalization constant, rescaled:
/// `h_n r^n ~ exp(-L_D(r)) n^(vartheta-1) e^K / Gamma(vartheta)`.
pub fn predict_h_n(
    model: &WeightModel,
    a: &crate::model::RestrictionSet,
) -> Result<Prediction, AsymptoticsError> {
    let d: Vec<u64> = a.excluded().collect();
    let mut p = predict_coefficient(
        model,
        &[d],
        Complex64::new(1.0, 0.0),
        &[Complex64::new(-1.0, 0.0)],
        a.n(),
        0,
    )?;
    p.quantity = "h_n".into();
    Ok(p)
}

/// Leading term of `E[exp(isT)]`:
/// `n^(vartheta (e^{is}-1)) e^((K - L_D(r))(e^{is}-1)) Gamma(vartheta)/Gamma(e^{is} vartheta)`.
pub fn predict_char_t(
    model: &WeightModel,
    a: &crate::model::RestrictionSet,
    s: f64,
) -> Result<Prediction, AsymptoticsError> {
    let n = a.n();
    let vartheta = model.vartheta();
    let w = Complex64::new(0.0, s).exp();
    let marker = w - 1.0;
    let l_d = model.l_at_r(a.excluded());
    let gamma_top = complex_gamma(Complex64::new(vartheta, 0.0))?;
    let value = (marker * vartheta * (n as f64).ln()).exp()
        * (marker * (model.k_const() - l_d)).exp()
        * gamma_top
        * reciprocal_gamma(w * vartheta);
    let digest = format!("charT|{}|{}|s={s}", model.spec_string(), a.digest());
    Prediction::build(
        "char_T",
        n,
        value,
        false,
        ErrorOrder::DBarOverN,
        digest,
        marker_warnings(w, &[], a.excluded_max(), n),
    )
}

/// Leading term of `E[exp(is B_n(x))]` for the unrestricted measure:
/// `exp((e^{is}-1) L_{D_x}(r))` with `D_x = {1..floor(n^x)}`, `0 <= x < 1`.
pub fn predict_char_b(
    model: &WeightModel,
    n: u64,
    x: f64,
    s: f64,
) -> Result<Prediction, AsymptoticsError> {
    if !(0.0..1.0).contains(&x) {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "x must be in [0,1), got {x}"
        )));
    }
    let cutoff = (n as f64).powf(x).floor().max(1.0) as u64;
    let l_x = model.l_at_r(1..=cutoff);
    let marker = Complex64::new(0.0, s).exp() - 1.0;
    let value = (marker * l_x).exp();
    let digest = format!("charB|{}|n={n}|x={x}|s={s}", model.spec_string());
    Prediction::build(
        "char_B",
        n,
        value,
        false,
        ErrorOrder::NPow(x - 1.0),
        digest,
        Vec::new(),
    )
}

/// `g(-r)` by direct alternating summation of `theta[m] (-r)^m / m`, with
/// an averaging fallback when plain partial sums still oscillate at the
/// horizon. The tail of two successively averaged partial sums of an
/// alternating series with slowly varying terms shrinks quadratically.
pub fn g_at_minus_r(model: &WeightModel, horizon: u64, tol: f64) -> Result<f64, AsymptoticsError> {
    let mut partial = [0.0f64; 4];
    let mut sum = 0.0;
    for m in 1..=horizon {
        let term = model.theta_r_pow_m(m) / m as f64 * if m % 2 == 0 { 1.0 } else { -1.0 };
        sum += term;
        partial = [partial[1], partial[2], partial[3], sum];
        if m >= 4 && term.abs() <= tol {
            return Ok(sum);
        }
    }
    // Cesaro fallback: average adjacent partial sums twice.
    let once = [
        (partial[0] + partial[1]) / 2.0,
        (partial[1] + partial[2]) / 2.0,
        (partial[2] + partial[3]) / 2.0,
    ];
    let twice = [(once[0] + once[1]) / 2.0, (once[1] + once[2]) / 2.0];
    let residual = (twice[1] - twice[0]).abs();
    if residual > tol.sqrt() {
        return Err(AsymptoticsError::DivergentAlternatingSum { horizon, residual });
    }
    Ok(twice[1])
}

/// Leading term of `[t^(n-b)] exp(w1 g(t) + w2 g(-t) + sum_j v_j L_{D^(j)})`,
/// rescaled. Requires `Re(w1) >= 0`; the secondary singularity at `-r`
/// contributes the factor `e^{w2 g(-r)}` and an additive error
/// `O(n^(max(Re w2, 0) - 1))`.
pub fn predict_coefficient_two_sing(
    model: &WeightModel,
    w1: Complex64,
    w2: Complex64,
    d_sets: &[Vec<u64>],
    v: &[Complex64],
    n: u64,
    b: u64,
) -> Result<Prediction, AsymptoticsError> {
    if w1.re < 0.0 {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "Re(w1) must be nonnegative, got {}",
            w1.re
        )));
    }
    let g_neg_r = g_at_minus_r(model, 1_000_000, 1e-9)?;
    let base = predict_coefficient(model, d_sets, w1, v, n, b)?;
    let value = base.value() * (w2 * g_neg_r).exp();
    let digest = format!("coeff2|{}|w1={w1}|w2={w2}|n={n}|b={b}", model.spec_string());
    Prediction::build(
        "coefficient_two_singularities",
        n,
        value,
        true,
        ErrorOrder::NPow(w2.re.max(0.0) - 1.0),
        digest,
        base.warnings,
    )
}

/// Leading term of the joint even/odd characteristic function at full
/// range, `E[exp(i s1 B_even(1) + i s2 B_odd(1))]`, via the two-singularity
/// coefficient estimate divided by the `h_n` estimate.
pub fn predict_char_even_odd(
    model: &WeightModel,
    n: u64,
    s1: f64,
    s2: f64,
) -> Result<Prediction, AsymptoticsError> {
    let vartheta = model.vartheta();
    let e1 = Complex64::new(0.0, s1).exp();
    let e2 = Complex64::new(0.0, s2).exp();
    let w1 = (e1 + e2) / 2.0;
    let w2 = (e1 - e2) / 2.0;
    let g_neg_r = g_at_minus_r(model, 1_000_000, 1e-9)?;
    let gamma_top = complex_gamma(Complex64::new(vartheta, 0.0))?;
    let value = ((w1 - 1.0) * model.k_const()).exp()
        * ((w1 - 1.0) * vartheta * (n as f64).ln()).exp()
        * (w2 * g_neg_r).exp()
        * gamma_top
        * reciprocal_gamma(w1 * vartheta);
    let digest = format!("charEvOdd|{}|n={n}|s1={s1}|s2={s2}", model.spec_string());
    Prediction::build(
        "char_even_odd",
        n,
        value,
        false,
        ErrorOrder::NPow(w2.re.max(0.0) - w1.re * vartheta),
        digest,
        Vec::new(),
    )
}

/// Limit moment `E[(len_1/n)^b] -> b! Gamma(vartheta+1)/Gamma(vartheta+b+1)`,
/// the `b`-th moment of Beta(1, vartheta). Closed form via the functional
/// equation: `b! / prod_{j=1..b} (vartheta + j)`.
pub fn pd_moment_limit(vartheta: f64, b: u32) -> f64 {
    assert!(vartheta > 0.0);
    let mut value = 1.0;
    for j in 1..=b {
        value *= j as f64 / (vartheta + j as f64);
    }
    value
}

/// The two shapes of extra factor handled by the coefficient estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaFamilyKind {
    /// `f(t) = (1 - t/r)^(-beta) (1 + O(t-r))`, `beta >= 0`: shifts the
    /// singularity exponent.
    Singular { beta: f64 },
    /// A polynomial factor `P_n(t)` with nonnegative coefficients and
    /// `P_n(r(1+1/d_n)) = P_n(r)(1+o(1))` (declared by the caller);
    /// contributes its value at `r`.
    Polynomial { value_at_r: f64 },
}

/// Leading term of `[t^n] f(t) exp(g + v L_D)`, rescaled by `r^n`.
pub fn beta_family_prediction(
    model: &WeightModel,
    d_set: &[u64],
    v: Complex64,
    n: u64,
    kind: BetaFamilyKind,
) -> Result<Prediction, AsymptoticsError> {
    let vartheta = model.vartheta();
    let l_d = model.l_at_r(d_set.iter().copied());
    let ln_n = (n as f64).ln();
    let (value, order) = match kind {
        BetaFamilyKind::Singular { beta } => {
            if beta < 0.0 {
                return Err(AsymptoticsError::InvalidParameter(format!(
                    "beta must be nonnegative, got {beta}"
                )));
            }
            let value = model.k_const().exp()
                * ((vartheta + beta - 1.0) * ln_n).exp()
                * (v * l_d).exp()
                * reciprocal_gamma(Complex64::new(vartheta + beta, 0.0));
            (value, ErrorOrder::DBarOverN)
        }
        BetaFamilyKind::Polynomial { value_at_r } => {
            let value = value_at_r
                * ((vartheta - 1.0) * ln_n).exp()
                * (v * l_d).exp()
                * reciprocal_gamma(Complex64::new(vartheta, 0.0));
            (value, ErrorOrder::SmallO1)
        }
    };
    let digest = format!("beta_family|{}|{kind:?}|v={v}|n={n}", model.spec_string());
    Prediction::build("beta_family", n, value, true, order, digest, Vec::new())
}
