//! Weight sequences with singularity data, and restriction sets.
//!
//! A [`WeightModel`] is a sequence `theta[m] >= 0` together with declared
//! singularity data `(r, vartheta, K)` of its generating function
//! `g(t) = sum theta[m] t^m / m`: the radius `r`, the logarithmic weight
//! `vartheta`, and the constant term `K` of the expansion at `r`. For the
//! built-in families the data is known; custom models must declare it,
//! since it cannot be inferred from finitely many coefficients.
//!
//! A [`RestrictionSet`] fixes the admissible cycle lengths at one degree
//! `n`; a [`RestrictionRule`] produces the set for every `n` of a ladder.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::series::{Series, SeriesError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("cannot parse model spec '{spec}': {reason}")]
    BadModelSpec { spec: String, reason: String },
    #[error("cannot parse restriction spec '{spec}': {reason}")]
    BadRestrictionSpec { spec: String, reason: String },
    #[error("negative weight theta[{m}] = {value}")]
    NegativeWeight { m: u64, value: f64 },
    #[error("invalid singularity data: {0}")]
    InvalidSingularityData(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Built-in weight families plus user-supplied sequences.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    /// `theta[m] = 1`; singularity data `(1, 1, 0)`.
    Uniform,
    /// `theta[m] = theta`; singularity data `(1, theta, 0)`.
    Ewens { theta: BigRational },
    /// Ewens with finitely many overridden weights; `K` is
    /// `sum (theta[m] - theta)/m` over the overrides (radius 1).
    FinitelyPerturbed {
        theta: BigRational,
        overrides: Vec<(u64, BigRational)>,
    },
    /// Explicit leading weights; beyond the list `theta[m] = vartheta / r^m`,
    /// consistent with the declared singularity data.
    Custom { weights: Vec<f64> },
}

/// A weight sequence with its declared singularity data.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightModel {
    family: WeightFamily,
    radius: f64,
    vartheta: f64,
    k_const: f64,
    spec: String,
}

impl WeightModel {
    pub fn uniform() -> Self {
        WeightModel {
            family: WeightFamily::Uniform,
            radius: 1.0,
            vartheta: 1.0,
            k_const: 0.0,
            spec: "uniform".to_owned(),
        }
    }

    pub fn ewens(theta: BigRational) -> Result<Self, ModelError> {
        if theta.is_negative() {
            return Err(ModelError::NegativeWeight {
                m: 1,
                value: theta.to_f64().unwrap_or(f64::NAN),
            });
        }
        let vartheta = theta.to_f64().expect("theta fits in f64");
        let spec = format!("ewens:theta={}", rational_display(&theta));
        Ok(WeightModel {
            family: WeightFamily::Ewens { theta },
            radius: 1.0,
            vartheta,
            k_const: 0.0,
            spec,
        })
    }

    pub fn finitely_perturbed(
        theta: BigRational,
        overrides: Vec<(u64, BigRational)>,
    ) -> Result<Self, ModelError> {
        if theta.is_negative() {
            return Err(ModelError::NegativeWeight {
                m: 1,
                value: theta.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut sorted = overrides;
        sorted.sort_by_key(|&(m, _)| m);
        sorted.dedup_by_key(|&mut (m, _)| m);
        for (m, value) in &sorted {
            if *m == 0 {
                return Err(ModelError::BadModelSpec {
                    spec: "perturbed".into(),
                    reason: "override index 0".into(),
                });
            }
            if value.is_negative() {
                return Err(ModelError::NegativeWeight {
                    m: *m,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let vartheta = theta.to_f64().expect("theta fits in f64");
        // K = sum (theta[m] - theta)/m over overrides, with r = 1.
        let k_const = sorted
            .iter()
            .map(|(m, v)| (v - &theta) / BigRational::from_integer((*m).into()))
            .fold(BigRational::zero(), |acc, d| acc + d)
            .to_f64()
            .expect("K fits in f64");
        let spec = format!(
            "perturbed:theta={},overrides={}",
            rational_display(&theta),
            sorted
                .iter()
                .map(|(m, v)| format!("{}:{}", m, rational_display(v)))
                .collect::<Vec<_>>()
                .join(";")
        );
        Ok(WeightModel {
            family: WeightFamily::FinitelyPerturbed {
                theta,
                overrides: sorted,
            },
            radius: 1.0,
            vartheta,
            k_const,
            spec,
        })
    }

    pub fn custom(
        weights: Vec<f64>,
        radius: f64,
        vartheta: f64,
        k_const: f64,
        label: &str,
    ) -> Result<Self, ModelError> {
        if radius.is_nan()
            || radius <= 0.0
            || vartheta.is_nan()
            || vartheta <= 0.0
            || !k_const.is_finite()
        {
            return Err(ModelError::InvalidSingularityData(format!(
                "r={radius}, vartheta={vartheta}, K={k_const}"
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            if w.is_nan() || w < 0.0 {
                return Err(ModelError::NegativeWeight {
                    m: i as u64 + 1,
                    value: w,
                });
            }
        }
        Ok(WeightModel {
            family: WeightFamily::Custom { weights },
            radius,
            vartheta,
            k_const,
            spec: format!("custom:file={label},r={radius},vartheta={vartheta},K={k_const}"),
        })
    }

    /// Parse a model spec string: `uniform`, `ewens:theta=2`,
    /// `perturbed:theta=1,overrides=1:3.0;2:0.5`. (The `custom:` form
    /// references a weights file and is resolved by the CLI, which reads
    /// the file and calls [`WeightModel::custom`].)
    pub fn parse(spec: &str) -> Result<Self, ModelError> {
        let bad = |reason: &str| ModelError::BadModelSpec {
            spec: spec.to_owned(),
            reason: reason.to_owned(),
        };
        let (head, rest) = match spec.split_once(':') {
            Some((h, r)) => (h, r),
            None => (spec, ""),
        };
        match head {
            "uniform" => {
                if !rest.is_empty() {
                    return Err(bad("uniform takes no parameters"));
                }
                Ok(Self::uniform())
            }
            "ewens" => {
                let theta = parse_kv(rest, "theta")
                    .and_then(|v| parse_rational(&v))
                    .ok_or_else(|| bad("expected theta=<rational>"))?;
                Self::ewens(theta)
            }
            "perturbed" => {
                let theta = parse_kv(rest, "theta")
                    .and_then(|v| parse_rational(&v))
                    .ok_or_else(|| bad("expected theta=<rational>"))?;
                let raw = parse_kv(rest, "overrides").ok_or_else(|| bad("expected overrides="))?;
                let mut overrides = Vec::new();
                for pair in raw.split(';').filter(|p| !p.is_empty()) {
                    let (m, v) = pair
                        .split_once(':')
                        .ok_or_else(|| bad("override must be m:value"))?;
                    let m: u64 = m.parse().map_err(|_| bad("override index"))?;
                    let v = parse_rational(v).ok_or_else(|| bad("override value"))?;
                    overrides.push((m, v));
                }
                Self::finitely_perturbed(theta, overrides)
            }
            _ => Err(bad(
                "unknown family (expected uniform|ewens|perturbed|custom)",
            )),
        }
    }

    /// Canonical spec string; used as the cache digest.
    pub fn spec_string(&self) -> &str {
        &self.spec
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn vartheta(&self) -> f64 {
        self.vartheta
    }

    /// Constant term of the expansion of `g` at the singularity.
    pub fn k_const(&self) -> f64 {
        self.k_const
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    /// Whether exact rational arithmetic is available for this model
    /// (rational weights and radius 1).
    pub fn is_exact(&self) -> bool {
        !matches!(self.family, WeightFamily::Custom { .. })
    }

    pub fn theta(&self, m: u64) -> f64 {
        debug_assert!(m >= 1);
        match &self.family {
            WeightFamily::Uniform => 1.0,
            WeightFamily::Ewens { theta } => theta.to_f64().unwrap(),
            WeightFamily::FinitelyPerturbed { theta, overrides } => overrides
                .iter()
                .find(|(i, _)| *i == m)
                .map(|(_, v)| v.to_f64().unwrap())
                .unwrap_or_else(|| theta.to_f64().unwrap()),
            WeightFamily::Custom { weights } => match weights.get(m as usize - 1) {
                Some(&w) => w,
                // past the listed horizon the sequence follows its
                // singularity data exactly
                None => self.vartheta * self.radius.powi(-(m as i32)),
            },
        }
    }

    /// Exact weight; for custom models this is the exact rational value of
    /// the stored float.
    pub fn theta_q(&self, m: u64) -> BigRational {
        match &self.family {
            WeightFamily::Uniform => BigRational::from_integer(1.into()),
            WeightFamily::Ewens { theta } => theta.clone(),
            WeightFamily::FinitelyPerturbed { theta, overrides } => overrides
                .iter()
                .find(|(i, _)| *i == m)
                .map(|(_, v)| v.clone())
                .unwrap_or_else(|| theta.clone()),
            WeightFamily::Custom { .. } => {
                BigRational::from_float(self.theta(m)).expect("finite weight")
            }
        }
    }

    /// `theta[m] * r^m`, computed without forming `r^m` when it would
    /// overflow. Bounded in `m` for any model in its declared class.
    pub fn theta_r_pow_m(&self, m: u64) -> f64 {
        match &self.family {
            WeightFamily::Uniform
            | WeightFamily::Ewens { .. }
            | WeightFamily::FinitelyPerturbed { .. } => self.theta(m),
            WeightFamily::Custom { weights } => match weights.get(m as usize - 1) {
                Some(&w) => {
                    let log_pow = m as f64 * self.radius.ln();
                    if w == 0.0 {
                        0.0
                    } else if log_pow.abs() < 600.0 {
                        w * self.radius.powi(m as i32)
                    } else {
                        (w.ln() + log_pow).exp()
                    }
                }
                None => self.vartheta,
            },
        }
    }

    /// `g(t) = sum theta[m] t^m / m` as an exact series.
    pub fn g_series_q(&self, truncation: usize) -> Series<BigRational> {
        let coeffs = (0..=truncation)
            .map(|m| {
                if m == 0 {
                    BigRational::zero()
                } else {
                    self.theta_q(m as u64) / BigRational::from_integer(BigInt::from(m))
                }
            })
            .collect();
        Series::from_coeffs(coeffs, 1.0).expect("scale 1")
    }

    /// `g` with stored coefficients `theta[m] rho^m / m` at the given scale.
    pub fn g_series_f(&self, truncation: usize, scale: f64) -> Series<f64> {
        let ratio = scale / self.radius;
        let mut pow = 1.0;
        let coeffs = (0..=truncation)
            .map(|m| {
                if m == 0 {
                    0.0
                } else {
                    pow *= ratio;
                    self.theta_r_pow_m(m as u64) * pow / m as f64
                }
            })
            .collect();
        Series::from_coeffs(coeffs, scale).expect("valid scale")
    }

    /// Restriction series `L(t) = sum over the given lengths of theta[m] t^m / m`.
    pub fn l_series_q<I: IntoIterator<Item = u64>>(
        &self,
        lengths: I,
        truncation: usize,
    ) -> Series<BigRational> {
        let mut coeffs = vec![BigRational::zero(); truncation + 1];
        for m in lengths {
            let m = m as usize;
            if (1..=truncation).contains(&m) {
                coeffs[m] = self.theta_q(m as u64) / BigRational::from_integer(BigInt::from(m));
            }
        }
        Series::from_coeffs(coeffs, 1.0).expect("scale 1")
    }

    pub fn l_series_f<I: IntoIterator<Item = u64>>(
        &self,
        lengths: I,
        truncation: usize,
        scale: f64,
    ) -> Series<f64> {
        let ratio = scale / self.radius;
        let mut coeffs = vec![0.0; truncation + 1];
        for m in lengths {
            let m = m as usize;
            if (1..=truncation).contains(&m) {
                coeffs[m] = self.theta_r_pow_m(m as u64) * ratio.powi(m as i32) / m as f64;
            }
        }
        Series::from_coeffs(coeffs, scale).expect("valid scale")
    }

    /// `L(r) = sum theta[m] r^m / m` over the given lengths, in floating point.
    pub fn l_at_r<I: IntoIterator<Item = u64>>(&self, lengths: I) -> f64 {
        lengths
            .into_iter()
            .map(|m| self.theta_r_pow_m(m) / m as f64)
            .sum()
    }

    /// [`WeightModel::class_f_diagnostic`] at the default horizon.
    pub fn class_f_diagnostic_default(&self) -> ClassFDiagnostic {
        self.class_f_diagnostic(DEFAULT_CLASS_F_HORIZON)
    }

    /// Numerical check of the declared singularity class: reports partial
    /// sums of `|theta[m] r^m - vartheta| / m` up to the horizon. A weight
    /// sequence in the declared class has this sum finite; the check warns
    /// and never rejects, since the condition is asymptotic.
    pub fn class_f_diagnostic(&self, horizon: u64) -> ClassFDiagnostic {
        let mut sum = 0.0;
        let mut half_sum = 0.0;
        let mut last_eps = 0.0;
        let mut has_zero_weight = false;
        for m in 1..=horizon {
            let eps = self.theta_r_pow_m(m) - self.vartheta;
            if self.theta(m) == 0.0 {
                has_zero_weight = true;
            }
            last_eps = eps;
            sum += eps.abs() / m as f64;
            if m == horizon / 2 {
                half_sum = sum;
            }
        }
        let tail_growth = sum - half_sum;
        let mut warnings = Vec::new();
        // heuristic: a convergent sum gains little mass in its second half
        if tail_growth > 0.1 * sum.max(1e-12) && sum > 1e-9 {
            warnings.push(format!(
                "partial sums of |eps_m|/m still growing at horizon {horizon} \
                 (total {sum:.6e}, second half {tail_growth:.6e})"
            ));
        }
        if last_eps.abs() > 0.5 * self.vartheta {
            warnings.push(format!(
                "theta[m] r^m far from vartheta at horizon: eps = {last_eps:.6e}"
            ));
        }
        if has_zero_weight {
            warnings.push(
                "some theta[m] = 0: those cycle lengths are forbidden even when admissible"
                    .to_owned(),
            );
        }
        ClassFDiagnostic {
            horizon,
            eps_abs_sum: sum,
            last_eps,
            warnings,
        }
    }
}

/// Default horizon for the weight-sequence summability diagnostic.
pub const DEFAULT_CLASS_F_HORIZON: u64 = 1_000_000;

/// Report of the summability diagnostic for `theta[m] r^m - vartheta`.
#[derive(Debug, Clone)]
pub struct ClassFDiagnostic {
    pub horizon: u64,
    pub eps_abs_sum: f64,
    pub last_eps: f64,
    pub warnings: Vec<String>,
}

/// `C log n - n / d_n`; the asymptotics in this crate require this to
/// diverge to minus infinity for every `C`, i.e. the excluded lengths
/// grow slowly. Ladder harnesses use its trend as a sanity gate.
pub fn growth_condition_diagnostic(d_n: u64, n: u64, c: f64) -> f64 {
    debug_assert!(n >= 2 && d_n >= 1);
    c * (n as f64).ln() - n as f64 / d_n as f64
}

/// Rules producing the admissible-length set for any degree.
#[derive(Debug, Clone, PartialEq)]
pub enum RestrictionRule {
    /// All lengths admissible.
    Full,
    /// Only lengths `ceil(n^a)..=n`.
    Tail { a: f64 },
    /// Only even lengths.
    ParityEven,
    /// Only odd lengths.
    ParityOdd,
    /// Only lengths `1..=b`.
    Prefix { b: u64 },
    /// All lengths except the listed ones.
    Exclude { lengths: BTreeSet<u64> },
    /// Exactly the listed lengths (intersected with `1..=n`).
    Explicit { lengths: BTreeSet<u64> },
}

impl RestrictionRule {
    /// Parse a restriction spec string: `full`, `tail:a=0.3`, `even`, `odd`,
    /// `prefix:b=5`, `exclude:2,5`, `list:1,3,5`.
    pub fn parse(spec: &str) -> Result<Self, ModelError> {
        let bad = |reason: &str| ModelError::BadRestrictionSpec {
            spec: spec.to_owned(),
            reason: reason.to_owned(),
        };
        let (head, rest) = match spec.split_once(':') {
            Some((h, r)) => (h, r),
            None => (spec, ""),
        };
        let parse_lengths = |s: &str| -> Result<BTreeSet<u64>, ModelError> {
            s.split([',', ';'])
                .filter(|p| !p.is_empty())
                .map(|p| p.trim().parse::<u64>().map_err(|_| bad("bad length")))
                .collect()
        };
        match head {
            "full" => Ok(RestrictionRule::Full),
            "even" => Ok(RestrictionRule::ParityEven),
            "odd" => Ok(RestrictionRule::ParityOdd),
            "tail" => {
                let a: f64 = parse_kv(rest, "a")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("expected a=<float in [0,1)>"))?;
                if !(0.0..1.0).contains(&a) {
                    return Err(bad("a must be in [0,1)"));
                }
                Ok(RestrictionRule::Tail { a })
            }
            "prefix" => {
                let b: u64 = parse_kv(rest, "b")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("expected b=<integer>"))?;
                if b == 0 {
                    return Err(bad("b must be >= 1"));
                }
                Ok(RestrictionRule::Prefix { b })
            }
            "exclude" => Ok(RestrictionRule::Exclude {
                lengths: parse_lengths(rest)?,
            }),
            "list" => {
                let lengths = parse_lengths(rest)?;
                if lengths.is_empty() {
                    return Err(bad("list must not be empty"));
                }
                Ok(RestrictionRule::Explicit { lengths })
            }
            _ => Err(bad("unknown restriction")),
        }
    }

    pub fn spec_string(&self) -> String {
        let join =
            |set: &BTreeSet<u64>| set.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        match self {
            RestrictionRule::Full => "full".into(),
            RestrictionRule::Tail { a } => format!("tail:a={a}"),
            RestrictionRule::ParityEven => "even".into(),
            RestrictionRule::ParityOdd => "odd".into(),
            RestrictionRule::Prefix { b } => format!("prefix:b={b}"),
            RestrictionRule::Exclude { lengths } => format!("exclude:{}", join(lengths)),
            RestrictionRule::Explicit { lengths } => format!("list:{}", join(lengths)),
        }
    }

    /// Whether the produced set genuinely depends on the degree (so caches
    /// must key on `n`). Rules defined by a fixed infinite set do not.
    pub fn depends_on_n(&self) -> bool {
        matches!(self, RestrictionRule::Tail { .. })
    }

    /// Materialize the admissible set at degree `n`.
    pub fn at(&self, n: u64) -> RestrictionSet {
        assert!(n >= 1, "degree must be at least 1");
        let allowed: Vec<bool> = match self {
            RestrictionRule::Full => vec![true; n as usize],
            RestrictionRule::Tail { a } => {
                let start = (n as f64).powf(*a).ceil().max(1.0) as u64;
                (1..=n).map(|m| m >= start).collect()
            }
            RestrictionRule::ParityEven => (1..=n).map(|m| m % 2 == 0).collect(),
            RestrictionRule::ParityOdd => (1..=n).map(|m| m % 2 == 1).collect(),
            RestrictionRule::Prefix { b } => (1..=n).map(|m| m <= *b).collect(),
            RestrictionRule::Exclude { lengths } => {
                (1..=n).map(|m| !lengths.contains(&m)).collect()
            }
            RestrictionRule::Explicit { lengths } => {
                (1..=n).map(|m| lengths.contains(&m)).collect()
            }
        };
        RestrictionSet {
            n,
            allowed,
            digest: format!("{}@{}", self.spec_string(), n),
            family_key: (!self.depends_on_n()).then(|| self.spec_string()),
        }
    }
}

/// Admissible cycle lengths at a fixed degree `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionSet {
    n: u64,
    allowed: Vec<bool>,
    digest: String,
    family_key: Option<String>,
}

impl RestrictionSet {
    /// Build from an explicit membership predicate over `1..=n`.
    pub fn from_predicate(n: u64, pred: impl Fn(u64) -> bool, label: &str) -> Self {
        let allowed: Vec<bool> = (1..=n).map(pred).collect();
        RestrictionSet {
            n,
            allowed,
            digest: format!("pred:{label}@{n}"),
            family_key: None,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn contains(&self, m: u64) -> bool {
        m >= 1 && m <= self.n && self.allowed[m as usize - 1]
    }

    /// Admissible lengths in increasing order.
    pub fn admissible(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.n).filter(move |&m| self.allowed[m as usize - 1])
    }

    /// Excluded lengths (the complement within `1..=n`) in increasing order.
    pub fn excluded(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.n).filter(move |&m| !self.allowed[m as usize - 1])
    }

    /// Largest excluded length, or 1 when nothing is excluded.
    pub fn excluded_max(&self) -> u64 {
        (1..=self.n)
            .rev()
            .find(|&m| !self.allowed[m as usize - 1])
            .unwrap_or(1)
    }

    pub fn is_full(&self) -> bool {
        self.allowed.iter().all(|&a| a)
    }

    /// A copy with the given lengths removed from the admissible set.
    pub fn without(&self, lengths: &[u64]) -> RestrictionSet {
        let mut allowed = self.allowed.clone();
        for &m in lengths {
            if m >= 1 && m <= self.n {
                allowed[m as usize - 1] = false;
            }
        }
        let mut sorted = lengths.to_vec();
        sorted.sort_unstable();
        let suffix = format!(
            "-minus:{}",
            sorted
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        );
        RestrictionSet {
            n: self.n,
            allowed,
            digest: format!("{}{suffix}", self.digest),
            family_key: self.family_key.as_ref().map(|f| format!("{f}{suffix}")),
        }
    }

    /// Cache key: rule spec plus degree.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// Degree-independent cache key, present when the admissible set is the
    /// restriction of one fixed infinite set to `1..=n` (every rule except
    /// the tail rule): a normalization table computed at a larger degree is
    /// then a valid prefix extension of this one.
    pub fn family_key(&self) -> Option<&str> {
        self.family_key.as_deref()
    }
}

/// Scaled restriction series over the excluded set of `a`.
pub fn l_excluded_f(model: &WeightModel, a: &RestrictionSet, scale: f64) -> Series<f64> {
    model.l_series_f(a.excluded(), a.n() as usize, scale)
}

/// `g - L_D` with stored scale, the exponent of the normalization series.
pub fn log_h_series_f(model: &WeightModel, a: &RestrictionSet, scale: f64) -> Series<f64> {
    let n = a.n() as usize;
    let ratio = scale / model.radius();
    let mut pow = 1.0;
    let coeffs = (0..=n)
        .map(|m| {
            pow = if m == 0 { 1.0 } else { pow * ratio };
            if m == 0 || !a.contains(m as u64) {
                0.0
            } else {
                model.theta_r_pow_m(m as u64) * pow / m as f64
            }
        })
        .collect();
    Series::from_coeffs(coeffs, scale).expect("valid scale")
}

/// Exact-kind counterpart of [`log_h_series_f`].
pub fn log_h_series_q(model: &WeightModel, a: &RestrictionSet) -> Series<BigRational> {
    model.l_series_q(a.admissible(), a.n() as usize)
}

/// Complex lift with every admissible term multiplied by `w`.
pub fn log_h_series_c(
    model: &WeightModel,
    a: &RestrictionSet,
    scale: f64,
    w: Complex64,
) -> Series<Complex64> {
    let real = log_h_series_f(model, a, scale);
    let coeffs = real.coeffs().iter().map(|&c| w * c).collect();
    Series::from_coeffs(coeffs, scale).expect("valid scale")
}

fn parse_kv(rest: &str, key: &str) -> Option<String> {
    rest.split(',').find_map(|part| {
        let (k, v) = part.split_once('=')?;
        (k.trim() == key).then(|| v.trim().to_owned())
    })
}

/// Parse `2`, `-3`, `0.5`, `3.0`, or `a/b` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(b) => (-1, b),
        None => (1, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits: String = format!("{int_part}{frac_part}");
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let num: BigInt = digits.parse().ok()?;
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(BigRational::new(BigInt::from(sign) * num, den))
}

fn rational_display(q: &BigRational) -> String {
    if q.denom() == &BigInt::from(1) {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::CoeffConvention;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn g_series_examples() {
        // ewens(1), N=3: t + t^2/2 + t^3/3
        let m = WeightModel::ewens(q(1, 1)).unwrap();
        let g = m.g_series_q(3);
        assert_eq!(g.coefficient(1, CoeffConvention::True).unwrap(), q(1, 1));
        assert_eq!(g.coefficient(2, CoeffConvention::True).unwrap(), q(1, 2));
        assert_eq!(g.coefficient(3, CoeffConvention::True).unwrap(), q(1, 3));
        // ewens(2), N=2: 2t + t^2
        let m = WeightModel::ewens(q(2, 1)).unwrap();
        let g = m.g_series_q(2);
        assert_eq!(g.coefficient(1, CoeffConvention::True).unwrap(), q(2, 1));
        assert_eq!(g.coefficient(2, CoeffConvention::True).unwrap(), q(1, 1));
        // perturbed(theta1=3, else 1), N=2: 3t + t^2/2
        let m = WeightModel::finitely_perturbed(q(1, 1), vec![(1, q(3, 1))]).unwrap();
        let g = m.g_series_q(2);
        assert_eq!(g.coefficient(1, CoeffConvention::True).unwrap(), q(3, 1));
        assert_eq!(g.coefficient(2, CoeffConvention::True).unwrap(), q(1, 2));
    }

    #[test]
    fn ewens_g_matches_log_of_geometric() {
        // g for ewens(theta) equals -theta*log(1-t) coefficientwise.
        let theta = q(3, 2);
        let m = WeightModel::ewens(theta.clone()).unwrap();
        let n = 24;
        let geometric =
            Series::from_coeffs(vec![BigRational::from_integer(1.into()); n + 1], 1.0).unwrap();
        let log_geom = geometric.log().unwrap().scalar_mul(&theta);
        assert_eq!(m.g_series_q(n), log_geom);
    }

    #[test]
    fn l_series_examples() {
        let m = WeightModel::ewens(q(1, 1)).unwrap();
        // D empty: zero series
        let l = m.l_series_q(std::iter::empty(), 3);
        assert_eq!(l, Series::zero(3, 1.0).unwrap());
        // D={2}, N=3: t^2/2
        let l = m.l_series_q([2], 3);
        assert_eq!(l.coefficient(2, CoeffConvention::True).unwrap(), q(1, 2));
        assert_eq!(l.coefficient(1, CoeffConvention::True).unwrap(), q(0, 1));
        // prefix D = {1..b}: harmonic truncation
        let l = m.l_series_q(1..=3, 4);
        for k in 1..=3 {
            assert_eq!(
                l.coefficient(k, CoeffConvention::True).unwrap(),
                q(1, k as i64)
            );
        }
    }

    #[test]
    fn l_plus_complement_is_g() {
        // L over D plus L over A equals g truncated, when A and D partition 1..=n.
        let m = WeightModel::finitely_perturbed(q(1, 1), vec![(2, q(1, 2))]).unwrap();
        let n = 10u64;
        let a = RestrictionRule::ParityOdd.at(n);
        let l_a = m.l_series_q(a.admissible(), n as usize);
        let l_d = m.l_series_q(a.excluded(), n as usize);
        assert_eq!(l_a.add(&l_d).unwrap(), m.g_series_q(n as usize));
    }

    #[test]
    fn l_at_r_examples() {
        let m = WeightModel::ewens(q(1, 1)).unwrap();
        assert_eq!(m.l_at_r(std::iter::empty()), 0.0);
        // ewens(1), r=1, D={1,2}: 1 + 1/2
        assert!((m.l_at_r([1, 2]) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn l_prefix_tracks_x_vartheta_log_n() {
        // L over {1..floor(n^x)} tends to x*vartheta*log n plus a constant;
        // the increment between ladder rungs isolates the slope, and the
        // deviation of the plain ratio from 1 shrinks monotonically.
        let m = WeightModel::ewens(q(1, 1)).unwrap();
        let x = 0.5;
        let rungs = [100u64, 1000, 10_000];
        let l: Vec<f64> = rungs
            .iter()
            .map(|&n| m.l_at_r(1..=((n as f64).powf(x).floor() as u64)))
            .collect();
        let target: Vec<f64> = rungs.iter().map(|&n| x * (n as f64).ln()).collect();
        let dev: Vec<f64> = l
            .iter()
            .zip(&target)
            .map(|(li, ti)| (li / ti - 1.0).abs())
            .collect();
        assert!(
            dev[0] > dev[1] && dev[1] > dev[2],
            "monotone approach: {dev:?}"
        );
        let increment_ratio = (l[2] - l[1]) / (target[2] - target[1]);
        assert!(
            (increment_ratio - 1.0).abs() <= 0.05,
            "increment ratio {increment_ratio}"
        );
    }

    #[test]
    fn growth_condition_cases() {
        // d_n = n: diverges upward (condition fails)
        let v1 = growth_condition_diagnostic(100, 100, 1.0);
        let v2 = growth_condition_diagnostic(10_000, 10_000, 1.0);
        assert!(v2 > v1 && v2 > 0.0);
        // d_n ~ log n at n = e^10: about 10 - e^10/10, large negative
        let n = 10f64.exp().round() as u64;
        let d = (n as f64).ln().ceil() as u64;
        let v = growth_condition_diagnostic(d, n, 1.0);
        assert!((v - (10.0 - n as f64 / d as f64)).abs() < 0.2);
        assert!(v < -1000.0);
        // d_n ~ sqrt(n): trend to minus infinity along a ladder
        let ladder: Vec<f64> = [100u64, 10_000, 1_000_000]
            .iter()
            .map(|&n| growth_condition_diagnostic((n as f64).sqrt().ceil() as u64, n, 1.0))
            .collect();
        assert!(ladder[0] > ladder[1] && ladder[1] > ladder[2]);
    }

    #[test]
    fn restriction_presets() {
        let full = RestrictionRule::Full.at(6);
        assert!(full.is_full());
        assert_eq!(full.excluded_max(), 1);

        let odd = RestrictionRule::ParityOdd.at(6);
        assert_eq!(odd.admissible().collect::<Vec<_>>(), vec![1, 3, 5]);
        assert_eq!(odd.excluded_max(), 6);

        let tail = RestrictionRule::Tail { a: 0.5 }.at(100);
        assert_eq!(tail.admissible().next(), Some(10));

        let prefix = RestrictionRule::Prefix { b: 3 }.at(6);
        assert_eq!(prefix.admissible().collect::<Vec<_>>(), vec![1, 2, 3]);

        let excl = RestrictionRule::Exclude {
            lengths: [2u64].into_iter().collect(),
        }
        .at(4);
        assert_eq!(excl.admissible().collect::<Vec<_>>(), vec![1, 3, 4]);
        assert_eq!(excl.excluded_max(), 2);

        // A and D partition 1..=n
        for set in [&full, &odd, &tail, &prefix, &excl] {
            let total = set.admissible().count() + set.excluded().count();
            assert_eq!(total as u64, set.n());
        }
    }

    #[test]
    fn spec_round_trips() {
        for spec in [
            "uniform",
            "ewens:theta=2",
            "ewens:theta=1/2",
            "perturbed:theta=1,overrides=1:3;2:1/2",
        ] {
            let m = WeightModel::parse(spec).unwrap();
            assert_eq!(WeightModel::parse(m.spec_string()).unwrap(), m);
        }
        for spec in [
            "full",
            "tail:a=0.3",
            "even",
            "odd",
            "prefix:b=5",
            "exclude:2,5",
            "list:1,3",
        ] {
            let r = RestrictionRule::parse(spec).unwrap();
            assert_eq!(RestrictionRule::parse(&r.spec_string()).unwrap(), r);
        }
        assert!(WeightModel::parse("ewens:theta=-1").is_err());
        assert!(WeightModel::parse("nonsense").is_err());
        assert!(RestrictionRule::parse("tail:a=1.5").is_err());
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("2").unwrap(), q(2, 1));
        assert_eq!(parse_rational("0.5").unwrap(), q(1, 2));
        assert_eq!(parse_rational("3.0").unwrap(), q(3, 1));
        assert_eq!(parse_rational("-1/4").unwrap(), q(-1, 4));
        assert!(parse_rational("abc").is_none());
    }

    #[test]
    fn perturbed_k_constant() {
        // K = (3-1)/1 + (1/2-1)/2 = 2 - 1/4
        let m = WeightModel::finitely_perturbed(q(1, 1), vec![(1, q(3, 1)), (2, q(1, 2))]).unwrap();
        assert!((m.k_const() - 1.75).abs() < 1e-15);
    }

    #[test]
    fn class_f_diagnostic_flags_drift() {
        let good = WeightModel::ewens(q(2, 1)).unwrap();
        assert!(good.class_f_diagnostic(10_000).warnings.is_empty());
        // weights drifting away from the declared vartheta
        let drifting: Vec<f64> = (1..=4000).map(|m| 1.0 + (m as f64).ln() / 10.0).collect();
        let bad = WeightModel::custom(drifting, 1.0, 1.0, 0.0, "drift").unwrap();
        assert!(!bad.class_f_diagnostic(4000).warnings.is_empty());
    }
}
