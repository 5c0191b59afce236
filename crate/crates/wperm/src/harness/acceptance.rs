//! The acceptance suite: ten fixed checks covering exactness against the
//! brute-force oracle, closed forms, prediction ladders, and every limit
//! theorem, each with pinned tolerances. `cargo test` runs them through
//! the `acceptance` integration test; the CLI exposes them via `all`.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exact::{self, Statistic};
use crate::model::{RestrictionRule, WeightModel};

use super::checks::{self, Centering};
use super::report::{ComparisonReport, Thresholds};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub seconds: f64,
    pub detail: String,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:2} [{}] {} ({:.1}s): {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.seconds,
            self.detail
        )
    }
}

fn outcome(id: u32, name: &str, start: Instant, pass: bool, detail: String) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name: name.to_owned(),
        pass,
        seconds: start.elapsed().as_secs_f64(),
        detail,
    }
}

fn builtin_models() -> Vec<WeightModel> {
    vec![
        WeightModel::uniform(),
        WeightModel::parse("ewens:theta=2").unwrap(),
        WeightModel::parse("perturbed:theta=1,overrides=1:3;2:0.5").unwrap(),
    ]
}

fn builtin_rules() -> Vec<RestrictionRule> {
    vec![
        RestrictionRule::Full,
        RestrictionRule::ParityOdd,
        RestrictionRule::parse("exclude:2").unwrap(),
    ]
}

/// Criterion 1: series-computed h_n and the laws of T, C_1, and the cycle of 1 match
/// the partition brute force exactly in rational arithmetic for n <= 8.
pub fn criterion_1() -> CriterionOutcome {
    let start = Instant::now();
    let mut comparisons = 0u64;
    let mut failures = Vec::new();
    for model in &builtin_models() {
        for rule in &builtin_rules() {
            for n in 1..=8u64 {
                let a = rule.at(n);
                let tag = format!("{}|{}|n={n}", model.spec_string(), rule.spec_string());
                let h_series = exact::h_n_q(model, &a);
                let h_oracle = exact::brute_force_h_n(model, &a).unwrap();
                comparisons += 1;
                if h_series != h_oracle {
                    failures.push(format!("h mismatch at {tag}"));
                    continue;
                }
                let pairs = [
                    (
                        exact::law_of_t_q(model, &a),
                        exact::brute_force_law(model, &a, &Statistic::TotalCycles),
                        "T",
                    ),
                    (
                        exact::joint_cycle_count_law_q(model, &a, &[1]),
                        exact::brute_force_law(model, &a, &Statistic::CountsOn(vec![1])),
                        "C_1",
                    ),
                    (
                        exact::ell1_law_q(model, &a),
                        exact::brute_force_law(model, &a, &Statistic::CycleOfOne),
                        "len_1",
                    ),
                ];
                for (series, oracle, what) in pairs {
                    comparisons += 1;
                    match (series, oracle) {
                        (Ok(s), Ok(o)) => {
                            if s != o {
                                failures.push(format!("{what} law mismatch at {tag}"));
                            }
                        }
                        (Err(e1), Err(e2)) => {
                            // both sides must agree the measure is degenerate
                            if format!("{e1}") != format!("{e2}") {
                                failures.push(format!("{what} error mismatch at {tag}"));
                            }
                        }
                        _ => failures.push(format!("{what} one-sided failure at {tag}")),
                    }
                }
            }
        }
    }
    let pass = failures.is_empty();
    let detail = if pass {
        format!("{comparisons} exact comparisons, all equal")
    } else {
        failures.join("; ")
    };
    outcome(1, "exactness-vs-brute-force", start, pass, detail)
}

/// Criterion 2: Ewens(2) normalization: exactly the rising factorial over n! for
/// n <= 50 (rational) and within 1e-10 relative for n <= 2000 (float).
pub fn criterion_2() -> CriterionOutcome {
    let start = Instant::now();
    let model = WeightModel::parse("ewens:theta=2").unwrap();
    let theta = BigRational::from_integer(2.into());
    let a50 = RestrictionRule::Full.at(50);
    let table_q = exact::h_table_q(&model, &a50);
    let mut rising = BigRational::one();
    let mut factorial = BigRational::one();
    let mut exact_ok = true;
    for n in 1..=50usize {
        rising *= &theta + BigRational::from_integer(BigInt::from(n as i64 - 1));
        factorial *= BigRational::from_integer(BigInt::from(n as i64));
        if *table_q.h(n) != &rising / &factorial {
            exact_ok = false;
        }
    }
    let a2000 = RestrictionRule::Full.at(2000);
    let table_f = exact::h_table_f(&model, &a2000);
    let mut worst_rel = 0.0f64;
    for n in 1..=2000usize {
        // (2)_n / n! = n + 1
        let closed = n as f64 + 1.0;
        let rel = (table_f.h_scaled(n) - closed).abs() / closed;
        worst_rel = worst_rel.max(rel);
    }
    let pass = exact_ok && worst_rel <= 1e-10;
    outcome(
        2,
        "closed-form-h-n",
        start,
        pass,
        format!(
            "rational n<=50 {}, float worst rel {worst_rel:.2e} (n<=2000)",
            if exact_ok { "exact" } else { "MISMATCH" }
        ),
    )
}

/// Coefficients of `exp(-(t + t^2/2 + ... + t^b/b))` as exact rationals
/// `N_j / j!`, by the integer recurrence
/// `N_j = -sum_{k=1..min(b,j)} N_{j-k} (j-1)(j-2)...(j-k+1)`.
fn neg_harmonic_exp_numerators(b: u64, truncation: usize) -> Vec<BigInt> {
    let mut numerators: Vec<BigInt> = Vec::with_capacity(truncation + 1);
    numerators.push(BigInt::one());
    for j in 1..=truncation as u64 {
        let mut acc = BigInt::zero();
        let mut falling = BigInt::one();
        for k in 1..=b.min(j) {
            acc += &numerators[(j - k) as usize] * &falling;
            falling *= BigInt::from(j - k);
        }
        numerators.push(-acc);
    }
    numerators
}

/// Criterion 3: prediction ladder for h_n with the excluded prefix {1..ceil(log n)}:
/// the relative error of the leading-term prediction decreases along
/// n in {200, 400, 800, 1600} with average consecutive ratio <= 0.75.
/// The error sits far below float resolution for this family, so both
/// sides are evaluated exactly (see the notes in the repository docs).
pub fn criterion_3() -> CriterionOutcome {
    let start = Instant::now();
    let model = WeightModel::parse("ewens:theta=1").unwrap();
    let rungs = [200u64, 400, 800, 1600];
    let truncation = 2400usize;
    // suffix factorial weights J!/j!, shared across rungs
    let mut suffix = vec![BigInt::one(); truncation + 1];
    for j in (0..truncation).rev() {
        suffix[j] = &suffix[j + 1] * BigInt::from(j as u64 + 1);
    }
    let mut rel_errors: Vec<BigRational> = Vec::new();
    let mut float_check = 0.0f64;
    for &n in &rungs {
        let b = (n as f64).ln().ceil() as u64;
        let numerators = neg_harmonic_exp_numerators(b, truncation);
        // everything over the common denominator J!: c_j J! = N_j (J!/j!)
        let weighted: Vec<BigInt> = numerators
            .iter()
            .zip(&suffix)
            .map(|(num, s)| num * s)
            .collect();
        let h_num: BigInt = weighted[..=n as usize].iter().sum();
        let err_num: BigInt = weighted[n as usize + 1..].iter().sum();
        // guard: the part of the tail near the truncation is negligible,
        // so extending the truncation cannot change the measured error
        let fringe: BigInt = weighted[truncation - 100..].iter().sum();
        assert!(
            (fringe.magnitude() << 30u32) < *err_num.magnitude(),
            "truncation too short for rung n={n}"
        );
        rel_errors.push(BigRational::new(err_num.abs(), h_num.clone()));
        // tie the high-precision prediction to the production predictor:
        // prediction = (h_num + err_num) / J!
        let prediction = BigRational::new(h_num + err_num, suffix[0].clone());
        let rule = RestrictionRule::Exclude {
            lengths: (1..=b).collect(),
        };
        let p = crate::asymptotics::predict_h_n(&model, &rule.at(n)).unwrap();
        let rel = (p.value_re - prediction.to_f64().unwrap()).abs() / p.value_re.abs();
        float_check = float_check.max(rel);
    }
    let ratios: Vec<f64> = rel_errors
        .windows(2)
        .map(|w| (&w[1] / &w[0]).to_f64().unwrap_or(f64::INFINITY))
        .collect();
    let decreasing = rel_errors.windows(2).all(|w| w[1] < w[0]);
    let avg_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let pass = decreasing && avg_ratio <= 0.75 && float_check < 1e-9;
    let rels: Vec<String> = rel_errors
        .iter()
        .map(|r| {
            // magnitudes are far below f64 range: report via logs
            let num_bits = r.numer().bits() as f64;
            let den_bits = r.denom().bits() as f64;
            format!("2^{:.0}", num_bits - den_bits)
        })
        .collect();
    outcome(
        3,
        "h-n-prediction-ladder",
        start,
        pass,
        format!(
            "relative errors {rels:?}, avg consecutive ratio {avg_ratio:.3e}, predictor agreement {float_check:.1e}"
        ),
    )
}

/// Criterion 4: Poisson limit for C_1 under the uniform measure: TV to Poisson(1)
/// at n=100 below 0.02 and strictly smaller at n=400 (exact rationals).
pub fn criterion_4(thresholds: &Thresholds) -> CriterionOutcome {
    let start = Instant::now();
    let model = WeightModel::uniform();
    let report = checks::verify_poisson_cycle_counts(
        &model,
        &RestrictionRule::Full,
        &[1],
        &[100, 400],
        thresholds,
    )
    .expect("poisson check runs");
    let detail = report_distances(&report);
    outcome(4, "poisson-limit-c1", start, report.is_pass(), detail)
}

/// Criterion 5: mod-Poisson residue of T for uniform and ewens(2): the maximal
/// deviation from the gamma-ratio limit over |s| <= pi/2 does not grow
/// from n=100 to n=1000.
pub fn criterion_5(thresholds: &Thresholds) -> CriterionOutcome {
    let start = Instant::now();
    let s_grid: Vec<f64> = (0..=16)
        .map(|i| -std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 16.0)
        .collect();
    let mut pass = true;
    let mut details = Vec::new();
    for spec in ["uniform", "ewens:theta=2"] {
        let model = WeightModel::parse(spec).unwrap();
        let report = checks::verify_mod_poisson_t(
            &model,
            &RestrictionRule::Full,
            &[100, 1000],
            &s_grid,
            thresholds,
        )
        .expect("mod-poisson check runs");
        pass &= report.is_pass();
        details.push(format!("{spec}: {}", report_distances(&report)));
    }
    outcome(5, "mod-poisson-residue", start, pass, details.join(" | "))
}

/// Criterion 6: CLT for T at n up to 1e5: standardized mean within 0.05, variance in
/// [0.85, 1.15], KS to the normal decreasing along the ladder.
pub fn criterion_6(thresholds: &Thresholds) -> CriterionOutcome {
    let start = Instant::now();
    let model = WeightModel::parse("ewens:theta=1").unwrap();
    let report = checks::verify_clt_t(
        &model,
        &RestrictionRule::Full,
        &[(1_000, 30_000), (10_000, 30_000), (100_000, 10_000)],
        Centering::LSeries,
        thresholds.seeds.clt,
        thresholds,
    )
    .expect("clt check runs");
    let detail = summarize_notes(&report);
    outcome(6, "clt-total-cycles", start, report.is_pass(), detail)
}

/// Criterion 7: Poisson-Dirichlet moments: exact E[(len_1/n)^b] within 5e-3 of the
/// Beta limit at n=2000, and the sampled largest cycle mean within 0.01 of
/// the stick-breaking oracle at n=1e4.
pub fn criterion_7(thresholds: &Thresholds) -> CriterionOutcome {
    let start = Instant::now();
    let model = WeightModel::parse("ewens:theta=1").unwrap();
    let report = checks::verify_pd_large_cycles(
        &model,
        &RestrictionRule::Full,
        2_000,
        10_000,
        10_000,
        3,
        1_000_000,
        thresholds.seeds.pd,
        thresholds,
    )
    .expect("pd check runs");
    let detail = summarize_notes(&report);
    outcome(
        7,
        "poisson-dirichlet-moments",
        start,
        report.is_pass(),
        detail,
    )
}

/// Criterion 8: sampler cross-validation at n=8, 1e5 draws each: TV between the two
/// samplers' empirical type laws below 0.02 and both chi-square tests
/// passing at significance 1e-3 (uniform and ewens(2)).
pub fn criterion_8(thresholds: &Thresholds) -> CriterionOutcome {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for spec in ["uniform", "ewens:theta=2"] {
        let model = WeightModel::parse(spec).unwrap();
        let report = checks::verify_sampler_cross(
            &model,
            &RestrictionRule::Full,
            8,
            100_000,
            thresholds.seeds.cross_sampler,
            thresholds,
        )
        .expect("cross-sampler check runs");
        pass &= report.is_pass();
        details.push(format!("{spec}: {}", report_distances(&report)));
    }
    outcome(
        8,
        "sampler-cross-validation",
        start,
        pass,
        details.join(" | "),
    )
}

/// Criterion 9: functional CLT at n=1e5: variance profile within 0.1 of x, increment
/// correlation within 0.05, tightness log-log slope at least 1.6.
pub fn criterion_9(thresholds: &Thresholds) -> CriterionOutcome {
    let start = Instant::now();
    let model = WeightModel::parse("ewens:theta=1").unwrap();
    let report = checks::verify_flt(
        &model,
        &[0.25, 0.5, 0.75],
        100_000,
        10_000,
        Centering::LSeries,
        ((0.0, 0.4), (0.4, 0.9)),
        thresholds.seeds.flt,
        thresholds,
    )
    .expect("flt check runs");
    let detail = summarize_notes(&report);
    outcome(9, "functional-clt", start, report.is_pass(), detail)
}

/// Criterion 10: restricted and parity variants: variance profile max(x - a, 0) for
/// the tail restriction at a=0.3; even/odd cross-correlation at full range
/// within 0.05; exact parity characteristic function at n=500 closer to
/// the two-singularity prediction than at n=250.
pub fn criterion_10(thresholds: &Thresholds) -> CriterionOutcome {
    let start = Instant::now();
    let model = WeightModel::parse("ewens:theta=1").unwrap();
    let restricted = checks::verify_flt_restricted(
        &model,
        0.3,
        &[0.1, 0.3, 0.55, 0.8],
        100_000,
        10_000,
        thresholds.seeds.flt_restricted,
        thresholds,
    )
    .expect("restricted flt check runs");
    let s_points: Vec<(f64, f64)> = vec![
        (std::f64::consts::FRAC_PI_4, -std::f64::consts::FRAC_PI_4),
        (
            std::f64::consts::FRAC_PI_4 / 2.0,
            std::f64::consts::FRAC_PI_4,
        ),
        (
            -std::f64::consts::FRAC_PI_4,
            std::f64::consts::FRAC_PI_4 / 3.0,
        ),
        (std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4),
    ];
    let parity = checks::verify_flt_parity(
        &model,
        &[0.5, 1.0],
        100_000,
        10_000,
        (250, 500),
        &s_points,
        thresholds.seeds.flt_parity,
        thresholds,
    )
    .expect("parity flt check runs");
    let pass = restricted.is_pass() && parity.is_pass();
    let detail = format!(
        "restricted: {} | parity: {}",
        summarize_notes(&restricted),
        summarize_notes(&parity)
    );
    outcome(10, "restricted-and-parity-variants", start, pass, detail)
}

fn report_distances(report: &ComparisonReport) -> String {
    let ds: Vec<String> = report
        .rows
        .iter()
        .filter_map(|r| r.distance.map(|d| format!("n={}:{d:.3e}", r.n)))
        .collect();
    format!(
        "verdict {:?}, distances [{}]",
        report.verdict,
        ds.join(", ")
    )
}

fn summarize_notes(report: &ComparisonReport) -> String {
    let fails: Vec<&String> = report
        .notes
        .iter()
        .filter(|n| n.starts_with("FAIL"))
        .collect();
    if fails.is_empty() {
        format!("verdict {:?}, {} rows", report.verdict, report.rows.len())
    } else {
        format!(
            "verdict {:?}: {}",
            report.verdict,
            fails
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join("; ")
        )
    }
}

/// Run the full suite in order.
pub fn run_all(thresholds: &Thresholds) -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(thresholds),
        criterion_5(thresholds),
        criterion_6(thresholds),
        criterion_7(thresholds),
        criterion_8(thresholds),
        criterion_9(thresholds),
        criterion_10(thresholds),
    ]
}
