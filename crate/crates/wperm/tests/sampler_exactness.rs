//! Distributional exactness of the sequential sampler: chi-square
//! goodness of fit against the brute-force cycle-type law for every
//! built-in model and restriction at small degree.

use std::collections::BTreeMap;

use wperm::exact::{brute_force_law, Outcome, Statistic};
use wperm::harness::stats;
use wperm::model::{RestrictionRule, WeightModel};
use wperm::sampler::{RngStream, SequentialSampler};

#[test]
fn sequential_sampler_passes_chi_square_for_every_builtin() {
    let models = [
        WeightModel::uniform(),
        WeightModel::parse("ewens:theta=2").unwrap(),
        WeightModel::parse("perturbed:theta=1,overrides=1:3;2:0.5").unwrap(),
    ];
    let rules = [
        RestrictionRule::Full,
        RestrictionRule::ParityOdd,
        RestrictionRule::parse("exclude:2").unwrap(),
    ];
    let n = 8u64;
    let draws = 30_000u64;
    let significance = 1e-3;
    for (mi, model) in models.iter().enumerate() {
        for (ri, rule) in rules.iter().enumerate() {
            let a = rule.at(n);
            let sampler = SequentialSampler::new(model, &a).unwrap();
            let mut rng = RngStream {
                seed: 0xACCE55 + mi as u64,
                stream: ri as u64,
            }
            .rng();
            let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
            for _ in 0..draws {
                *counts
                    .entry(sampler.sample(&mut rng).to_type())
                    .or_insert(0) += 1;
            }
            let law = brute_force_law(model, &a, &Statistic::CycleType).unwrap();
            let mut observed = Vec::new();
            let mut probs = Vec::new();
            for (o, p) in law.iter_f64() {
                let Outcome::Lengths(t) = o else {
                    unreachable!()
                };
                observed.push(counts.get(t).copied().unwrap_or(0));
                probs.push(p);
            }
            assert_eq!(
                observed.iter().sum::<u64>(),
                draws,
                "draw outside the exact support: {} {}",
                model.spec_string(),
                rule.spec_string()
            );
            let chi = stats::chi_square_gof(&observed, &probs, 5.0);
            assert!(
                chi.p_value >= significance,
                "{} {} rejected: chi2 = {:.2}, dof = {}, p = {:.3e}",
                model.spec_string(),
                rule.spec_string(),
                chi.statistic,
                chi.dof,
                chi.p_value
            );
        }
    }
}
