//! Statistical verification of the limit theorems, and the acceptance
//! suite built from those checks.

pub mod acceptance;
pub mod checks;
pub mod report;
pub mod stats;

pub use checks::{
    verify_clt_t, verify_flt, verify_flt_parity, verify_flt_restricted, verify_mod_poisson_t,
    verify_pd_large_cycles, verify_poisson_cycle_counts, verify_sampler_cross, Centering,
};
pub use report::{ladder_verdict, ComparisonReport, ReportRow, Thresholds, Verdict};
