//! Student-t critical values for the stability diagnostic.

use pgd_core::stats::{self as core_stats, StabilityReport};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::CliError;

/// Confidence level used by every stability report.
pub const LEVEL: f64 = 0.95;

/// Above this, statrs' inverse t CDF drifts by up to 1e-4 and the
/// expansion around the normal quantile is used instead.
const LARGE_DF: u64 = 10_000;

/// Two-sided critical value `t_{(1 + level)/2, df}`.
pub fn t_critical(df: u64, level: f64) -> f64 {
    if df > LARGE_DF {
        let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
        let v = df as f64;
        let (z3, z5) = (z.powi(3), z.powi(5));
        return z + (z3 + z) / (4.0 * v) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v);
    }
    let dist = StudentsT::new(0.0, 1.0, df.max(1) as f64).expect("positive degrees of freedom");
    dist.inverse_cdf(0.5 + level / 2.0)
}

pub fn stability(window: u64, means: &[f64]) -> Result<StabilityReport, CliError> {
    let df = core_stats::trend(window, means)?.df;
    Ok(core_stats::stability_diagnostic(
        window,
        means,
        LEVEL,
        t_critical(df, LEVEL),
    )?)
}
