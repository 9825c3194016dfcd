//! Statistical gates shared by the harness, the CLI and the acceptance suite.

use crate::harness::Summary;

/// Means: within this many standard errors of the target.
pub const MEAN_SIGMAS: f64 = 3.0;

/// Oracle comparisons against exact enumeration.
pub const ORACLE_SIGMAS: f64 = 4.0;

/// Variances: relative slack added to the Monte Carlo error.
pub const VARIANCE_RELATIVE: f64 = 0.05;

/// Variances: standard errors of the sample variance added to the relative slack.
pub const VARIANCE_SIGMAS: f64 = 3.0;

/// `|estimate - target| <= sigmas * se`.
pub fn within_sigmas(estimate: f64, se: f64, target: f64, sigmas: f64) -> bool {
    (estimate - target).abs() <= sigmas * se
}

pub fn mean_ok(summary: &Summary, target: f64) -> bool {
    within_sigmas(summary.mean, summary.se_mean, target, MEAN_SIGMAS)
}

/// `|s^2 - target| <= 5% target + 3 se(s^2)`.
pub fn variance_ok(summary: &Summary, target: f64) -> bool {
    (summary.variance - target).abs() <= VARIANCE_RELATIVE * target + VARIANCE_SIGMAS * summary.se_variance
}

/// The one-sided bound `mean <= bound + 3 se`.
pub fn mean_at_most(summary: &Summary, bound: f64) -> bool {
    summary.mean <= bound + MEAN_SIGMAS * summary.se_mean
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gates() {
        let s = Summary {
            count: 100,
            mean: 1.02,
            variance: 0.26,
            se_mean: 0.01,
            se_variance: 0.001,
        };
        assert!(mean_ok(&s, 1.0));
        assert!(!mean_ok(&s, 0.98));
        assert!(variance_ok(&s, 0.25));
        assert!(!variance_ok(&s, 0.2));
        assert!(mean_at_most(&s, 1.0));
        assert!(!mean_at_most(&s, 0.98));
        assert!(within_sigmas(0.0, 0.0, 0.0, ORACLE_SIGMAS));
    }
}
