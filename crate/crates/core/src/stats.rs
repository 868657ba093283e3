//! Small statistics helpers for the empirical checks.

use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

/// One-sided Clopper-Pearson lower confidence bound on a binomial rate.
pub fn binomial_lower_bound(successes: usize, trials: usize, confidence: f64) -> f64 {
    if trials == 0 || successes == 0 {
        return 0.0;
    }
    let alpha = 1.0 - confidence;
    let beta = Beta::new(successes as f64, (trials - successes + 1) as f64)
        .expect("positive shape parameters");
    beta.inverse_cdf(alpha)
}

/// Pearson chi-square statistic and its p-value for observed counts against
/// expected probabilities. Cells with zero expected probability must be empty
/// and are dropped from the degrees of freedom.
pub fn chi_square_p_value(observed: &[u64], probabilities: &[f64]) -> (f64, f64) {
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probabilities) {
        if p <= 0.0 {
            if o > 0 {
                return (f64::INFINITY, 0.0);
            }
            continue;
        }
        let e = p * total as f64;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells < 2 {
        return (stat, 1.0);
    }
    let dist = ChiSquared::new((cells - 1) as f64).expect("positive degrees of freedom");
    (stat, 1.0 - dist.cdf(stat))
}
