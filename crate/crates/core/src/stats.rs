//! Goodness-of-fit and interval estimates used by the simulators.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Upper tail `P(χ²_df ≥ stat)`.
pub fn chi_squared_sf(stat: f64, df: usize) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, stat / 2.0).clamp(0.0, 1.0)
}

/// Pearson χ² of `counts` against the probabilities `expected`, with `k - 1` degrees of freedom.
pub fn chi_squared_gof(counts: &[u64], expected: &[f64]) -> Result<(f64, f64)> {
    if counts.len() != expected.len() {
        return Err(Error::Dimension(format!(
            "{} counts vs {} expected cells",
            counts.len(),
            expected.len()
        )));
    }
    if counts.len() < 2 {
        return Err(Error::Domain("need at least two cells".into()));
    }
    if expected.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::InvalidDistribution("expected cell probabilities must be positive".into()));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("no samples".into()));
    }
    let norm: f64 = expected.iter().sum();
    let n = total as f64;
    let stat = counts
        .iter()
        .zip(expected)
        .map(|(&c, &p)| {
            let e = n * p / norm;
            let d = c as f64 - e;
            d * d / e
        })
        .sum::<f64>();
    Ok((stat, chi_squared_sf(stat, counts.len() - 1)))
}

/// Pearson χ² of symbol counts against the uniform law on `0..q`.
pub fn chi_squared_counts_uniform(counts: &[u64]) -> Result<(f64, f64)> {
    let q = counts.len();
    let total: u64 = counts.iter().sum();
    if total < 5 * q as u64 {
        return Err(Error::TooFewSamples {
            got: total as usize,
            need: 5 * q,
        });
    }
    chi_squared_gof(counts, &vec![1.0; q])
}

/// Pearson χ² of `samples` against the uniform law on `0..q`; needs at least `5 q` samples.
pub fn chi_squared_uniformity(samples: &[usize], q: usize) -> Result<(f64, f64)> {
    if q < 2 {
        return Err(Error::Domain(format!("alphabet size {q} < 2")));
    }
    if samples.len() < 5 * q {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            need: 5 * q,
        });
    }
    let mut counts = vec![0u64; q];
    for &s in samples {
        if s >= q {
            return Err(Error::Domain(format!("symbol {s} outside alphabet of size {q}")));
        }
        counts[s] += 1;
    }
    chi_squared_counts_uniform(&counts)
}

/// A proportion with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Wilson 95% interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> Result<Proportion> {
    if trials == 0 {
        return Err(Error::Empty("no trials".into()));
    }
    if successes > trials {
        return Err(Error::Domain(format!("{successes} successes out of {trials}")));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(Proportion {
        estimate: p,
        ci_lo: (center - half).max(0.0).min(p),
        ci_hi: (center + half).min(1.0).max(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    #[test]
    fn balanced_counts() {
        let samples: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let (stat, p) = chi_squared_uniformity(&samples, 4).unwrap();
        assert_eq!(stat, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn all_mass_on_one_symbol() {
        let (stat, p) = chi_squared_uniformity(&[0; 100], 2).unwrap();
        assert_eq!(stat, 100.0);
        assert!(p < 1e-20);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            chi_squared_uniformity(&[0, 1, 0], 2),
            Err(Error::TooFewSamples { got: 3, need: 10 })
        ));
        assert!(chi_squared_uniformity(&[0; 20], 1).is_err());
        assert!(chi_squared_uniformity(&[3; 20], 2).is_err());
    }

    #[test]
    fn sf_known_values() {
        // χ²_1 tail at 3.841458820694124 is 0.05; χ²_2 tail is exp(-x/2)
        assert!((chi_squared_sf(3.841_458_820_694_124, 1) - 0.05).abs() < 1e-12);
        assert!((chi_squared_sf(5.0, 2) - (-2.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn pvalues_of_uniform_draws_are_uniform() {
        let q = 10;
        let mut ps: Vec<f64> = (0..100)
            .map(|k| {
                let mut rng = substream(1234, k);
                let s: Vec<usize> = (0..100_000).map(|_| rng.random_range(0..q)).collect();
                chi_squared_uniformity(&s, q).unwrap().1
            })
            .collect();
        ps.sort_by(f64::total_cmp);
        let ks = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| ((i + 1) as f64 / 100.0 - p).abs().max((p - i as f64 / 100.0).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 0.15, "KS distance {ks}");
    }

    #[test]
    fn wilson_contains_estimate() {
        for (s, n) in [(0, 10), (10, 10), (3, 10), (1, 10_000)] {
            let w = wilson_interval(s, n).unwrap();
            assert!(w.ci_lo <= w.estimate && w.estimate <= w.ci_hi);
            assert!(w.ci_lo >= 0.0 && w.ci_hi <= 1.0);
        }
        let w = wilson_interval(0, 10_000).unwrap();
        assert_eq!(w.ci_lo, 0.0);
        assert!(w.ci_hi > 3e-4 && w.ci_hi < 4e-4);
        assert!(wilson_interval(1, 0).is_err());
    }
}
