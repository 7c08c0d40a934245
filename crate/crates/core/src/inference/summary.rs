use super::mcmc::PosteriorChain;
use super::params::{PARAM_COUNT, PARAM_NAMES};
use super::prior::{log_prior, PriorSpec};
use crate::error::{Error, Result};

/// Shortest interval holding `ceil(level * n)` of the sorted samples.
pub fn hpd_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::InvalidParams(format!("interval level {level}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(hpd_sorted(&sorted, level))
}

pub(crate) fn hpd_sorted(sorted: &[f64], level: f64) -> (f64, f64) {
    let n = sorted.len();
    let m = ((level * n as f64).ceil() as usize).clamp(1, n);
    let mut best = (sorted[0], sorted[m - 1]);
    for i in 1..=(n - m) {
        let (lo, hi) = (sorted[i], sorted[i + m - 1]);
        if hi - lo < best.1 - best.0 {
            best = (lo, hi);
        }
    }
    best
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p))
}

pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Posterior mean and 95% HPD interval of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: &'static str,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
    /// Largest log-likelihood seen among the samples.
    pub max_log_likelihood: f64,
    pub k: usize,
    pub n: usize,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Means, 95% HPD intervals and the maximum log-likelihood of a chain.
///
/// The log-likelihood of a sample is its log-posterior minus its log-prior.
pub fn posterior_summary(chain: &PosteriorChain, priors: &PriorSpec) -> Result<PosteriorSummary> {
    if chain.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut params = Vec::with_capacity(PARAM_COUNT);
    for (i, name) in PARAM_NAMES.iter().enumerate() {
        let col = chain.column(i);
        // centred on the first sample, exact for a constant chain
        let mean = col[0] + col.iter().map(|v| v - col[0]).sum::<f64>() / col.len() as f64;
        let (lower, upper) = if col.len() >= 2 {
            hpd_interval(&col, 0.95)?
        } else {
            (col[0], col[0])
        };
        if !(lower <= mean && mean <= upper) {
            log::warn!("posterior mean of {name} ({mean}) lies outside its HPD ({lower}, {upper})");
        }
        params.push(ParamSummary {
            name,
            mean,
            lower,
            upper,
        });
    }
    let max_log_likelihood = chain
        .samples
        .iter()
        .zip(&chain.log_posteriors)
        .map(|(s, lp)| lp - log_prior(s, priors))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PosteriorSummary {
        params,
        max_log_likelihood,
        k: PARAM_COUNT,
        n: chain.observations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::ParamVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn degenerate_intervals() {
        assert_eq!(hpd_interval(&[3.0; 10], 0.95).unwrap(), (3.0, 3.0));
        let xs = [5.0, 1.0, 3.0, 9.0, 2.0];
        assert_eq!(hpd_interval(&xs, 1.0).unwrap(), (1.0, 9.0));
        assert!(matches!(
            hpd_interval(&[1.0], 0.9),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn symmetric_sample_matches_central_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = Normal::new(0.0, 1.0)
            .unwrap()
            .sample_iter(&mut rng)
            .take(200_000)
            .collect();
        let (lo, hi) = hpd_interval(&xs, 0.95).unwrap();
        let (qlo, qhi) = (quantile(&xs, 0.025).unwrap(), quantile(&xs, 0.975).unwrap());
        assert!(
            (lo - qlo).abs() < 0.06 && (hi - qhi).abs() < 0.06,
            "{lo} {hi} {qlo} {qhi}"
        );
    }

    #[test]
    fn skewed_sample_is_shorter_than_central() {
        let xs: Vec<f64> = (1..=1000).map(|i| (i as f64 / 1000.0).powi(3)).collect();
        let (lo, hi) = hpd_interval(&xs, 0.9).unwrap();
        let (qlo, qhi) = (quantile(&xs, 0.05).unwrap(), quantile(&xs, 0.95).unwrap());
        assert!(hi - lo <= qhi - qlo);
        assert_eq!(lo, xs[0]);
    }

    #[test]
    fn identical_chain() {
        let p = ParamVector::new(0.4, 7.0, 2.0, 0.1, [19.0; 6]);
        let priors = PriorSpec::default();
        let chain = PosteriorChain {
            samples: vec![p; 50],
            log_posteriors: vec![-100.0; 50],
            acceptance_rate: 0.2,
            seed: 1,
            burn_in_length: 0,
            observations: 708,
        };
        let s = posterior_summary(&chain, &priors).unwrap();
        assert_eq!(s.k, 10);
        assert_eq!(s.n, 708);
        for (ps, v) in s.params.iter().zip(p.to_array()) {
            assert_eq!((ps.mean, ps.lower, ps.upper), (v, v, v));
        }
        assert!((s.max_log_likelihood - (-100.0 - log_prior(&p, &priors))).abs() < 1e-12);
    }
}
