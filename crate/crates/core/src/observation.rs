//! Reported-case observation model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, AGE_CLASSES, WEEKS_PER_YEAR};

/// Expected means are floored here so an observed count never meets a
/// zero mean.
pub const MEAN_FLOOR: f64 = 1e-10;

/// Below this count the gamma ratio is summed term by term.
const DIRECT_SUM_LIMIT: u64 = 64;

/// Weekly reported case counts per age class, weeks `1..=T`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CaseSeries {
    counts: Vec<[u64; AGE_CLASSES]>,
}

impl CaseSeries {
    pub fn new(counts: Vec<[u64; AGE_CLASSES]>) -> Self {
        CaseSeries { counts }
    }

    pub fn weeks(&self) -> usize {
        self.counts.len()
    }

    pub fn cells(&self) -> usize {
        self.counts.len() * AGE_CLASSES
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[[u64; AGE_CLASSES]] {
        &self.counts
    }

    /// Count of `week` (1-based) and `age_group` (1-based).
    pub fn get(&self, week: usize, age_group: usize) -> u64 {
        self.counts[week - 1][age_group - 1]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Expected reported cases `rho * severe incidence` for every week of a
/// trajectory.
pub fn expected_reported_cases(
    spec: &ModelSpec,
    trajectory: &Trajectory,
    rho: f64,
) -> Vec<[f64; AGE_CLASSES]> {
    trajectory
        .severe_incidence(spec)
        .into_iter()
        .map(|w| w.map(|v| rho * v))
        .collect()
}

/// Repeats a 52-week profile over `weeks` observation weeks, observation
/// week 1 falling in calendar week `offset + 1`.
pub fn tile_profile(
    profile: &[[f64; AGE_CLASSES]],
    weeks: usize,
    offset: usize,
) -> Result<Vec<[f64; AGE_CLASSES]>> {
    if profile.len() != WEEKS_PER_YEAR {
        return Err(Error::ShapeMismatch {
            expected: format!("{WEEKS_PER_YEAR}-week profile"),
            found: profile.len().to_string(),
        });
    }
    Ok((0..weeks)
        .map(|k| profile[(offset + k) % WEEKS_PER_YEAR])
        .collect())
}

/// Negative binomial log-probability of `count` with mean `mean` and
/// dispersion `r` (variance `mean + mean^2 / r`).
pub fn nb_log_pmf(count: u64, mean: f64, r: f64) -> Result<f64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::InvalidParams(format!("negative binomial mean {mean}")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("negative binomial dispersion {r}")));
    }
    Ok(nb_log_pmf_unchecked(count, mean, r))
}

pub(crate) fn nb_log_pmf_unchecked(count: u64, mean: f64, r: f64) -> f64 {
    if mean == 0.0 {
        return if count == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let k = count as f64;
    // log C(k + r - 1, k)
    let coef = if count <= DIRECT_SUM_LIMIT {
        let mut s = 0.0;
        for j in 0..count {
            s += ((r + j as f64) / (j as f64 + 1.0)).ln();
        }
        s
    } else {
        ln_gamma(k + r) - ln_gamma(r) - ln_gamma(k + 1.0)
    };
    let zero_term = -r * (mean / r).ln_1p();
    let count_term = if count == 0 {
        0.0
    } else {
        k * (mean.ln() - (r + mean).ln())
    };
    coef + zero_term + count_term
}

/// Sum over all cells of the negative binomial log-probability of the
/// observed counts, with means floored at [`MEAN_FLOOR`].
pub fn log_likelihood(series: &CaseSeries, expected: &[[f64; AGE_CLASSES]], r: f64) -> Result<f64> {
    if series.weeks() != expected.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} weeks of expected cases", series.weeks()),
            found: expected.len().to_string(),
        });
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("negative binomial dispersion {r}")));
    }
    let mut total = 0.0;
    for (obs, xi) in series.counts().iter().zip(expected) {
        for a in 0..AGE_CLASSES {
            if !(xi[a] >= 0.0) {
                return Err(Error::InvalidParams(format!("expected cases {}", xi[a])));
            }
            total += nb_log_pmf_unchecked(obs[a], xi[a].max(MEAN_FLOOR), r);
        }
    }
    Ok(total)
}

/// Independent negative binomial draws (gamma-Poisson mixture) for every
/// cell of `expected`.
pub fn simulate_observations(expected: &[[f64; AGE_CLASSES]], r: f64, seed: u64) -> Result<CaseSeries> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("negative binomial dispersion {r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::with_capacity(expected.len());
    for week in expected {
        let mut row = [0u64; AGE_CLASSES];
        for a in 0..AGE_CLASSES {
            let mu = week[a];
            if !(mu >= 0.0) || !mu.is_finite() {
                return Err(Error::InvalidParams(format!("expected cases {mu}")));
            }
            if mu == 0.0 {
                continue;
            }
            let gamma = Gamma::new(r, mu / r)
                .map_err(|e| Error::InvalidParams(format!("gamma({r}, {}): {e}", mu / r)))?;
            let lambda: f64 = gamma.sample(&mut rng);
            if lambda > 0.0 {
                let poisson = Poisson::new(lambda)
                    .map_err(|e| Error::InvalidParams(format!("poisson({lambda}): {e}")))?;
                row[a] = poisson.sample(&mut rng) as u64;
            }
        }
        counts.push(row);
    }
    Ok(CaseSeries::new(counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_log_pmf(k: u64, mu: f64) -> f64 {
        k as f64 * mu.ln() - mu - ln_gamma(k as f64 + 1.0)
    }

    #[test]
    fn zero_count_closed_form() {
        let p = nb_log_pmf(0, 2.0, 1.0).unwrap().exp();
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
        for (mu, r) in [(0.5f64, 3.0f64), (7.0, 2.6), (100.0, 0.1)] {
            let expect = r * (r / (r + mu)).ln();
            assert!((nb_log_pmf(0, mu, r).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_sums_to_one() {
        let s: f64 = (0..=10_000).map(|k| nb_log_pmf(k, 5.0, 2.5).unwrap().exp()).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn direct_and_gamma_branches_agree() {
        for k in [60u64, 64, 65, 70] {
            let direct: f64 = (0..k).map(|j| ((2.6 + j as f64) / (j as f64 + 1.0)).ln()).sum();
            let via_gamma = ln_gamma(k as f64 + 2.6) - ln_gamma(2.6) - ln_gamma(k as f64 + 1.0);
            assert!((direct - via_gamma).abs() < 1e-9);
        }
    }

    #[test]
    fn poisson_limit() {
        let d = nb_log_pmf(3, 5.0, 1e8).unwrap() - poisson_log_pmf(3, 5.0);
        assert!(d.abs() < 1e-6, "{d}");
    }

    #[test]
    fn large_arguments_are_finite() {
        let v = nb_log_pmf(1_000_000, 1e6, 2.0).unwrap();
        assert!(v.is_finite() && v < 0.0);
        let v = nb_log_pmf(999_000, 1e6, 1e4).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn invalid_parameters() {
        assert!(nb_log_pmf(1, -1.0, 1.0).is_err());
        assert!(nb_log_pmf(1, 1.0, 0.0).is_err());
        assert_eq!(nb_log_pmf(1, 0.0, 1.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn likelihood_decomposes() {
        let series = CaseSeries::new(vec![[1, 0, 3, 2, 5, 0], [0, 4, 1, 1, 2, 7]]);
        let xi = vec![[1.5, 0.2, 2.0, 2.5, 4.0, 0.0], [0.3, 3.5, 1.2, 0.9, 2.2, 6.0]];
        let ll = log_likelihood(&series, &xi, 2.6).unwrap();
        let mut manual = 0.0;
        for w in 0..2 {
            for a in 0..6 {
                manual += nb_log_pmf(series.counts()[w][a], xi[w][a].max(MEAN_FLOOR), 2.6).unwrap();
            }
        }
        assert_eq!(ll, manual);
        assert_eq!(log_likelihood(&CaseSeries::default(), &[], 2.6).unwrap(), 0.0);
        assert!(log_likelihood(&series, &xi[..1], 2.6).is_err());
    }

    #[test]
    fn likelihood_peaks_at_observed_count() {
        let series = CaseSeries::new(vec![[4, 4, 4, 4, 4, 4]]);
        let at = |m: f64| {
            let mut xi = [[4.0; 6]];
            xi[0][2] = m;
            log_likelihood(&series, &xi, 2.6).unwrap()
        };
        let centre = at(4.0);
        let mut prev_up = centre;
        let mut prev_down = centre;
        for step in 1..30 {
            let up = at(4.0 + 0.25 * step as f64);
            let down = at(4.0 - 0.13 * step as f64);
            assert!(up < prev_up && down < prev_down);
            prev_up = up;
            prev_down = down;
        }
    }

    #[test]
    fn simulation_is_seeded() {
        let xi = vec![[7.0; 6]; 20];
        let a = simulate_observations(&xi, 2.6, 11).unwrap();
        let b = simulate_observations(&xi, 2.6, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate_observations(&xi, 2.6, 12).unwrap());
        let zero = simulate_observations(&vec![[0.0; 6]; 5], 2.6, 1).unwrap();
        assert_eq!(zero.total(), 0);
    }

    #[test]
    fn tiling_wraps_the_calendar() {
        let profile: Vec<[f64; 6]> = (0..52).map(|w| [w as f64; 6]).collect();
        let t = tile_profile(&profile, 118, 51).unwrap();
        assert_eq!(t[0][0], 51.0);
        assert_eq!(t[1][0], 0.0);
        assert_eq!(t[117][0], ((51 + 117) % 52) as f64);
        assert!(tile_profile(&profile[..10], 5, 0).is_err());
    }
}
