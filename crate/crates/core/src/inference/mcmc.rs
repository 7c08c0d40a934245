use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::params::{ParamVector, PARAM_COUNT};
use super::posterior::PosteriorEvaluator;
use super::prior::PriorSpec;
use crate::dynamics::Setting;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::observation::CaseSeries;

/// Settings of the random-walk sampler.
///
/// Proposals are Gaussian in the unconstrained coordinates. During burn-in
/// the proposal covariance is re-estimated from the chain so far and its
/// overall scale is tuned toward `target_acceptance`; both are frozen
/// afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub initial: ParamVector,
    /// Initial proposal standard deviations in unconstrained coordinates.
    pub proposal_scales: [f64; PARAM_COUNT],
    pub adapt_interval: usize,
    pub target_acceptance: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 50_000,
            burn_in: 10_000,
            seed: 20_120_331,
            initial: ParamVector::default(),
            proposal_scales: [0.3, 0.1, 0.2, 0.2, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05],
            adapt_interval: 100,
            target_acceptance: 0.25,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} must be shorter than the {} iterations",
                self.burn_in, self.iterations
            )));
        }
        if self.adapt_interval == 0 {
            return Err(Error::Config("adapt_interval must be positive".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Config("target_acceptance must lie in (0, 1)".into()));
        }
        if self.proposal_scales.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config("proposal scales must be positive".into()));
        }
        Ok(())
    }
}

/// Output of [`metropolis`]: post-burn-in points and target values.
#[derive(Debug, Clone, PartialEq)]
pub struct RawChain {
    pub points: Vec<Vec<f64>>,
    pub log_targets: Vec<f64>,
    pub acceptance_rate: f64,
    pub burn_in_acceptance: f64,
}

/// Adaptive random-walk Metropolis on an unconstrained target.
pub fn metropolis<F>(
    init: &[f64],
    mut log_target: F,
    scales: &[f64],
    iterations: usize,
    burn_in: usize,
    adapt_interval: usize,
    target_acceptance: f64,
    seed: u64,
) -> Result<RawChain>
where
    F: FnMut(&[f64]) -> f64,
{
    let d = init.len();
    if scales.len() != d {
        return Err(Error::ShapeMismatch {
            expected: format!("{d} proposal scales"),
            found: scales.len().to_string(),
        });
    }
    if iterations == 0 || burn_in >= iterations || adapt_interval == 0 {
        return Err(Error::Config(format!(
            "iterations {iterations}, burn-in {burn_in}, adapt interval {adapt_interval}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = init.to_vec();
    let mut lx = log_target(&x);
    if !lx.is_finite() {
        return Err(Error::InvalidParams(
            "chain start has zero posterior density".into(),
        ));
    }
    let mut chol = DMatrix::from_diagonal(&DVector::from_iterator(d, scales.iter().copied()));
    let mut log_scale = 0.0f64;
    let optimal = 2.38 * 2.38 / d as f64;
    let mut window_accepted = 0usize;
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(burn_in);
    let mut burn_accepted = 0usize;
    let mut accepted = 0usize;
    let keep = iterations - burn_in;
    let mut points = Vec::with_capacity(keep);
    let mut log_targets = Vec::with_capacity(keep);
    let mut z = DVector::zeros(d);
    let mut proposal = vec![0.0; d];
    for it in 0..iterations {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let step = &chol * &z;
        let s = log_scale.exp();
        for i in 0..d {
            proposal[i] = x[i] + s * step[i];
        }
        let lp = log_target(&proposal);
        let u: f64 = rng.random();
        let accept = lp.is_finite() && (lp - lx >= 0.0 || u.ln() < lp - lx);
        if accept {
            x.copy_from_slice(&proposal);
            lx = lp;
        }
        if it < burn_in {
            if accept {
                window_accepted += 1;
                burn_accepted += 1;
            }
            history.push(x.clone());
            if (it + 1) % adapt_interval == 0 {
                let rate = window_accepted as f64 / adapt_interval as f64;
                log_scale += rate - target_acceptance;
                window_accepted = 0;
                // covariance from the later part of the burn-in so far
                if it + 1 >= burn_in / 4 && history.len() >= 20 * d {
                    let from = history.len() / 2;
                    if let Some(l) = covariance_cholesky(&history[from..], optimal) {
                        chol = l;
                    }
                }
            }
        } else {
            if accept {
                accepted += 1;
            }
            points.push(x.clone());
            log_targets.push(lx);
        }
    }
    Ok(RawChain {
        points,
        log_targets,
        acceptance_rate: accepted as f64 / keep as f64,
        burn_in_acceptance: if burn_in > 0 {
            burn_accepted as f64 / burn_in as f64
        } else {
            f64::NAN
        },
    })
}

/// Lower Cholesky factor of `factor * cov(samples)`, regularised slightly.
fn covariance_cholesky(samples: &[Vec<f64>], factor: f64) -> Option<DMatrix<f64>> {
    let n = samples.len();
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        for i in 0..d {
            mean[i] += s[i];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::zeros(d, d);
    for s in samples {
        for i in 0..d {
            let di = s[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (s[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = factor * cov[(i, j)] / (n as f64 - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
        cov[(i, i)] += 1e-10;
    }
    if (0..d).any(|i| !(cov[(i, i)] > 1e-9)) {
        return None;
    }
    cov.cholesky().map(|c| c.l())
}

/// Post-burn-in samples of one model's posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    pub samples: Vec<ParamVector>,
    pub log_posteriors: Vec<f64>,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub burn_in_length: usize,
    /// Number of observed cells the chain was fitted to.
    pub observations: usize,
}

impl PosteriorChain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Values of parameter `index` (storage order) across the chain.
    pub fn column(&self, index: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.to_array()[index]).collect()
    }

    /// `count` samples evenly spaced through the chain, always including
    /// the last one.
    pub fn thin(&self, count: usize) -> Vec<ParamVector> {
        let n = self.samples.len();
        if count == 0 || n == 0 {
            return Vec::new();
        }
        if count >= n {
            return self.samples.clone();
        }
        (0..count)
            .map(|i| self.samples[(n - 1) - (count - 1 - i) * (n - 1) / (count - 1).max(1)])
            .collect()
    }
}

/// Random-walk Metropolis-Hastings for `spec` on `series`.
pub fn run_mcmc(
    spec: &ModelSpec,
    series: &CaseSeries,
    setting: &Setting,
    priors: &PriorSpec,
    calendar_offset: usize,
    config: &McmcConfig,
) -> Result<PosteriorChain> {
    config.validate()?;
    config.initial.validate()?;
    let mut eval = PosteriorEvaluator::new(spec, series, setting, priors, calendar_offset);
    let init = config.initial.to_unconstrained();
    let target = |u: &[f64]| {
        let (theta, jac) = ParamVector::from_unconstrained(u);
        if !theta.in_support() {
            return f64::NEG_INFINITY;
        }
        eval.evaluate(&theta) + jac
    };
    let raw = metropolis(
        &init,
        target,
        &config.proposal_scales,
        config.iterations,
        config.burn_in,
        config.adapt_interval,
        config.target_acceptance,
        config.seed,
    )?;
    log::info!(
        "model {}: acceptance {:.3} (burn-in {:.3})",
        spec.id(),
        raw.acceptance_rate,
        raw.burn_in_acceptance
    );
    let mut samples = Vec::with_capacity(raw.points.len());
    let mut log_posteriors = Vec::with_capacity(raw.points.len());
    for (u, lt) in raw.points.iter().zip(&raw.log_targets) {
        let (theta, jac) = ParamVector::from_unconstrained(u);
        samples.push(theta);
        log_posteriors.push(lt - jac);
    }
    Ok(PosteriorChain {
        samples,
        log_posteriors,
        acceptance_rate: raw.acceptance_rate,
        seed: config.seed,
        burn_in_length: config.burn_in,
        observations: series.cells(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_toy_target_moments() {
        // correlated 2-d Gaussian: mean (1, -2), sd (1, 0.5), corr 0.6
        let (m1, m2, s1, s2, rho) = (1.0, -2.0, 1.0, 0.5, 0.6);
        let target = |x: &[f64]| {
            let a = (x[0] - m1) / s1;
            let b = (x[1] - m2) / s2;
            -0.5 * (a * a - 2.0 * rho * a * b + b * b) / (1.0 - rho * rho)
        };
        let chain = metropolis(&[0.0, 0.0], target, &[1.0, 1.0], 60_000, 10_000, 100, 0.25, 5).unwrap();
        let n = chain.points.len() as f64;
        let mean0: f64 = chain.points.iter().map(|p| p[0]).sum::<f64>() / n;
        let mean1: f64 = chain.points.iter().map(|p| p[1]).sum::<f64>() / n;
        let var0: f64 = chain.points.iter().map(|p| (p[0] - mean0).powi(2)).sum::<f64>() / n;
        let var1: f64 = chain.points.iter().map(|p| (p[1] - mean1).powi(2)).sum::<f64>() / n;
        // Monte Carlo standard errors inflated for autocorrelation (~30)
        let ess = n / 30.0;
        assert!((mean0 - m1).abs() < 3.0 * s1 / ess.sqrt(), "{mean0}");
        assert!((mean1 - m2).abs() < 3.0 * s2 / ess.sqrt(), "{mean1}");
        assert!(
            (var0 - s1 * s1).abs() < 3.0 * s1 * s1 * (2.0 / ess).sqrt(),
            "{var0}"
        );
        assert!(
            (var1 - s2 * s2).abs() < 3.0 * s2 * s2 * (2.0 / ess).sqrt(),
            "{var1}"
        );
        assert!(chain.acceptance_rate > 0.1 && chain.acceptance_rate < 0.5);
    }

    #[test]
    fn same_seed_same_chain() {
        let target = |x: &[f64]| -0.5 * x[0] * x[0];
        let a = metropolis(&[0.0], target, &[1.0], 2000, 500, 50, 0.25, 9).unwrap();
        let b = metropolis(&[0.0], target, &[1.0], 2000, 500, 50, 0.25, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_errors() {
        let mut c = McmcConfig::default();
        c.burn_in = c.iterations;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = McmcConfig::default();
        c.iterations = 0;
        assert!(c.validate().is_err());
        assert!(McmcConfig::default().validate().is_ok());
    }

    #[test]
    fn thinning_is_even() {
        let chain = PosteriorChain {
            samples: (0..101)
                .map(|i| ParamVector::new(0.5, 4.0, 1.0 + i as f64, 0.1, [20.0; 6]))
                .collect(),
            log_posteriors: vec![0.0; 101],
            acceptance_rate: 0.3,
            seed: 1,
            burn_in_length: 0,
            observations: 0,
        };
        let t = chain.thin(5);
        let rs: Vec<f64> = t.iter().map(|p| p.r).collect();
        assert_eq!(rs, vec![1.0, 26.0, 51.0, 76.0, 101.0]);
        assert_eq!(chain.thin(500).len(), 101);
    }
}
