//! BIC model evidence, posterior model probabilities and Bayesian model
//! averaging.
//!
//! Mixture intervals are read off the weighted empirical distribution that
//! pools every model's posterior draws, each draw of model `k` carrying
//! weight `pmp_k / n_k`. This is the distribution that resampling a model by
//! its probability and then one of its draws converges to, computed exactly.

use crate::error::{Error, Result};
use crate::inference::{quantile_sorted, PosteriorSummary};
use crate::model::ModelId;
use crate::par::{self, Execution};

/// `-2 L + k ln n`.
pub fn bic(max_log_likelihood: f64, k: usize, n: usize) -> f64 {
    debug_assert!(k >= 1 && n >= 1);
    -2.0 * max_log_likelihood + k as f64 * (n as f64).ln()
}

/// Posterior model probabilities under a uniform model prior,
/// `pmp_k ∝ exp(-bic_k / 2)`.
pub fn posterior_model_probabilities(bics: &[f64]) -> Vec<f64> {
    let best = bics.iter().copied().fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        // every model failed, or one is infinitely good
        let hits: Vec<bool> = bics.iter().map(|&b| b == best).collect();
        let n = hits.iter().filter(|&&h| h).count().max(1);
        return hits
            .iter()
            .map(|&h| if h { 1.0 / n as f64 } else { 0.0 })
            .collect();
    }
    let raw: Vec<f64> = bics.iter().map(|b| (-(b - best) / 2.0).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEvidence {
    pub model: ModelId,
    pub max_log_likelihood: f64,
    pub k: usize,
    pub n: usize,
    pub bic: f64,
    pub pmp: f64,
}

/// Evidence of each fitted model, with probabilities normalised over the set.
pub fn model_evidences(fits: &[(ModelId, &PosteriorSummary)]) -> Vec<ModelEvidence> {
    let bics: Vec<f64> = fits
        .iter()
        .map(|(_, s)| bic(s.max_log_likelihood, s.k, s.n))
        .collect();
    let pmps = posterior_model_probabilities(&bics);
    fits.iter()
        .zip(bics.iter().zip(pmps))
        .map(|((model, s), (&bic, pmp))| ModelEvidence {
            model: *model,
            max_log_likelihood: s.max_log_likelihood,
            k: s.k,
            n: s.n,
            bic,
            pmp,
        })
        .collect()
}

/// Model-averaged estimate of one quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct BmaEstimate {
    /// `sum_k pmp_k * mean_k`.
    pub point: f64,
    /// Central interval of the mixture distribution.
    pub interval: (f64, f64),
    pub level: f64,
    pub component_weights: Vec<f64>,
    pub component_means: Vec<f64>,
}

fn check_weights(weights: &[f64], models: usize) -> Result<()> {
    if weights.len() != models {
        return Err(Error::WeightMismatch(format!(
            "{} weights for {models} models",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::WeightMismatch(format!("negative weight in {weights:?}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::WeightMismatch(format!("weights sum to {total}")));
    }
    Ok(())
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("interval level {level}")))
    }
}

/// Quantile `p` of a weighted sample sorted by value. Support points sit at
/// `(C_i - w_i) / (1 - w_last)` on the probability axis, `C_i` the cumulative
/// weight, and the quantile interpolates linearly between them; for equal
/// weights this is the usual `(n - 1) p` interpolation.
fn weighted_quantile_sorted(points: &[(f64, f64)], p: f64) -> f64 {
    let n = points.len();
    if n == 1 {
        return points[0].0;
    }
    let last = points[n - 1].1;
    let span = 1.0 - last;
    let p = p.clamp(0.0, 1.0);
    let mut cum = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &(x, w) in points {
        let at = (cum / span).min(1.0);
        cum += w;
        if at >= p {
            return match prev {
                Some((px, pat)) if at > pat => px + (p - pat) / (at - pat) * (x - px),
                _ => x,
            };
        }
        prev = Some((x, at));
    }
    points[n - 1].0
}

fn mixture(samples: &[&[f64]], weights: &[f64], level: f64) -> Result<BmaEstimate> {
    let mut points = Vec::new();
    let mut component_means = Vec::with_capacity(samples.len());
    let mut point = 0.0;
    for (s, &w) in samples.iter().zip(weights) {
        if s.is_empty() {
            if w > 0.0 {
                return Err(Error::InsufficientSamples { needed: 1, got: 0 });
            }
            component_means.push(f64::NAN);
            continue;
        }
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        component_means.push(mean);
        if w == 0.0 {
            continue;
        }
        point += w * mean;
        let each = w / s.len() as f64;
        points.extend(s.iter().map(|&x| (x, each)));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tail = (1.0 - level) / 2.0;
    let interval = if points.iter().all(|p| p.1 == points[0].1) {
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        (quantile_sorted(&xs, tail), quantile_sorted(&xs, 1.0 - tail))
    } else {
        (
            weighted_quantile_sorted(&points, tail),
            weighted_quantile_sorted(&points, 1.0 - tail),
        )
    };
    Ok(BmaEstimate {
        point,
        interval,
        level,
        component_weights: weights.to_vec(),
        component_means,
    })
}

/// Averages a scalar over models from each model's posterior draws.
pub fn bma_combine_scalar(samples: &[Vec<f64>], pmps: &[f64], level: f64) -> Result<BmaEstimate> {
    check_weights(pmps, samples.len())?;
    check_level(level)?;
    let views: Vec<&[f64]> = samples.iter().map(Vec::as_slice).collect();
    mixture(&views, pmps, level)
}

/// Week-by-week average of profiles; `profiles[model][draw][week]`.
pub fn bma_combine_profile(
    profiles: &[Vec<Vec<f64>>],
    pmps: &[f64],
    level: f64,
    exec: Execution,
) -> Result<Vec<BmaEstimate>> {
    check_weights(pmps, profiles.len())?;
    check_level(level)?;
    let mut weeks = None;
    for (m, draws) in profiles.iter().enumerate() {
        for d in draws {
            match weeks {
                None => weeks = Some(d.len()),
                Some(w) if w != d.len() => {
                    return Err(Error::GridMismatch(format!(
                        "model {m} has a {}-week profile, expected {w}",
                        d.len()
                    )))
                }
                _ => {}
            }
        }
    }
    let weeks: Vec<usize> = (0..weeks.unwrap_or(0)).collect();
    par::try_map(exec, &weeks, |&w| {
        let cols: Vec<Vec<f64>> = profiles
            .iter()
            .map(|draws| draws.iter().map(|d| d[w]).collect())
            .collect();
        let views: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        mixture(&views, pmps, level)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bic_arithmetic() {
        assert!((bic(0.0, 10, 708) - 10.0 * 708f64.ln()).abs() < 1e-12);
        assert!((bic(0.0, 10, 708) - 65.62).abs() < 0.01);
        assert!((bic(-50.0, 11, 708) - bic(-50.0, 10, 708) - 708f64.ln()).abs() < 1e-12);
        assert_eq!(bic(-3.0, 10, 20), bic(-3.0, 10, 20));
    }

    #[test]
    fn pmp_nine_to_one() {
        let p = posterior_model_probabilities(&[100.0, 100.0 + 2.0 * 9f64.ln()]);
        assert!((p[0] - 0.9).abs() < 1e-12 && (p[1] - 0.1).abs() < 1e-12);
        assert_eq!(posterior_model_probabilities(&[123.0]), vec![1.0]);
    }

    #[test]
    fn pmp_extremes() {
        let p = posterior_model_probabilities(&[1e6, 1e6 + 61.0, 1e6 + 80.0]);
        assert!(p[0] >= 1.0 - 1e-13);
        let p = posterior_model_probabilities(&[f64::INFINITY, 5.0]);
        assert_eq!(p, vec![0.0, 1.0]);
        let p = posterior_model_probabilities(&[f64::INFINITY; 2]);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn published_burden_average() {
        let means = [9.2, 3.5, 3.5, 3.6, 3.2];
        let pmps = [0.0, 0.01, 0.92, 0.03, 0.04];
        let samples: Vec<Vec<f64>> = means.iter().map(|&m| vec![m; 4]).collect();
        let est = bma_combine_scalar(&samples, &pmps, 0.95).unwrap();
        // 0.01 * 3.5 + 0.92 * 3.5 + 0.03 * 3.6 + 0.04 * 3.2
        assert!((est.point - 3.491).abs() < 1e-12, "{}", est.point);
        assert_eq!(format!("{:.2}", est.point), "3.49");
        assert!((est.point - 3.5).abs() <= 0.05);
    }

    #[test]
    fn single_model_is_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<f64> = (0..501).map(|_| rng.random::<f64>()).collect();
        let other = vec![10.0; 30];
        let est = bma_combine_scalar(&[other, xs.clone()], &[0.0, 1.0], 0.95).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        assert!((est.point - mean).abs() < 1e-12);
        assert!((est.interval.0 - quantile_sorted(&sorted, 0.025)).abs() < 1e-12);
        assert!((est.interval.1 - quantile_sorted(&sorted, 0.975)).abs() < 1e-12);
    }

    #[test]
    fn point_masses() {
        let est = bma_combine_scalar(&[vec![0.0; 10], vec![1.0; 10]], &[0.25, 0.75], 0.5).unwrap();
        assert!((est.point - 0.75).abs() < 1e-15);
    }

    #[test]
    fn weight_errors() {
        let s = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(matches!(
            bma_combine_scalar(&s, &[0.5], 0.9),
            Err(Error::WeightMismatch(_))
        ));
        assert!(matches!(
            bma_combine_scalar(&s, &[0.5, 0.6], 0.9),
            Err(Error::WeightMismatch(_))
        ));
        assert!(matches!(
            bma_combine_scalar(&s, &[1.2, -0.2], 0.9),
            Err(Error::WeightMismatch(_))
        ));
    }

    #[test]
    fn weighted_quantile_matches_resampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..250).map(|_| 2.0 + rng.random::<f64>()).collect();
        let est = bma_combine_scalar(&[a.clone(), b.clone()], &[0.7, 0.3], 0.9).unwrap();
        let mut pool: Vec<f64> = (0..200_000)
            .map(|_| {
                if rng.random::<f64>() < 0.7 {
                    a[rng.random_range(0..a.len())]
                } else {
                    b[rng.random_range(0..b.len())]
                }
            })
            .collect();
        pool.sort_by(f64::total_cmp);
        let lo = quantile_sorted(&pool, 0.05);
        let hi = quantile_sorted(&pool, 0.95);
        assert!((est.interval.0 - lo).abs() < 0.01, "{:?} {lo}", est.interval);
        assert!((est.interval.1 - hi).abs() < 0.01, "{:?} {hi}", est.interval);
    }

    #[test]
    fn profiles() {
        let m1 = vec![vec![1.0, 2.0, 3.0, 4.0]; 5];
        let m2 = vec![vec![3.0, 2.0, 5.0, 0.0]; 5];
        let out = bma_combine_profile(&[m1.clone(), m2], &[0.6, 0.4], 0.95, Execution::Sequential).unwrap();
        for (w, expect) in [(0, 0.6 + 1.2), (2, 1.8 + 2.0), (3, 2.4)] {
            assert!((out[w].point - expect).abs() < 1e-12);
        }
        let same = bma_combine_profile(
            &[m1.clone(), m1.clone()],
            &[0.5, 0.5],
            0.95,
            Execution::Sequential,
        )
        .unwrap();
        for (w, e) in same.iter().enumerate() {
            assert!((e.point - m1[0][w]).abs() < 1e-12);
        }
        let ragged = vec![vec![1.0, 2.0]; 3];
        assert!(matches!(
            bma_combine_profile(&[m1, ragged], &[0.5, 0.5], 0.95, Execution::Sequential),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn disagreeing_models_widen_the_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let weeks = 20;
        let draws = |shift: f64, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..300)
                .map(|_| {
                    (0..weeks)
                        .map(|w| w as f64 + shift + rng.random::<f64>())
                        .collect()
                })
                .collect()
        };
        let a = draws(0.0, &mut rng);
        let b = draws(1.5, &mut rng);
        let out = bma_combine_profile(&[a.clone(), b], &[0.8, 0.2], 0.95, Execution::Parallel).unwrap();
        let alone = bma_combine_profile(&[a], &[1.0], 0.95, Execution::Sequential).unwrap();
        for (m, s) in out.iter().zip(&alone) {
            assert!(m.interval.1 - m.interval.0 >= s.interval.1 - s.interval.0);
        }
    }
}
