//! Annual severe RVGE burden, age distributions and the reporting prior.

use crate::dynamics::{find_periodic_solution, Setting};
use crate::error::{Error, Result};
use crate::inference::{hpd_interval, ParamVector};
use crate::model::{ModelSpec, AGE_CLASSES};
use crate::par::{self, Execution};

/// Yearly severe cases as a percentage of the under-5 population.
#[derive(Debug, Clone, PartialEq)]
pub struct BurdenEstimate {
    pub annual_percent: f64,
    /// 95% HPD interval over posterior draws.
    pub interval: (f64, f64),
}

/// Severe cases over one cycle of the periodic solution, as a percentage
/// of the modelled population. Reporting does not enter.
pub fn annual_burden(spec: &ModelSpec, params: &ParamVector, setting: &Setting) -> Result<f64> {
    let sol = find_periodic_solution(spec, params, setting)?;
    Ok(sol.annual_severe_percent(setting.population_size))
}

/// Posterior mean burden and its 95% HPD interval over `draws`.
pub fn burden_estimate(
    spec: &ModelSpec,
    draws: &[ParamVector],
    setting: &Setting,
    exec: Execution,
) -> Result<BurdenEstimate> {
    if draws.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let values = par::try_map(exec, draws, |p| annual_burden(spec, p, setting))?;
    let annual_percent = values.iter().sum::<f64>() / values.len() as f64;
    let interval = if values.len() >= 2 {
        hpd_interval(&values, 0.95)?
    } else {
        (values[0], values[0])
    };
    Ok(BurdenEstimate {
        annual_percent,
        interval,
    })
}

/// Share of annual cases falling in each age class.
pub fn age_distribution(profile: &[[f64; AGE_CLASSES]]) -> Result<[f64; AGE_CLASSES]> {
    let mut totals = [0.0; AGE_CLASSES];
    for week in profile {
        for (t, &v) in totals.iter_mut().zip(week) {
            if !(v >= 0.0) {
                return Err(Error::InvalidParams(format!("negative incidence {v}")));
            }
            *t += v;
        }
    }
    let sum: f64 = totals.iter().sum();
    if sum == 0.0 {
        return Err(Error::AllZero);
    }
    Ok(totals.map(|t| t / sum))
}

/// Prior centre of the reporting rate: the share of severe cases seeking
/// care times the share of those covered by surveillance.
pub fn reporting_prior_mean(consult_rate: f64, surveillance_coverage: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&consult_rate));
    debug_assert!((0.0..=1.0).contains(&surveillance_coverage));
    consult_rate * surveillance_coverage
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelId;

    #[test]
    fn reporting_prior() {
        assert!((reporting_prior_mean(0.429, 0.273) - 0.1171).abs() < 1e-4);
        assert_eq!(reporting_prior_mean(0.0, 0.5), 0.0);
        assert_eq!(reporting_prior_mean(1.0, 1.0), 1.0);
    }

    #[test]
    fn age_shares() {
        let uniform = vec![[2.0; 6]; 52];
        for p in age_distribution(&uniform).unwrap() {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
        }
        let skew = vec![[1.0, 0.0, 2.0, 3.0, 0.5, 7.0]; 3];
        let d = age_distribution(&skew).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((d[5] - 7.0 / 13.5).abs() < 1e-15);
        assert!(matches!(age_distribution(&[[0.0; 6]; 4]), Err(Error::AllZero)));
    }

    #[test]
    fn no_transmission_no_burden() {
        let theta = ParamVector::new(0.41, 7.4, 2.6, 0.1, [0.0; 6]);
        let spec = ModelSpec::new(ModelId::B);
        assert_eq!(annual_burden(&spec, &theta, &Setting::default()).unwrap(), 0.0);
    }

    #[test]
    fn reporting_rate_does_not_change_burden() {
        let spec = ModelSpec::new(ModelId::B);
        let setting = Setting::default();
        let lo = annual_burden(
            &spec,
            &ParamVector::new(0.41, 7.4, 2.6, 0.05, [20.0; 6]),
            &setting,
        )
        .unwrap();
        let hi = annual_burden(&spec, &ParamVector::new(0.41, 7.4, 2.6, 0.5, [20.0; 6]), &setting).unwrap();
        assert!(lo > 0.0);
        assert!((lo - hi).abs() < 1e-3 * lo, "{lo} {hi}");
    }
}
