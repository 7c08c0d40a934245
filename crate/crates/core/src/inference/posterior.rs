use super::params::ParamVector;
use super::prior::{log_prior, PriorSpec};
use crate::dynamics::{find_periodic_solution, find_periodic_solution_from, PeriodicSolution, Setting};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, StateVector};
use crate::observation::{log_likelihood, tile_profile, CaseSeries};

/// Log-likelihood of `series` given a periodic solution and dispersion.
pub fn likelihood_of_solution(
    series: &CaseSeries,
    solution: &PeriodicSolution,
    r: f64,
    calendar_offset: usize,
) -> Result<f64> {
    let xi = tile_profile(&solution.expected_profile, series.weeks(), calendar_offset)?;
    log_likelihood(series, &xi, r)
}

/// Unnormalised log-posterior. Parameters outside the support give `-inf`
/// without integrating; so does a failed periodic-solution search.
pub fn log_posterior(
    theta: &ParamVector,
    series: &CaseSeries,
    spec: &ModelSpec,
    setting: &Setting,
    priors: &PriorSpec,
    calendar_offset: usize,
) -> f64 {
    let lp = log_prior(theta, priors);
    if !lp.is_finite() {
        return f64::NEG_INFINITY;
    }
    if series.is_empty() {
        return lp;
    }
    match find_periodic_solution(spec, theta, setting)
        .and_then(|sol| likelihood_of_solution(series, &sol, theta.r, calendar_offset))
    {
        Ok(ll) => ll + lp,
        Err(e) => {
            log::debug!("model {} at {theta}: {e}", spec.id());
            f64::NEG_INFINITY
        }
    }
}

/// Log-posterior evaluations that reuse the last cycle-start state as the
/// initial condition of the next periodic-solution search.
#[derive(Debug, Clone)]
pub struct PosteriorEvaluator<'a> {
    spec: &'a ModelSpec,
    series: &'a CaseSeries,
    setting: &'a Setting,
    priors: &'a PriorSpec,
    calendar_offset: usize,
    warm: Option<StateVector>,
    pub evaluations: usize,
    pub failures: usize,
}

impl<'a> PosteriorEvaluator<'a> {
    pub fn new(
        spec: &'a ModelSpec,
        series: &'a CaseSeries,
        setting: &'a Setting,
        priors: &'a PriorSpec,
        calendar_offset: usize,
    ) -> Self {
        PosteriorEvaluator {
            spec,
            series,
            setting,
            priors,
            calendar_offset,
            warm: None,
            evaluations: 0,
            failures: 0,
        }
    }

    pub fn evaluate(&mut self, theta: &ParamVector) -> f64 {
        let lp = log_prior(theta, self.priors);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        if self.series.is_empty() {
            return lp;
        }
        self.evaluations += 1;
        let solved = match &self.warm {
            Some(start) => find_periodic_solution_from(self.spec, theta, self.setting, start),
            None => find_periodic_solution(self.spec, theta, self.setting),
        };
        let result = solved.and_then(|sol| {
            let ll = likelihood_of_solution(self.series, &sol, theta.r, self.calendar_offset)?;
            Ok((ll, sol.cycle_start_state))
        });
        match result {
            Ok((ll, start)) => {
                self.warm = Some(start);
                ll + lp
            }
            Err(e) => {
                self.failures += 1;
                if !matches!(e, Error::NonConvergence { .. }) {
                    // a failed warm start should not poison later searches
                    self.warm = None;
                }
                log::debug!("model {} at {theta}: {e}", self.spec.id());
                f64::NEG_INFINITY
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelId;

    #[test]
    fn outside_support_short_circuits() {
        let spec = ModelSpec::new(ModelId::B);
        let series = CaseSeries::new(vec![[1; 6]; 10]);
        let mut bad = ParamVector::default();
        bad.rho = 1.5;
        let lp = log_posterior(
            &bad,
            &series,
            &spec,
            &Setting::default(),
            &PriorSpec::default(),
            0,
        );
        assert_eq!(lp, f64::NEG_INFINITY);
    }

    #[test]
    fn decomposes_into_likelihood_and_prior() {
        let spec = ModelSpec::new(ModelId::B);
        let setting = Setting::default();
        let priors = PriorSpec::default();
        let theta = ParamVector::new(0.41, 7.4, 2.6, 0.096, [20.0; 6]);
        let series = CaseSeries::new(vec![[2, 3, 1, 4, 2, 1]; 60]);
        let lp = log_posterior(&theta, &series, &spec, &setting, &priors, 3);
        let sol = find_periodic_solution(&spec, &theta, &setting).unwrap();
        let ll = likelihood_of_solution(&series, &sol, theta.r, 3).unwrap();
        assert!((lp - (ll + log_prior(&theta, &priors))).abs() < 1e-9);

        // shifting every count moves the likelihood, not the prior
        let shifted = CaseSeries::new(vec![[3, 4, 2, 5, 3, 2]; 60]);
        let lp2 = log_posterior(&theta, &shifted, &spec, &setting, &priors, 3);
        assert!(lp2 != lp);
        assert_eq!(log_prior(&theta, &priors), log_prior(&theta, &priors));
    }
}
