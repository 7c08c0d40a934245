//! Priors, posterior and Metropolis-Hastings sampling of the parameters.

mod mcmc;
mod params;
mod posterior;
mod prior;
mod summary;

pub use mcmc::{metropolis, run_mcmc, McmcConfig, PosteriorChain, RawChain};
pub use params::{ParamVector, PARAM_COUNT, PARAM_NAMES, PHI_MAX, PHI_MIN};
pub use posterior::{likelihood_of_solution, log_posterior, PosteriorEvaluator};
pub use prior::{log_prior, PriorSpec};
pub use summary::{hpd_interval, posterior_summary, quantile, ParamSummary, PosteriorSummary};
pub(crate) use summary::{hpd_sorted, quantile_sorted};
