//! Epidemiological summaries and vaccination analyses.

pub mod burden;
pub mod efficacy;
pub mod impact;
pub mod ngm;

pub use burden::{age_distribution, annual_burden, burden_estimate, reporting_prior_mean, BurdenEstimate};
pub use efficacy::{seroconversion_from_efficacy, vaccine_efficacy_forward};
pub use impact::{
    draw_impact, summarize_impacts, vaccination_impact, DrawImpact, Horizons, ImpactResult, IMPACT_LEVEL,
};
pub use ngm::{next_generation_matrix, spectral_radius, NextGenerationMatrix};
