//! Age-structured rotavirus transmission models A-E.

mod layout;
mod spec;
mod structure;
mod system;
mod vaccine;

pub use layout::{Compartment, Layout, StateVector};
pub use spec::{ModelId, ModelSpec, Rates};
pub use structure::{
    AgeStructure, BirthSchedule, SeasonalForcing, AGE_CLASSES, MEAN_BIRTH_RATE, MONTHLY_BIRTH_AMPLITUDES,
    WEEKS_PER_YEAR,
};
pub use system::{apply_vaccination_wiring, derivatives, force_of_infection, ModelSystem};
pub use vaccine::{VaccinePolicy, SEROCONVERSION_LOW_INCOME, SEROCONVERSION_NIGER_TRIAL};

/// Transmission rate of `age_class` (0-based) at week `t`.
pub fn transmission_rate(forcing: &SeasonalForcing, age_class: usize, t: f64) -> f64 {
    forcing.rate(age_class, t)
}

/// Per-capita weekly birth rate at week `t`.
pub fn birth_rate(schedule: &BirthSchedule, t: f64) -> f64 {
    schedule.rate(t)
}
