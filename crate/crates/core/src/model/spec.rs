use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The five model structures.
///
/// * `A`: SIRS with separate severe and mild infections.
/// * `B`: SIRS with successive infections of decreasing susceptibility and
///   infectiousness.
/// * `C`: `B` with an exposed (incubation) stage.
/// * `D`: SIS with four successive infections, then lifelong immunity.
/// * `E`: `D` where each recovery may instead confer full immunity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    A,
    B,
    C,
    D,
    E,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [ModelId::A, ModelId::B, ModelId::C, ModelId::D, ModelId::E];

    pub fn letter(self) -> char {
        match self {
            ModelId::A => 'A',
            ModelId::B => 'B',
            ModelId::C => 'C',
            ModelId::D => 'D',
            ModelId::E => 'E',
        }
    }

    /// Number of infection orders tracked (2 for A: severe and mild).
    pub fn infection_orders(self) -> usize {
        match self {
            ModelId::A => 2,
            ModelId::B | ModelId::C => 3,
            ModelId::D | ModelId::E => 4,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(ModelId::A),
            "B" | "b" => Ok(ModelId::B),
            "C" | "c" => Ok(ModelId::C),
            "D" | "d" => Ok(ModelId::D),
            "E" | "e" => Ok(ModelId::E),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Fixed epidemiological constants (rates per week).
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    /// delta: waning of maternal immunity (mean 13 weeks).
    pub maternal_waning: f64,
    /// tau: waning of post-infection immunity (mean 1 year), models A-C.
    pub immunity_waning: f64,
    /// gamma_1 = gamma_s.
    pub recovery_first: f64,
    /// gamma_2 = gamma_m.
    pub recovery_later: f64,
    /// xi: exposed to infectious, model C.
    pub incubation_rate: f64,
    /// sigma_k: relative susceptibility of the k-th infection.
    pub relative_susceptibility: [f64; 4],
    /// iota_k: relative infectiousness of the k-th infection.
    pub relative_infectiousness: [f64; 4],
    /// Fraction of the k-th infection that is severe RVGE (models B-E).
    pub severe_fractions: [f64; 3],
    /// Model A: share of infections that are severe.
    pub severe_split: f64,
    /// Model A: share of infections that are mild.
    pub mild_split: f64,
    /// Model A: infectiousness of a mild relative to a severe infection.
    pub mild_infectiousness: f64,
    /// Fraction of the k-th infection developing any RVGE.
    pub any_rvge_fractions: [f64; 3],
    /// kappa_k: probability of returning to susceptibility, model E.
    pub return_probabilities: [f64; 3],
}

impl Default for Rates {
    fn default() -> Self {
        Rates {
            maternal_waning: 1.0 / 13.0,
            immunity_waning: 1.0 / 52.0,
            recovery_first: 1.0,
            recovery_later: 2.0,
            incubation_rate: 7.0,
            relative_susceptibility: [1.0, 0.62, 0.37, 0.37],
            relative_infectiousness: [1.0, 0.5, 0.2, 0.2],
            severe_fractions: [0.13, 0.03, 0.0],
            severe_split: 0.24,
            mild_split: 0.76,
            mild_infectiousness: 0.5,
            any_rvge_fractions: [0.47, 0.25, 0.32],
            return_probabilities: [0.62, 0.65, 0.85],
        }
    }
}

/// One model variant together with its fixed rate constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    id: ModelId,
    rates: Rates,
}

impl ModelSpec {
    pub fn new(id: ModelId) -> Self {
        ModelSpec {
            id,
            rates: Rates::default(),
        }
    }

    pub fn id(&self) -> ModelId {
        self.id
    }

    pub fn rates(&self) -> &Rates {
        &self.rates
    }

    /// Recovery rate of the k-th infection (0-based order).
    #[inline]
    pub fn recovery(&self, order: usize) -> f64 {
        if order == 0 {
            self.rates.recovery_first
        } else {
            self.rates.recovery_later
        }
    }
}
