//! Demographic and contact scaffolding shared by all models.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Number of age classes: 0-1 mo, 2-3 mo, 4-5 mo, 6-11 mo, 1 yr, 2-5 yr.
pub const AGE_CLASSES: usize = 6;

/// Weeks in one seasonal cycle.
pub const WEEKS_PER_YEAR: usize = 52;

const AGING_RATES: [f64; AGE_CLASSES] = [
    1.0 / 8.0,
    1.0 / 8.0,
    1.0 / 8.0,
    1.0 / 24.0,
    1.0 / 48.0,
    1.0 / 144.0,
];

const CONTACT: [[f64; AGE_CLASSES]; AGE_CLASSES] = [
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [3.0, 3.0, 3.0, 1.0, 1.0, 1.0],
    [6.0, 6.0, 6.0, 2.0, 1.0, 1.0],
    [18.0, 18.0, 18.0, 6.0, 3.0, 1.0],
];

/// Age classes, their weekly aging rates and the fixed contact matrix.
///
/// `contact()[i][j]` weights the prevalence in class `j` in the force of
/// infection on class `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeStructure {
    aging_rates: [f64; AGE_CLASSES],
    contact: [[f64; AGE_CLASSES]; AGE_CLASSES],
}

impl Default for AgeStructure {
    fn default() -> Self {
        Self::standard()
    }
}

impl AgeStructure {
    pub fn standard() -> Self {
        AgeStructure {
            aging_rates: AGING_RATES,
            contact: CONTACT,
        }
    }

    pub fn class_count(&self) -> usize {
        AGE_CLASSES
    }

    pub fn aging_rates(&self) -> &[f64; AGE_CLASSES] {
        &self.aging_rates
    }

    pub fn contact(&self) -> &[[f64; AGE_CLASSES]; AGE_CLASSES] {
        &self.contact
    }

    /// Stationary age distribution under constant births: occupancy of each
    /// class is proportional to its residence time `1/alpha_i`.
    pub fn population_fractions(&self) -> [f64; AGE_CLASSES] {
        let mut f = self.aging_rates.map(|a| 1.0 / a);
        let total: f64 = f.iter().sum();
        f.iter_mut().for_each(|x| *x /= total);
        f
    }

    /// Weekly births per capita that hold the stationary distribution fixed.
    pub fn replacement_birth_rate(&self) -> f64 {
        let f = self.population_fractions();
        self.aging_rates[AGE_CLASSES - 1] * f[AGE_CLASSES - 1]
    }
}

/// Seasonally forced transmission `beta0_i (1 + b cos((2 pi t - 52 phi) / 52))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalForcing {
    baseline: [f64; AGE_CLASSES],
    amplitude: f64,
    phase: f64,
}

impl SeasonalForcing {
    /// Baseline rates may be zero (no transmission) but not negative.
    pub fn new(baseline: [f64; AGE_CLASSES], amplitude: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&amplitude) {
            return Err(Error::InvalidParams(format!(
                "seasonal amplitude {amplitude} outside [0, 1]"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidParams(format!("seasonal phase {phase}")));
        }
        if baseline.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::InvalidParams(format!(
                "baseline transmission rates {baseline:?} must be nonnegative"
            )));
        }
        Ok(SeasonalForcing {
            baseline,
            amplitude,
            phase,
        })
    }

    pub fn baseline(&self) -> &[f64; AGE_CLASSES] {
        &self.baseline
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Multiplier `1 + b cos(...)` common to all age classes.
    #[inline]
    pub fn seasonal_factor(&self, t: f64) -> f64 {
        let tw = WEEKS_PER_YEAR as f64;
        1.0 + self.amplitude * ((2.0 * PI * t - tw * self.phase) / tw).cos()
    }

    /// Transmission rate of age class `age_class` (0-based) at week `t`.
    #[inline]
    pub fn rate(&self, age_class: usize, t: f64) -> f64 {
        self.baseline[age_class] * self.seasonal_factor(t)
    }

    /// Time within the 52-week cycle, in weeks, at which transmission peaks.
    ///
    /// The `cos` argument is zero at `t = 26 phi / pi`; with `t = 0` the start
    /// of January this gives a calendar peak in early March for `phi = 7.4`.
    pub fn peak_time(&self) -> f64 {
        let t = WEEKS_PER_YEAR as f64 * self.phase / (2.0 * PI);
        t.rem_euclid(WEEKS_PER_YEAR as f64)
    }
}

/// Monthly birth-rate amplitudes (fraction above or below the mean), Jan..Dec.
pub const MONTHLY_BIRTH_AMPLITUDES: [f64; 12] = [
    -0.17, 0.01, 0.03, 0.25, 0.12, 0.03, -0.01, 0.09, 0.01, 0.13, -0.31, -0.17,
];

/// Mean weekly birth rate per capita of the under-5 population.
pub const MEAN_BIRTH_RATE: f64 = 1.0 / (5.0 * 52.0);

/// Piecewise-constant seasonal birth rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthSchedule {
    mean_rate: f64,
    monthly_amplitudes: [f64; 12],
}

impl Default for BirthSchedule {
    fn default() -> Self {
        Self::standard()
    }
}

impl BirthSchedule {
    pub fn standard() -> Self {
        BirthSchedule {
            mean_rate: MEAN_BIRTH_RATE,
            monthly_amplitudes: MONTHLY_BIRTH_AMPLITUDES,
        }
    }

    /// Births at a fixed rate all year round.
    pub fn constant(mean_rate: f64) -> Self {
        BirthSchedule {
            mean_rate,
            monthly_amplitudes: [0.0; 12],
        }
    }

    pub fn new(mean_rate: f64, monthly_amplitudes: [f64; 12]) -> Result<Self> {
        if !(mean_rate >= 0.0) || monthly_amplitudes.iter().any(|a| !(1.0 + a > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "birth schedule {mean_rate} / {monthly_amplitudes:?}"
            )));
        }
        Ok(BirthSchedule {
            mean_rate,
            monthly_amplitudes,
        })
    }

    pub fn mean_rate(&self) -> f64 {
        self.mean_rate
    }

    pub fn monthly_amplitudes(&self) -> &[f64; 12] {
        &self.monthly_amplitudes
    }

    /// Calendar month (1..=12) of the week containing time `t`.
    ///
    /// Week `w = floor(t) + 1` falls in month `floor(((w - 1) mod 52) * 12 / 52) + 1`.
    pub fn month(t: f64) -> usize {
        let week0 = t.floor().rem_euclid(WEEKS_PER_YEAR as f64);
        (week0 * 12.0 / WEEKS_PER_YEAR as f64).floor() as usize + 1
    }

    #[inline]
    pub fn rate(&self, t: f64) -> f64 {
        self.mean_rate * (1.0 + self.monthly_amplitudes[Self::month(t) - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_amplitude_removes_seasonality() {
        let f = SeasonalForcing::new([20.0; 6], 0.0, 3.3).unwrap();
        for t in [0.0, 7.25, 30.0, 51.9] {
            assert_eq!(f.rate(2, t), 20.0);
        }
    }

    #[test]
    fn cosine_maximum() {
        let phi = 7.4;
        let f = SeasonalForcing::new([20.0; 6], 0.5, phi).unwrap();
        let t = 26.0 * phi / PI;
        assert_relative_eq!(f.rate(0, t), 30.0, epsilon = 1e-12);
    }

    #[test]
    fn peak_in_early_march() {
        let f = SeasonalForcing::new([20.0; 6], 0.41, 7.4).unwrap();
        assert_relative_eq!(f.peak_time(), 9.3, epsilon = 0.1);
    }

    #[test]
    fn invalid_forcing_rejected() {
        assert!(SeasonalForcing::new([20.0; 6], 1.2, 3.0).is_err());
        assert!(SeasonalForcing::new([-1.0; 6], 0.2, 3.0).is_err());
    }

    #[test]
    fn birth_months() {
        let s = BirthSchedule::standard();
        // weeks 1..=5 are January, weeks 45..=48 November, 49..=52 December
        for w in 1..=5 {
            assert_eq!(BirthSchedule::month(w as f64 - 0.5), 1);
        }
        assert_eq!(BirthSchedule::month(5.5), 2);
        for w in 45..=48 {
            assert_eq!(BirthSchedule::month(w as f64 - 0.5), 11);
        }
        for w in 49..=52 {
            assert_eq!(BirthSchedule::month(w as f64 - 0.5), 12);
        }
        assert_relative_eq!(s.rate(0.5), 0.83 / 260.0, epsilon = 1e-15);
        assert_relative_eq!(s.rate(46.0), 0.69 / 260.0, epsilon = 1e-15);
        assert_eq!(BirthSchedule::constant(1.0 / 260.0).rate(17.0), 1.0 / 260.0);
    }

    #[test]
    fn every_month_has_positive_births() {
        let s = BirthSchedule::standard();
        assert!(s.monthly_amplitudes().iter().all(|a| 1.0 + a > 0.0));
        assert!(BirthSchedule::new(1.0, [-1.0; 12]).is_err());
    }

    #[test]
    fn contact_reciprocity_with_stationary_fractions() {
        // The printed matrix balances contacts when weighted by the size of
        // the class being contacted: f_j C_ij = f_i C_ji.
        let ages = AgeStructure::standard();
        let f = ages.population_fractions();
        let c = ages.contact();
        for i in 0..6 {
            for j in 0..6 {
                assert_relative_eq!(f[j] * c[i][j], f[i] * c[j][i], max_relative = 1e-12);
            }
        }
        assert_relative_eq!(f.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }
}
