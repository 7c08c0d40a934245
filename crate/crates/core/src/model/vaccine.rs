use super::spec::Rates;
use crate::error::{Error, Result};
use crate::metrics::efficacy::vaccine_efficacy_forward;

/// Seroconversion per dose for low-income settings.
pub const SEROCONVERSION_LOW_INCOME: f64 = 0.63;
/// Effective seroconversion matching 66.7% efficacy against severe RVGE.
pub const SEROCONVERSION_NIGER_TRIAL: f64 = 0.49;

/// Two-dose schedule; doses are given on aging out of class 1 (at 2 months)
/// and out of class 2 (at 4 months).
#[derive(Debug, Clone, PartialEq)]
pub struct VaccinePolicy {
    coverage: f64,
    seroconversion: f64,
    /// (eta_severe, eta_mild), used by model A only.
    model_a_efficacy: (f64, f64),
}

impl VaccinePolicy {
    /// Dose 1 is given at the class 1 -> 2 boundary, dose 2 at 2 -> 3
    /// (0-based source classes).
    pub const DOSE_SOURCE_CLASSES: [usize; 2] = [0, 1];

    /// Policy whose model A efficacies are the two-dose efficacies implied by
    /// `seroconversion` under the successive-infection models.
    pub fn new(coverage: f64, seroconversion: f64) -> Result<Self> {
        let r = Rates::default();
        let (s2, s3) = (r.relative_susceptibility[1], r.relative_susceptibility[2]);
        check_unit("seroconversion", seroconversion)?;
        let severe = vaccine_efficacy_forward(seroconversion, s2, s3, r.severe_fractions)?;
        let any = vaccine_efficacy_forward(seroconversion, s2, s3, r.any_rvge_fractions)?;
        Self::with_model_a_efficacy(coverage, seroconversion, (severe, any))
    }

    pub fn with_model_a_efficacy(
        coverage: f64,
        seroconversion: f64,
        model_a_efficacy: (f64, f64),
    ) -> Result<Self> {
        check_unit("coverage", coverage)?;
        check_unit("seroconversion", seroconversion)?;
        check_unit("severe efficacy", model_a_efficacy.0)?;
        check_unit("mild efficacy", model_a_efficacy.1)?;
        Ok(VaccinePolicy {
            coverage,
            seroconversion,
            model_a_efficacy,
        })
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn seroconversion(&self) -> f64 {
        self.seroconversion
    }

    pub fn model_a_efficacy(&self) -> (f64, f64) {
        self.model_a_efficacy
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} {x} outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn model_a_efficacy_follows_seroconversion() {
        let p = VaccinePolicy::new(0.7, SEROCONVERSION_LOW_INCOME).unwrap();
        assert_abs_diff_eq!(p.model_a_efficacy().0, 0.796, epsilon = 1e-3);
        assert_abs_diff_eq!(p.model_a_efficacy().1, 0.609, epsilon = 1e-3);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(VaccinePolicy::new(1.2, 0.5).is_err());
        assert!(VaccinePolicy::new(0.5, -0.1).is_err());
        assert!(VaccinePolicy::with_model_a_efficacy(0.5, 0.5, (1.1, 0.2)).is_err());
    }
}
