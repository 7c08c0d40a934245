use std::f64::consts::PI;

use statrs::distribution::{Continuous, ContinuousCDF, Gamma, Normal};

use super::params::{ParamVector, PHI_MAX, PHI_MIN};

/// Independent priors on the ten parameters.
///
/// `beta_i ~ N(20, 5)` truncated to positive values, `b ~ U(0, 1)`,
/// `phi ~ U(2, 2 pi + 2)`, `r ~ Gamma(shape 0.001, rate 0.001)` and
/// `rho ~ N(0.117, 0.06)` truncated to `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub beta_mean: f64,
    pub beta_sd: f64,
    pub r_shape: f64,
    pub r_rate: f64,
    pub rho_mean: f64,
    pub rho_sd: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            beta_mean: 20.0,
            beta_sd: 5.0,
            r_shape: 0.001,
            r_rate: 0.001,
            rho_mean: 0.117,
            rho_sd: 0.06,
        }
    }
}

impl PriorSpec {
    pub fn with_rho_mean(mut self, rho_mean: f64) -> Self {
        self.rho_mean = rho_mean;
        self
    }

    pub fn log_beta(&self, beta: f64) -> f64 {
        if !(beta > 0.0) {
            return f64::NEG_INFINITY;
        }
        let n = normal(self.beta_mean, self.beta_sd);
        n.ln_pdf(beta) - n.sf(0.0).ln()
    }

    pub fn log_b(&self, b: f64) -> f64 {
        if (0.0..=1.0).contains(&b) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn log_phi(&self, phi: f64) -> f64 {
        if (PHI_MIN..=PHI_MAX).contains(&phi) {
            -(2.0 * PI).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn log_r(&self, r: f64) -> f64 {
        if !(r > 0.0) || !r.is_finite() {
            return f64::NEG_INFINITY;
        }
        Gamma::new(self.r_shape, self.r_rate)
            .map(|g| g.ln_pdf(r))
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn log_rho(&self, rho: f64) -> f64 {
        if !(rho > 0.0 && rho <= 1.0) {
            return f64::NEG_INFINITY;
        }
        let n = normal(self.rho_mean, self.rho_sd);
        n.ln_pdf(rho) - (n.cdf(1.0) - n.cdf(0.0)).ln()
    }
}

fn normal(mean: f64, sd: f64) -> Normal {
    Normal::new(mean, sd).expect("prior standard deviations are positive")
}

/// Sum of the component log-densities; `-inf` outside the support.
pub fn log_prior(theta: &ParamVector, priors: &PriorSpec) -> f64 {
    let mut lp =
        priors.log_b(theta.b) + priors.log_phi(theta.phi) + priors.log_r(theta.r) + priors.log_rho(theta.rho);
    for &b in &theta.beta {
        lp += priors.log_beta(b);
    }
    if lp.is_nan() {
        f64::NEG_INFINITY
    } else {
        lp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outside_support_is_impossible() {
        let p = PriorSpec::default();
        let mut t = ParamVector::default();
        t.b = 1.5;
        assert_eq!(log_prior(&t, &p), f64::NEG_INFINITY);
        let mut t = ParamVector::default();
        t.beta[3] = -1.0;
        assert_eq!(log_prior(&t, &p), f64::NEG_INFINITY);
        assert!(log_prior(&ParamVector::default(), &p).is_finite());
    }

    #[test]
    fn rho_mode() {
        let p = PriorSpec::default();
        assert!(p.log_rho(0.117) > p.log_rho(0.3));
    }

    #[test]
    fn components_add_up() {
        let p = PriorSpec::default();
        let t = ParamVector::new(0.41, 7.4, 2.6, 0.096, [20.0, 15.0, 25.0, 18.0, 22.0, 19.0]);
        // hand-written densities
        let norm = |x: f64, m: f64, s: f64| -0.5 * ((x - m) / s).powi(2) - s.ln() - 0.5 * (2.0 * PI).ln();
        let phi_std = |z: f64| 0.5 * (1.0 + statrs::function::erf::erf(z / 2f64.sqrt()));
        let mut expect = 0.0 - (2.0 * PI).ln();
        let (a, rate) = (0.001f64, 0.001f64);
        expect += a * rate.ln() - statrs::function::gamma::ln_gamma(a) + (a - 1.0) * 2.6f64.ln() - rate * 2.6;
        expect += norm(0.096, 0.117, 0.06) - (phi_std((1.0 - 0.117) / 0.06) - phi_std(-0.117 / 0.06)).ln();
        for b in t.beta {
            expect += norm(b, 20.0, 5.0) - phi_std(4.0).ln();
        }
        assert!((log_prior(&t, &p) - expect).abs() < 1e-9);
    }

    #[test]
    fn truncated_normals_integrate_to_one() {
        let p = PriorSpec::default();
        let h = 1e-4;
        let rho: f64 = (0..10_000)
            .map(|i| p.log_rho((i as f64 + 0.5) * h).exp() * h)
            .sum();
        assert!((rho - 1.0).abs() < 1e-6);
        let h = 1e-3;
        let beta: f64 = (0..60_000)
            .map(|i| p.log_beta((i as f64 + 0.5) * h).exp() * h)
            .sum();
        assert!((beta - 1.0).abs() < 1e-6);
    }
}
