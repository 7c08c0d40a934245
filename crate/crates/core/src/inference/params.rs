use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{SeasonalForcing, AGE_CLASSES};

/// Number of free parameters.
pub const PARAM_COUNT: usize = 4 + AGE_CLASSES;

/// Column names in storage order.
pub const PARAM_NAMES: [&str; PARAM_COUNT] = [
    "b", "phi", "r", "rho", "beta1", "beta2", "beta3", "beta4", "beta5", "beta6",
];

pub const PHI_MIN: f64 = 2.0;
pub const PHI_MAX: f64 = 2.0 * PI + 2.0;

/// The estimated parameters: seasonal amplitude `b`, phase `phi`, negative
/// binomial dispersion `r`, reporting rate `rho` and the baseline
/// transmission rates `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector {
    pub b: f64,
    pub phi: f64,
    pub r: f64,
    pub rho: f64,
    pub beta: [f64; AGE_CLASSES],
}

impl Default for ParamVector {
    /// Prior means, the default chain start.
    fn default() -> Self {
        ParamVector {
            b: 0.5,
            phi: PI + 2.0,
            r: 1.0,
            rho: 0.117,
            beta: [20.0; AGE_CLASSES],
        }
    }
}

impl ParamVector {
    pub fn new(b: f64, phi: f64, r: f64, rho: f64, beta: [f64; AGE_CLASSES]) -> Self {
        ParamVector { b, phi, r, rho, beta }
    }

    pub fn to_array(&self) -> [f64; PARAM_COUNT] {
        let mut a = [0.0; PARAM_COUNT];
        a[0] = self.b;
        a[1] = self.phi;
        a[2] = self.r;
        a[3] = self.rho;
        a[4..].copy_from_slice(&self.beta);
        a
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != PARAM_COUNT {
            return Err(Error::ShapeMismatch {
                expected: format!("{PARAM_COUNT} parameters"),
                found: v.len().to_string(),
            });
        }
        let mut beta = [0.0; AGE_CLASSES];
        beta.copy_from_slice(&v[4..]);
        Ok(ParamVector::new(v[0], v[1], v[2], v[3], beta))
    }

    pub fn in_support(&self) -> bool {
        (0.0..=1.0).contains(&self.b)
            && (PHI_MIN..=PHI_MAX).contains(&self.phi)
            && self.r > 0.0
            && self.r.is_finite()
            && self.rho > 0.0
            && self.rho <= 1.0
            && self.beta.iter().all(|&b| b > 0.0 && b.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_support() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "{self} outside the parameter support"
            )))
        }
    }

    pub fn forcing(&self) -> Result<SeasonalForcing> {
        SeasonalForcing::new(self.beta, self.b, self.phi)
    }

    /// Maps to unconstrained coordinates: logit for `b` and `rho`, log for
    /// `r` and `beta`, scaled logit for `phi`.
    pub fn to_unconstrained(&self) -> [f64; PARAM_COUNT] {
        let mut u = [0.0; PARAM_COUNT];
        u[0] = logit(self.b);
        u[1] = logit((self.phi - PHI_MIN) / (PHI_MAX - PHI_MIN));
        u[2] = self.r.ln();
        u[3] = logit(self.rho);
        for (ui, b) in u[4..].iter_mut().zip(&self.beta) {
            *ui = b.ln();
        }
        u
    }

    /// Inverse of [`ParamVector::to_unconstrained`], with the log Jacobian
    /// `log |d theta / d u|`.
    pub fn from_unconstrained(u: &[f64]) -> (ParamVector, f64) {
        let (b, jb) = sigmoid_with_log_slope(u[0]);
        let (p, jp) = sigmoid_with_log_slope(u[1]);
        let (rho, jr) = sigmoid_with_log_slope(u[3]);
        let r = u[2].exp();
        let mut beta = [0.0; AGE_CLASSES];
        let mut jac = jb + jp + (PHI_MAX - PHI_MIN).ln() + jr + u[2];
        for (b, &ui) in beta.iter_mut().zip(&u[4..]) {
            *b = ui.exp();
            jac += ui;
        }
        let phi = PHI_MIN + (PHI_MAX - PHI_MIN) * p;
        (ParamVector::new(b, phi, r, rho, beta), jac)
    }
}

impl fmt::Display for ParamVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(b={:.4}, phi={:.4}, r={:.4}, rho={:.4}, beta=[",
            self.b, self.phi, self.r, self.rho
        )?;
        for (i, b) in self.beta.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{b:.3}")?;
        }
        write!(f, "])")
    }
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

/// `sigmoid(u)` and `log(sigmoid'(u))`.
fn sigmoid_with_log_slope(u: f64) -> (f64, f64) {
    let s = if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    };
    // log s(1-s) = -|u| - 2 ln(1 + e^-|u|)
    let log_slope = -u.abs() - 2.0 * (-u.abs()).exp().ln_1p();
    (s, log_slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_unconstrained() {
        let p = ParamVector::new(0.41, 7.4, 2.6, 0.096, [20.0, 18.0, 22.0, 19.0, 21.0, 17.5]);
        let u = p.to_unconstrained();
        let (q, _) = ParamVector::from_unconstrained(&u);
        for (a, b) in p.to_array().iter().zip(q.to_array()) {
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let u = ParamVector::new(0.3, 5.0, 1.5, 0.2, [15.0; 6]).to_unconstrained();
        let (_, jac) = ParamVector::from_unconstrained(&u);
        let mut expect = 0.0;
        for i in 0..PARAM_COUNT {
            let h = 1e-6;
            let mut up = u;
            let mut dn = u;
            up[i] += h;
            dn[i] -= h;
            let a = ParamVector::from_unconstrained(&up).0.to_array()[i];
            let b = ParamVector::from_unconstrained(&dn).0.to_array()[i];
            expect += ((a - b) / (2.0 * h)).ln();
        }
        assert!((jac - expect).abs() < 1e-6, "{jac} vs {expect}");
    }

    #[test]
    fn support_checks() {
        assert!(ParamVector::default().in_support());
        let mut p = ParamVector::default();
        p.b = 1.5;
        assert!(!p.in_support());
        let mut p = ParamVector::default();
        p.rho = 0.0;
        assert!(!p.in_support());
        let mut p = ParamVector::default();
        p.phi = 1.9;
        assert!(!p.in_support());
        assert!(ParamVector::from_slice(&[1.0; 3]).is_err());
    }
}
