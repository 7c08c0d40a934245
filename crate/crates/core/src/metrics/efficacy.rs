//! Two-dose vaccine efficacy implied by per-dose seroconversion.
//!
//! A vaccinee seroconverts to 0, 1 or 2 doses with probabilities
//! `(1-s)^2`, `2s(1-s)`, `s^2`. After `k` effective doses their risk of the
//! disease endpoint relative to a naive child is the relative susceptibility
//! of the `(k+1)`-th infection times the ratio of disease fractions
//! `d_{k+1} / d_1`. Efficacy is one minus the expected relative risk.

use crate::error::{Error, Result};

/// Expected relative risk `g(s)` written as `A s^2 + B s + 1`.
fn relative_risk_coefficients(sigma2: f64, sigma3: f64, d: [f64; 3]) -> Result<(f64, f64)> {
    if d[0] == 0.0 {
        return Err(Error::ZeroDenominator(
            "first-infection disease fraction is zero".into(),
        ));
    }
    let once = sigma2 * d[1] / d[0];
    let twice = sigma3 * d[2] / d[0];
    Ok((1.0 - 2.0 * once + twice, 2.0 * once - 2.0))
}

/// `VE = 1 - [(1-s)^2 + 2 s (1-s) sigma2 d2/d1 + s^2 sigma3 d3/d1]`.
pub fn vaccine_efficacy_forward(
    seroconversion: f64,
    sigma2: f64,
    sigma3: f64,
    disease_fractions: [f64; 3],
) -> Result<f64> {
    let [d1, d2, d3] = disease_fractions;
    if d1 == 0.0 {
        return Err(Error::ZeroDenominator(
            "first-infection disease fraction is zero".into(),
        ));
    }
    let s = seroconversion;
    let risk = (1.0 - s).powi(2) + 2.0 * s * (1.0 - s) * sigma2 * (d2 / d1) + s * s * sigma3 * (d3 / d1);
    Ok(1.0 - risk)
}

/// Seroconversion in `[0, 1]` that yields `target` efficacy.
///
/// Takes the smallest root of the quadratic in `[0, 1]` and polishes it with
/// Newton steps on the forward formula.
pub fn seroconversion_from_efficacy(
    target: f64,
    sigma2: f64,
    sigma3: f64,
    disease_fractions: [f64; 3],
) -> Result<f64> {
    let (a, b) = relative_risk_coefficients(sigma2, sigma3, disease_fractions)?;
    let max = vaccine_efficacy_forward(1.0, sigma2, sigma3, disease_fractions)?;
    if !(target >= 0.0) {
        return Err(Error::InvalidParams(format!("efficacy target {target}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    // A s^2 + B s + VE = 0
    let c = target;
    let mut root = if a.abs() < 1e-14 {
        -c / b
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Err(Error::Unattainable { target, max });
        }
        // stable form of the smaller root
        let q = -0.5 * (b - disc.sqrt());
        let r1 = q / a;
        let r2 = c / q;
        [r1, r2]
            .into_iter()
            .filter(|r| (-1e-12..=1.0 + 1e-12).contains(r))
            .fold(f64::NAN, f64::min)
    };
    if !root.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&root) {
        return Err(Error::Unattainable { target, max });
    }
    root = root.clamp(0.0, 1.0);
    for _ in 0..4 {
        let f = vaccine_efficacy_forward(root, sigma2, sigma3, disease_fractions)? - target;
        let slope = -(2.0 * a * root + b);
        if f.abs() < 1e-15 || slope == 0.0 {
            break;
        }
        root = (root - f / slope).clamp(0.0, 1.0);
    }
    let achieved = vaccine_efficacy_forward(root, sigma2, sigma3, disease_fractions)?;
    if (achieved - target).abs() >= 1e-10 {
        return Err(Error::Unattainable { target, max });
    }
    Ok(root)
}
