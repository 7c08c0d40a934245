//! Dormand-Prince 5(4) integrator with embedded error control.

use crate::error::{Error, Result};

/// A first-order system `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        (self.1)(t, y, dy);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Steps leaving any of the first `guarded` components below this value
    /// are rejected and retried with a smaller step.
    pub lower_bound: Option<f64>,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-6,
            atol: 1e-8,
            lower_bound: None,
            max_steps: 1_000_000,
        }
    }
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Tolerances {
            rtol,
            atol,
            ..Default::default()
        }
    }
}

// Dormand-Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// error coefficients (5th minus 4th order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Counters for one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Reusable integrator state: stage buffers and the last step size.
#[derive(Debug, Clone)]
pub struct Integrator {
    tol: Tolerances,
    guarded: usize,
    h: Option<f64>,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    pub stats: Stats,
}

impl Integrator {
    pub fn new(dim: usize, tol: Tolerances) -> Self {
        Self::with_guard(dim, tol, dim)
    }

    /// Applies `tol.lower_bound` to the first `guarded` components only.
    pub fn with_guard(dim: usize, tol: Tolerances, guarded: usize) -> Self {
        Integrator {
            tol,
            guarded: guarded.min(dim),
            h: None,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            ytmp: vec![0.0; dim],
            ynew: vec![0.0; dim],
            stats: Stats::default(),
        }
    }

    /// Forgets the step size so the next call starts fresh.
    pub fn reset(&mut self) {
        self.h = None;
    }

    fn error_norm(&self, h: f64, y: &[f64]) -> f64 {
        let (k, ynew) = (&self.k, &self.ynew);
        let mut acc = 0.0;
        for i in 0..y.len() {
            let err =
                h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(ynew[i].abs());
            let r = err / sc;
            acc += r * r;
        }
        (acc / y.len().max(1) as f64).sqrt()
    }

    fn initial_step<S: OdeSystem>(&mut self, sys: &S, t: f64, y: &[f64], span: f64) -> Result<f64> {
        // Hairer-Norsett-Wanner starting step heuristic
        let sc = |v: f64| self.tol.atol + self.tol.rtol * v.abs();
        let f0 = &self.k[0];
        let d0 = rms(y.iter().map(|&v| v / sc(v)));
        let d1 = rms(y.iter().zip(f0).map(|(&v, &f)| f / sc(v)));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        }
        .min(span);
        for i in 0..y.len() {
            self.ytmp[i] = y[i] + h0 * f0[i];
        }
        let mut f1 = std::mem::take(&mut self.k[1]);
        sys.rhs(t + h0, &self.ytmp, &mut f1)?;
        self.stats.evaluations += 1;
        let d2 = rms(y
            .iter()
            .zip(f1.iter().zip(&self.k[0]))
            .map(|(&v, (&a, &b))| (a - b) / sc(v)))
            / h0;
        self.k[1] = f1;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        Ok((100.0 * h0).min(h1).min(span))
    }

    /// Advances `y` from `t0` to exactly `t1`.
    pub fn advance<S: OdeSystem>(&mut self, sys: &S, t0: f64, t1: f64, y: &mut [f64]) -> Result<()> {
        debug_assert_eq!(y.len(), sys.dim());
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let mut t = t0;
        // forcing and births may jump at segment ends, so the derivative is
        // always re-evaluated at the start of a segment
        sys.rhs(t, y, &mut self.k[0])?;
        self.stats.evaluations += 1;
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(sys, t, y, span)?,
        };
        let mut steps = 0usize;
        loop {
            let remaining = t1 - t;
            let finishing = h >= remaining - 1e-10 * t1.abs().max(1.0);
            let step = if finishing { remaining } else { h };
            if step < 1e-12 * t.abs().max(1.0) {
                return Err(Error::StiffnessFailure { t });
            }
            steps += 1;
            if steps > self.tol.max_steps {
                return Err(Error::StiffnessFailure { t });
            }
            self.stages(sys, t, step, y)?;
            let err = self.error_norm(step, y);
            let below = match self.tol.lower_bound {
                Some(lb) => self.ynew[..self.guarded].iter().any(|&v| v < lb),
                None => false,
            };
            if err <= 1.0 && !below && err.is_finite() {
                t = if finishing { t1 } else { t + step };
                y.copy_from_slice(&self.ynew);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a shortened landing step says little about the next one
                h = if finishing && step < h { h } else { step * factor };
                if finishing {
                    self.h = Some(h);
                    return Ok(());
                }
            } else {
                self.stats.rejected += 1;
                let factor = if below || !err.is_finite() {
                    0.25
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 1.0)
                };
                h = step * factor;
            }
        }
    }

    fn stages<S: OdeSystem>(&mut self, sys: &S, t: f64, h: f64, y: &[f64]) -> Result<()> {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ytmp = &mut self.ytmp;
        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, ytmp, k2)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, ytmp, k3)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, ytmp, k4)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, ytmp, k5)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, ytmp, k6)?;
        let ynew = &mut self.ynew;
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t + h, ynew, k7)?;
        self.stats.evaluations += 6;
        Ok(())
    }
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (mut acc, mut n) = (0.0, 0usize);
    for v in it {
        acc += v * v;
        n += 1;
    }
    (acc / n.max(1) as f64).sqrt()
}

/// Solution sampled at `t0, t0 + 1, ...` and at `t1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: Stats,
}

/// Integrates `sys` from `t0` to `t1`, sampling at unit spacing.
pub fn integrate<S: OdeSystem>(sys: &S, y0: &[f64], t0: f64, t1: f64, tol: Tolerances) -> Result<Solution> {
    integrate_sampled(sys, y0, t0, t1, 1.0, tol)
}

/// Integrates `sys` from `t0` to `t1`, sampling every `spacing` time units.
pub fn integrate_sampled<S: OdeSystem>(
    sys: &S,
    y0: &[f64],
    t0: f64,
    t1: f64,
    spacing: f64,
    tol: Tolerances,
) -> Result<Solution> {
    if !(t1 > t0) || !(spacing > 0.0) {
        return Err(Error::InvalidParams(format!(
            "integration span [{t0}, {t1}] with spacing {spacing}"
        )));
    }
    let mut integ = Integrator::new(y0.len(), tol);
    let mut y = y0.to_vec();
    let mut times = vec![t0];
    let mut states = vec![y.clone()];
    let mut k = 1usize;
    let mut t = t0;
    while t < t1 {
        let next = (t0 + k as f64 * spacing).min(t1);
        integ.advance(sys, t, next, &mut y)?;
        t = next;
        times.push(t);
        states.push(y.clone());
        k += 1;
    }
    Ok(Solution {
        times,
        states,
        stats: integ.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exponential_decay() {
        let sys = (1usize, |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0]);
        let sol = integrate(&sys, &[1.0], 0.0, 1.0, Tolerances::default()).unwrap();
        let x = sol.states.last().unwrap()[0];
        assert!((x - (-1.0f64).exp()).abs() < 1e-6);
        assert_eq!(sol.times, vec![0.0, 1.0]);
    }

    #[test]
    fn rotation_returns_to_start() {
        let sys = (2usize, |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[1];
            dy[1] = y[0];
        });
        let sol = integrate(&sys, &[1.0, 0.0], 0.0, 2.0 * PI, Tolerances::default()).unwrap();
        let end = sol.states.last().unwrap();
        // closed form: (cos t, sin t)
        assert!((end[0] - 1.0).abs() < 1e-5 && end[1].abs() < 1e-5);
        for (t, s) in sol.times.iter().zip(&sol.states) {
            assert!((s[0] - t.cos()).abs() < 1e-5 && (s[1] - t.sin()).abs() < 1e-5);
        }
    }

    #[test]
    fn tighter_tolerance_is_not_worse() {
        let sys = (2usize, |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -4.0 * y[0] + (3.0 * t).sin();
        });
        let reference = integrate(&sys, &[1.0, 0.0], 0.0, 10.0, Tolerances::new(1e-12, 1e-14)).unwrap();
        let r = reference.states.last().unwrap().clone();
        let mut prev = f64::INFINITY;
        for tol in [1e-4, 5e-5, 2.5e-5, 1.25e-5, 6.25e-6] {
            let s = integrate(&sys, &[1.0, 0.0], 0.0, 10.0, Tolerances::new(tol, tol * 1e-2)).unwrap();
            let end = s.states.last().unwrap();
            let err = ((end[0] - r[0]).powi(2) + (end[1] - r[1]).powi(2)).sqrt();
            assert!(err <= prev * 1.0001, "tol {tol}: {err} > {prev}");
            prev = err;
        }
    }

    #[test]
    fn underflow_reports_time() {
        // finite-time blow-up at t = 1
        let sys = (1usize, |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0]);
        let r = integrate(&sys, &[1.0], 0.0, 2.0, Tolerances::default());
        match r {
            Err(Error::StiffnessFailure { t }) => assert!(t > 0.9 && t < 1.001, "{t}"),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_span() {
        let sys = (1usize, |_t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = 0.0);
        assert!(integrate(&sys, &[1.0], 1.0, 1.0, Tolerances::default()).is_err());
    }
}
