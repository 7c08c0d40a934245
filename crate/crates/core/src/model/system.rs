//! Right-hand sides of the five transmission models.

use super::layout::{class_totals, Compartment, Layout, StateVector};
use super::spec::{ModelId, ModelSpec};
use super::structure::{AgeStructure, BirthSchedule, SeasonalForcing, AGE_CLASSES};
use super::vaccine::VaccinePolicy;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Block offsets (`block * 6`) of each role, `NONE` when absent.
#[derive(Debug, Clone)]
struct Offsets {
    m: usize,
    s: [usize; 4],
    e: [usize; 3],
    i: [usize; 4],
    r: [usize; 3],
    severe: usize,
    mild: usize,
    v: usize,
    immune: usize,
}

impl Offsets {
    fn new(layout: &Layout) -> Self {
        let at = |c| layout.block(c).map_or(NONE, |b| b * AGE_CLASSES);
        Offsets {
            m: at(Compartment::Maternal),
            s: [1, 2, 3, 4].map(|k| at(Compartment::Susceptible(k))),
            e: [1, 2, 3].map(|k| at(Compartment::Exposed(k))),
            i: [1, 2, 3, 4].map(|k| at(Compartment::Infectious(k))),
            r: [1, 2, 3].map(|k| at(Compartment::Recovered(k))),
            severe: at(Compartment::SevereInfectious),
            mild: at(Compartment::MildInfectious),
            v: at(Compartment::Vaccinated),
            immune: at(Compartment::Immune),
        }
    }
}

/// A model's derivative function: structure, forcing, births and optional
/// vaccination wiring bound together.
///
/// Besides the compartment derivatives, [`ModelSystem::eval_into`] can emit
/// incidence rates per infection order and age (new infections entering the
/// `I` or `E` classes), which the dynamics engine integrates alongside the
/// state. For model A the two incidence channels are severe and mild.
#[derive(Debug, Clone)]
pub struct ModelSystem {
    spec: ModelSpec,
    ages: AgeStructure,
    forcing: SeasonalForcing,
    births: BirthSchedule,
    policy: Option<VaccinePolicy>,
    layout: Layout,
    off: Offsets,
}

impl ModelSystem {
    pub fn new(
        spec: &ModelSpec,
        ages: &AgeStructure,
        forcing: &SeasonalForcing,
        births: &BirthSchedule,
    ) -> Self {
        let layout = Layout::new(spec.id());
        let off = Offsets::new(&layout);
        ModelSystem {
            spec: spec.clone(),
            ages: ages.clone(),
            forcing: forcing.clone(),
            births: births.clone(),
            policy: None,
            layout,
            off,
        }
    }

    /// The same system with vaccination transitions wired in.
    ///
    /// Models B-E: at dose 1 a fraction `s c` of the `M` and `S1` flow aging
    /// out of class 1 lands in the post-first-infection state of class 2
    /// (`R1` for B and C, `S2` for D, `S2`/immune split by `kappa_1` for E);
    /// at dose 2 a fraction `s c` of the flow aging out of class 2 from the
    /// post-first-infection states moves on to the post-second-infection
    /// state of class 3. Model A: a fraction `c` of `M` and `S` aging out of
    /// class 1 enters `V`, which wanes to `S` at `tau` and is infected at the
    /// reduced rates `lambda_s (1 - eta_s)` and `lambda_m (1 - eta_m)`.
    pub fn with_vaccination(&self, policy: &VaccinePolicy) -> Self {
        let layout = Layout::with_vaccination(self.spec.id());
        let off = Offsets::new(&layout);
        ModelSystem {
            policy: Some(policy.clone()),
            layout,
            off,
            ..self.clone()
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn forcing(&self) -> &SeasonalForcing {
        &self.forcing
    }

    pub fn births(&self) -> &BirthSchedule {
        &self.births
    }

    pub fn ages(&self) -> &AgeStructure {
        &self.ages
    }

    pub fn policy(&self) -> Option<&VaccinePolicy> {
        self.policy.as_ref()
    }

    /// Number of incidence channels (infection orders) emitted per age class.
    pub fn incidence_channels(&self) -> usize {
        self.spec.id().infection_orders()
    }

    /// Force of infection per age class for the raw state values.
    ///
    /// Classes with zero population carry no infectious individuals and
    /// contribute nothing; negative populations are an error.
    pub fn force_of_infection_values(&self, t: f64, x: &[f64]) -> Result<[f64; AGE_CLASSES]> {
        let n = class_totals(x);
        self.foi(t, x, &n)
    }

    fn foi(&self, t: f64, x: &[f64], n: &[f64; AGE_CLASSES]) -> Result<[f64; AGE_CLASSES]> {
        let o = &self.off;
        let rates = self.spec.rates();
        let season = self.forcing.seasonal_factor(t);
        let beta0 = self.forcing.baseline();
        // weighted prevalence times transmission, per source class j
        let mut pressure = [0.0; AGE_CLASSES];
        for j in 0..AGE_CLASSES {
            if n[j] < 0.0 || n[j].is_nan() {
                return Err(Error::ZeroPopulation { age_class: j + 1 });
            }
            if n[j] == 0.0 {
                continue;
            }
            let infectious = if self.spec.id() == ModelId::A {
                x[o.severe + j] + rates.mild_infectiousness * x[o.mild + j]
            } else {
                let mut sum = 0.0;
                for (k, &off) in o.i.iter().enumerate() {
                    if off != NONE {
                        sum += rates.relative_infectiousness[k] * x[off + j];
                    }
                }
                sum
            };
            pressure[j] = beta0[j] * season * infectious / n[j];
        }
        let c = self.ages.contact();
        let mut lambda = [0.0; AGE_CLASSES];
        for i in 0..AGE_CLASSES {
            let mut acc = 0.0;
            for j in 0..AGE_CLASSES {
                acc += c[i][j] * pressure[j];
            }
            lambda[i] = acc;
        }
        Ok(lambda)
    }

    /// Writes the derivative of `x` at time `t` into `dx` and, if given, the
    /// incidence rates into `incidence` (channel-major, `channels * 6`).
    pub fn eval_into(
        &self,
        t: f64,
        x: &[f64],
        dx: &mut [f64],
        mut incidence: Option<&mut [f64]>,
    ) -> Result<()> {
        debug_assert_eq!(x.len(), self.layout.len());
        debug_assert_eq!(dx.len(), self.layout.len());
        let n = class_totals(x);
        let lambda = self.foi(t, x, &n)?;
        let alpha = self.ages.aging_rates();
        let rates = self.spec.rates();
        let o = &self.off;

        // aging, identical for every block
        for (xb, db) in x.chunks_exact(AGE_CLASSES).zip(dx.chunks_exact_mut(AGE_CLASSES)) {
            db[0] = -alpha[0] * xb[0];
            for a in 1..AGE_CLASSES {
                db[a] = alpha[a - 1] * xb[a - 1] - alpha[a] * xb[a];
            }
        }

        // births into M of the youngest class
        let total: f64 = n.iter().sum();
        dx[o.m] += self.births.rate(t) * total;

        if let Some(inc) = incidence.as_deref_mut() {
            inc.iter_mut().for_each(|v| *v = 0.0);
        }

        let delta = rates.maternal_waning;
        let tau = rates.immunity_waning;
        let sigma = rates.relative_susceptibility;
        let model = self.spec.id();
        for a in 0..AGE_CLASSES {
            let wane_m = delta * x[o.m + a];
            dx[o.m + a] -= wane_m;
            dx[o.s[0] + a] += wane_m;

            match model {
                ModelId::A => {
                    let s = x[o.s[0] + a];
                    let lam_s = rates.severe_split * lambda[a];
                    let lam_m = rates.mild_split * lambda[a];
                    let new_s = lam_s * s;
                    let new_m = lam_m * s;
                    dx[o.s[0] + a] -= new_s + new_m;
                    dx[o.severe + a] += new_s;
                    dx[o.mild + a] += new_m;
                    let rec_s = rates.recovery_first * x[o.severe + a];
                    let rec_m = rates.recovery_later * x[o.mild + a];
                    dx[o.severe + a] -= rec_s;
                    dx[o.mild + a] -= rec_m;
                    dx[o.r[0] + a] += rec_s + rec_m;
                    let wane = tau * x[o.r[0] + a];
                    dx[o.r[0] + a] -= wane;
                    dx[o.s[0] + a] += wane;
                    let (mut sev, mut mild) = (new_s, new_m);
                    if o.v != NONE {
                        let v = x[o.v + a];
                        let (eta_s, eta_m) =
                            self.policy.as_ref().map_or((0.0, 0.0), |p| p.model_a_efficacy());
                        let leak_s = lam_s * (1.0 - eta_s) * v;
                        let leak_m = lam_m * (1.0 - eta_m) * v;
                        let wane_v = tau * v;
                        dx[o.v + a] -= leak_s + leak_m + wane_v;
                        dx[o.severe + a] += leak_s;
                        dx[o.mild + a] += leak_m;
                        dx[o.s[0] + a] += wane_v;
                        sev += leak_s;
                        mild += leak_m;
                    }
                    if let Some(inc) = incidence.as_deref_mut() {
                        inc[a] = sev;
                        inc[AGE_CLASSES + a] = mild;
                    }
                }
                ModelId::B | ModelId::C => {
                    for k in 0..3 {
                        let new = sigma[k] * lambda[a] * x[o.s[k] + a];
                        dx[o.s[k] + a] -= new;
                        let infectious_in = if model == ModelId::C {
                            dx[o.e[k] + a] += new;
                            let progress = rates.incubation_rate * x[o.e[k] + a];
                            dx[o.e[k] + a] -= progress;
                            progress
                        } else {
                            new
                        };
                        dx[o.i[k] + a] += infectious_in;
                        let rec = self.spec.recovery(k) * x[o.i[k] + a];
                        dx[o.i[k] + a] -= rec;
                        dx[o.r[k] + a] += rec;
                        let wane = tau * x[o.r[k] + a];
                        dx[o.r[k] + a] -= wane;
                        // R3 loops back to S3
                        dx[o.s[(k + 1).min(2)] + a] += wane;
                        if let Some(inc) = incidence.as_deref_mut() {
                            inc[k * AGE_CLASSES + a] = new;
                        }
                    }
                }
                ModelId::D | ModelId::E => {
                    for k in 0..4 {
                        let new = sigma[k] * lambda[a] * x[o.s[k] + a];
                        dx[o.s[k] + a] -= new;
                        dx[o.i[k] + a] += new;
                        let rec = self.spec.recovery(k) * x[o.i[k] + a];
                        dx[o.i[k] + a] -= rec;
                        if k < 3 {
                            let back = if model == ModelId::E {
                                rates.return_probabilities[k] * rec
                            } else {
                                rec
                            };
                            dx[o.s[k + 1] + a] += back;
                            dx[o.immune + a] += rec - back;
                        } else {
                            dx[o.immune + a] += rec;
                        }
                        if let Some(inc) = incidence.as_deref_mut() {
                            inc[k * AGE_CLASSES + a] = new;
                        }
                    }
                }
            }
        }

        if let Some(policy) = &self.policy {
            self.divert_vaccinees(policy, x, dx);
        }
        Ok(())
    }

    /// Redirects part of the aging flow at the two dose boundaries.
    fn divert_vaccinees(&self, policy: &VaccinePolicy, x: &[f64], dx: &mut [f64]) {
        let alpha = self.ages.aging_rates();
        let o = &self.off;
        let [d1, d2] = VaccinePolicy::DOSE_SOURCE_CLASSES;
        let mut divert = |from: usize, src_class: usize, to: &[(usize, f64)], frac: f64| {
            let moved = frac * alpha[src_class] * x[from + src_class];
            dx[from + src_class + 1] -= moved;
            for &(target, share) in to {
                dx[target + src_class + 1] += share * moved;
            }
        };
        if self.spec.id() == ModelId::A {
            let c = policy.coverage();
            if c > 0.0 {
                divert(o.m, d1, &[(o.v, 1.0)], c);
                divert(o.s[0], d1, &[(o.v, 1.0)], c);
            }
            return;
        }
        let sc = policy.seroconversion() * policy.coverage();
        if sc == 0.0 {
            return;
        }
        let kappa = self.spec.rates().return_probabilities;
        match self.spec.id() {
            ModelId::B | ModelId::C => {
                divert(o.m, d1, &[(o.r[0], 1.0)], sc);
                divert(o.s[0], d1, &[(o.r[0], 1.0)], sc);
                divert(o.r[0], d2, &[(o.r[1], 1.0)], sc);
                divert(o.s[1], d2, &[(o.r[1], 1.0)], sc);
            }
            ModelId::D => {
                divert(o.m, d1, &[(o.s[1], 1.0)], sc);
                divert(o.s[0], d1, &[(o.s[1], 1.0)], sc);
                divert(o.s[1], d2, &[(o.s[2], 1.0)], sc);
            }
            ModelId::E => {
                let first = [(o.s[1], kappa[0]), (o.immune, 1.0 - kappa[0])];
                let second = [(o.s[2], kappa[1]), (o.immune, 1.0 - kappa[1])];
                divert(o.m, d1, &first, sc);
                divert(o.s[0], d1, &first, sc);
                divert(o.s[1], d2, &second, sc);
            }
            ModelId::A => unreachable!(),
        }
    }

    fn check_layout(&self, state: &StateVector) -> Result<()> {
        if state.layout() != &self.layout {
            return Err(Error::LayoutMismatch {
                expected: self.spec.id(),
                found: state.layout().to_string(),
            });
        }
        Ok(())
    }

    /// Rate of change of every compartment.
    pub fn derivatives(&self, t: f64, state: &StateVector) -> Result<StateVector> {
        self.check_layout(state)?;
        let mut dx = vec![0.0; self.layout.len()];
        self.eval_into(t, state.values(), &mut dx, None)?;
        StateVector::from_values(self.layout.clone(), dx)
    }
}

/// Force of infection on each age class.
///
/// Model A weights severe and mild infections 1 and 0.5; models B-E weight
/// the k-th infection by its relative infectiousness.
pub fn force_of_infection(
    spec: &ModelSpec,
    state: &StateVector,
    ages: &AgeStructure,
    forcing: &SeasonalForcing,
    t: f64,
) -> Result<[f64; AGE_CLASSES]> {
    if state.layout().model() != spec.id() {
        return Err(Error::LayoutMismatch {
            expected: spec.id(),
            found: state.layout().to_string(),
        });
    }
    let n = state.class_totals();
    if let Some(j) = n.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::ZeroPopulation { age_class: j + 1 });
    }
    let mut system = ModelSystem::new(spec, ages, forcing, &BirthSchedule::standard());
    if state.layout() != system.layout() {
        // a state carrying a V block
        system.layout = state.layout().clone();
        system.off = Offsets::new(&system.layout);
    }
    system.foi(t, state.values(), &n)
}

/// Derivative of the unvaccinated model.
pub fn derivatives(
    spec: &ModelSpec,
    state: &StateVector,
    ages: &AgeStructure,
    forcing: &SeasonalForcing,
    births: &BirthSchedule,
    t: f64,
) -> Result<StateVector> {
    ModelSystem::new(spec, ages, forcing, births).derivatives(t, state)
}

/// Derivative function of `spec` with the vaccination transitions of `policy`.
pub fn apply_vaccination_wiring(
    spec: &ModelSpec,
    ages: &AgeStructure,
    forcing: &SeasonalForcing,
    births: &BirthSchedule,
    policy: &VaccinePolicy,
) -> ModelSystem {
    ModelSystem::new(spec, ages, forcing, births).with_vaccination(policy)
}
