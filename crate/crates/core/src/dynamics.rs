//! Integration of the model systems, periodic solutions and projections.
//!
//! States are carried per capita. The systems are homogeneous of degree one
//! in the state, so the state is rescaled to unit mass at every sample
//! boundary without changing the compartment fractions; incidence over a week
//! is measured relative to the population at the start of that week and
//! multiplied by the configured population size. This removes the slow drift
//! of the total population under seasonal births and makes the annual map
//! have a true fixed point.

use crate::error::{Error, Result};
use crate::inference::ParamVector;
use crate::model::{
    AgeStructure, BirthSchedule, Compartment, Layout, ModelId, ModelSpec, ModelSystem, StateVector,
    VaccinePolicy, AGE_CLASSES, WEEKS_PER_YEAR,
};
use crate::solver::{Integrator, OdeSystem, Tolerances};

/// Population size used to turn per-capita incidence into persons.
pub const DEFAULT_POPULATION: f64 = 400_000.0;
/// Periodicity tolerance on the expected reported cases over one year.
pub const PERIODIC_EPSILON: f64 = 0.01;
/// Years integrated before giving up on a periodic solution.
pub const MAX_YEARS: usize = 100;
/// Share of every age class seeded into first infections at the start.
pub const INITIAL_INFECTED: f64 = 0.001;
/// States are allowed to dip this far below zero inside a step.
pub const NEGATIVITY_TOLERANCE: f64 = -1e-9;

/// Demography, scale and numerical settings shared by every simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub ages: AgeStructure,
    pub births: BirthSchedule,
    pub population_size: f64,
    pub tolerances: Tolerances,
    pub epsilon: f64,
    pub max_years: usize,
}

impl Default for Setting {
    fn default() -> Self {
        Setting {
            ages: AgeStructure::standard(),
            births: BirthSchedule::standard(),
            population_size: DEFAULT_POPULATION,
            tolerances: Tolerances {
                lower_bound: Some(NEGATIVITY_TOLERANCE),
                ..Tolerances::default()
            },
            epsilon: PERIODIC_EPSILON,
            max_years: MAX_YEARS,
        }
    }
}

impl Setting {
    pub fn with_population(mut self, population_size: f64) -> Self {
        self.population_size = population_size;
        self
    }

    pub fn with_births(mut self, births: BirthSchedule) -> Self {
        self.births = births;
        self
    }

    pub fn system(&self, spec: &ModelSpec, params: &ParamVector) -> Result<ModelSystem> {
        Ok(ModelSystem::new(
            spec,
            &self.ages,
            &params.forcing()?,
            &self.births,
        ))
    }
}

/// Weekly samples of a simulation.
///
/// `states[w]` is the per-capita state at `t0 + w`; `incidence[w]` holds the
/// new infections during week `w` in persons, channel-major
/// (`channel * 6 + age`). Channels are the infection orders, or severe and
/// mild for model A.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    model: ModelId,
    t0: f64,
    channels: usize,
    states: Vec<StateVector>,
    incidence: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn model(&self) -> ModelId {
        self.model
    }

    pub fn start_time(&self) -> f64 {
        self.t0
    }

    /// Sample times, one per state.
    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|w| self.t0 + w as f64).collect()
    }

    pub fn weeks(&self) -> usize {
        self.incidence.len()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn last_state(&self) -> &StateVector {
        self.states.last().expect("trajectory has a start state")
    }

    pub fn incidence(&self, week: usize) -> &[f64] {
        &self.incidence[week]
    }

    /// New infections of `channel` (0-based) in `age` during `week`.
    pub fn new_infections(&self, week: usize, channel: usize, age: usize) -> f64 {
        self.incidence[week][channel * AGE_CLASSES + age]
    }

    /// Weekly severe RVGE cases per age class, in persons.
    pub fn severe_incidence(&self, spec: &ModelSpec) -> Vec<[f64; AGE_CLASSES]> {
        self.incidence.iter().map(|inc| severe_cases(spec, inc)).collect()
    }
}

/// Severe cases implied by one week of incidence channels.
pub fn severe_cases(spec: &ModelSpec, incidence: &[f64]) -> [f64; AGE_CLASSES] {
    let mut out = [0.0; AGE_CLASSES];
    if spec.id() == ModelId::A {
        out.copy_from_slice(&incidence[..AGE_CLASSES]);
    } else {
        let frac = spec.rates().severe_fractions;
        for (k, f) in frac.iter().enumerate() {
            if *f == 0.0 {
                continue;
            }
            for a in 0..AGE_CLASSES {
                out[a] += f * incidence[k * AGE_CLASSES + a];
            }
        }
    }
    out
}

/// State plus incidence accumulators as one ODE system.
struct Augmented<'a> {
    sys: &'a ModelSystem,
    n: usize,
    m: usize,
}

impl OdeSystem for Augmented<'_> {
    fn dim(&self) -> usize {
        self.n + self.m
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let (dx, dinc) = dy.split_at_mut(self.n);
        self.sys.eval_into(t, &y[..self.n], dx, Some(dinc))
    }
}

/// Integrates `system` from `state0` at `t0` to `t1` (a whole number of
/// weeks later), sampling weekly.
pub fn integrate(
    system: &ModelSystem,
    state0: &StateVector,
    t0: f64,
    t1: f64,
    setting: &Setting,
) -> Result<Trajectory> {
    integrate_refined(system, state0, t0, t1, 1, setting)
}

/// As [`integrate`], with every week split into `substeps` output segments.
pub fn integrate_refined(
    system: &ModelSystem,
    state0: &StateVector,
    t0: f64,
    t1: f64,
    substeps: usize,
    setting: &Setting,
) -> Result<Trajectory> {
    if state0.layout() != system.layout() {
        return Err(Error::LayoutMismatch {
            expected: system.spec().id(),
            found: state0.layout().to_string(),
        });
    }
    let span = t1 - t0;
    if !(span > 0.0) || (span - span.round()).abs() > 1e-9 || substeps == 0 {
        return Err(Error::InvalidParams(format!(
            "integration span [{t0}, {t1}] must be a positive whole number of weeks"
        )));
    }
    let weeks = span.round() as usize;
    let n = system.layout().len();
    let m = system.incidence_channels() * AGE_CLASSES;
    let aug = Augmented { sys: system, n, m };
    let mut integ = Integrator::with_guard(n + m, setting.tolerances, n);
    let mut y = vec![0.0; n + m];
    y[..n].copy_from_slice(state0.values());
    normalize(&mut y[..n])?;

    let layout = system.layout().clone();
    let mut states = Vec::with_capacity(weeks + 1);
    states.push(StateVector::from_values(layout.clone(), y[..n].to_vec())?);
    let mut incidence = Vec::with_capacity(weeks);
    let dt = 1.0 / substeps as f64;
    for w in 0..weeks {
        let mut acc = vec![0.0; m];
        let mut scale = 1.0;
        for j in 0..substeps {
            let a = t0 + w as f64 + j as f64 * dt;
            let b = if j + 1 == substeps {
                t0 + (w + 1) as f64
            } else {
                a + dt
            };
            y[n..].iter_mut().for_each(|v| *v = 0.0);
            // every segment starts from a fresh step size
            integ.reset();
            integ.advance(&aug, a, b, &mut y)?;
            for (acc, v) in acc.iter_mut().zip(&y[n..]) {
                *acc += scale * v;
            }
            for v in &mut y[..n] {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            scale *= normalize(&mut y[..n])?;
        }
        acc.iter_mut().for_each(|v| *v *= setting.population_size);
        incidence.push(acc);
        states.push(StateVector::from_values(layout.clone(), y[..n].to_vec())?);
    }
    Ok(Trajectory {
        model: system.spec().id(),
        t0,
        channels: system.incidence_channels(),
        states,
        incidence,
    })
}

/// Rescales to unit mass, returning the previous total.
fn normalize(x: &mut [f64]) -> Result<f64> {
    let total: f64 = x.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroPopulation { age_class: 0 });
    }
    x.iter_mut().for_each(|v| *v /= total);
    Ok(total)
}

/// Fixed starting point of every periodic-solution search.
///
/// Age classes follow the stationary distribution of the aging chain with
/// unit total. In each class 0.1% is placed in first-infection infectious
/// compartments (model A: split severe/mild) and the remainder is shared
/// between `M` and `S1` as in the disease-free equilibrium.
pub fn default_initial_state(spec: &ModelSpec, ages: &AgeStructure, births: &BirthSchedule) -> StateVector {
    let f = ages.population_fractions();
    let maternal = disease_free_maternal(spec, ages, births.mean_rate());
    let mut s = StateVector::zeros(Layout::new(spec.id()));
    for a in 0..AGE_CLASSES {
        let infected = INITIAL_INFECTED * f[a];
        let rest = f[a] - infected;
        let m_share = (maternal[a] / f[a]).clamp(0.0, 1.0);
        s.set(Compartment::Maternal, a, rest * m_share);
        s.set(Compartment::Susceptible(1), a, rest * (1.0 - m_share));
        if spec.id() == ModelId::A {
            let r = spec.rates();
            s.set(Compartment::SevereInfectious, a, r.severe_split * infected);
            s.set(Compartment::MildInfectious, a, r.mild_split * infected);
        } else {
            s.set(Compartment::Infectious(1), a, infected);
        }
    }
    s
}

/// Maternally protected mass per class at the disease-free equilibrium with
/// unit population and constant birth rate `mu`.
pub(crate) fn disease_free_maternal(spec: &ModelSpec, ages: &AgeStructure, mu: f64) -> [f64; AGE_CLASSES] {
    let alpha = ages.aging_rates();
    let delta = spec.rates().maternal_waning;
    let mut m = [0.0; AGE_CLASSES];
    let mut inflow = mu;
    for a in 0..AGE_CLASSES {
        m[a] = inflow / (alpha[a] + delta);
        inflow = alpha[a] * m[a];
    }
    m
}

/// The annual cycle a model settles into.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSolution {
    /// Per-capita state at the start of the returned cycle year.
    pub cycle_start_state: StateVector,
    /// Expected reported cases per calendar week and age class.
    pub expected_profile: Vec<[f64; AGE_CLASSES]>,
    /// Severe RVGE cases per calendar week and age class, in persons.
    pub severe_profile: Vec<[f64; AGE_CLASSES]>,
    pub convergence_years: usize,
    /// Criterion value of the accepted year against the year before.
    pub discrepancy: f64,
    /// The accepted cycle year.
    pub cycle: Trajectory,
}

impl PeriodicSolution {
    /// Annual severe cases as a percentage of the population.
    pub fn annual_severe_percent(&self, population_size: f64) -> f64 {
        let total: f64 = self.severe_profile.iter().flatten().sum();
        100.0 * total / population_size
    }
}

/// `sum_t sum_i |xi_i(t) - xi'_i(t)|`.
pub fn profile_discrepancy(a: &[[f64; AGE_CLASSES]], b: &[[f64; AGE_CLASSES]]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .sum()
}

/// Integrates year by year from the default initial state until the
/// expected reported cases repeat within `setting.epsilon`.
pub fn find_periodic_solution(
    spec: &ModelSpec,
    params: &ParamVector,
    setting: &Setting,
) -> Result<PeriodicSolution> {
    let start = default_initial_state(spec, &setting.ages, &setting.births);
    find_periodic_solution_from(spec, params, setting, &start)
}

/// As [`find_periodic_solution`], starting from `start` (for instance the
/// cycle start of a nearby parameter set).
pub fn find_periodic_solution_from(
    spec: &ModelSpec,
    params: &ParamVector,
    setting: &Setting,
    start: &StateVector,
) -> Result<PeriodicSolution> {
    let system = setting.system(spec, params)?;
    let year = WEEKS_PER_YEAR as f64;
    let mut state = start.clone();
    let mut previous: Option<Vec<[f64; AGE_CLASSES]>> = None;
    let mut discrepancy = f64::INFINITY;
    for y in 1..=setting.max_years {
        let traj = integrate(&system, &state, 0.0, year, setting)?;
        let severe = traj.severe_incidence(spec);
        let expected: Vec<[f64; AGE_CLASSES]> = severe.iter().map(|w| w.map(|v| params.rho * v)).collect();
        if let Some(prev) = &previous {
            discrepancy = profile_discrepancy(&expected, prev);
            if discrepancy < setting.epsilon {
                return Ok(PeriodicSolution {
                    cycle_start_state: state,
                    expected_profile: expected,
                    severe_profile: severe,
                    convergence_years: y,
                    discrepancy,
                    cycle: traj,
                });
            }
        }
        state = traj.last_state().clone();
        previous = Some(expected);
    }
    Err(Error::NonConvergence {
        years: setting.max_years,
        discrepancy,
    })
}

/// Simulates `horizon_weeks` from `start_state` (taken to be at the start of
/// a calendar year), with vaccination active from the first week when a
/// policy with positive coverage is given.
pub fn project(
    spec: &ModelSpec,
    params: &ParamVector,
    setting: &Setting,
    start_state: &StateVector,
    horizon_weeks: usize,
    policy: Option<&VaccinePolicy>,
) -> Result<Trajectory> {
    let base = setting.system(spec, params)?;
    let (system, state) = match policy.filter(|p| p.coverage() > 0.0) {
        Some(p) => {
            let sys = base.with_vaccination(p);
            let st = start_state.extend_to(sys.layout().clone())?;
            (sys, st)
        }
        None => (base, start_state.restrict_to(Layout::new(spec.id()))),
    };
    integrate(&system, &state, 0.0, horizon_weeks as f64, setting)
}
