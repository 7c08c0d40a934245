use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::read_text;
use crate::dynamics::{Setting, DEFAULT_POPULATION};
use crate::error::{Error, Result};
use crate::inference::{McmcConfig, ParamVector, PriorSpec};
use crate::metrics::Horizons;
use crate::model::{ModelId, SEROCONVERSION_LOW_INCOME, SEROCONVERSION_NIGER_TRIAL, WEEKS_PER_YEAR};

/// Every accepted key, in the order they are printed.
pub const CONFIG_KEYS: [&str; 24] = [
    "models",
    "data",
    "output",
    "seed",
    "iterations",
    "burn_in",
    "adapt_interval",
    "target_acceptance",
    "calendar_offset",
    "population",
    "rho_prior_mean",
    "draws",
    "projection_draws",
    "coverage_grid",
    "seroconversion",
    "horizon_short_weeks",
    "horizon_long_weeks",
    "threads",
    "sim_model",
    "sim_theta",
    "sim_weeks",
    "sim_seed",
    "sim_replicates",
    "interval_level",
];

/// Settings of a batch run, read from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub models: Vec<ModelId>,
    pub data: PathBuf,
    pub output: PathBuf,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub adapt_interval: usize,
    pub target_acceptance: f64,
    /// Calendar week (0-based) of the first observed week.
    pub calendar_offset: usize,
    pub population: f64,
    pub rho_prior_mean: f64,
    /// Posterior draws used for burden, R0 and profile summaries.
    pub draws: usize,
    /// Posterior draws used for vaccination projections.
    pub projection_draws: usize,
    pub coverage_grid: Vec<f64>,
    /// Seroconversion scenarios.
    pub seroconversion: Vec<f64>,
    pub horizon_short_weeks: usize,
    pub horizon_long_weeks: usize,
    /// Worker threads, 0 for one per core.
    pub threads: usize,
    pub sim_model: ModelId,
    /// `b, phi, r, rho, beta1..beta6` used by `simulate`.
    pub sim_theta: ParamVector,
    pub sim_weeks: usize,
    pub sim_seed: u64,
    pub sim_replicates: usize,
    /// Level of the credible intervals of summaries and model averages.
    pub interval_level: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            models: ModelId::ALL.to_vec(),
            data: PathBuf::from("data/synthetic_model_b.csv"),
            output: PathBuf::from("output"),
            seed: 20_120_331,
            iterations: 50_000,
            burn_in: 10_000,
            adapt_interval: 100,
            target_acceptance: 0.25,
            calendar_offset: 0,
            population: DEFAULT_POPULATION,
            rho_prior_mean: 0.117,
            draws: 100,
            projection_draws: 40,
            coverage_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            seroconversion: vec![SEROCONVERSION_LOW_INCOME, SEROCONVERSION_NIGER_TRIAL],
            horizon_short_weeks: 5 * WEEKS_PER_YEAR,
            horizon_long_weeks: 20 * WEEKS_PER_YEAR,
            threads: 0,
            sim_model: ModelId::B,
            sim_theta: ParamVector::new(0.41, 7.4, 2.6, 0.096, [20.0; 6]),
            sim_weeks: 118,
            sim_seed: 20_120_331,
            sim_replicates: 1,
            interval_level: 0.95,
        }
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse `{s}`")))
        })
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

impl RunConfig {
    /// Reads a config file on top of the defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.merge_text(&read_text(path)?, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment. Unknown and
    /// repeated keys are errors.
    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<()> {
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(err(format!("key `{key}` given twice")));
            }
            seen.push(key);
            self.set(key, value.trim()).map_err(|e| err(e.to_string()))?;
        }
        Ok(())
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "models" => self.models = list(key, value)?,
            "data" => self.data = PathBuf::from(value),
            "output" => self.output = PathBuf::from(value),
            "seed" => self.seed = one(key, value)?,
            "iterations" => self.iterations = one(key, value)?,
            "burn_in" => self.burn_in = one(key, value)?,
            "adapt_interval" => self.adapt_interval = one(key, value)?,
            "target_acceptance" => self.target_acceptance = one(key, value)?,
            "calendar_offset" => self.calendar_offset = one(key, value)?,
            "population" => self.population = one(key, value)?,
            "rho_prior_mean" => self.rho_prior_mean = one(key, value)?,
            "draws" => self.draws = one(key, value)?,
            "projection_draws" => self.projection_draws = one(key, value)?,
            "coverage_grid" => self.coverage_grid = list(key, value)?,
            "seroconversion" => self.seroconversion = list(key, value)?,
            "horizon_short_weeks" => self.horizon_short_weeks = one(key, value)?,
            "horizon_long_weeks" => self.horizon_long_weeks = one(key, value)?,
            "threads" => self.threads = one(key, value)?,
            "sim_model" => self.sim_model = one(key, value)?,
            "sim_theta" => self.sim_theta = ParamVector::from_slice(&list::<f64>(key, value)?)?,
            "sim_weeks" => self.sim_weeks = one(key, value)?,
            "sim_seed" => self.sim_seed = one(key, value)?,
            "sim_replicates" => self.sim_replicates = one(key, value)?,
            "interval_level" => self.interval_level = one(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` overrides from the command line.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Canonical text form: every key in [`CONFIG_KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let value = match key {
                "models" => join(&self.models),
                "data" => self.data.display().to_string(),
                "output" => self.output.display().to_string(),
                "seed" => self.seed.to_string(),
                "iterations" => self.iterations.to_string(),
                "burn_in" => self.burn_in.to_string(),
                "adapt_interval" => self.adapt_interval.to_string(),
                "target_acceptance" => self.target_acceptance.to_string(),
                "calendar_offset" => self.calendar_offset.to_string(),
                "population" => self.population.to_string(),
                "rho_prior_mean" => self.rho_prior_mean.to_string(),
                "draws" => self.draws.to_string(),
                "projection_draws" => self.projection_draws.to_string(),
                "coverage_grid" => join(&self.coverage_grid),
                "seroconversion" => join(&self.seroconversion),
                "horizon_short_weeks" => self.horizon_short_weeks.to_string(),
                "horizon_long_weeks" => self.horizon_long_weeks.to_string(),
                "threads" => self.threads.to_string(),
                "sim_model" => self.sim_model.to_string(),
                "sim_theta" => join(&self.sim_theta.to_array()),
                "sim_weeks" => self.sim_weeks.to_string(),
                "sim_seed" => self.sim_seed.to_string(),
                "sim_replicates" => self.sim_replicates.to_string(),
                "interval_level" => self.interval_level.to_string(),
                _ => unreachable!(),
            };
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    /// Checks every setting; called before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.models.is_empty() {
            return bad("no models selected".into());
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return bad(format!("model {m} selected twice"));
            }
        }
        self.mcmc(0).validate()?;
        if !(self.population > 0.0 && self.population.is_finite()) {
            return bad(format!("population {} must be positive", self.population));
        }
        if !(self.rho_prior_mean > 0.0 && self.rho_prior_mean <= 1.0) {
            return bad(format!("rho_prior_mean {} outside (0, 1]", self.rho_prior_mean));
        }
        if self.draws == 0 || self.projection_draws == 0 {
            return bad("draws and projection_draws must be positive".into());
        }
        if self.coverage_grid.is_empty() || self.coverage_grid.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return bad(format!(
                "coverage_grid {:?} must be values in [0, 1]",
                self.coverage_grid
            ));
        }
        if self.seroconversion.is_empty() || self.seroconversion.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return bad(format!(
                "seroconversion {:?} must be values in [0, 1]",
                self.seroconversion
            ));
        }
        let h = self.horizons();
        if h.short_weeks == 0
            || !h.short_weeks.is_multiple_of(WEEKS_PER_YEAR)
            || !h.long_weeks.is_multiple_of(WEEKS_PER_YEAR)
            || h.long_weeks < h.short_weeks
        {
            return bad("horizons must be whole years with short <= long".into());
        }
        if self.sim_weeks == 0 || self.sim_replicates == 0 {
            return bad("sim_weeks and sim_replicates must be positive".into());
        }
        self.sim_theta.validate()?;
        if self.calendar_offset >= WEEKS_PER_YEAR {
            return bad(format!(
                "calendar_offset {} must be below {WEEKS_PER_YEAR}",
                self.calendar_offset
            ));
        }
        if !(self.interval_level > 0.0 && self.interval_level < 1.0) {
            return bad(format!("interval_level {} outside (0, 1)", self.interval_level));
        }
        Ok(())
    }

    /// Sampler settings of the `index`-th selected model. Each model gets
    /// its own stream derived from `seed`.
    pub fn mcmc(&self, index: usize) -> McmcConfig {
        McmcConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.model_seed(index),
            adapt_interval: self.adapt_interval,
            target_acceptance: self.target_acceptance,
            initial: ParamVector {
                rho: self.rho_prior_mean,
                ..ParamVector::default()
            },
            ..McmcConfig::default()
        }
    }

    pub fn model_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(1_000_003u64.wrapping_mul(index as u64))
    }

    pub fn setting(&self) -> Setting {
        Setting::default().with_population(self.population)
    }

    pub fn priors(&self) -> PriorSpec {
        PriorSpec::default().with_rho_mean(self.rho_prior_mean)
    }

    pub fn horizons(&self) -> Horizons {
        Horizons {
            short_weeks: self.horizon_short_weeks,
            long_weeks: self.horizon_long_weeks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let d = RunConfig::default();
        d.validate().unwrap();
        let mut back = RunConfig {
            seed: 1,
            models: vec![ModelId::A],
            ..RunConfig::default()
        };
        back.merge_text(&d.to_text(), "defaults").unwrap();
        assert_eq!(back, d);
        for key in CONFIG_KEYS {
            assert!(d.to_text().contains(&format!("\n{key} = ")) || d.to_text().starts_with(key));
        }
    }

    #[test]
    fn unknown_and_repeated_keys() {
        let mut c = RunConfig::default();
        match c.merge_text("seed = 3\nsede = 4\n", "f.cfg") {
            Err(Error::Parse { line: 2, message, .. }) => assert!(message.contains("sede")),
            other => panic!("{other:?}"),
        }
        assert!(RunConfig::default()
            .merge_text("seed = 1\nseed = 2\n", "f")
            .is_err());
        assert!(RunConfig::default().merge_text("just words\n", "f").is_err());
    }

    #[test]
    fn comments_and_overrides() {
        let mut c = RunConfig::default();
        c.merge_text(
            "# a run\nmodels = B, C  # two\n\niterations=2000\nburn_in = 500\n",
            "f",
        )
        .unwrap();
        assert_eq!(c.models, vec![ModelId::B, ModelId::C]);
        assert_eq!(c.iterations, 2000);
        c.apply_overrides(&["seed=9", "coverage_grid=0,0.7"]).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.coverage_grid, vec![0.0, 0.7]);
        assert!(c.apply_overrides(&["nonsense"]).is_err());
        c.validate().unwrap();
    }

    #[test]
    fn validation() {
        let check = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(check(|c| c.models.clear()));
        assert!(check(|c| c.models = vec![ModelId::B, ModelId::B]));
        assert!(check(|c| c.burn_in = c.iterations));
        assert!(check(|c| c.coverage_grid = vec![1.2]));
        assert!(check(|c| c.seroconversion = vec![-0.1]));
        assert!(check(|c| c.horizon_short_weeks = 100));
        assert!(check(|c| c.draws = 0));
        assert!(check(|c| c.calendar_offset = 52));
        assert!(check(|c| c.sim_theta.rho = 2.0));
    }

    #[test]
    fn model_seeds_differ() {
        let c = RunConfig::default();
        assert_ne!(c.mcmc(0).seed, c.mcmc(1).seed);
        assert_eq!(c.mcmc(0).seed, c.seed);
    }
}
