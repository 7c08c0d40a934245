//! Short- and long-term impact of infant vaccination.

use crate::dynamics::{find_periodic_solution, project, Setting, Trajectory};
use crate::error::{Error, Result};
use crate::inference::{hpd_sorted, quantile_sorted, ParamVector};
use crate::metrics::burden::age_distribution;
use crate::model::{ModelSpec, VaccinePolicy, AGE_CLASSES, WEEKS_PER_YEAR};
use crate::par::{self, Execution};

/// Level of the intervals reported by [`vaccination_impact`].
pub const IMPACT_LEVEL: f64 = 0.99;

/// Simulated spans after vaccine introduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizons {
    pub short_weeks: usize,
    pub long_weeks: usize,
}

impl Default for Horizons {
    fn default() -> Self {
        Horizons {
            short_weeks: 5 * WEEKS_PER_YEAR,
            long_weeks: 20 * WEEKS_PER_YEAR,
        }
    }
}

impl Horizons {
    fn validate(&self) -> Result<()> {
        let year = WEEKS_PER_YEAR;
        if self.short_weeks == 0
            || !self.short_weeks.is_multiple_of(year)
            || !self.long_weeks.is_multiple_of(year)
            || self.long_weeks < self.short_weeks
        {
            return Err(Error::Config(format!(
                "horizons must be whole years with short <= long, got {} and {} weeks",
                self.short_weeks, self.long_weeks
            )));
        }
        Ok(())
    }
}

/// Impact of one coverage level under one parameter draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawImpact {
    /// Weekly severe cases over the short horizon divided by the same week
    /// without vaccination.
    pub relative_incidence: Vec<f64>,
    /// Percent reduction of severe cases in the last year of the long
    /// horizon.
    pub percent_reduction: f64,
    /// Severe cases averted per year in the last year of the long horizon.
    pub absolute_reduction: f64,
    /// Largest weekly severe incidence of each short-horizon year divided by
    /// the largest weekly incidence without vaccination.
    pub peak_ratios: Vec<f64>,
    pub baseline_age_distribution: [f64; AGE_CLASSES],
    /// Age distribution of severe cases in the last year of the long horizon.
    pub vaccinated_age_distribution: [f64; AGE_CLASSES],
}

/// Impact of one coverage level summarised over posterior draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactResult {
    pub coverage: f64,
    pub seroconversion: f64,
    /// Mean relative incidence per week.
    pub relative_incidence_series: Vec<f64>,
    pub relative_incidence_interval: Vec<(f64, f64)>,
    pub long_term_percent_reduction: f64,
    /// Central quantile interval of the percent reduction.
    pub percent_interval: (f64, f64),
    pub percent_hpd: (f64, f64),
    pub long_term_absolute_reduction: f64,
    pub absolute_interval: (f64, f64),
    /// Mean peak ratio of each short-horizon year.
    pub peak_ratios: Vec<f64>,
    pub baseline_age_distribution: [f64; AGE_CLASSES],
    pub vaccinated_age_distribution: [f64; AGE_CLASSES],
    pub interval_level: f64,
    pub draws: Vec<DrawImpact>,
}

fn weekly_totals(spec: &ModelSpec, traj: &Trajectory) -> Vec<f64> {
    traj.severe_incidence(spec)
        .iter()
        .map(|w| w.iter().sum())
        .collect()
}

fn last_year(spec: &ModelSpec, traj: &Trajectory) -> Vec<[f64; AGE_CLASSES]> {
    let severe = traj.severe_incidence(spec);
    severe[severe.len() - WEEKS_PER_YEAR..].to_vec()
}

/// Impact of every coverage level in `coverages` under a single draw,
/// starting from that draw's periodic solution at the start of a calendar
/// year.
pub fn draw_impact(
    spec: &ModelSpec,
    params: &ParamVector,
    setting: &Setting,
    coverages: &[f64],
    seroconversion: f64,
    horizons: Horizons,
) -> Result<Vec<DrawImpact>> {
    horizons.validate()?;
    let sol = find_periodic_solution(spec, params, setting)?;
    let start = &sol.cycle_start_state;
    let baseline = project(spec, params, setting, start, horizons.long_weeks, None)?;
    let base_weekly = weekly_totals(spec, &baseline);
    let base_year = last_year(spec, &baseline);
    let base_annual: f64 = base_year.iter().flatten().sum();
    if base_annual <= 0.0 {
        return Err(Error::ZeroDenominator(format!(
            "model {} has no severe cases without vaccination",
            spec.id()
        )));
    }
    let baseline_age_distribution = age_distribution(&base_year)?;

    let mut out = Vec::with_capacity(coverages.len());
    for &c in coverages {
        let policy = VaccinePolicy::new(c, seroconversion)?;
        let vac = project(spec, params, setting, start, horizons.long_weeks, Some(&policy))?;
        let weekly = weekly_totals(spec, &vac);
        let relative_incidence = (0..horizons.short_weeks)
            .map(|w| match (weekly[w], base_weekly[w]) {
                (v, b) if b > 0.0 => v / b,
                (0.0, _) => 1.0,
                _ => f64::INFINITY,
            })
            .collect();
        let peak_ratios = (0..horizons.short_weeks / WEEKS_PER_YEAR)
            .map(|y| {
                let span = y * WEEKS_PER_YEAR..(y + 1) * WEEKS_PER_YEAR;
                let peak = weekly[span.clone()].iter().copied().fold(0.0, f64::max);
                let base_peak = base_weekly[span].iter().copied().fold(0.0, f64::max);
                peak / base_peak
            })
            .collect();
        let year = last_year(spec, &vac);
        let annual: f64 = year.iter().flatten().sum();
        let vaccinated_age_distribution = age_distribution(&year).unwrap_or([0.0; AGE_CLASSES]);
        out.push(DrawImpact {
            relative_incidence,
            percent_reduction: 100.0 * (1.0 - annual / base_annual),
            absolute_reduction: base_annual - annual,
            peak_ratios,
            baseline_age_distribution,
            vaccinated_age_distribution,
        });
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

fn central(sorted: &[f64], level: f64) -> (f64, f64) {
    let tail = (1.0 - level) / 2.0;
    (quantile_sorted(sorted, tail), quantile_sorted(sorted, 1.0 - tail))
}

fn mean_array(rows: impl Iterator<Item = [f64; AGE_CLASSES]>) -> [f64; AGE_CLASSES] {
    let mut acc = [0.0; AGE_CLASSES];
    let mut n = 0usize;
    for r in rows {
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v;
        }
        n += 1;
    }
    acc.map(|v| v / n as f64)
}

/// Summarises per-draw impacts (indexed `[draw][coverage]`) by coverage.
pub fn summarize_impacts(
    coverages: &[f64],
    seroconversion: f64,
    per_draw: Vec<Vec<DrawImpact>>,
) -> Result<Vec<ImpactResult>> {
    if per_draw.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut results = Vec::with_capacity(coverages.len());
    for (ci, &coverage) in coverages.iter().enumerate() {
        let draws: Vec<DrawImpact> = per_draw.iter().map(|d| d[ci].clone()).collect();
        let pct = sorted(draws.iter().map(|d| d.percent_reduction).collect());
        let abs = sorted(draws.iter().map(|d| d.absolute_reduction).collect());
        let weeks = draws[0].relative_incidence.len();
        let mut relative_incidence_series = Vec::with_capacity(weeks);
        let mut relative_incidence_interval = Vec::with_capacity(weeks);
        for w in 0..weeks {
            let col = sorted(draws.iter().map(|d| d.relative_incidence[w]).collect());
            relative_incidence_series.push(mean(&col));
            relative_incidence_interval.push(central(&col, IMPACT_LEVEL));
        }
        let years = draws[0].peak_ratios.len();
        let peak_ratios = (0..years)
            .map(|y| mean(&draws.iter().map(|d| d.peak_ratios[y]).collect::<Vec<_>>()))
            .collect();
        results.push(ImpactResult {
            coverage,
            seroconversion,
            relative_incidence_series,
            relative_incidence_interval,
            long_term_percent_reduction: mean(&pct),
            percent_interval: central(&pct, IMPACT_LEVEL),
            percent_hpd: hpd_sorted(&pct, IMPACT_LEVEL),
            long_term_absolute_reduction: mean(&abs),
            absolute_interval: central(&abs, IMPACT_LEVEL),
            peak_ratios,
            baseline_age_distribution: mean_array(draws.iter().map(|d| d.baseline_age_distribution)),
            vaccinated_age_distribution: mean_array(draws.iter().map(|d| d.vaccinated_age_distribution)),
            interval_level: IMPACT_LEVEL,
            draws,
        });
    }
    Ok(results)
}

/// Coverage sweep over posterior draws. Each draw starts from its own
/// periodic solution; vaccination begins at the start of a calendar year.
pub fn vaccination_impact(
    spec: &ModelSpec,
    draws: &[ParamVector],
    setting: &Setting,
    coverages: &[f64],
    seroconversion: f64,
    horizons: Horizons,
    exec: Execution,
) -> Result<Vec<ImpactResult>> {
    if let Some(c) = coverages.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(Error::InvalidParams(format!("coverage {c} outside [0, 1]")));
    }
    let per_draw = par::try_map(exec, draws, |p| {
        draw_impact(spec, p, setting, coverages, seroconversion, horizons)
    })?;
    summarize_impacts(coverages, seroconversion, per_draw)
}
