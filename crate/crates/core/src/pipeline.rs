//! Batch orchestration: fit, summarize, average, project and tabulate.
//!
//! Each stage reads and writes plain files under the configured output
//! directory, so stages can be run one at a time or all at once through
//! [`run_pipeline`]. Errors are wrapped with the name of the failing stage.

use std::path::{Path, PathBuf};

use crate::dynamics::find_periodic_solution;
use crate::ensemble::{bma_combine_profile, bma_combine_scalar, model_evidences, BmaEstimate, ModelEvidence};
use crate::error::{Error, Result};
use crate::inference::{posterior_summary, run_mcmc, PosteriorChain, PosteriorSummary};
use crate::io::{
    load_case_series, read_chain, read_table, write_case_series, write_chain, write_text, Manifest,
    RunConfig, Table,
};
use crate::metrics::{
    age_distribution, next_generation_matrix, vaccination_impact, ImpactResult, IMPACT_LEVEL,
};
use crate::model::{ModelId, ModelSpec, AGE_CLASSES};
use crate::observation::{simulate_observations, tile_profile, CaseSeries};
use crate::par::{self, Execution};

fn num(x: f64) -> String {
    if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

pub fn chain_path(dir: &Path, model: ModelId) -> PathBuf {
    dir.join("chains").join(format!("chain_{model}.csv"))
}

fn scenario_label(s: f64) -> String {
    format!("s{s}")
}

/// Expected reported cases of the simulation model over the configured
/// weeks, then one negative binomial draw per cell with seed
/// `sim_seed + replicate`.
pub fn simulate_cases(config: &RunConfig, replicate: u64) -> Result<(CaseSeries, Vec<[f64; AGE_CLASSES]>)> {
    let spec = ModelSpec::new(config.sim_model);
    let theta = &config.sim_theta;
    let sol = find_periodic_solution(&spec, theta, &config.setting())?;
    let expected = tile_profile(&sol.expected_profile, config.sim_weeks, config.calendar_offset)?;
    let series = simulate_observations(&expected, theta.r, config.sim_seed.wrapping_add(replicate))?;
    Ok((series, expected))
}

/// Writes `sim_replicates` synthetic case files to `path` (replicates after
/// the first get a `_rep<k>` suffix).
pub fn simulate_stage(config: &RunConfig, path: &Path) -> Result<Vec<PathBuf>> {
    stage(
        "simulate",
        (|| {
            config.validate()?;
            let mut written = Vec::new();
            for k in 0..config.sim_replicates {
                let (series, _) = simulate_cases(config, k as u64)?;
                let p = if k == 0 {
                    path.to_path_buf()
                } else {
                    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("cases");
                    path.with_file_name(format!("{stem}_rep{k}.csv"))
                };
                write_case_series(&p, &series)?;
                written.push(p);
            }
            Ok(written)
        })(),
    )
}

/// Runs one chain per selected model and writes the chain files.
pub fn fit_stage(
    config: &RunConfig,
    series: &CaseSeries,
    exec: Execution,
) -> Result<Vec<(ModelId, PosteriorChain)>> {
    let setting = config.setting();
    let priors = config.priors();
    let jobs: Vec<(usize, ModelId)> = config.models.iter().copied().enumerate().collect();
    let chains = par::try_map(exec, &jobs, |&(i, model)| {
        let spec = ModelSpec::new(model);
        run_mcmc(
            &spec,
            series,
            &setting,
            &priors,
            config.calendar_offset,
            &config.mcmc(i),
        )
        .map(|c| (model, c))
        .map_err(|e| e.in_stage(&format!("fit model {model}")))
    })?;
    for (model, chain) in &chains {
        stage("fit", write_chain(&chain_path(&config.output, *model), chain))?;
    }
    Ok(chains)
}

/// Reads the chain files of every selected model.
pub fn load_chains(config: &RunConfig, observations: usize) -> Result<Vec<(ModelId, PosteriorChain)>> {
    config
        .models
        .iter()
        .map(|&m| read_chain(&chain_path(&config.output, m), observations).map(|c| (m, c)))
        .collect()
}

/// Posterior summaries of one model.
#[derive(Debug, Clone)]
pub struct ModelOutputs {
    pub model: ModelId,
    pub summary: PosteriorSummary,
    /// Annual severe cases as % of population, one per draw.
    pub burden: Vec<f64>,
    pub r0: Vec<f64>,
    /// `[draw][week]` total expected reported cases over the observed weeks.
    pub reported: Vec<Vec<f64>>,
    /// `[draw][week]` total severe cases over the observed weeks.
    pub severe: Vec<Vec<f64>>,
    /// Mean severe cases per observed week and age class.
    pub severe_by_age: Vec<[f64; AGE_CLASSES]>,
    /// Mean share of annual severe cases per age class.
    pub age_distribution: [f64; AGE_CLASSES],
}

struct DrawOutputs {
    burden: f64,
    r0: f64,
    reported: Vec<f64>,
    severe: Vec<f64>,
    severe_by_age: Vec<[f64; AGE_CLASSES]>,
    age_distribution: [f64; AGE_CLASSES],
}

fn model_outputs(
    config: &RunConfig,
    series: &CaseSeries,
    model: ModelId,
    chain: &PosteriorChain,
    exec: Execution,
) -> Result<ModelOutputs> {
    let spec = ModelSpec::new(model);
    let setting = config.setting();
    let summary = posterior_summary(chain, &config.priors())?;
    let draws = chain.thin(config.draws);
    let weeks = series.weeks();
    let per_draw = par::try_map(exec, &draws, |theta| -> Result<DrawOutputs> {
        let sol = find_periodic_solution(&spec, theta, &setting)?;
        let reported = tile_profile(&sol.expected_profile, weeks, config.calendar_offset)?;
        let severe = tile_profile(&sol.severe_profile, weeks, config.calendar_offset)?;
        Ok(DrawOutputs {
            burden: sol.annual_severe_percent(setting.population_size),
            r0: next_generation_matrix(&spec, theta, &setting.ages)?.spectral_radius,
            reported: reported.iter().map(|w| w.iter().sum()).collect(),
            severe: severe.iter().map(|w| w.iter().sum()).collect(),
            severe_by_age: severe,
            age_distribution: age_distribution(&sol.severe_profile)?,
        })
    })?;
    let n = per_draw.len() as f64;
    let mut severe_by_age = vec![[0.0; AGE_CLASSES]; weeks];
    let mut age_dist = [0.0; AGE_CLASSES];
    for d in &per_draw {
        for (acc, w) in severe_by_age.iter_mut().zip(&d.severe_by_age) {
            for a in 0..AGE_CLASSES {
                acc[a] += w[a] / n;
            }
        }
        for a in 0..AGE_CLASSES {
            age_dist[a] += d.age_distribution[a] / n;
        }
    }
    Ok(ModelOutputs {
        model,
        summary,
        burden: per_draw.iter().map(|d| d.burden).collect(),
        r0: per_draw.iter().map(|d| d.r0).collect(),
        reported: per_draw.iter().map(|d| d.reported.clone()).collect(),
        severe: per_draw.iter().map(|d| d.severe.clone()).collect(),
        severe_by_age,
        age_distribution: age_dist,
    })
}

fn single(samples: &[f64], level: f64) -> Result<BmaEstimate> {
    bma_combine_scalar(&[samples.to_vec()], &[1.0], level)
}

fn write_profile(
    path: &Path,
    series: &CaseSeries,
    reported: &[BmaEstimate],
    severe: &[BmaEstimate],
    by_age: &[[f64; AGE_CLASSES]],
) -> Result<()> {
    let mut t = Table::new(&[
        "week",
        "observed",
        "reported",
        "reported_lower",
        "reported_upper",
        "severe",
        "severe_lower",
        "severe_upper",
        "severe_age1",
        "severe_age2",
        "severe_age3",
        "severe_age4",
        "severe_age5",
        "severe_age6",
    ]);
    for w in 0..series.weeks() {
        let mut row = vec![
            (w + 1).to_string(),
            series.counts()[w].iter().sum::<u64>().to_string(),
            num(reported[w].point),
            num(reported[w].interval.0),
            num(reported[w].interval.1),
            num(severe[w].point),
            num(severe[w].interval.0),
            num(severe[w].interval.1),
        ];
        row.extend(by_age[w].iter().map(|&v| num(v)));
        t.push(row);
    }
    t.write(path)
}

/// Summaries, burden, R0 and fitted profiles of every model.
pub fn summarize_stage(
    config: &RunConfig,
    series: &CaseSeries,
    chains: &[(ModelId, PosteriorChain)],
    exec: Execution,
) -> Result<Vec<ModelOutputs>> {
    stage(
        "summarize",
        (|| {
            let mut outputs = Vec::with_capacity(chains.len());
            for (model, chain) in chains {
                let out = model_outputs(config, series, *model, chain, exec)?;
                let level = config.interval_level;
                let mut t = Table::new(&["name", "mean", "lower", "upper"]);
                for p in &out.summary.params {
                    t.push(vec![p.name.to_string(), num(p.mean), num(p.lower), num(p.upper)]);
                }
                for (name, values) in [("burden_percent", &out.burden), ("r0", &out.r0)] {
                    let e = single(values, level)?;
                    t.push(vec![
                        name.to_string(),
                        num(e.point),
                        num(e.interval.0),
                        num(e.interval.1),
                    ]);
                }
                t.push(vec![
                    "max_log_likelihood".into(),
                    num(out.summary.max_log_likelihood),
                    String::new(),
                    String::new(),
                ]);
                t.push(vec![
                    "acceptance_rate".into(),
                    num(chain.acceptance_rate),
                    String::new(),
                    String::new(),
                ]);
                t.write(&config.output.join(format!("summary_{model}.csv")))?;

                let reported = bma_combine_profile(std::slice::from_ref(&out.reported), &[1.0], level, exec)?;
                let severe = bma_combine_profile(std::slice::from_ref(&out.severe), &[1.0], level, exec)?;
                write_profile(
                    &config.output.join(format!("profiles_{model}.csv")),
                    series,
                    &reported,
                    &severe,
                    &out.severe_by_age,
                )?;
                outputs.push(out);
            }
            Ok(outputs)
        })(),
    )
}

/// Model evidences and model-averaged burden, R0 and profiles.
#[derive(Debug, Clone)]
pub struct EnsembleOutputs {
    pub evidences: Vec<ModelEvidence>,
    pub burden: BmaEstimate,
    pub r0: BmaEstimate,
    pub reported: Vec<BmaEstimate>,
    pub severe: Vec<BmaEstimate>,
    pub age_distribution: [f64; AGE_CLASSES],
}

impl EnsembleOutputs {
    pub fn pmps(&self) -> Vec<f64> {
        self.evidences.iter().map(|e| e.pmp).collect()
    }
}

pub fn bma_stage(
    config: &RunConfig,
    series: &CaseSeries,
    outputs: &[ModelOutputs],
    exec: Execution,
) -> Result<EnsembleOutputs> {
    stage(
        "bma",
        (|| {
            let level = config.interval_level;
            let fits: Vec<(ModelId, &PosteriorSummary)> =
                outputs.iter().map(|o| (o.model, &o.summary)).collect();
            let evidences = model_evidences(&fits);
            let pmps: Vec<f64> = evidences.iter().map(|e| e.pmp).collect();
            let burden = bma_combine_scalar(
                &outputs.iter().map(|o| o.burden.clone()).collect::<Vec<_>>(),
                &pmps,
                level,
            )?;
            let r0 = bma_combine_scalar(
                &outputs.iter().map(|o| o.r0.clone()).collect::<Vec<_>>(),
                &pmps,
                level,
            )?;
            let reported = bma_combine_profile(
                &outputs.iter().map(|o| o.reported.clone()).collect::<Vec<_>>(),
                &pmps,
                level,
                exec,
            )?;
            let severe = bma_combine_profile(
                &outputs.iter().map(|o| o.severe.clone()).collect::<Vec<_>>(),
                &pmps,
                level,
                exec,
            )?;
            let mut by_age = vec![[0.0; AGE_CLASSES]; series.weeks()];
            let mut age = [0.0; AGE_CLASSES];
            for (o, &p) in outputs.iter().zip(&pmps) {
                for (acc, w) in by_age.iter_mut().zip(&o.severe_by_age) {
                    for a in 0..AGE_CLASSES {
                        acc[a] += p * w[a];
                    }
                }
                for a in 0..AGE_CLASSES {
                    age[a] += p * o.age_distribution[a];
                }
            }

            let mut t = Table::new(&[
                "model",
                "max_log_likelihood",
                "k",
                "n",
                "bic",
                "pmp",
                "r0",
                "r0_lower",
                "r0_upper",
                "burden",
                "burden_lower",
                "burden_upper",
            ]);
            for (e, o) in evidences.iter().zip(outputs) {
                let r = single(&o.r0, level)?;
                let b = single(&o.burden, level)?;
                t.push(vec![
                    e.model.to_string(),
                    num(e.max_log_likelihood),
                    e.k.to_string(),
                    e.n.to_string(),
                    num(e.bic),
                    num(e.pmp),
                    num(r.point),
                    num(r.interval.0),
                    num(r.interval.1),
                    num(b.point),
                    num(b.interval.0),
                    num(b.interval.1),
                ]);
            }
            let na = || "NA".to_string();
            t.push(vec![
                "BMA".into(),
                na(),
                na(),
                na(),
                na(),
                num(pmps.iter().sum()),
                num(r0.point),
                num(r0.interval.0),
                num(r0.interval.1),
                num(burden.point),
                num(burden.interval.0),
                num(burden.interval.1),
            ]);
            t.write(&config.output.join("evidence.csv"))?;
            write_profile(
                &config.output.join("profiles_BMA.csv"),
                series,
                &reported,
                &severe,
                &by_age,
            )?;

            let mut a = Table::new(&["source", "age1", "age2", "age3", "age4", "age5", "age6"]);
            if let Ok(obs) = age_distribution(
                &series
                    .counts()
                    .iter()
                    .map(|w| w.map(|c| c as f64))
                    .collect::<Vec<_>>(),
            ) {
                a.push(
                    std::iter::once("observed".to_string())
                        .chain(obs.iter().map(|&v| num(v)))
                        .collect(),
                );
            }
            for o in outputs {
                a.push(
                    std::iter::once(o.model.to_string())
                        .chain(o.age_distribution.iter().map(|&v| num(v)))
                        .collect(),
                );
            }
            a.push(
                std::iter::once("BMA".to_string())
                    .chain(age.iter().map(|&v| num(v)))
                    .collect(),
            );
            a.write(&config.output.join("age_distribution.csv"))?;

            Ok(EnsembleOutputs {
                evidences,
                burden,
                r0,
                reported,
                severe,
                age_distribution: age,
            })
        })(),
    )
}

/// Model-averaged impact of one coverage level.
#[derive(Debug, Clone)]
pub struct BmaImpact {
    pub coverage: f64,
    pub percent_reduction: BmaEstimate,
    pub absolute_reduction: BmaEstimate,
    pub relative_incidence: Vec<BmaEstimate>,
    pub age_distribution: [f64; AGE_CLASSES],
}

#[derive(Debug, Clone)]
pub struct ScenarioImpact {
    pub seroconversion: f64,
    pub per_model: Vec<(ModelId, Vec<ImpactResult>)>,
    pub bma: Vec<BmaImpact>,
}

fn impact_table(rows: impl Iterator<Item = [f64; 9]>, peaks: Option<Vec<Vec<f64>>>) -> Table {
    let mut header = vec![
        "coverage",
        "percent_reduction",
        "lower99",
        "upper99",
        "absolute_reduction",
        "hpd_lower99",
        "hpd_upper99",
        "absolute_lower99",
        "absolute_upper99",
    ];
    let years = peaks.as_ref().and_then(|p| p.first().map(Vec::len)).unwrap_or(0);
    let peak_names: Vec<String> = (1..=years).map(|y| format!("peak_ratio_year{y}")).collect();
    header.extend(peak_names.iter().map(String::as_str));
    let mut t = Table::new(&header);
    for (i, r) in rows.enumerate() {
        let mut row: Vec<String> = r.iter().map(|&v| num(v)).collect();
        if let Some(p) = &peaks {
            row.extend(p[i].iter().map(|&v| num(v)));
        }
        t.push(row);
    }
    t
}

/// Coverage with its weekly relative incidence and interval.
type RelativeRow = (f64, Vec<(f64, (f64, f64))>);

fn relative_table(rows: &[RelativeRow]) -> Table {
    let mut t = Table::new(&["coverage", "week", "relative_incidence", "lower99", "upper99"]);
    for (c, series) in rows {
        for (w, (m, (lo, hi))) in series.iter().enumerate() {
            t.push(vec![num(*c), (w + 1).to_string(), num(*m), num(*lo), num(*hi)]);
        }
    }
    t
}

fn age_table(rows: &[(String, [f64; AGE_CLASSES])]) -> Table {
    let mut t = Table::new(&["coverage", "age1", "age2", "age3", "age4", "age5", "age6"]);
    for (label, d) in rows {
        t.push(
            std::iter::once(label.clone())
                .chain(d.iter().map(|&v| num(v)))
                .collect(),
        );
    }
    t
}

/// Coverage sweeps per model and seroconversion scenario, and their model
/// averages weighted by `pmps`.
pub fn project_stage(
    config: &RunConfig,
    chains: &[(ModelId, PosteriorChain)],
    pmps: &[f64],
    exec: Execution,
) -> Result<Vec<ScenarioImpact>> {
    stage(
        "project",
        (|| {
            let setting = config.setting();
            let mut scenarios = Vec::new();
            for &s in &config.seroconversion {
                let label = scenario_label(s);
                let mut per_model = Vec::new();
                for (model, chain) in chains {
                    let spec = ModelSpec::new(*model);
                    let draws = chain.thin(config.projection_draws);
                    let res = vaccination_impact(
                        &spec,
                        &draws,
                        &setting,
                        &config.coverage_grid,
                        s,
                        config.horizons(),
                        exec,
                    )
                    .map_err(|e| e.in_stage(&format!("model {model}")))?;
                    write_impact_files(config, &model.to_string(), &label, &res)?;
                    per_model.push((*model, res));
                }
                let bma = combine_impacts(config, &per_model, pmps, exec)?;
                write_bma_impact_files(config, &label, &bma)?;
                scenarios.push(ScenarioImpact {
                    seroconversion: s,
                    per_model,
                    bma,
                });
            }
            Ok(scenarios)
        })(),
    )
}

fn write_impact_files(config: &RunConfig, name: &str, label: &str, res: &[ImpactResult]) -> Result<()> {
    let rows = res.iter().map(|r| {
        [
            r.coverage,
            r.long_term_percent_reduction,
            r.percent_interval.0,
            r.percent_interval.1,
            r.long_term_absolute_reduction,
            r.percent_hpd.0,
            r.percent_hpd.1,
            r.absolute_interval.0,
            r.absolute_interval.1,
        ]
    });
    let peaks = res.iter().map(|r| r.peak_ratios.clone()).collect();
    impact_table(rows, Some(peaks)).write(&config.output.join(format!("impact_{name}_{label}.csv")))?;
    let rel: Vec<RelativeRow> = res
        .iter()
        .map(|r| {
            (
                r.coverage,
                r.relative_incidence_series
                    .iter()
                    .copied()
                    .zip(r.relative_incidence_interval.iter().copied())
                    .collect(),
            )
        })
        .collect();
    relative_table(&rel).write(&config.output.join(format!("relinc_{name}_{label}.csv")))?;
    let mut ages = vec![(
        "baseline".to_string(),
        res.first()
            .map_or([0.0; AGE_CLASSES], |r| r.baseline_age_distribution),
    )];
    ages.extend(
        res.iter()
            .map(|r| (num(r.coverage), r.vaccinated_age_distribution)),
    );
    age_table(&ages).write(&config.output.join(format!("agedist_{name}_{label}.csv")))
}

fn combine_impacts(
    config: &RunConfig,
    per_model: &[(ModelId, Vec<ImpactResult>)],
    pmps: &[f64],
    exec: Execution,
) -> Result<Vec<BmaImpact>> {
    let mut out = Vec::new();
    for (ci, &coverage) in config.coverage_grid.iter().enumerate() {
        let pick = |f: &dyn Fn(&ImpactResult) -> Vec<f64>| -> Vec<Vec<f64>> {
            per_model.iter().map(|(_, r)| f(&r[ci])).collect()
        };
        let pct = pick(&|r| r.draws.iter().map(|d| d.percent_reduction).collect());
        let abs = pick(&|r| r.draws.iter().map(|d| d.absolute_reduction).collect());
        let rel: Vec<Vec<Vec<f64>>> = per_model
            .iter()
            .map(|(_, r)| r[ci].draws.iter().map(|d| d.relative_incidence.clone()).collect())
            .collect();
        let mut age = [0.0; AGE_CLASSES];
        for ((_, r), &p) in per_model.iter().zip(pmps) {
            for a in 0..AGE_CLASSES {
                age[a] += p * r[ci].vaccinated_age_distribution[a];
            }
        }
        out.push(BmaImpact {
            coverage,
            percent_reduction: bma_combine_scalar(&pct, pmps, IMPACT_LEVEL)?,
            absolute_reduction: bma_combine_scalar(&abs, pmps, IMPACT_LEVEL)?,
            relative_incidence: bma_combine_profile(&rel, pmps, IMPACT_LEVEL, exec)?,
            age_distribution: age,
        });
    }
    Ok(out)
}

fn write_bma_impact_files(config: &RunConfig, label: &str, bma: &[BmaImpact]) -> Result<()> {
    let rows = bma.iter().map(|b| {
        [
            b.coverage,
            b.percent_reduction.point,
            b.percent_reduction.interval.0,
            b.percent_reduction.interval.1,
            b.absolute_reduction.point,
            b.percent_reduction.interval.0,
            b.percent_reduction.interval.1,
            b.absolute_reduction.interval.0,
            b.absolute_reduction.interval.1,
        ]
    });
    impact_table(rows, None).write(&config.output.join(format!("impact_BMA_{label}.csv")))?;
    let rel: Vec<RelativeRow> = bma
        .iter()
        .map(|b| {
            (
                b.coverage,
                b.relative_incidence
                    .iter()
                    .map(|e| (e.point, e.interval))
                    .collect(),
            )
        })
        .collect();
    relative_table(&rel).write(&config.output.join(format!("relinc_BMA_{label}.csv")))?;
    let ages: Vec<(String, [f64; AGE_CLASSES])> = bma
        .iter()
        .map(|b| (num(b.coverage), b.age_distribution))
        .collect();
    age_table(&ages).write(&config.output.join(format!("agedist_BMA_{label}.csv")))
}

/// Everything a full run produced.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub chains: Vec<(ModelId, PosteriorChain)>,
    pub outputs: Vec<ModelOutputs>,
    pub ensemble: EnsembleOutputs,
    pub scenarios: Vec<ScenarioImpact>,
    pub files: Vec<PathBuf>,
}

fn sources(config: &RunConfig) -> Vec<String> {
    let mut s: Vec<String> = config.models.iter().map(|m| m.to_string()).collect();
    s.push("BMA".into());
    s
}

/// Combines the per-model and model-averaged artifacts into one table per
/// figure family: `fig_reported.csv`, `fig_severe.csv`,
/// `fig_age_distribution.csv`, `fig_relative_incidence.csv` and
/// `fig_reduction.csv`.
pub fn emit_plot_tables(config: &RunConfig) -> Result<Vec<PathBuf>> {
    stage(
        "tables",
        (|| {
            let dir = &config.output;
            let mut reported = Table::new(&["source", "week", "observed", "reported", "lower", "upper"]);
            let mut severe = Table::new(&[
                "source", "week", "severe", "lower", "upper", "age1", "age2", "age3", "age4", "age5", "age6",
            ]);
            for src in sources(config) {
                let p = read_table(&dir.join(format!("profiles_{src}.csv")))?;
                let col = |n: &str| {
                    p.column_index(n)
                        .ok_or_else(|| Error::Config(format!("profiles_{src}.csv lacks {n}")))
                };
                let (wk, ob, re, rl, ru) = (
                    col("week")?,
                    col("observed")?,
                    col("reported")?,
                    col("reported_lower")?,
                    col("reported_upper")?,
                );
                let (se, sl, su, a1) = (
                    col("severe")?,
                    col("severe_lower")?,
                    col("severe_upper")?,
                    col("severe_age1")?,
                );
                for row in &p.rows {
                    reported.push(vec![
                        src.clone(),
                        row[wk].clone(),
                        row[ob].clone(),
                        row[re].clone(),
                        row[rl].clone(),
                        row[ru].clone(),
                    ]);
                    let mut s = vec![
                        src.clone(),
                        row[wk].clone(),
                        row[se].clone(),
                        row[sl].clone(),
                        row[su].clone(),
                    ];
                    s.extend(row[a1..a1 + AGE_CLASSES].iter().cloned());
                    severe.push(s);
                }
            }

            let mut ages = Table::new(&[
                "scenario", "source", "coverage", "age1", "age2", "age3", "age4", "age5", "age6",
            ]);
            let base = read_table(&dir.join("age_distribution.csv"))?;
            for row in &base.rows {
                let mut r = vec!["baseline".to_string(), row[0].clone(), "0".to_string()];
                r.extend(row[1..].iter().cloned());
                ages.push(r);
            }
            let mut rel = Table::new(&[
                "scenario",
                "source",
                "coverage",
                "week",
                "relative_incidence",
                "lower99",
                "upper99",
            ]);
            let mut red = Table::new(&[
                "scenario",
                "source",
                "coverage",
                "percent_reduction",
                "lower99",
                "upper99",
                "absolute_reduction",
            ]);
            for &s in &config.seroconversion {
                let label = scenario_label(s);
                for src in sources(config) {
                    let a = read_table(&dir.join(format!("agedist_{src}_{label}.csv")))?;
                    for row in a.rows.iter().filter(|r| r[0] != "baseline") {
                        let mut r = vec![label.clone(), src.clone()];
                        r.extend(row.iter().cloned());
                        ages.push(r);
                    }
                    let ri = read_table(&dir.join(format!("relinc_{src}_{label}.csv")))?;
                    for row in &ri.rows {
                        let mut r = vec![label.clone(), src.clone()];
                        r.extend(row.iter().cloned());
                        rel.push(r);
                    }
                    let im = read_table(&dir.join(format!("impact_{src}_{label}.csv")))?;
                    for row in &im.rows {
                        let mut r = vec![label.clone(), src.clone()];
                        r.extend(row[..5].iter().cloned());
                        red.push(r);
                    }
                }
            }
            let mut written = Vec::new();
            for (name, t) in [
                ("fig_reported.csv", &reported),
                ("fig_severe.csv", &severe),
                ("fig_age_distribution.csv", &ages),
                ("fig_relative_incidence.csv", &rel),
                ("fig_reduction.csv", &red),
            ] {
                let p = dir.join(name);
                t.write(&p)?;
                written.push(p);
            }
            Ok(written)
        })(),
    )
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// Fit, summarize, average, project and tabulate, then write
/// `config.txt` and `manifest.txt` listing a digest of every artifact.
pub fn run_pipeline(config: &RunConfig, exec: Execution) -> Result<RunArtifacts> {
    stage("config", config.validate())?;
    let series = stage("load", load_case_series(&config.data))?;
    let chains = fit_stage(config, &series, exec)?;
    let outputs = summarize_stage(config, &series, &chains, exec)?;
    let ensemble = bma_stage(config, &series, &outputs, exec)?;
    let scenarios = project_stage(config, &chains, &ensemble.pmps(), exec)?;
    emit_plot_tables(config)?;
    let files = stage("manifest", write_manifest(config, &series))?;
    Ok(RunArtifacts {
        chains,
        outputs,
        ensemble,
        scenarios,
        files,
    })
}

fn write_manifest(config: &RunConfig, series: &CaseSeries) -> Result<Vec<PathBuf>> {
    let dir = &config.output;
    write_text(&dir.join("config.txt"), &config.to_text())?;
    let mut m = Manifest::for_config(config);
    m.push("data", config.data.display());
    m.push("data_cells", series.cells());
    m.push(
        "models",
        config
            .models
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    for (i, model) in config.models.iter().enumerate() {
        m.push(&format!("seed.{model}"), config.model_seed(i));
    }
    let mut files = Vec::new();
    collect_files(dir, &mut files)?;
    files.retain(|p| p.file_name().is_some_and(|n| n != "manifest.txt"));
    for p in &files {
        let rel = p.strip_prefix(dir).unwrap_or(p);
        let bytes = std::fs::read(p)?;
        m.push(
            &format!("sha256.{}", rel.display()),
            crate::io::sha256_hex(&bytes),
        );
    }
    let path = dir.join("manifest.txt");
    m.write(&path)?;
    files.push(path);
    Ok(files)
}
