//! Seeded experiment runs driven by JSON configs.

mod cli;
mod config;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::algorithms::{AlgoParams, Runner};
use crate::error::{Error, Result};
use crate::ingestion::{self, RawDataset};
use crate::metrics::IterationRecord;
use crate::objectives::{synth_quadratic, ObjectiveModel, ReferenceSolution};
use crate::topology::{build_mixing_matrices, build_ring_plus_random, check_assumption2, MixingMatrices};

pub use cli::cli_main;
pub use config::{parse_config, DataSource, ExperimentConfig, ObjectiveConfig};

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub records: Vec<IterationRecord>,
    pub config: ExperimentConfig,
    /// Parameters after defaults were resolved.
    pub params: AlgoParams,
    pub wall_time_secs: f64,
}

/// Everything a config fixes before the first iteration.
pub struct Problem {
    pub mixing: MixingMatrices,
    pub objective: ObjectiveModel,
    pub reference: ReferenceSolution,
}

impl Problem {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let seed = cfg.pull_graph_seed();
        let graph_r = build_ring_plus_random(cfg.n, cfg.d, seed)?;
        let graph_c = build_ring_plus_random(cfg.n, cfg.d, seed.wrapping_add(1))?;
        let mixing = build_mixing_matrices(&graph_r, &graph_c)?;
        let check = check_assumption2(&mixing);
        if !check.holds() {
            return Err(Error::Assumption(check.violations.join("; ")));
        }
        let objective = build_objective(cfg)?;
        let reference = objective.solve_centralized()?;
        Ok(Self {
            mixing,
            objective,
            reference,
        })
    }
}

fn build_objective(cfg: &ExperimentConfig) -> Result<ObjectiveModel> {
    match &cfg.objective {
        ObjectiveConfig::Quadratic { eig_min, eig_max, seed } => {
            synth_quadratic(cfg.n, cfg.p, *eig_min, *eig_max, *seed)
        }
        ObjectiveConfig::Logistic { mu, data } => {
            let (dataset, seed) = match data {
                DataSource::Synth { per_agent, seed } => {
                    (ingestion::synth_logistic(cfg.n, cfg.p, *per_agent, *seed)?, *seed)
                }
                DataSource::File {
                    path,
                    normalize,
                    per_agent,
                    seed,
                } => {
                    let mut d = ingestion::load_qsar_csv(path)?;
                    if d.dim() != cfg.p {
                        return Err(Error::config("p", format!("dataset has {} features", d.dim())));
                    }
                    if *normalize {
                        d = ingestion::normalize_features(&d);
                    }
                    (subsample(d, cfg.n, *per_agent, *seed)?, *seed)
                }
            };
            let shards = ingestion::partition_to_agents(&dataset, cfg.n, seed)?;
            ObjectiveModel::logistic(shards, *mu)
        }
    }
}

fn subsample(d: RawDataset, n: usize, per_agent: Option<usize>, seed: u64) -> Result<RawDataset> {
    let Some(k) = per_agent else { return Ok(d) };
    let want = n * k;
    if want > d.len() {
        return Err(Error::config(
            "objective.data.per_agent",
            format!("{want} samples requested, dataset has {}", d.len()),
        ));
    }
    let order = ingestion::permutation(d.len(), seed.wrapping_add(1));
    Ok(d.select(&order[..want]))
}

/// Builds everything from `cfg`, starts at `X0 = 0` and runs `cfg.iters` steps.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let problem = Problem::build(cfg)?;
    run_on(&problem, cfg, started)
}

/// Runs `cfg` on an already-built problem.
pub fn run_on_problem(problem: &Problem, cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_on(problem, cfg, Instant::now())
}

fn run_on(problem: &Problem, cfg: &ExperimentConfig, started: Instant) -> Result<RunOutput> {
    let (_, smoothness) = problem.objective.constants_mu_l();
    let params = cfg.algo_params(smoothness);
    let x0 = DMatrix::zeros(cfg.n, problem.objective.dim());
    let mut runner = Runner::new(
        cfg.algo,
        &problem.mixing,
        &problem.objective,
        &problem.reference,
        params.clone(),
        cfg.compressor,
        x0,
        cfg.seed,
    )?;
    let records = runner.run(cfg.iters)?;
    Ok(RunOutput {
        records,
        config: cfg.clone(),
        params,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Runs `cfg` once per `gamma`, in parallel, on a shared problem.
pub fn sweep_gamma(cfg: &ExperimentConfig, gammas: &[f64]) -> Result<Vec<(f64, Result<RunOutput>)>> {
    let problem = Problem::build(cfg)?;
    Ok(gammas
        .par_iter()
        .map(|&gamma| {
            let run = ExperimentConfig { gamma, ..cfg.clone() };
            let out = run.validate().and_then(|_| run_on_problem(&problem, &run));
            (gamma, out)
        })
        .collect())
}

/// `run.csv` → `run.gamma-0.5.csv`.
pub fn sweep_output_path(base: &Path, gamma: f64) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.gamma-{gamma}.{}", ext.to_string_lossy()),
        None => format!("{stem}.gamma-{gamma}"),
    };
    base.with_file_name(name)
}

/// Writes the records as CSV and the config echo next to it as
/// `<path>.meta.json`.
pub fn write_csv(out: &RunOutput, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::Writer::from_writer(file);
    for rec in &out.records {
        wtr.serialize(rec)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;

    let meta_path = meta_path(path);
    let meta = serde_json::json!({
        "config": out.config,
        "params": out.params,
        "wall_time_secs": out.wall_time_secs,
        "records": out.records.len(),
    });
    let mut f = File::create(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    writeln!(
        f,
        "{}",
        serde_json::to_string_pretty(&meta).expect("json value serializes")
    )
    .map_err(|e| Error::io(&meta_path, e))
}

pub fn meta_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<IterationRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(Error::from)
}
