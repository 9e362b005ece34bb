//! Experiment orchestration: run traversal methods over many seeded
//! trajectories, track a distributional drift proxy, and emit CSV/JSON.
//!
//! Sampling is paired: every method (and every box scale) in one experiment
//! consumes the identical `(z0, direction)` pair per trajectory index, so
//! method comparisons are matched rather than independent draws. Trajectories
//! run concurrently but results are assembled in trajectory order, so output
//! bytes do not depend on scheduling.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{
    gen_feature_extractor, gen_mapping_network, reference_rng, sample_direction, sample_z,
    trajectory_rng, FixtureConfig,
};
use crate::metrics::{fit_gaussian, frechet_distance, FeaturePopulation};
use crate::net::{MappingNetwork, Network};
use crate::traversal::{Method, Traversal, TraversalConfig, TraversalRecord};

/// Exact header of the records CSV.
pub const CSV_HEADER: &str = "method,alpha,trajectory,iter,cos_sim,step_len,cum_dist";

/// One experiment: a network (file or fixture), the methods to compare, and
/// the sweep/sampling parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Path to a network JSON file. Exactly one of `network_file` and
    /// `fixture` must be set.
    #[serde(default)]
    pub network_file: Option<PathBuf>,
    /// Fixture description to generate the network from.
    #[serde(default)]
    pub fixture: Option<FixtureConfig>,
    pub methods: Vec<Method>,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_length")]
    pub step_length: f64,
    #[serde(default = "default_alpha_values")]
    pub alpha_values: Vec<f64>,
    #[serde(default = "default_sv_threshold")]
    pub sv_threshold: f64,
    /// Record the Fréchet proxy every this many iterations (iteration 0,
    /// the initial population, is always included).
    #[serde(default = "default_fid_interval")]
    pub fid_interval: usize,
    /// Seed for the feature extractor and the reference population.
    #[serde(default)]
    pub feature_seed: u64,
    /// Seed behind all per-trajectory sampling.
    #[serde(default)]
    pub master_seed: u64,
    /// Fail on the first trajectory error instead of flagging its rows.
    #[serde(default)]
    pub strict: bool,
}

fn default_trajectories() -> usize {
    1000
}

fn default_steps() -> usize {
    500
}

fn default_step_length() -> f64 {
    2.0
}

fn default_alpha_values() -> Vec<f64> {
    vec![1.0]
}

fn default_sv_threshold() -> f64 {
    0.05
}

fn default_fid_interval() -> usize {
    50
}

/// The scaling factors studied in the sweep preset.
pub const ALPHA_SWEEP: [f64; 3] = [0.5, 1.0, 2.0];

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.network_file, &self.fixture) {
            (Some(_), Some(_)) => {
                return Err(Error::Input(
                    "set either network_file or fixture, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Input(
                    "one of network_file or fixture is required".into(),
                ))
            }
            _ => {}
        }
        if self.methods.is_empty() {
            return Err(Error::Input("methods must not be empty".into()));
        }
        if self.trajectories < 1 {
            return Err(Error::Input("trajectories must be >= 1".into()));
        }
        if self.steps < 1 {
            return Err(Error::Input("steps must be >= 1".into()));
        }
        if self.fid_interval < 1 {
            return Err(Error::Input("fid_interval must be >= 1".into()));
        }
        if self.alpha_values.is_empty() || !self.alpha_values.iter().all(|&a| a > 0.0) {
            return Err(Error::Input("alpha_values must be positive".into()));
        }
        Ok(())
    }

    /// Load the network from the file or generate the fixture.
    pub fn load_network(&self) -> Result<MappingNetwork> {
        match (&self.network_file, &self.fixture) {
            (Some(path), None) => MappingNetwork::load(path),
            (None, Some(fixture)) => gen_mapping_network(fixture),
            _ => Err(Error::Input(
                "one of network_file or fixture is required".into(),
            )),
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json(&json)
    }
}

/// One CSV row: one iteration of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub alpha: f64,
    pub trajectory: usize,
    pub iter: usize,
    pub cos_sim: f64,
    pub step_len: f64,
    pub cum_dist: f64,
}

/// Fréchet-proxy values of one `(method, alpha)` run at checkpoint
/// iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetSeries {
    pub method: Method,
    pub alpha: f64,
    pub series: Vec<(usize, f64)>,
}

/// A trajectory that failed mid-run; its remaining rows are NaN-flagged.
#[derive(Debug, Clone)]
pub struct TrajectoryFailure {
    pub method: Method,
    pub alpha: f64,
    pub trajectory: usize,
    pub iter: usize,
    pub reason: String,
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub frechet: Vec<FrechetSeries>,
    pub failures: Vec<TrajectoryFailure>,
}

/// The `(z0, direction, step_seed)` triple for trajectory `t`. Shared by
/// every method in the experiment; this is what makes comparisons paired.
pub fn trajectory_inputs(master_seed: u64, trajectory: u64, dim: usize) -> (Vec<f64>, Vec<f64>, u64) {
    let mut rng = trajectory_rng(master_seed, trajectory);
    let z0 = sample_z(dim, &mut rng);
    let direction = sample_direction(dim, &mut rng);
    let step_seed = rng.next_u64();
    (z0, direction, step_seed)
}

struct TrajectoryRun {
    records: Vec<TraversalRecord>,
    /// `w` at each checkpoint iteration reached before any failure.
    snapshots: Vec<(usize, Vec<f64>)>,
    failure: Option<(usize, String)>,
}

fn run_trajectory(
    net: &MappingNetwork,
    method: Method,
    alpha: f64,
    cfg: &ExperimentConfig,
    trajectory: usize,
) -> TrajectoryRun {
    let dim = net.dim();
    let (z0, direction, step_seed) = trajectory_inputs(cfg.master_seed, trajectory as u64, dim);
    let tcfg = TraversalConfig {
        method,
        steps: cfg.steps,
        step_length: cfg.step_length,
        alpha,
        sv_threshold: cfg.sv_threshold,
        seed: step_seed,
    };

    let mut records = Vec::with_capacity(cfg.steps);
    let mut snapshots = Vec::new();
    let mut failure = None;

    match Traversal::new(net, tcfg, &z0, &direction) {
        Ok(mut tr) => {
            snapshots.push((0, tr.state().w.clone()));
            for iter in 1..=cfg.steps {
                match tr.step() {
                    Ok(record) => {
                        if iter % cfg.fid_interval == 0 {
                            snapshots.push((iter, tr.state().w.clone()));
                        }
                        records.push(record);
                    }
                    Err(e) => {
                        failure = Some((iter, e.to_string()));
                        break;
                    }
                }
            }
        }
        Err(e) => failure = Some((0, e.to_string())),
    }

    // NaN-flag the remaining grid so every (trajectory, iter) cell exists.
    let done = records.len();
    for iter in (done + 1)..=cfg.steps {
        records.push(TraversalRecord {
            iter,
            cos_sim: f64::NAN,
            step_len: f64::NAN,
            cum_dist: f64::NAN,
            w_norm: f64::NAN,
        });
    }

    TrajectoryRun {
        records,
        snapshots,
        failure,
    }
}

/// Reference feature population: `M(z)` for `z ~ N(0, I)` drawn from the
/// feature-seed stream, embedded by the extractor. Depends only on the
/// network, `feature_seed` and `trajectories`.
fn reference_population(
    net: &MappingNetwork,
    extractor: &Network,
    feature_seed: u64,
    count: usize,
) -> Result<FeaturePopulation> {
    let mut rng = reference_rng(feature_seed);
    let mut features = Vec::with_capacity(count);
    for _ in 0..count {
        let z = sample_z(net.dim(), &mut rng);
        let w = net.forward(&z)?;
        features.push(extractor.forward(&w)?);
    }
    fit_gaussian(features)
}

/// Run the full experiment grid `methods x alpha_values x trajectories`.
///
/// Row order is method, then alpha, then trajectory, then iteration —
/// deterministic for a given config regardless of how trajectories are
/// scheduled.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let net = cfg.load_network()?;
    let extractor_cfg = FixtureConfig {
        dim: net.dim(),
        seed: cfg.feature_seed,
        ..FixtureConfig::default()
    };
    let extractor = gen_feature_extractor(&extractor_cfg)?;
    let reference = if cfg.trajectories >= 2 {
        Some(reference_population(
            &net,
            &extractor,
            cfg.feature_seed,
            cfg.trajectories,
        )?)
    } else {
        None
    };

    let mut rows = Vec::new();
    let mut frechet = Vec::new();
    let mut failures = Vec::new();

    for &method in &cfg.methods {
        for &alpha in &cfg.alpha_values {
            let runs: Vec<TrajectoryRun> = (0..cfg.trajectories)
                .into_par_iter()
                .map(|t| run_trajectory(&net, method, alpha, cfg, t))
                .collect();

            for (t, run) in runs.iter().enumerate() {
                if let Some((iter, reason)) = &run.failure {
                    if cfg.strict {
                        return Err(Error::Numeric {
                            iter: *iter,
                            reason: format!(
                                "method {method}, alpha {alpha}, trajectory {t}: {reason}"
                            ),
                        });
                    }
                    failures.push(TrajectoryFailure {
                        method,
                        alpha,
                        trajectory: t,
                        iter: *iter,
                        reason: reason.clone(),
                    });
                }
                for record in &run.records {
                    rows.push(ResultRow {
                        method,
                        alpha,
                        trajectory: t,
                        iter: record.iter,
                        cos_sim: record.cos_sim,
                        step_len: record.step_len,
                        cum_dist: record.cum_dist,
                    });
                }
            }

            if let Some(reference) = &reference {
                let mut series = Vec::new();
                let mut checkpoint_iters: Vec<usize> = vec![0];
                checkpoint_iters
                    .extend((1..=cfg.steps).filter(|iter| iter % cfg.fid_interval == 0));
                for iter in checkpoint_iters {
                    let population: Vec<Vec<f64>> = runs
                        .iter()
                        .filter_map(|run| {
                            run.snapshots
                                .iter()
                                .find(|(i, _)| *i == iter)
                                .map(|(_, w)| w.clone())
                        })
                        .collect();
                    if population.len() < 2 {
                        continue;
                    }
                    let features: Result<Vec<Vec<f64>>> =
                        population.iter().map(|w| extractor.forward(w)).collect();
                    let fit = fit_gaussian(features?)?;
                    series.push((iter, frechet_distance(&fit, reference)?));
                }
                frechet.push(FrechetSeries {
                    method,
                    alpha,
                    series,
                });
            }
        }
    }

    Ok(ExperimentResult {
        rows,
        frechet,
        failures,
    })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// 17 significant digits: enough to round-trip any f64 exactly.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render rows as CSV (exact header, UNIX newlines, 17-digit floats).
pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.method,
            format_float(row.alpha),
            row.trajectory,
            row.iter,
            format_float(row.cos_sim),
            format_float(row.step_len),
            format_float(row.cum_dist),
        ));
    }
    out
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
    file.write_all(csv_string(rows).as_bytes())
        .map_err(|e| Error::file(path, e))
}

/// Parse a records CSV produced by [`csv_string`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(Error::Input(format!(
                "bad CSV header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Input(format!(
                "line {}: expected 7 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Input(format!("line {}: bad float {s:?}", lineno + 2)))
        };
        let parse_u = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Input(format!("line {}: bad integer {s:?}", lineno + 2)))
        };
        rows.push(ResultRow {
            method: fields[0].parse()?,
            alpha: parse_f(fields[1])?,
            trajectory: parse_u(fields[2])?,
            iter: parse_u(fields[3])?,
            cos_sim: parse_f(fields[4])?,
            step_len: parse_f(fields[5])?,
            cum_dist: parse_f(fields[6])?,
        });
    }
    Ok(rows)
}

pub fn frechet_json_string(series: &[FrechetSeries]) -> Result<String> {
    let mut out = serde_json::to_string_pretty(series)?;
    out.push('\n');
    Ok(out)
}

pub fn write_frechet_json(series: &[FrechetSeries], path: &Path) -> Result<()> {
    let json = frechet_json_string(series)?;
    std::fs::write(path, json).map_err(|e| Error::file(path, e))
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

/// Mean and sample standard deviation of each metric over trajectories, per
/// `(method, alpha, iter)`. Non-finite (failure-flagged) rows are skipped
/// and excluded from `count`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub alpha: f64,
    pub iter: usize,
    pub count: usize,
    pub mean_cos_sim: f64,
    pub std_cos_sim: f64,
    pub mean_step_len: f64,
    pub std_step_len: f64,
    pub mean_cum_dist: f64,
    pub std_cum_dist: f64,
}

#[derive(Default, Clone)]
struct Accumulator {
    count: usize,
    sums: [f64; 3],
    sumsq: [f64; 3],
}

impl Accumulator {
    fn push(&mut self, values: [f64; 3]) {
        self.count += 1;
        for (i, v) in values.into_iter().enumerate() {
            self.sums[i] += v;
            self.sumsq[i] += v * v;
        }
    }

    fn mean_std(&self, i: usize) -> (f64, f64) {
        if self.count == 0 {
            return (f64::NAN, f64::NAN);
        }
        let n = self.count as f64;
        let mean = self.sums[i] / n;
        if self.count < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sumsq[i] - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, var.sqrt())
    }
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    use std::collections::HashMap;
    let mut order: Vec<(Method, u64, usize)> = Vec::new();
    let mut groups: HashMap<(Method, u64, usize), Accumulator> = HashMap::new();
    for row in rows {
        let key = (row.method, row.alpha.to_bits(), row.iter);
        let acc = groups.entry(key).or_insert_with(|| {
            order.push(key);
            Accumulator::default()
        });
        if row.cos_sim.is_finite() && row.step_len.is_finite() && row.cum_dist.is_finite() {
            acc.push([row.cos_sim, row.step_len, row.cum_dist]);
        }
    }
    order
        .into_iter()
        .map(|key| {
            let acc = &groups[&key];
            let (mean_cos_sim, std_cos_sim) = acc.mean_std(0);
            let (mean_step_len, std_step_len) = acc.mean_std(1);
            let (mean_cum_dist, std_cum_dist) = acc.mean_std(2);
            SummaryRow {
                method: key.0,
                alpha: f64::from_bits(key.1),
                iter: key.2,
                count: acc.count,
                mean_cos_sim,
                std_cos_sim,
                mean_step_len,
                std_step_len,
                mean_cum_dist,
                std_cum_dist,
            }
        })
        .collect()
}

/// Render a summary as an aligned text table.
pub fn summary_table(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<8} {:>6} {:>6} {:>6} {:>10} {:>10} {:>10} {:>10} {:>12} {:>12}\n",
        "method",
        "alpha",
        "iter",
        "count",
        "cos_mean",
        "cos_std",
        "step_mean",
        "step_std",
        "cum_mean",
        "cum_std"
    ));
    for row in summary {
        out.push_str(&format!(
            "{:<8} {:>6.3} {:>6} {:>6} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>12.5} {:>12.5}\n",
            row.method.name(),
            row.alpha,
            row.iter,
            row.count,
            row.mean_cos_sim,
            row.std_cos_sim,
            row.mean_step_len,
            row.std_step_len,
            row.mean_cum_dist,
            row.std_cum_dist
        ));
    }
    out
}
