//! Command-line interface.
//!
//! Subcommands: `gen-net` (write a fixture network), `traverse` (run an
//! experiment config), `optimize` (run one optimization task preset),
//! `report` (summarize a records CSV). Exit codes: 0 success, 1 usage
//! error, 2 runtime error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;

use crate::error::{Error, Result};
use crate::fixtures::{
    gen_feature_extractor, gen_mapping_network, gen_scorer, sample_z, trajectory_rng, Activation,
    FixtureConfig,
};
use crate::harness::{
    self, parse_csv, run_experiment, summarize, summary_table, write_csv, write_frechet_json,
    ExperimentConfig,
};
use crate::optimize::{run_optimization, Driver, LossSpec};

#[derive(Parser)]
#[command(name = "latentnav", version, about = "Singular-value-bounded latent space navigation")]
struct Cli {
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded fixture mapping network as a JSON weight file.
    GenNet(GenNetArgs),
    /// Run a traversal experiment described by a JSON config.
    Traverse(TraverseArgs),
    /// Run one optimization task preset and write its loss series.
    Optimize(OptimizeArgs),
    /// Summarize a records CSV as a table on standard output.
    Report(ReportArgs),
}

#[derive(clap::Args)]
struct GenNetArgs {
    /// Seed for the generated weights.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Latent dimension.
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Number of linear layers.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Hidden width (defaults to --dim).
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Activation between linear layers.
    #[arg(long, value_enum, default_value_t = ActivationArg::LeakyRelu)]
    activation: ActivationArg,
    /// Slope of the leaky-relu activation.
    #[arg(long, default_value_t = 0.2)]
    slope: f64,
    /// Prepend a pixel-norm layer.
    #[arg(long)]
    pixel_norm: bool,
    /// Output file.
    #[arg(long, default_value = "net.json")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ActivationArg {
    LeakyRelu,
    Tanh,
    None,
}

#[derive(clap::Args)]
struct TraverseArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for records.csv and frechet.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the config's master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Fail on the first trajectory error instead of flagging rows.
    #[arg(long)]
    strict: bool,
}

#[derive(clap::Args)]
struct OptimizeArgs {
    /// Objective preset.
    #[arg(long, value_enum)]
    task: Task,
    /// Update rule.
    #[arg(long, value_enum)]
    driver: DriverArg,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    /// Learning rate; defaults depend on task and driver.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    sv_threshold: f64,
    /// Latent dimension of the fixture network.
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Depth of the fixture network.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Seed for the fixture networks and latent draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target squared distance (latent-distance task).
    #[arg(long, default_value_t = 100.0)]
    target_sq_dist: f64,
    /// Target score (score-match task).
    #[arg(long, default_value_t = 1.0)]
    target_score: f64,
    /// Output directory for loss.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    LatentDistance,
    ScoreMatch,
    FeatureMatch,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DriverArg {
    Sgd,
    Bounded,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// Records CSV to summarize.
    csv: PathBuf,
}

/// Parse and dispatch; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenNet(args) => gen_net(args, cli.quiet),
        Command::Traverse(args) => traverse(args, cli.quiet),
        Command::Optimize(args) => optimize(args, cli.quiet),
        Command::Report(args) => report(args),
    }
}

fn gen_net(args: GenNetArgs, quiet: bool) -> Result<()> {
    let activation = match args.activation {
        ActivationArg::LeakyRelu => Some(Activation::LeakyRelu { slope: args.slope }),
        ActivationArg::Tanh => Some(Activation::Tanh),
        ActivationArg::None => None,
    };
    let cfg = FixtureConfig {
        dim: args.dim,
        depth: args.depth,
        hidden_dim: args.hidden_dim,
        activation,
        use_pixel_norm: args.pixel_norm,
        seed: args.seed,
    };
    let net = gen_mapping_network(&cfg)?;
    net.save(&args.out)?;
    if !quiet {
        eprintln!(
            "wrote {}x{} network ({} layers) to {}",
            args.dim,
            args.dim,
            net.as_network().layers().len(),
            args.out.display()
        );
    }
    Ok(())
}

fn traverse(args: TraverseArgs, quiet: bool) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if args.strict {
        cfg.strict = true;
    }
    let result = run_experiment(&cfg)?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::file(&args.out, e))?;
    let records_path = args.out.join("records.csv");
    let frechet_path = args.out.join("frechet.json");
    write_csv(&result.rows, &records_path)?;
    write_frechet_json(&result.frechet, &frechet_path)?;

    if !quiet {
        eprintln!(
            "wrote {} rows to {} and {} series to {}",
            result.rows.len(),
            records_path.display(),
            result.frechet.len(),
            frechet_path.display()
        );
        if !result.failures.is_empty() {
            eprintln!(
                "{} trajectories failed and were NaN-flagged (first: method {}, trajectory {}, iteration {}: {})",
                result.failures.len(),
                result.failures[0].method,
                result.failures[0].trajectory,
                result.failures[0].iter,
                result.failures[0].reason
            );
        }
    }
    Ok(())
}

fn default_lr(task: Task, driver: DriverArg) -> f64 {
    // The constrained driver tolerates a larger rate than plain descent;
    // the ratios follow the published per-task settings.
    match (task, driver) {
        (Task::LatentDistance, DriverArg::Sgd) => 1e-3,
        (Task::LatentDistance, DriverArg::Bounded) => 5e-3,
        (Task::ScoreMatch, DriverArg::Sgd) => 1e-2,
        (Task::ScoreMatch, DriverArg::Bounded) => 5e-2,
        (Task::FeatureMatch, DriverArg::Sgd) => 1e-2,
        (Task::FeatureMatch, DriverArg::Bounded) => 2e-2,
    }
}

fn optimize(args: OptimizeArgs, quiet: bool) -> Result<()> {
    let fixture = FixtureConfig {
        dim: args.dim,
        depth: args.depth,
        seed: args.seed,
        ..FixtureConfig::default()
    };
    let net = gen_mapping_network(&fixture)?;

    // stream 16: initial latent; stream 17: anchors/targets; stream 18: mask
    let mut init_rng = trajectory_rng(args.seed, 0);
    let init_z = sample_z(args.dim, &mut init_rng);
    let mut aux_rng = trajectory_rng(args.seed, 1);

    let spec = match args.task {
        Task::LatentDistance => {
            let anchor = net.forward(&sample_z(args.dim, &mut aux_rng))?;
            LossSpec::latent_distance(anchor, args.target_sq_dist)?
        }
        Task::ScoreMatch => {
            LossSpec::score_match(gen_scorer(&fixture)?, args.target_score)?
        }
        Task::FeatureMatch => {
            let extractor = gen_feature_extractor(&fixture)?;
            let target_w = net.forward(&sample_z(args.dim, &mut aux_rng))?;
            let target = extractor.forward(&target_w)?;
            let mut mask_rng = trajectory_rng(args.seed, 2);
            let mut mask: Vec<f64> = (0..target.len())
                .map(|_| if mask_rng.gen::<bool>() { 1.0 } else { 0.0 })
                .collect();
            if mask.iter().all(|&m| m == 0.0) {
                mask[0] = 1.0;
            }
            LossSpec::feature_match(extractor, target, mask)?
        }
    };

    let driver = match args.driver {
        DriverArg::Sgd => Driver::Sgd,
        DriverArg::Bounded => Driver::Bounded,
    };
    let lr = args.lr.unwrap_or_else(|| default_lr(args.task, args.driver));
    let states = run_optimization(
        &net,
        &spec,
        &init_z,
        args.iters,
        lr,
        driver,
        args.alpha,
        args.sv_threshold,
    )?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::file(&args.out, e))?;
    let path = args.out.join("loss.csv");
    let mut csv = String::from("iter,loss\n");
    for state in &states {
        csv.push_str(&format!(
            "{},{}\n",
            state.iter,
            harness::format_float(state.loss)
        ));
    }
    std::fs::write(&path, csv).map_err(|e| Error::file(&path, e))?;

    if !quiet {
        eprintln!(
            "loss {:.6e} -> {:.6e} over {} iterations (lr {lr}); wrote {}",
            states[0].loss,
            states.last().unwrap().loss,
            args.iters,
            path.display()
        );
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.csv).map_err(|e| Error::file(&args.csv, e))?;
    let rows = parse_csv(&text)?;
    let summary = summarize(&rows);
    print!("{}", summary_table(&summary));
    Ok(())
}
