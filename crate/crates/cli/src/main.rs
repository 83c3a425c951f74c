//! `graphon-dyn`: batch front end for the dynamic graphon model.
//!
//! Exit codes: 0 success, 2 config error, 3 unsupported size, 4 runtime error.
//! `GRAPHON_DYN_THREADS` caps the worker pool.

mod commands;
mod config;
mod error;
mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{load_config, load_literal, RunConfig, SimConfig};
use error::{CliError, CliResult};
use manifest::write_outputs;

const THREADS_ENV: &str = "GRAPHON_DYN_THREADS";

#[derive(Parser)]
#[command(name = "graphon-dyn", version, about = "Dynamic graphon models: sampling, densities, cut metrics and ergodic diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run config (a previous run's manifest.json also works).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output files and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SeedArg {
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Homomorphism density of a pattern in a graph or a step graphon.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pattern: Option<PathBuf>,
        #[arg(long, conflicts_with = "graphon")]
        graph: Option<PathBuf>,
        #[arg(long)]
        graphon: Option<PathBuf>,
        /// Also report a Monte Carlo estimate with this many replicates.
        #[arg(long)]
        mc: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Cut norm of a signed step kernel, or of the difference of two graphons.
    Cutnorm {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with_all = ["graphon", "other"])]
        kernel: Option<PathBuf>,
        #[arg(long)]
        graphon: Option<PathBuf>,
        #[arg(long)]
        other: Option<PathBuf>,
    },
    /// Cut distance between two step graphons over block relabelings.
    Cutdist {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        graphon: Option<PathBuf>,
        #[arg(long)]
        other: Option<PathBuf>,
    },
    /// One graph snapshot from the model.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// A dynamic graph trajectory, one graph file per step.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Birkhoff partial averages of the conditional pattern probability.
    Ergodic {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        /// Overrides `analysis.n_steps`.
        #[arg(long)]
        n_steps: Option<usize>,
        /// Overrides `analysis.pattern_index`.
        #[arg(long)]
        pattern_index: Option<usize>,
    },
    /// Steps at which the watched nodes induce the pattern.
    Recurrence {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        pattern_index: Option<usize>,
        /// Match the pattern with its vertex labels instead of up to isomorphism.
        #[arg(long)]
        labeled: bool,
    },
    /// Edge density along repeated Markov-kernel smoothing of a graphon.
    Invariance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        graphon: Option<PathBuf>,
        /// JSON matrix of transition probabilities.
        #[arg(long)]
        transition: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        /// Balance the matrix to be doubly stochastic first.
        #[arg(long)]
        sinkhorn: bool,
    },
}

fn base_config(common: &Common) -> CliResult<RunConfig> {
    common.config.as_deref().map_or_else(|| Ok(RunConfig::default()), load_config)
}

fn override_seed(cfg: &mut RunConfig, seed: &SeedArg) {
    if let Some(s) = seed.seed {
        match &mut cfg.sim {
            Some(sim) => sim.seed = s,
            None => cfg.sim = Some(SimConfig { n_nodes: 0, horizon: 0, seed: s }),
        }
    }
}

fn literal<T: serde::de::DeserializeOwned>(slot: &mut Option<T>, path: &Option<PathBuf>) -> CliResult<()> {
    if let Some(p) = path {
        *slot = Some(load_literal(p)?);
    }
    Ok(())
}

type Runner = fn(&RunConfig) -> CliResult<manifest::RunOutput>;

/// Merges flags into the config and picks the command.
fn prepare(command: Command) -> CliResult<(&'static str, Common, RunConfig, Runner)> {
    Ok(match command {
        Command::Density { common, pattern, graph, graphon, mc, seed } => {
            let mut cfg = base_config(&common)?;
            literal(&mut cfg.inputs.pattern, &pattern)?;
            if graph.is_some() {
                cfg.inputs.graphon = None;
            }
            if graphon.is_some() {
                cfg.inputs.graph = None;
            }
            literal(&mut cfg.inputs.graph, &graph)?;
            literal(&mut cfg.inputs.graphon, &graphon)?;
            if mc.is_some() {
                cfg.analysis_mut().mc_samples = mc;
            }
            override_seed(&mut cfg, &seed);
            ("density", common, cfg, commands::density)
        }
        Command::Cutnorm { common, kernel, graphon, other } => {
            let mut cfg = base_config(&common)?;
            if kernel.is_some() {
                cfg.inputs.graphon = None;
                cfg.inputs.other = None;
            }
            literal(&mut cfg.inputs.kernel, &kernel)?;
            literal(&mut cfg.inputs.graphon, &graphon)?;
            literal(&mut cfg.inputs.other, &other)?;
            if graphon.is_some() || other.is_some() {
                cfg.inputs.kernel = None;
            }
            ("cutnorm", common, cfg, commands::cutnorm)
        }
        Command::Cutdist { common, graphon, other } => {
            let mut cfg = base_config(&common)?;
            literal(&mut cfg.inputs.graphon, &graphon)?;
            literal(&mut cfg.inputs.other, &other)?;
            ("cutdist", common, cfg, commands::cutdist)
        }
        Command::Sample { common, seed } => {
            let mut cfg = base_config(&common)?;
            override_seed(&mut cfg, &seed);
            ("sample", common, cfg, commands::sample)
        }
        Command::Simulate { common, seed } => {
            if common.out.is_none() {
                return Err(CliError::Config("simulate needs --out <dir>".into()));
            }
            let mut cfg = base_config(&common)?;
            override_seed(&mut cfg, &seed);
            ("simulate", common, cfg, commands::simulate)
        }
        Command::Ergodic { common, seed, n_steps, pattern_index } => {
            let mut cfg = base_config(&common)?;
            override_seed(&mut cfg, &seed);
            if n_steps.is_some() {
                cfg.analysis_mut().n_steps = n_steps;
            }
            if let Some(i) = pattern_index {
                cfg.analysis_mut().pattern_index = i;
            }
            ("ergodic", common, cfg, commands::ergodic)
        }
        Command::Recurrence { common, seed, pattern_index, labeled } => {
            let mut cfg = base_config(&common)?;
            override_seed(&mut cfg, &seed);
            if let Some(i) = pattern_index {
                cfg.analysis_mut().pattern_index = i;
            }
            if labeled {
                cfg.analysis_mut().labeled = true;
            }
            ("recurrence", common, cfg, commands::recurrence)
        }
        Command::Invariance { common, graphon, transition, steps, sinkhorn } => {
            let mut cfg = base_config(&common)?;
            literal(&mut cfg.inputs.graphon, &graphon)?;
            literal(&mut cfg.inputs.transition, &transition)?;
            if steps.is_some() {
                cfg.analysis_mut().smoothing_steps = steps;
            }
            if sinkhorn {
                cfg.analysis_mut().sinkhorn = true;
            }
            ("invariance", common, cfg, commands::invariance)
        }
    })
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let (name, common, cfg, runner) = prepare(cli.command)?;
    let output = runner(&cfg)?;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(dir) = common.out.as_deref() {
        write_outputs(dir, name, cfg, &output)?;
    }
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(output.stdout.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("graphon-dyn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
