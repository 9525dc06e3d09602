use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::LevelFilter;

use ilqgames::batch::{
    export_batch, export_log, export_plan, export_sweep, plan_trajectory, render_table, run_batch,
    run_sweep, ExperimentConfig, ExportFormat,
};
use ilqgames::ilq::SolutionConcept;
use ilqgames::sim::run_scenario;
use ilqgames::Error;

#[derive(Parser)]
#[command(name = "ilqgames", version, about = "Game-theoretic racing planners: single solves, closed-loop runs, sweeps and Monte Carlo batches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one planning problem from the initial state and export the planned trajectory.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Planning player (0-based).
        #[arg(long, default_value_t = 0)]
        player: usize,
    },
    /// Run one closed-loop scenario.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the Monte Carlo planner matrix over the configured cost ratios.
    Batch {
        #[command(flatten)]
        common: Common,
    },
    /// First-step ego plan over a range of collision-cost ratios.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; library defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for start sampling (overrides batch.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Force one solution concept on every game-theoretic planner.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Log verbosity (-v warnings, -vv info).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    OpenLoop,
    Feedback,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| Failure::Config(e.to_string()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(mode) = common.mode {
        cfg.force_mode(match mode {
            Mode::OpenLoop => SolutionConcept::OpenLoop,
            Mode::Feedback => SolutionConcept::Feedback,
        });
    }
    if let Some(seed) = common.seed {
        cfg.batch.seed = seed;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(command: Command) -> Result<(), Failure> {
    let common = match &command {
        Command::Plan { common, .. }
        | Command::Simulate { common }
        | Command::Batch { common }
        | Command::Sweep { common } => common,
    };
    let level = match common.verbose {
        0 => LevelFilter::Error,
        1 => LevelFilter::Warn,
        _ => LevelFilter::Info,
    };
    env_logger::Builder::new().filter_level(level).init();
    let cfg = load(common)?;
    let format = match common.format {
        Format::Csv => ExportFormat::Csv,
        Format::Json => ExportFormat::Json,
    };
    let out = &common.out;

    match &command {
        Command::Plan { player, .. } => {
            let scenario = cfg.scenario();
            let (outcome, _) = plan_trajectory(&scenario, *player)?;
            let d = &outcome.diagnostics;
            println!("iterations = {}\nconverged = {}", d.iterations, d.converged);
            let plan = outcome.plan.as_ref().expect("successful plan carries its trajectory");
            report(&export_plan(plan, scenario.time_step, format, out)?);
        }
        Command::Simulate { .. } => {
            let log = run_scenario(&cfg.scenario(), cfg.batch.seed)?;
            print!("{}", log.summary_text());
            report(&export_log(&log, format, out)?);
        }
        Command::Batch { .. } => {
            let result = run_batch(&cfg.batch_spec())?;
            print!("{}", render_table(&result));
            println!("converged planning steps = {:.4}", result.converged_fraction());
            report(&export_batch(&result, format, out)?);
        }
        Command::Sweep { .. } => {
            let points = run_sweep(&cfg.scenario(), &cfg.batch.sweep_ratios)?;
            for p in &points {
                println!("ratio = {}  max_lateral_deviation = {:.4}", p.ratio, p.max_lateral_deviation);
            }
            report(&export_sweep(&points, format, out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("ilqgames: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("ilqgames: {msg}");
            ExitCode::from(2)
        }
    }
}
