use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dcesim::scenario::{self, ScenarioConfig};
use dcesim::Error;

#[derive(Parser)]
#[command(name = "dcesim", version, about = "Stated-choice design, simulation and estimation")]
struct Cli {
    /// Cap on worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON.
    #[arg(long)]
    config: PathBuf,
    /// Replace the config's seed.
    #[arg(long)]
    seed_override: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the design and write design.csv and efficiency.json.
    Design {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate choices on a design; writes dataset.csv and dataset.meta.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the configured models; writes estimate_<model>.json.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage and write all artifacts plus summary.json.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the config and exit.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed_override {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(path: &Path) -> Result<(), Error> {
    fs::create_dir_all(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

fn run(command: Command) -> Result<serde_json::Value, Error> {
    match command {
        Command::Design { common, out } => {
            let cfg = load(&common)?;
            let stage = scenario::run_design(&cfg)?;
            out_dir(&out)?;
            stage.write(&out)?;
            Ok(json!({
                "status": "ok",
                "command": "design",
                "n_sets": stage.design.n_sets(),
                "d_error": stage.report.d_error,
            }))
        }
        Command::Simulate { common, design, out } => {
            let cfg = load(&common)?;
            let design = scenario::load_design(&cfg, &design)?;
            let sim = scenario::run_simulate(&cfg, &design)?;
            out_dir(&out)?;
            sim.write(&out)?;
            Ok(json!({ "status": "ok", "command": "simulate", "n_rows": sim.dataset.rows.len() }))
        }
        Command::Estimate { common, dataset, out } => {
            let cfg = load(&common)?;
            let data = scenario::load_dataset(&cfg, &dataset)?;
            let reports = scenario::run_estimate(&cfg, &data)?;
            out_dir(&out)?;
            scenario::write_estimates(&cfg, &reports, &out)?;
            let converged: serde_json::Map<_, _> = reports
                .iter()
                .map(|r| (scenario::estimate_file_name(r.result.model), json!(r.result.converged)))
                .collect();
            Ok(json!({ "status": "ok", "command": "estimate", "converged": converged }))
        }
        Command::Pipeline { common, out } => {
            let cfg = load(&common)?;
            let summary = scenario::run_pipeline(&cfg, &out)?;
            Ok(json!({ "status": "ok", "command": "pipeline", "d_error": summary["d_error"] }))
        }
        Command::Validate { common } => {
            let cfg = load(&common)?;
            Ok(json!({ "status": "ok", "command": "validate", "seed": cfg.seed, "coefficients": cfg.coef_names() }))
        }
    }
}

fn fail(code: u8, kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "exit_code": code, "message": message }));
    ExitCode::from(code)
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| e.to_string()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    Ok(f())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            return fail(1, "usage", first);
        }
    };
    if cli.threads == Some(0) {
        return fail(1, "usage", "--threads must be at least 1");
    }
    match with_threads(cli.threads, move || run(cli.command)) {
        Err(msg) => fail(1, "usage", &msg),
        Ok(Err(e)) => fail(e.exit_code() as u8, e.kind(), &e.to_string()),
        Ok(Ok(report)) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
    }
}
