//! Command-line runner for the cat-state amplification experiments.
//!
//! Exit codes: 0 success, 1 verification failure or runtime error,
//! 2 usage or configuration error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use catamp::ca::{iterate_tree, TreeConfig};
use catamp::experiments::{run, write_atomic, ExperimentConfig, EXPERIMENTS};
use catamp::verify::{check_dim, run_criterion, CRITERIA};
use catamp::Error;

#[derive(Parser)]
#[command(name = "catamp", version, about = "Cat-state generation and amplification experiments")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write `<experiment>.csv` and `summary.json`.
    Run {
        /// Experiment name (see `list`); optional when `--config` names one.
        experiment: Option<String>,
        /// Fock-space truncation per mode.
        #[arg(long)]
        dim: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Experiment parameter override, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
        overrides: Vec<(String, f64)>,
        /// JSON file with `{experiment, dim, overrides, output_dir}`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print a pass/fail table.
    VerifyAll {
        #[arg(long, default_value_t = catamp::fock::DEFAULT_DIM)]
        dim: usize,
        /// Restrict to these criterion ids, repeatable.
        #[arg(long = "only", value_name = "ID")]
        only: Vec<u8>,
    },
    /// Run an amplification tree from a JSON config and print per-stage CSV.
    Tree {
        /// JSON file with `{alpha_i, source, stages, detector, accept, dim}`.
        #[arg(long)]
        config: PathBuf,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available experiments.
    List,
}

/// `println!` that exits quietly when the reader closes the pipe.
macro_rules! emit {
    ($($arg:tt)*) => {
        emit_raw(&format!("{}\n", format_args!($($arg)*)))
    };
}

fn emit_raw(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing to stdout: {e}");
        std::process::exit(1);
    }
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("value of `{k}`: {e}"))?;
    if !v.is_finite() {
        return Err(format!("value of `{k}` must be finite"));
    }
    Ok((k.trim().to_owned(), v))
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
    Verification,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let usage = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<Error>(),
                Some(Error::UnknownExperiment(_) | Error::InvalidParameter(_) | Error::Json(_))
            )
        });
        if usage {
            Failure::Usage(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Usage(anyhow::anyhow!("--jobs must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    match cli.command {
        Command::List => {
            for (name, description, keys) in EXPERIMENTS {
                emit!("{name:<14} {description} [overrides: {}]", keys.join(", "));
            }
            Ok(())
        }
        Command::Run { experiment, dim, out, overrides, config } => {
            let cfg = build_config(experiment, dim, out, overrides, config)?;
            let report = run(&cfg).with_context(|| format!("experiment `{}`", cfg.experiment))?;
            for check in &report.summary {
                emit!("{}", check.line());
            }
            for f in &report.files {
                emit!("wrote {}", f.display());
            }
            if report.pass() {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::VerifyAll { dim, only } => verify_all(dim, &only),
        Command::Tree { config, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg: TreeConfig =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(anyhow::Error::new(e).context("tree config")))?;
            let result = iterate_tree(&cfg).context("tree run")?;
            let mut csv = String::from("stage,prob,fidelity,purity,amplitude\n");
            for s in &result.stages {
                csv.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    s.stage, s.prob, s.fidelity, s.purity, s.amplitude
                ));
            }
            match out {
                Some(path) => write_atomic(&path, csv.as_bytes()).context("writing tree CSV")?,
                None => emit_raw(&csv),
            }
            Ok(())
        }
    }
}

fn build_config(
    experiment: Option<String>,
    dim: Option<usize>,
    out: Option<PathBuf>,
    overrides: Vec<(String, f64)>,
    config: Option<PathBuf>,
) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (&config, experiment) {
        (Some(path), name) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text)
                .map_err(Error::from)
                .with_context(|| format!("parsing {}", path.display()))?;
            if let Some(name) = name {
                cfg.experiment = name;
            }
            cfg
        }
        (None, Some(name)) => ExperimentConfig::new(name),
        (None, None) => bail!(Error::InvalidParameter("name an experiment or pass --config".into())),
    };
    if let Some(d) = dim {
        cfg.dim = d;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.overrides.extend(overrides);
    cfg.validate()?;
    Ok(cfg)
}

fn verify_all(dim: usize, only: &[u8]) -> Result<(), Failure> {
    check_dim(dim).map_err(|e| Failure::Usage(e.into()))?;
    if let Some(bad) = only.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(Failure::Usage(anyhow::anyhow!("no acceptance criterion {bad}")));
    }
    let mut table = Vec::new();
    for &(id, title, _, _) in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.0)) {
        match run_criterion(id, dim) {
            Ok(report) => {
                for line in report.lines() {
                    emit!("{line}");
                }
                table.push((id, title, if report.pass() { "PASS" } else { "FAIL" }));
            }
            Err(e) => {
                emit!("FAIL criterion {id:>2} ({title}): error: {e}");
                table.push((id, title, "ERROR"));
            }
        }
    }
    emit!("");
    emit!("{:>3}  {:<45} result", "id", "criterion");
    for (id, title, verdict) in &table {
        emit!("{id:>3}  {title:<45} {verdict}");
    }
    let failed = table.iter().filter(|t| t.2 != "PASS").count();
    emit!("{} of {} criteria passed", table.len() - failed, table.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}
