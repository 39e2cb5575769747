use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use logconc_cli::experiments::list_experiments;
use logconc_cli::{execute, CliError, ExperimentConfig};

/// Desk-scale experiments on log-concave and s-concave measures.
#[derive(Parser)]
#[command(name = "logconc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed; required for every experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for records.jsonl, CSV tables and summary.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Replicas per estimate, at least 16.
    #[arg(long, global = true)]
    replicas: Option<usize>,

    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Extra settings applied after the config file, e.g. `-s dims=16,64`.
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Draw samples, whiten them, check log-concavity and isotropic constants
    Sample,
    /// Thin-shell statistics of |X|
    Shell,
    /// Strong and weak moments, marginal growth, tail forms
    Moments,
    /// Strong moment against first moment plus weak moment
    WeakStrong,
    /// Operator-norm error of the empirical covariance
    CovApprox,
    /// Kolmogorov distance of marginals to N(0,1)
    Clt,
    /// Thin-shell width eps*
    Abp,
    /// Half-space Cheeger estimate, lower bounds, Poincare quotients
    Isoperimetry,
    /// Radial function and convexity of the ball body K_p(f)
    KpBody,
    /// Central section volumes of a body
    Sections,
    /// Multiphase Monte-Carlo volume of a body
    Volume,
    /// Volume of an absolute convex hull relative to the unit ball
    Hull,
    /// Step-by-step ledgers for the moment argument
    ProofCheck,
    /// Acceptance suite, criteria 1 to 13
    Accept,
    /// Experiments, required keys and operations
    List,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Shell => "shell",
            Command::Moments => "moments",
            Command::WeakStrong => "weak-strong",
            Command::CovApprox => "cov-approx",
            Command::Clt => "clt",
            Command::Abp => "abp",
            Command::Isoperimetry => "isoperimetry",
            Command::KpBody => "kp-body",
            Command::Sections => "sections",
            Command::Volume => "volume",
            Command::Hull => "hull",
            Command::ProofCheck => "proof-check",
            Command::Accept => "accept",
            Command::List => "list",
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    for pair in &cli.set {
        cfg.set_pair(pair)?;
    }
    if let Some(s) = cli.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(o) = &cli.out {
        cfg.set("out", &o.display().to_string())?;
    }
    if let Some(r) = cli.replicas {
        cfg.set("replicas", &r.to_string())?;
    }
    if let Some(w) = cli.workers {
        cfg.set("workers", &w.to_string())?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::List = cli.command {
        print!("{}", list_experiments());
        return ExitCode::SUCCESS;
    }
    let result = build_config(&cli).and_then(|cfg| execute(cli.command.name(), cfg));
    match result {
        Ok((report, out)) => {
            for c in &report.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let code = report.exit_code();
            if let Some(err) = report.error() {
                eprintln!("error: {err}");
            }
            println!("report written to {} (exit {code})", out.display());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
