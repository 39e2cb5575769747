//! Runner behind the `logconc` binary: configs in, reports out.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

use std::path::PathBuf;

use logconc_core::RngStream;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use report::Report;

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

/// Runs `experiment`, writes its report and returns it. Errors before
/// the run starts (bad config, unknown experiment) produce no report.
pub fn execute(experiment: &str, mut cfg: ExperimentConfig) -> Result<(Report, PathBuf), CliError> {
    if let Some(e) = cfg.get("experiment") {
        if e != experiment {
            return Err(CliError::Config(format!("config is for {e:?}, not {experiment:?}")));
        }
    }
    let exp = experiments::find(experiment)
        .ok_or_else(|| CliError::Config(format!("unknown experiment {experiment:?}")))?;
    cfg.set("experiment", experiment)?;
    let seed = cfg.seed()?;
    let workers: usize = cfg.value_or("workers", default_workers())?;
    experiments::replicas(&cfg)?;
    let out = PathBuf::from(cfg.get("out").map_or_else(|| format!("logconc-out/{experiment}"), str::to_string));
    cfg.set("workers", &workers.to_string())?;
    cfg.set("out", &out.display().to_string())?;

    let rep = if experiment == "accept" {
        acceptance::run_acceptance(seed)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
        let stream = RngStream::new(seed).fork(experiment);
        let mut rep = Report::new(experiment);
        let res = pool.install(|| rep.timed("total", |r| exp.run(&cfg, &stream, r)));
        if let Err(e) = res {
            rep.fail(&e);
        }
        rep
    };
    rep.write(&out, &cfg)?;
    Ok((rep, out))
}
