use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clusterlab::config::{ExperimentConfig, ExperimentKind};
use clusterlab::error::Error;
use clusterlab::estimators::empirical_cluster_measure;
use clusterlab::runner;
use clusterlab::window::{BlockScheme, NormSpec, Threshold};

#[derive(Parser)]
#[command(name = "clusterlab", about = "Block-cluster statistics for heavy-tailed series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Root RNG seed; overrides the config value.
    #[arg(long, env = "CLUSTERLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for summary.json and detail files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Detail file format: csv writes plot-ready tables, json only the summary.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Exact-oracle equivalence table (closed forms vs enumeration).
    Oracle(CommonArgs),
    /// Generate a series and dump it to disk.
    Simulate(CommonArgs),
    /// Replicated cluster-measure and extremal-index consistency run,
    /// or a one-shot estimate on ingested CSV data with --data.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// CSV series to estimate from instead of simulating.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// First/last exceedance-time law within a block.
    JumpLaw(CommonArgs),
    /// Normalized-process variance and gaussianity study.
    Clt(CommonArgs),
    /// Candidate extremal index: exact value vs two independent oracles.
    Theta(CommonArgs),
    /// Anticlustering lag diagnostic.
    Diag(CommonArgs),
    /// Block-size sweep with regime tagging.
    Sweep(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Oracle(c)
            | Command::Simulate(c)
            | Command::JumpLaw(c)
            | Command::Clt(c)
            | Command::Theta(c)
            | Command::Diag(c)
            | Command::Sweep(c) => c,
            Command::Estimate { common, .. } => common,
        }
    }

    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Oracle(_) => ExperimentKind::OracleTable,
            Command::Simulate(_) => ExperimentKind::Simulate,
            Command::Estimate { .. } => ExperimentKind::Consistency,
            Command::JumpLaw(_) => ExperimentKind::JumpLaw,
            Command::Clt(_) => ExperimentKind::ProcessClt,
            Command::Theta(_) => ExperimentKind::ThetaHat,
            Command::Diag(_) => ExperimentKind::AnticlusterDiag,
            Command::Sweep(_) => ExperimentKind::Sweep,
        }
    }
}

fn load_config(cmd: &Command) -> Result<ExperimentConfig, Error> {
    let common = cmd.common();
    let text = fs::read_to_string(&common.config)?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    match cfg.experiment {
        None => cfg.experiment = Some(cmd.kind()),
        Some(k) if k == cmd.kind() => {}
        Some(k) => {
            return Err(Error::InvalidConfig(format!(
                "config experiment {:?} does not match subcommand {:?}",
                k,
                cmd.kind()
            )));
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    Ok(cfg)
}

/// One-shot estimation on external data: cluster measures for each configured
/// functional plus the extremal-index estimator.
fn estimate_from_data(cfg: &ExperimentConfig, data: &PathBuf) -> Result<serde_json::Value, Error> {
    let window = clusterlab::csvio::ingest_csv(data)?;
    let norms = window.norms(NormSpec::Sup);
    let scheme_spec = cfg
        .scheme
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("estimate needs a scheme".into()))?;
    let r = scheme_spec
        .r
        .ok_or_else(|| Error::InvalidConfig("scheme needs r".into()))? as usize;
    let threshold = match (scheme_spec.u, scheme_spec.k) {
        (Some(u), None) => Threshold::FixedLevel(u),
        (None, Some(k)) => Threshold::OrderStatistic(k as usize),
        _ => {
            return Err(Error::InvalidConfig(
                "estimate needs exactly one of scheme.u or scheme.k".into(),
            ))
        }
    };
    let mut scheme = BlockScheme::new(norms.len(), r, threshold)?;
    if let Some(w) = scheme_spec.w {
        scheme = scheme.with_w(w, clusterlab::window::WProvenance::Estimated)?;
    }
    let gamma = cfg.gamma.unwrap_or(1.0);
    let mut results = Vec::new();
    for h in cfg.parsed_functionals()? {
        let v = empirical_cluster_measure(&norms, &h, &scheme)?;
        results.push(serde_json::json!({"functional": h.name(), "value": v}));
    }
    let theta = clusterlab::estimators::extremal_index_estimator(&norms, &scheme, gamma)?;
    Ok(serde_json::json!({
        "experiment": "estimate_data",
        "n": norms.len(),
        "r": r,
        "w": scheme.effective_w()?,
        "cluster_measures": results,
        "theta_hat": theta,
        "gamma": gamma,
        "config": serde_json::to_value(cfg)?,
        "pass": true,
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.command.common();

    if let Some(workers) = common.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("error: failed to build thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let cfg = match load_config(&cli.command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    if let Some(dir) = &common.out {
        if let Err(e) = fs::create_dir_all(dir) {
            eprintln!("error: cannot create output directory: {e}");
            return ExitCode::from(2);
        }
    }

    let started = std::time::Instant::now();
    let result = match &cli.command {
        Command::Estimate { data: Some(path), .. } => {
            estimate_from_data(&cfg, path).map(|summary| (true, summary))
        }
        _ => {
            let out_dir = if common.format == "csv" { common.out.as_deref() } else { None };
            runner::run(&cfg, out_dir).map(|o| (o.pass, o.summary))
        }
    };

    match result {
        Ok((pass, summary)) => {
            // runtime goes to stderr so the written outputs stay byte-identical
            // across reruns with the same config and --workers
            eprintln!("runtime: {:.3}s", started.elapsed().as_secs_f64());
            let text = serde_json::to_string_pretty(&summary).expect("serializable summary");
            if let Some(dir) = &common.out {
                if let Err(e) = fs::write(dir.join("summary.json"), format!("{text}\n")) {
                    eprintln!("error: cannot write summary: {e}");
                    return ExitCode::from(1);
                }
            }
            println!("{text}");
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("status: numerical checks failed");
                ExitCode::from(1)
            }
        }
        Err(e @ (Error::InvalidConfig(_) | Error::Json(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
