//! `rinorm`: batch evaluation of rearrangement-invariant norms, weight
//! transforms, condition checks and Fourier verifications.
//!
//! Exit codes: 0 success, 1 some verdict fails, 2 configuration error,
//! 3 numerical non-convergence.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::Config;
use report::{RunReport, Timings};
use rinorm::QuadSpec;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Lib(#[from] rinorm::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "rinorm", version, about = "Rearrangement-invariant norm toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report path (JSON). CSV tables and timings are written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random families; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative quadrature tolerance; overrides the config.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true, env = "RINORM_JOBS")]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Evaluate norms of step or radial inputs.
    Norm,
    /// Tabulate weight transforms.
    TransformWeight,
    /// Run integral criteria.
    Check,
    /// Empirical Fourier inequalities over radial families.
    VerifyFourier,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Norm => "norm",
            Command::TransformWeight => "transform-weight",
            Command::Check => "check",
            Command::VerifyFourier => "verify-fourier",
        }
    }
}

fn load(cli: &Cli) -> Result<(Config, String), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg: Config = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Config(format!("--tol must be in (0, 1), got {t}")));
        }
        cfg.quad = Some(QuadSpec {
            rel_tol: t,
            ..cfg.quad.unwrap_or_default()
        });
    }
    // The digest covers the effective configuration, overrides included.
    let canonical = serde_json::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let digest = hex::encode(Sha256::digest(canonical.as_bytes()));
    Ok((cfg, digest))
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let (cfg, digest) = load(cli)?;
    let q = cfg.quad.unwrap_or_default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let results = pool.install(|| match cli.command {
        Command::Norm => commands::norm(&cfg, &q),
        Command::TransformWeight => commands::transform(&cfg, &q),
        Command::Check => commands::check(&cfg, &q),
        Command::VerifyFourier => commands::fourier(&cfg, &q),
    })?;
    let timings = Timings {
        config_digest: digest.clone(),
        items: results.iter().map(|(it, s)| (it.name.clone(), *s)).collect(),
    };
    let items: Vec<_> = results.into_iter().map(|(it, _)| it).collect();
    let any_fail = items.iter().any(|it| it.outcome.fails());
    let report = RunReport {
        tool: "rinorm",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().into(),
        config_digest: digest,
        items,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))? + "\n";
    match &cli.out {
        Some(out) => {
            std::fs::write(out, json)?;
            for it in &report.items {
                if let Some((header, rows)) = it.outcome.csv() {
                    write_csv(&sidecar(out, &format!("{}.csv", it.name)), &header, &rows)?;
                }
            }
            let t = serde_json::to_string_pretty(&timings).map_err(|e| CliError::Config(e.to_string()))?;
            std::fs::write(sidecar(out, "timings.json"), t + "\n")?;
        }
        None => print!("{json}"),
    }
    Ok(!any_fail)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("rinorm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
