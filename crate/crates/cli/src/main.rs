//! `nested-eg`: simulate series, run forecasters, evaluate oracles, check bounds.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nested_eg::harness::{
    self, read_dataset, read_log, read_sidecar, write_log, write_series, write_sidecar, write_timing, ForecasterKind,
    RunConfig, SeriesSidecar, Timing,
};
use nested_eg::oracles::{best_constant, best_histogram, best_lipschitz_1d};
use nested_eg::processes::ProcessSpec;
use nested_eg::{LossSpec, MetaConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "nested-eg", version, about = "Online non-parametric forecasting with nested EG trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Forecaster {
    Eg,
    Tree,
    Meta,
}

impl From<Forecaster> for ForecasterKind {
    fn from(f: Forecaster) -> Self {
        match f {
            Forecaster::Eg => ForecasterKind::Eg,
            Forecaster::Tree => ForecasterKind::Tree,
            Forecaster::Meta => ForecasterKind::Meta,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Constant,
    Histogram,
    Lipschitz,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a series from a process spec; writes the CSV and a `.json` sidecar.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "T", alias = "steps")]
        steps: usize,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a forecaster over a series or covariate CSV and write its log directory.
    Run {
        /// Run config JSON (loss, schedule, effective_range, max_d, forecaster).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        forecaster: Option<Forecaster>,
        #[arg(long)]
        effective_range: bool,
        /// Loss when no config is given: absolute, square or pinball:<alpha>.
        #[arg(long)]
        loss: Option<String>,
        /// Recorded in the summary when the input has no sidecar.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate an offline comparator on a CSV and print it as JSON.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "constant")]
        kind: OracleKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        loss: Option<String>,
        /// Number of histogram boxes (a d-th power).
        #[arg(long, default_value_t = 1)]
        bins: usize,
        /// Lipschitz constant.
        #[arg(long = "L", default_value_t = 1.0)]
        lipschitz: f64,
    },
    /// Check every applicable bound of a run log against oracles on its input.
    VerifyBounds {
        /// Log directory written by `run`.
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Lipschitz constants for the Lipschitz-comparator bounds.
        #[arg(long = "L", value_delimiter = ',', default_values_t = [0.5, 1.0, 5.0])]
        lipschitz: Vec<f64>,
        /// Where to write verify.json; defaults to the log directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate run logs into summary tables and plot-data CSVs.
    Report {
        #[arg(long = "logs", num_args = 1.., required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_loss(s: &str) -> Result<LossSpec> {
    let spec = match s.split_once(':') {
        None if s == "absolute" => LossSpec::Absolute,
        None if s == "square" => LossSpec::Square,
        Some(("pinball", a)) => LossSpec::Pinball { alpha: a.parse().context("pinball alpha")? },
        _ => bail!("unknown loss {s:?}; expected absolute, square or pinball:<alpha>"),
    };
    spec.validate()?;
    Ok(spec)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_config(config: Option<&Path>, loss: Option<&str>) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(p) => read_json::<RunConfig>(p)?,
        None => RunConfig { forecaster: ForecasterKind::default(), meta: MetaConfig::new(LossSpec::Absolute) },
    };
    if let Some(l) = loss {
        cfg.meta.loss = parse_loss(l)?;
    }
    cfg.meta.loss.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { spec, steps, seed, out } => {
            let spec: ProcessSpec = read_json(&spec)?;
            let seed = seed.or(spec.seed).context("no seed: pass --seed or set \"seed\" in the spec")?;
            let g = spec.generate(steps, Some(seed))?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_series(&out, &g.values)?;
            write_sidecar(&out, &SeriesSidecar::new(spec, seed, steps, g.clipped))?;
            eprintln!("wrote {} observations to {} (clipped {})", steps, out.display(), g.clipped);
            Ok(true)
        }
        Command::Run { config, input, out, forecaster, effective_range, loss, seed } => {
            let mut cfg = load_config(config.as_deref(), loss.as_deref())?;
            if let Some(f) = forecaster {
                cfg.forecaster = f.into();
            }
            cfg.meta.effective_range |= effective_range;
            let data = read_dataset(&input).with_context(|| format!("reading {}", input.display()))?;
            let sidecar = read_sidecar(&input)?;
            let start = Instant::now();
            let mut log = harness::run(&cfg, &data, sidecar.as_ref())?;
            let secs = start.elapsed().as_secs_f64();
            if log.summary.seed.is_none() {
                log.summary.seed = seed;
            }
            write_log(&out, &log)?;
            write_timing(&out, &Timing { wall_clock_secs: secs, steps_per_sec: data.len() as f64 / secs.max(1e-12) })?;
            println!("{}", serde_json::to_string_pretty(&log.summary)?);
            Ok(true)
        }
        Command::Oracle { input, kind, config, loss, bins, lipschitz } => {
            let cfg = load_config(config.as_deref(), loss.as_deref())?;
            let loss = cfg.meta.loss;
            let data = read_dataset(&input).with_context(|| format!("reading {}", input.display()))?;
            let value = match kind {
                OracleKind::Constant => {
                    let bc = best_constant(&data.ys, &loss)?;
                    json!({"kind": "constant", "params": {"loss": loss}, "loss": bc.loss, "argmin": bc.argmin})
                }
                OracleKind::Histogram => {
                    if data.dim == 0 {
                        bail!("the histogram oracle needs covariate columns");
                    }
                    let h = best_histogram(&data.xs, &data.ys, bins, data.dim, &loss)?;
                    json!({"kind": "histogram", "params": {"loss": loss, "bins": bins, "dim": data.dim},
                           "loss": h.loss, "argmin": h.values})
                }
                OracleKind::Lipschitz => {
                    let (xs, ys) = if data.dim == 0 {
                        // A plain series is compared through its lag-1 windows.
                        let xs = data.ys[..data.len().saturating_sub(1)].iter().map(|&y| vec![y]).collect();
                        (xs, data.ys.get(1..).unwrap_or_default().to_vec())
                    } else {
                        (data.xs.clone(), data.ys.clone())
                    };
                    let fit = best_lipschitz_1d(&xs, &ys, lipschitz, &loss)?;
                    json!({"kind": "lipschitz", "params": {"loss": loss, "L": lipschitz},
                           "loss": fit.loss, "argmin": fit.knots})
                }
            };
            println!("{}", serde_json::to_string_pretty(&value)?);
            Ok(true)
        }
        Command::VerifyBounds { log, input, lipschitz, out } => {
            let run_log = read_log(&log).with_context(|| format!("reading log {}", log.display()))?;
            let data = read_dataset(&input).with_context(|| format!("reading {}", input.display()))?;
            let report = harness::verify_bounds(&run_log, &data, &lipschitz)?;
            for c in &report.checks {
                println!(
                    "{} {}: achieved {} bound {} slack {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.achieved,
                    c.bound,
                    c.slack
                );
            }
            let dir = out.unwrap_or(log);
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("verify.json"), serde_json::to_string_pretty(&report)? + "\n")?;
            Ok(report.passed)
        }
        Command::Report { logs, out } => {
            let mut runs = Vec::with_capacity(logs.len());
            for dir in &logs {
                let log = read_log(dir).with_context(|| format!("reading log {}", dir.display()))?;
                let verify_path = dir.join("verify.json");
                let verify = if verify_path.exists() { Some(read_json(&verify_path)?) } else { None };
                runs.push((log, verify));
            }
            let report = harness::report(&runs);
            report.write(&out)?;
            for r in &report.rows {
                println!(
                    "{} {} T={} runs={} avg loss mean={} min={} max={}{}",
                    r.forecaster,
                    r.loss,
                    r.steps,
                    r.runs,
                    r.mean_average_loss,
                    r.min_average_loss,
                    r.max_average_loss,
                    r.l_star.map(|l| format!(" L*={l}")).unwrap_or_default()
                );
            }
            Ok(runs.iter().all(|(_, v): &(_, Option<harness::VerifyReport>)| v.as_ref().is_none_or(|v| v.passed)))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
