//! Command-line front end: single runs and the three sweep families.

pub mod config;
pub mod sweep;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::engine::{self, ConfigError, MetricsReport, Scenario};
use crate::routing::Protocol;
use config::{load_scenario, parse_override};
use sweep::{format_summary, run_sweep, summarize, write_csv, Family, SweepSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("invalid scenario: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "slar", version, about = "Location-aided VANET routing simulator with MITM detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and print its metrics.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override any configuration key, e.g. `--set nodes=20`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write every routing action as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print the full report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Sweep one parameter family over all requested protocols and seeds.
    Sweep {
        #[arg(long)]
        family: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Comma-separated protocol names.
        #[arg(long, default_value = "rlar,dlar,secure_rlar,secure_dlar")]
        protocols: String,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Bound on worker threads; defaults to the number of CPUs.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

pub fn parse_protocols(list: &str) -> Result<Vec<Protocol>, CliError> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim().parse().map_err(|e: crate::routing::UnknownProtocol| CliError::Value {
                key: "protocols".into(),
                value: s.into(),
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn format_report(sc: &Scenario, r: &MetricsReport) -> String {
    let delay = r.avg_total_delay.map_or_else(|| "-".to_string(), |d| format!("{:.2}", d * 1000.0));
    let mut s = format!(
        "protocol {}  nodes {}  malicious {}  speed {}  seed {}\n",
        sc.protocol,
        sc.nodes,
        sc.malicious_count(),
        sc.speed,
        sc.seed
    );
    s.push_str(&format!(
        "{:>6} {:>6} {:>6} {:>9} {:>10} {:>7} {:>7}\n",
        "flow", "sent", "deliv", "deliv_%", "delay_ms", "mitm", "redisc"
    ));
    for (i, f) in r.flows.iter().enumerate() {
        let d = f.avg_total_delay.map_or_else(|| "-".to_string(), |d| format!("{:.2}", d * 1000.0));
        s.push_str(&format!(
            "{:>6} {:>6} {:>6} {:>9.2} {:>10} {:>7} {:>7}\n",
            i, f.packets_sent, f.packets_delivered, f.delivery_pct, d, f.mitm_detections, f.route_rediscoveries
        ));
    }
    s.push_str(&format!(
        "{:>6} {:>6} {:>6} {:>9.2} {:>10} {:>7} {:>7}\n",
        "total", r.packets_sent, r.packets_delivered, r.delivery_pct, delay, r.mitm_detections, r.route_rediscoveries
    ));
    s
}

/// Runs one scenario, optionally writing its trace as JSON lines.
pub fn run_single(sc: &Scenario, trace: Option<&Path>) -> Result<MetricsReport, CliError> {
    match trace {
        None => Ok(engine::run(sc)?),
        Some(path) => {
            let (report, records) = engine::run_traced(sc)?;
            let mut w =
                BufWriter::new(File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?);
            for r in &records {
                serde_json::to_writer(&mut w, r).map_err(|e| CliError::Io(e.to_string()))?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            Ok(report)
        }
    }
}

fn overrides(set: &[String]) -> Result<Vec<(String, String)>, CliError> {
    set.iter().map(|s| parse_override(s)).collect()
}

/// Executes a parsed command line, writing human output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, set, protocol, nodes, seed, trace, json } => {
            let mut ov = overrides(&set)?;
            if let Some(p) = protocol {
                ov.push(("protocol".into(), p));
            }
            if let Some(n) = nodes {
                ov.push(("nodes".into(), n.to_string()));
            }
            if let Some(s) = seed {
                ov.push(("seed".into(), s.to_string()));
            }
            let sc = load_scenario(config.as_deref(), &ov)?;
            let report = run_single(&sc, trace.as_deref())?;
            if json {
                let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
                writeln!(out, "{text}")?;
            } else {
                write!(out, "{}", format_report(&sc, &report))?;
            }
        }
        Command::Sweep { family, config, set, protocols, seeds, out: csv_path, jobs } => {
            let family: Family = family.parse().map_err(|reason| CliError::Value {
                key: "family".into(),
                value: family.clone(),
                reason,
            })?;
            let protocols = parse_protocols(&protocols)?;
            let base = load_scenario(config.as_deref(), &overrides(&set)?)?;
            let spec = SweepSpec::new(family, base, protocols, seeds);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| CliError::Io(e.to_string()))?;
            let rows = pool.install(|| run_sweep(&spec))?;
            if let Some(path) = csv_path {
                let f = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                write_csv(&rows, BufWriter::new(f))?;
            }
            write!(out, "{}", format_summary(family.name(), &summarize(&rows)))?;
        }
    }
    Ok(())
}
