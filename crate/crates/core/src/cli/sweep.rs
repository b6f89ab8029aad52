use std::fmt;
use std::io;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, ConfigError, Malicious, MetricsReport, Scenario, SpeedMode};
use crate::routing::Protocol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Density,
    Malicious,
    Speed,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Density => "density",
            Family::Malicious => "malicious",
            Family::Speed => "speed",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            Family::Density => (1..=10).map(|i| 10.0 * i as f64).collect(),
            Family::Malicious => (1..=6).map(|i| 2.0 * i as f64).collect(),
            Family::Speed => (1..=8).map(|i| 5.0 * i as f64).collect(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "density" => Ok(Family::Density),
            "malicious" => Ok(Family::Malicious),
            "speed" => Ok(Family::Speed),
            _ => Err(format!("unknown family `{s}`, expected density, malicious or speed")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub family: Family,
    pub values: Vec<f64>,
    pub protocols: Vec<Protocol>,
    pub seeds: u64,
    /// Parameters the family does not pin.
    pub base: Scenario,
}

impl SweepSpec {
    pub fn new(family: Family, base: Scenario, protocols: Vec<Protocol>, seeds: u64) -> Self {
        Self { family, values: family.default_values(), protocols, seeds, base }
    }

    /// Scenario for one point. Seeds count up from the base seed.
    pub fn scenario(&self, value: f64, protocol: Protocol, seed_index: u64) -> Scenario {
        let mut sc = self.base.clone();
        sc.protocol = protocol;
        sc.seed = self.base.seed + seed_index;
        match self.family {
            Family::Density => {
                sc.nodes = value as usize;
                sc.speed = SpeedMode::Fixed(5.0);
                sc.malicious = Malicious::Fraction(0.1);
            }
            Family::Malicious => {
                sc.nodes = 40;
                sc.speed = SpeedMode::Fixed(5.0);
                sc.malicious = Malicious::Count(value as usize);
            }
            Family::Speed => {
                sc.nodes = 40;
                sc.speed = SpeedMode::Fixed(value);
                sc.malicious = Malicious::Fraction(0.1);
            }
        }
        sc
    }

    fn jobs(&self) -> Vec<(f64, Protocol, u64)> {
        let mut jobs = Vec::new();
        for &v in &self.values {
            for &p in &self.protocols {
                for s in 0..self.seeds {
                    jobs.push((v, p, s));
                }
            }
        }
        jobs
    }
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub family: String,
    pub sweep_value: f64,
    pub protocol: String,
    pub seed: u64,
    pub nodes: usize,
    pub malicious: usize,
    pub speed: f64,
    pub sent: u64,
    pub delivered: u64,
    pub delivery_pct: f64,
    pub avg_delay_ms: Option<f64>,
    pub mitm_detections: u64,
    pub rediscoveries: u64,
}

pub const CSV_COLUMNS: [&str; 13] = [
    "family",
    "sweep_value",
    "protocol",
    "seed",
    "nodes",
    "malicious",
    "speed",
    "sent",
    "delivered",
    "delivery_pct",
    "avg_delay_ms",
    "mitm_detections",
    "rediscoveries",
];

impl CsvRow {
    pub fn new(family: Family, value: f64, sc: &Scenario, r: &MetricsReport) -> Self {
        let speed = match sc.speed {
            SpeedMode::Fixed(v) => v,
            SpeedMode::Uniform { min, max } => (min + max) / 2.0,
        };
        Self {
            family: family.name().to_string(),
            sweep_value: value,
            protocol: sc.protocol.name().to_string(),
            seed: sc.seed,
            nodes: sc.nodes,
            malicious: sc.malicious_count(),
            speed,
            sent: r.packets_sent,
            delivered: r.packets_delivered,
            delivery_pct: r.delivery_pct,
            avg_delay_ms: r.avg_total_delay.map(|d| d * 1000.0),
            mitm_detections: r.mitm_detections,
            rediscoveries: r.route_rediscoveries,
        }
    }
}

/// Runs every (value, protocol, seed) point on the global thread pool.
/// Rows come back ordered by value, then protocol, then seed.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<CsvRow>, ConfigError> {
    let jobs = spec.jobs();
    for &(v, p, s) in &jobs {
        spec.scenario(v, p, s).validate()?;
    }
    jobs.par_iter()
        .map(|&(v, p, s)| {
            let sc = spec.scenario(v, p, s);
            engine::run(&sc).map(|r| CsvRow::new(spec.family, v, &sc, &r))
        })
        .collect()
}

pub fn write_csv<W: io::Write>(rows: &[CsvRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<CsvRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Seed average for one (value, protocol) point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub protocol: String,
    pub seeds: usize,
    pub delivery_pct: f64,
    /// Mean over the seeds that delivered anything.
    pub avg_delay_ms: Option<f64>,
    pub mitm_detections: f64,
}

pub fn summarize(rows: &[CsvRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut delays: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|s| s.sweep_value == r.sweep_value && s.protocol == r.protocol) {
            Some(i) => i,
            None => {
                out.push(SummaryRow {
                    sweep_value: r.sweep_value,
                    protocol: r.protocol.clone(),
                    seeds: 0,
                    delivery_pct: 0.0,
                    avg_delay_ms: None,
                    mitm_detections: 0.0,
                });
                delays.push(Vec::new());
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        s.seeds += 1;
        s.delivery_pct += r.delivery_pct;
        s.mitm_detections += r.mitm_detections as f64;
        delays[idx].extend(r.avg_delay_ms);
    }
    for (s, d) in out.iter_mut().zip(&delays) {
        s.delivery_pct /= s.seeds as f64;
        s.mitm_detections /= s.seeds as f64;
        s.avg_delay_ms = (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64);
    }
    out
}

pub fn format_summary(family: &str, rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:>10}  {:<12} {:>5} {:>12} {:>14} {:>8}\n",
        family, "protocol", "seeds", "delivery_%", "avg_delay_ms", "mitm"
    );
    for r in rows {
        let delay = r.avg_delay_ms.map_or_else(|| "-".to_string(), |d| format!("{d:.2}"));
        s.push_str(&format!(
            "{:>10}  {:<12} {:>5} {:>12.2} {:>14} {:>8.1}\n",
            r.sweep_value, r.protocol, r.seeds, r.delivery_pct, delay, r.mitm_detections
        ));
    }
    s
}
