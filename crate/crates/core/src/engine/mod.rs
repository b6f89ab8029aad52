//! Seeded discrete-event simulation of a vehicular network running one of
//! the routing protocols.
//!
//! Honest vehicles form `nodes / 2` flows, node `i` sending to node
//! `i + nodes / 2`. Attackers are additional devices that roam the same
//! region; whenever one is in range of both ends of a forming Wi-Fi Direct
//! session it captures that session. A pair that catches the substitution
//! re-forms its session with the out-of-band channel and is not captured
//! again.

mod metrics;
mod scenario;
mod sim;
mod trace;

pub use metrics::{compute_metrics, FlowLog, FlowMetrics, MetricsReport, PacketRecord, SimLog};
pub use scenario::{ConfigError, DhSource, Malicious, ReplyMode, Scenario, SpeedMode};
pub use trace::{DropReason, TraceEvent, TraceRecord};

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::geo::{distance, Vec2};

pub fn run(scenario: &Scenario) -> Result<MetricsReport, ConfigError> {
    scenario.validate()?;
    let (log, _) = sim::Sim::new(scenario, false).run();
    Ok(compute_metrics(&log))
}

/// Like [`run`], also returning every action taken, in time order.
pub fn run_traced(scenario: &Scenario) -> Result<(MetricsReport, Vec<TraceRecord>), ConfigError> {
    scenario.validate()?;
    let (log, trace) = sim::Sim::new(scenario, true).run();
    Ok((compute_metrics(&log), trace))
}

/// Poisson send times on `[0, duration]`.
pub fn gen_traffic<R: Rng + ?Sized>(rate: f64, duration: f64, rng: &mut R) -> Vec<f64> {
    let gap = Exp::new(rate).expect("rate validated positive");
    let mut times = Vec::with_capacity((rate * duration * 1.2) as usize + 1);
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t > duration {
            return times;
        }
        times.push(t);
    }
}

/// Adjacency lists: `j` is in `adj[i]` iff `i != j` and the two are within
/// `tx_range`.
pub fn neighbor_discovery(positions: &[Vec2], tx_range: f64) -> Vec<Vec<usize>> {
    (0..positions.len())
        .map(|i| (0..positions.len()).filter(|&j| j != i && distance(positions[i], positions[j]) <= tx_range).collect())
        .collect()
}
