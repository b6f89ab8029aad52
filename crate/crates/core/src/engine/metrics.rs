use serde::{Deserialize, Serialize};

use crate::routing::NodeAddr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub sent_at: f64,
    pub delivered_at: Option<f64>,
}

impl PacketRecord {
    pub fn new(sent_at: f64) -> Self {
        Self { sent_at, delivered_at: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlowLog {
    pub src: Option<NodeAddr>,
    pub dst: Option<NodeAddr>,
    pub packets: Vec<PacketRecord>,
    pub mitm_detections: u64,
    pub route_rediscoveries: u64,
}

/// Raw outcome of a run, one entry per flow.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimLog {
    pub flows: Vec<FlowLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMetrics {
    pub src: Option<NodeAddr>,
    pub dst: Option<NodeAddr>,
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub delivery_pct: f64,
    /// Seconds; absent when nothing was delivered.
    pub avg_total_delay: Option<f64>,
    pub mitm_detections: u64,
    pub route_rediscoveries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub delivery_pct: f64,
    pub avg_total_delay: Option<f64>,
    pub mitm_detections: u64,
    pub route_rediscoveries: u64,
    pub flows: Vec<FlowMetrics>,
}

fn summarize<'a>(packets: impl Iterator<Item = &'a PacketRecord>) -> (u64, u64, f64, Option<f64>) {
    let (mut sent, mut delivered, mut delay_sum) = (0u64, 0u64, 0.0);
    for p in packets {
        sent += 1;
        if let Some(t) = p.delivered_at {
            delivered += 1;
            delay_sum += t - p.sent_at;
        }
    }
    let pct = if sent == 0 { 0.0 } else { 100.0 * delivered as f64 / sent as f64 };
    let delay = (delivered > 0).then(|| delay_sum / delivered as f64);
    (sent, delivered, pct, delay)
}

pub fn compute_metrics(log: &SimLog) -> MetricsReport {
    let flows: Vec<FlowMetrics> = log
        .flows
        .iter()
        .map(|f| {
            let (sent, delivered, pct, delay) = summarize(f.packets.iter());
            FlowMetrics {
                src: f.src,
                dst: f.dst,
                packets_sent: sent,
                packets_delivered: delivered,
                delivery_pct: pct,
                avg_total_delay: delay,
                mitm_detections: f.mitm_detections,
                route_rediscoveries: f.route_rediscoveries,
            }
        })
        .collect();
    let (sent, delivered, pct, delay) = summarize(log.flows.iter().flat_map(|f| f.packets.iter()));
    MetricsReport {
        packets_sent: sent,
        packets_delivered: delivered,
        delivery_pct: pct,
        avg_total_delay: delay,
        mitm_detections: flows.iter().map(|f| f.mitm_detections).sum(),
        route_rediscoveries: flows.iter().map(|f| f.route_rediscoveries).sum(),
        flows,
    }
}
