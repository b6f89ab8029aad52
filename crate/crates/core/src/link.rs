//! Pairwise Wi-Fi Direct sessions and the trusted out-of-band channel, both
//! reduced to timed, lossless state transitions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::AuthString;
use crate::geo::{distance, Vec2};
use crate::routing::NodeAddr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WfdPhase {
    Idle,
    Discovery,
    GoNegotiation,
    Wps,
    AddrConfig,
    Established,
}

impl WfdPhase {
    pub fn next(self) -> Option<WfdPhase> {
        use WfdPhase::*;
        match self {
            Idle => Some(Discovery),
            Discovery => Some(GoNegotiation),
            GoNegotiation => Some(Wps),
            Wps => Some(AddrConfig),
            AddrConfig => Some(Established),
            Established => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("endpoints {a} and {b} are {distance:.1} apart, beyond range {range}")]
    OutOfRange { a: NodeAddr, b: NodeAddr, distance: f64, range: f64 },
    #[error("a session needs two distinct endpoints")]
    SelfLink,
    #[error("phase {0:?} cannot follow {1:?}")]
    BadTransition(WfdPhase, WfdPhase),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WfdSession {
    pub endpoint_a: NodeAddr,
    pub endpoint_b: NodeAddr,
    phase: WfdPhase,
    group_owner: Option<NodeAddr>,
}

impl WfdSession {
    pub fn new(a: NodeAddr, b: NodeAddr) -> Result<Self, LinkError> {
        if a == b {
            return Err(LinkError::SelfLink);
        }
        Ok(Self { endpoint_a: a, endpoint_b: b, phase: WfdPhase::Idle, group_owner: None })
    }

    pub fn phase(&self) -> WfdPhase {
        self.phase
    }

    pub fn group_owner(&self) -> Option<NodeAddr> {
        self.group_owner
    }

    /// Moves to `to`, which must be the next phase or `Idle`.
    pub fn transition(&mut self, to: WfdPhase) -> Result<(), LinkError> {
        if to == WfdPhase::Idle {
            self.phase = WfdPhase::Idle;
            self.group_owner = None;
            return Ok(());
        }
        if self.phase.next() != Some(to) {
            return Err(LinkError::BadTransition(to, self.phase));
        }
        if to == WfdPhase::GoNegotiation {
            // smaller id wins owner negotiation
            self.group_owner = Some(self.endpoint_a.min(self.endpoint_b));
        }
        self.phase = to;
        Ok(())
    }

    pub fn is_established(&self) -> bool {
        self.phase == WfdPhase::Established
    }
}

/// Delays in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkTiming {
    pub discovery: f64,
    pub go_negotiation: f64,
    pub wps: f64,
    pub addr_config: f64,
    pub per_hop_tx: f64,
    pub oob: f64,
}

impl Default for LinkTiming {
    fn default() -> Self {
        Self { discovery: 0.002, go_negotiation: 0.002, wps: 0.003, addr_config: 0.003, per_hop_tx: 0.001, oob: 0.002 }
    }
}

impl LinkTiming {
    pub fn zero() -> Self {
        Self { discovery: 0.0, go_negotiation: 0.0, wps: 0.0, addr_config: 0.0, per_hop_tx: 0.0, oob: 0.0 }
    }

    pub fn session_setup(&self) -> f64 {
        self.discovery + self.go_negotiation + self.wps + self.addr_config
    }

    pub fn is_valid(&self) -> bool {
        [self.discovery, self.go_negotiation, self.wps, self.addr_config, self.per_hop_tx, self.oob]
            .iter()
            .all(|d| d.is_finite() && *d >= 0.0)
    }

    fn phase_delay(&self, phase: WfdPhase) -> f64 {
        match phase {
            WfdPhase::Discovery => self.discovery,
            WfdPhase::GoNegotiation => self.go_negotiation,
            WfdPhase::Wps => self.wps,
            WfdPhase::AddrConfig => self.addr_config,
            WfdPhase::Idle | WfdPhase::Established => 0.0,
        }
    }
}

/// Runs discovery, owner negotiation, WPS and address configuration
/// between two nodes in range. Returns the established session and the
/// total setup delay.
pub fn establish(
    a: NodeAddr,
    pos_a: Vec2,
    b: NodeAddr,
    pos_b: Vec2,
    tx_range: f64,
    timing: &LinkTiming,
) -> Result<(WfdSession, f64), LinkError> {
    let d = distance(pos_a, pos_b);
    if d > tx_range {
        return Err(LinkError::OutOfRange { a, b, distance: d, range: tx_range });
    }
    let mut session = WfdSession::new(a, b)?;
    let mut total = 0.0;
    while let Some(next) = session.phase.next() {
        session.transition(next)?;
        total += timing.phase_delay(next);
    }
    Ok((session, total))
}

/// Side channel between two adjacent trusted nodes. Attackers cannot see
/// or alter what travels on it, so the comparison always sees the values
/// each endpoint computed itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OobChannel {
    pub endpoint_a: NodeAddr,
    pub endpoint_b: NodeAddr,
}

impl OobChannel {
    pub fn new(endpoint_a: NodeAddr, endpoint_b: NodeAddr) -> Self {
        Self { endpoint_a, endpoint_b }
    }
}

/// Compares the two authentication strings. Returns `(match, delay)`.
pub fn oob_compare(_ch: &OobChannel, s_a: &AuthString, s_b: &AuthString, timing: &LinkTiming) -> (bool, f64) {
    (s_a == s_b, timing.oob)
}
