//! Route discovery messages and the per-node handlers for the request-zone
//! and distance-based protocols, in plain and secure form.
//!
//! Handlers are pure transition functions: they inspect a node's view and
//! an incoming message and return the action the engine should carry out.

mod attacker;
mod handshake;

pub use attacker::{attacker_act, AttackEffect, AttackStrategy, NodeRole, Traffic};
pub use handshake::{
    run_handshake, HandshakeOutcome, HandshakeReport, HandshakeStage, HandshakeState, Initiator, Interceptor, Responder,
};

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::Commitment;
use crate::geo::{self, distance, GeoError, RequestZone, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeAddr(pub u32);

impl fmt::Display for NodeAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MsgId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    RequestZone,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Rlar,
    Dlar,
    SecureRlar,
    SecureDlar,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Rlar, Protocol::Dlar, Protocol::SecureRlar, Protocol::SecureDlar];

    pub fn is_secure(self) -> bool {
        matches!(self, Protocol::SecureRlar | Protocol::SecureDlar)
    }

    pub fn scheme(self) -> Scheme {
        match self {
            Protocol::Rlar | Protocol::SecureRlar => Scheme::RequestZone,
            Protocol::Dlar | Protocol::SecureDlar => Scheme::Distance,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Rlar => "rlar",
            Protocol::Dlar => "dlar",
            Protocol::SecureRlar => "secure_rlar",
            Protocol::SecureDlar => "secure_dlar",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown protocol `{0}`, expected one of: rlar, dlar, secure_rlar, secure_dlar")]
pub struct UnknownProtocol(pub String);

impl FromStr for Protocol {
    type Err = UnknownProtocol;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL.into_iter().find(|p| p.name() == s.trim()).ok_or_else(|| UnknownProtocol(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RequestVariant {
    RequestZone {
        zone: RequestZone,
        src_pos: Vec2,
        /// Carried for completeness; no handler reads it.
        src_in_zone: bool,
    },
    Distance {
        dist: f64,
        dest_pos: Vec2,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteRequest {
    pub msg_id: MsgId,
    pub src: NodeAddr,
    pub dst: NodeAddr,
    pub variant: RequestVariant,
    /// Present iff the protocol is secure; belongs to the last hop.
    #[serde(skip)]
    pub commitment: Option<Commitment>,
    /// Starts with `src`, never repeats a node.
    pub hop_trace: Vec<NodeAddr>,
}

impl RouteRequest {
    pub fn last_hop(&self) -> NodeAddr {
        *self.hop_trace.last().expect("hop_trace starts with src")
    }

    /// Whether a node at `pos` may take part in this discovery.
    pub fn admits(&self, pos: Vec2) -> bool {
        match &self.variant {
            RequestVariant::RequestZone { zone, .. } => zone.contains(pos),
            RequestVariant::Distance { dist, dest_pos } => distance(pos, *dest_pos) <= *dist,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteReply {
    pub msg_id: MsgId,
    pub dst_time: f64,
    pub dst_speed: f64,
    pub dst_pos: Vec2,
    /// Destination first, source last.
    pub reverse_path: Vec<NodeAddr>,
}

impl RouteReply {
    /// Forward route from source to destination.
    pub fn route(&self) -> Vec<NodeAddr> {
        self.reverse_path.iter().rev().copied().collect()
    }
}

/// What a source knows about a destination's whereabouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationRecord {
    pub pos: Vec2,
    pub time: f64,
    pub speed: f64,
}

impl LocationRecord {
    pub fn from_reply(rep: &RouteReply) -> Self {
        Self { pos: rep.dst_pos, time: rep.dst_time, speed: rep.dst_speed }
    }
}

/// Message ids a node has already processed. Unbounded: scenarios are
/// short, so nothing is ever evicted.
#[derive(Debug, Clone, Default)]
pub struct DuplicateCache {
    seen: HashSet<MsgId>,
}

impl DuplicateCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `id`; true if it was not seen before.
    pub fn insert(&mut self, id: MsgId) -> bool {
        self.seen.insert(id)
    }

    /// Drops `id`, so that a later copy is processed afresh.
    pub fn forget(&mut self, id: MsgId) {
        self.seen.remove(&id);
    }

    pub fn contains(&self, id: MsgId) -> bool {
        self.seen.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

/// The slice of node state a handler may read or update.
#[derive(Debug)]
pub struct NodeView<'a> {
    pub addr: NodeAddr,
    pub pos: Vec2,
    pub speed: f64,
    pub now: f64,
    pub cache: &'a mut DuplicateCache,
}

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("no location record for destination {0}")]
    NoDestinationInfo(NodeAddr),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("secure protocols need a commitment, plain ones must not carry one")]
    CommitmentMode,
    #[error("{0} is not on the reply's reverse path")]
    NotOnPath(NodeAddr),
    #[error("reverse hop {from} -> {to} is out of range")]
    BrokenReversePath { from: NodeAddr, to: NodeAddr },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    Duplicate,
    OutOfZone,
    Farther,
    MitmDetected,
}

impl fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiscardReason::Duplicate => "duplicate",
            DiscardReason::OutOfZone => "out-of-zone",
            DiscardReason::Farther => "farther",
            DiscardReason::MitmDetected => "mitm-detected",
        })
    }
}

/// What an eligible node does once the request is accepted.
#[derive(Debug, Clone, PartialEq)]
pub enum Accepted {
    Forward(RouteRequest),
    Reply(RouteReply),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RreqAction {
    Discard(DiscardReason),
    Forward(RouteRequest),
    Reply(RouteReply),
    /// Secure modes: authenticate the previous hop, then carry out `then`.
    StartHandshake {
        with: NodeAddr,
        then: Accepted,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RrepAction {
    ForwardReverse(NodeAddr),
    DeliverToSource(Vec<NodeAddr>),
}

/// Builds the source's request and marks it seen at the source.
pub fn initiate_rreq(
    view: &mut NodeView<'_>,
    dst: NodeAddr,
    record: Option<&LocationRecord>,
    protocol: Protocol,
    msg_id: MsgId,
    commitment: Option<Commitment>,
) -> Result<RouteRequest, RoutingError> {
    let record = record.ok_or(RoutingError::NoDestinationInfo(dst))?;
    if protocol.is_secure() != commitment.is_some() {
        return Err(RoutingError::CommitmentMode);
    }
    let variant = match protocol.scheme() {
        Scheme::RequestZone => {
            let ez = geo::expected_zone(record.pos, record.speed, record.time, view.now)?;
            let zone = geo::request_zone(view.pos, ez);
            RequestVariant::RequestZone {
                zone,
                src_pos: view.pos,
                src_in_zone: distance(view.pos, ez.center) <= ez.radius,
            }
        }
        Scheme::Distance => RequestVariant::Distance { dist: distance(view.pos, record.pos), dest_pos: record.pos },
    };
    view.cache.insert(msg_id);
    Ok(RouteRequest { msg_id, src: view.addr, dst, variant, commitment, hop_trace: vec![view.addr] })
}

/// Decides what a node does with a request received from its last hop.
pub fn handle_rreq(view: &mut NodeView<'_>, req: &RouteRequest, secure: bool) -> RreqAction {
    if !view.cache.insert(req.msg_id) {
        return RreqAction::Discard(DiscardReason::Duplicate);
    }
    let own_dist = match &req.variant {
        RequestVariant::RequestZone { zone, .. } => {
            if !zone.contains(view.pos) {
                return RreqAction::Discard(DiscardReason::OutOfZone);
            }
            None
        }
        RequestVariant::Distance { dist, dest_pos } => {
            let d = distance(view.pos, *dest_pos);
            if d > *dist {
                return RreqAction::Discard(DiscardReason::Farther);
            }
            Some(d)
        }
    };
    let accepted = if view.addr == req.dst {
        let mut reverse_path = req.hop_trace.clone();
        reverse_path.push(view.addr);
        reverse_path.reverse();
        Accepted::Reply(RouteReply {
            msg_id: req.msg_id,
            dst_time: view.now,
            dst_speed: view.speed,
            dst_pos: view.pos,
            reverse_path,
        })
    } else {
        let mut fwd = req.clone();
        fwd.hop_trace.push(view.addr);
        fwd.commitment = None;
        if let (RequestVariant::Distance { dist, .. }, Some(d)) = (&mut fwd.variant, own_dist) {
            *dist = d;
        }
        Accepted::Forward(fwd)
    };
    match (secure, accepted) {
        (true, then) => RreqAction::StartHandshake { with: req.last_hop(), then },
        (false, Accepted::Forward(r)) => RreqAction::Forward(r),
        (false, Accepted::Reply(r)) => RreqAction::Reply(r),
    }
}

/// Neighbor to re-offer a request to after a failed handshake: the
/// eligible, non-excluded neighbor closest to `dest_pos`, ties to the
/// smaller id.
pub fn select_alternate_neighbor(
    neighbors: &[(NodeAddr, Vec2)],
    req: &RouteRequest,
    dest_pos: Vec2,
    excluded: &BTreeSet<NodeAddr>,
) -> Option<NodeAddr> {
    neighbors
        .iter()
        .filter(|(a, p)| !excluded.contains(a) && req.admits(*p))
        .map(|(a, p)| (distance(*p, dest_pos), *a))
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
        .map(|(_, a)| a)
}

/// Walks a reply one step back toward the source. `pos_of` gives current
/// positions.
pub fn handle_rrep(
    addr: NodeAddr,
    rep: &RouteReply,
    pos_of: impl Fn(NodeAddr) -> Vec2,
    tx_range: f64,
) -> Result<RrepAction, RoutingError> {
    let idx = rep.reverse_path.iter().position(|a| *a == addr).ok_or(RoutingError::NotOnPath(addr))?;
    match rep.reverse_path.get(idx + 1) {
        None => Ok(RrepAction::DeliverToSource(rep.route())),
        Some(&next) => {
            if distance(pos_of(addr), pos_of(next)) > tx_range {
                Err(RoutingError::BrokenReversePath { from: addr, to: next })
            } else {
                Ok(RrepAction::ForwardReverse(next))
            }
        }
    }
}
