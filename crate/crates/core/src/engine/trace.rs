use serde::Serialize;

use crate::geo::Vec2;
use crate::routing::{DiscardReason, MsgId, NodeAddr, RouteRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    LinkBroken,
    Attacker,
    DiscoveryFailed,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum TraceEvent {
    Initiate { msg_id: MsgId, pos: Vec2, request: RouteRequest },
    Forward { msg_id: MsgId, pos: Vec2, request: RouteRequest },
    Discard { msg_id: MsgId, reason: DiscardReason },
    Handshake { msg_id: MsgId, peer: NodeAddr, verified: bool },
    Reply { msg_id: MsgId, reverse_path: Vec<NodeAddr> },
    ReplyLost { msg_id: MsgId, next: NodeAddr },
    RouteInstalled { flow: usize, route: Vec<NodeAddr> },
    RouteBroken { flow: usize },
    DiscoveryFailed { flow: usize },
    PacketDropped { flow: usize, packet: usize, reason: DropReason },
    PacketDelivered { flow: usize, packet: usize, delay: f64 },
}

/// One line of the debug trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub time: f64,
    pub node: NodeAddr,
    #[serde(flatten)]
    pub event: TraceEvent,
}
