//! The event loop of a single scenario.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gen_traffic;
use super::metrics::{FlowLog, PacketRecord, SimLog};
use super::scenario::{DhSource, ReplyMode, Scenario};
use super::trace::{DropReason, TraceEvent, TraceRecord};
use crate::crypto::{
    commit_fresh, gen_public, Concatenation, DhParams, OpenParam, PrivateKey, PublicKey, RandomString,
};
use crate::geo::{distance, Vec2};
use crate::mobility::{advance, sample_initial, Kinematics, MobilityConfig};
use crate::routing::{
    attacker_act, handle_rrep, handle_rreq, initiate_rreq, run_handshake, select_alternate_neighbor, Accepted,
    AttackEffect, DiscardReason, DuplicateCache, Initiator, Interceptor, LocationRecord, MsgId, NodeAddr, NodeRole,
    NodeView, Responder, RouteReply, RouteRequest, RoutingError, RrepAction, RreqAction, Traffic,
};

const STREAM_DH: u64 = 1;
const STREAM_CRYPTO: u64 = 2;
const STREAM_KEYS: u64 = 3;
const STREAM_HONEST: u64 = 1 << 32;
const STREAM_ATTACKER: u64 = 2 << 32;
const STREAM_TRAFFIC: u64 = 3 << 32;

/// Independent generator for one subsystem of one scenario.
pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

struct DataPacket {
    flow: usize,
    packet: usize,
    route: Rc<[usize]>,
    /// Index into `route` of the node currently holding the packet.
    hop: usize,
    epoch: u64,
}

enum Message {
    Request(Rc<RouteRequest>),
    Reply(Rc<RouteReply>),
    Data(DataPacket),
}

enum EventKind {
    Tick(u64),
    Send { flow: usize, packet: usize },
    Arrive { to: usize, from: usize, msg: Message },
    HandshakeDone { responder: usize, initiator: usize, msg_id: MsgId, verified: bool, then: Accepted },
    DiscoveryTimeout { flow: usize, msg_id: MsgId },
    RouteTimeout { flow: usize, epoch: u64 },
}

struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap pops the earliest (time, seq) first
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trust {
    Unverified,
    Verified,
}

struct Session {
    ready_at: f64,
    /// Attacker that captured the pair's group formation.
    interposer: Option<usize>,
    trust: Trust,
}

struct Node {
    kin: Kinematics,
    rng: ChaCha8Rng,
    cache: DuplicateCache,
    keys: Option<(PrivateKey, PublicKey)>,
}

/// A request as a node sent it on, kept for re-offers after a failed
/// handshake.
struct Outgoing {
    req: Rc<RouteRequest>,
    opening: Option<OpenParam>,
    offered: BTreeSet<NodeAddr>,
    excluded: BTreeSet<NodeAddr>,
}

struct MsgInfo {
    flow: usize,
    epoch: u64,
    dest_pos: Vec2,
}

struct FlowState {
    src: usize,
    dst: usize,
    record: LocationRecord,
    route: Option<Rc<[usize]>>,
    /// Bumped each time the installed route is torn down.
    epoch: u64,
    /// Pending flood and its attempt number.
    discovery: Option<(MsgId, u32)>,
    buffer: Vec<usize>,
    floods: u64,
    timeout_armed: Option<u64>,
    log: FlowLog,
}

pub(crate) struct Sim<'a> {
    sc: &'a Scenario,
    mobility: MobilityConfig,
    now: f64,
    end: f64,
    seq: u64,
    queue: BinaryHeap<Event>,
    nodes: Vec<Node>,
    honest: usize,
    sessions: HashMap<(usize, usize), Session>,
    /// Pairs that caught a substitution; they re-form over the out-of-band
    /// channel, which no attacker can sit inside.
    oob_paired: HashSet<(usize, usize)>,
    /// Time each radio finishes its current group formation.
    busy: Vec<f64>,
    outgoing: HashMap<(usize, MsgId), Outgoing>,
    msgs: Vec<MsgInfo>,
    reply_seen: HashSet<(usize, MsgId)>,
    flows: Vec<FlowState>,
    params: Option<DhParams>,
    crypto_rng: ChaCha8Rng,
    trace: Option<Vec<TraceRecord>>,
}

fn pair(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl<'a> Sim<'a> {
    /// Expects a validated scenario.
    pub(crate) fn new(sc: &'a Scenario, traced: bool) -> Self {
        let mobility = sc.mobility();
        let honest = sc.nodes;
        let attackers = sc.malicious_count();
        let secure = sc.protocol.is_secure();
        let params = secure.then(|| match sc.dh {
            DhSource::Random => DhParams::random(&mut stream(sc.seed, STREAM_DH)),
            DhSource::Fixed { modulus, base } => DhParams::from_u64(modulus, base).expect("validated"),
        });
        let mut key_rng = stream(sc.seed, STREAM_KEYS);
        let nodes: Vec<Node> = (0..honest + attackers)
            .map(|i| {
                let id = if i < honest { STREAM_HONEST + i as u64 } else { STREAM_ATTACKER + (i - honest) as u64 };
                let mut rng = stream(sc.seed, id);
                let kin = sample_initial(&mobility, &mut rng);
                let keys = params.as_ref().map(|p| {
                    let private = PrivateKey::random(p, &mut key_rng);
                    let public = gen_public(p, &private);
                    (private, public)
                });
                Node { kin, rng, cache: DuplicateCache::new(), keys }
            })
            .collect();
        let mut sim = Sim {
            sc,
            mobility,
            now: 0.0,
            end: sc.duration + sc.drain,
            seq: 0,
            queue: BinaryHeap::new(),
            busy: vec![0.0; nodes.len()],
            nodes,
            honest,
            sessions: HashMap::new(),
            oob_paired: HashSet::new(),
            outgoing: HashMap::new(),
            msgs: Vec::new(),
            reply_seen: HashSet::new(),
            flows: Vec::new(),
            params,
            crypto_rng: stream(sc.seed, STREAM_CRYPTO),
            trace: traced.then(Vec::new),
        };
        for f in 0..sc.flows() {
            let (src, dst) = (f, f + sc.flows());
            let mut times = gen_traffic(sc.send_rate, sc.duration, &mut stream(sc.seed, STREAM_TRAFFIC + f as u64));
            if let Some(cap) = sc.packets_per_flow {
                times.truncate(cap);
            }
            for (p, t) in times.iter().enumerate() {
                sim.schedule(*t, EventKind::Send { flow: f, packet: p });
            }
            let d = sim.nodes[dst].kin;
            sim.flows.push(FlowState {
                src,
                dst,
                record: LocationRecord { pos: d.pos, time: 0.0, speed: d.speed },
                route: None,
                epoch: 0,
                discovery: None,
                buffer: Vec::new(),
                floods: 0,
                timeout_armed: None,
                log: FlowLog {
                    src: Some(NodeAddr(src as u32)),
                    dst: Some(NodeAddr(dst as u32)),
                    packets: times.iter().map(|&t| PacketRecord::new(t)).collect(),
                    ..Default::default()
                },
            });
        }
        sim.schedule(sc.tick, EventKind::Tick(1));
        sim
    }

    pub(crate) fn run(mut self) -> (SimLog, Vec<TraceRecord>) {
        while let Some(ev) = self.queue.pop() {
            if ev.time > self.end {
                break;
            }
            debug_assert!(ev.time >= self.now);
            self.now = ev.time;
            self.dispatch(ev.kind);
        }
        let log = SimLog { flows: self.flows.into_iter().map(|f| f.log).collect() };
        (log, self.trace.unwrap_or_default())
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Event { time, seq: self.seq, kind });
    }

    fn record(&mut self, node: usize, event: impl FnOnce() -> TraceEvent) {
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceRecord { time: self.now, node: NodeAddr(node as u32), event: event() });
        }
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::Tick(k) => self.on_tick(k),
            EventKind::Send { flow, packet } => self.on_send(flow, packet),
            EventKind::Arrive { to, from, msg } => match msg {
                Message::Request(req) => self.on_request(to, req),
                Message::Reply(rep) => self.on_reply(to, rep),
                Message::Data(pkt) => self.on_data(to, from, pkt),
            },
            EventKind::HandshakeDone { responder, initiator, msg_id, verified, then } => {
                self.on_handshake_done(responder, initiator, msg_id, verified, then)
            }
            EventKind::DiscoveryTimeout { flow, msg_id } => self.on_discovery_timeout(flow, msg_id),
            EventKind::RouteTimeout { flow, epoch } => self.on_route_timeout(flow, epoch),
        }
    }

    fn pos(&self, i: usize) -> Vec2 {
        self.nodes[i].kin.pos
    }

    fn in_range(&self, a: usize, b: usize) -> bool {
        distance(self.pos(a), self.pos(b)) <= self.sc.tx_range
    }

    fn honest_neighbors(&self, u: usize) -> Vec<usize> {
        (0..self.honest).filter(|&j| j != u && self.in_range(u, j)).collect()
    }

    /// Lowest-numbered attacker within range of both endpoints.
    fn interposer_for(&self, a: usize, b: usize) -> Option<usize> {
        (self.honest..self.nodes.len()).find(|&m| self.in_range(m, a) && self.in_range(m, b))
    }

    /// Time the pair's session can carry traffic, forming it if needed.
    /// `None` when the pair is out of range.
    fn link(&mut self, a: usize, b: usize) -> Option<(f64, Option<usize>)> {
        if !self.in_range(a, b) {
            return None;
        }
        if let Some(s) = self.sessions.get(&pair(a, b)) {
            return Some((s.ready_at.max(self.now), s.interposer));
        }
        // one group formation at a time per radio
        let start = self.now.max(self.busy[a]).max(self.busy[b]);
        let ready = start + self.sc.timing.session_setup();
        self.busy[a] = ready;
        self.busy[b] = ready;
        let interposer = if self.oob_paired.contains(&pair(a, b)) { None } else { self.interposer_for(a, b) };
        self.sessions.insert(pair(a, b), Session { ready_at: ready, interposer, trust: Trust::Unverified });
        Some((ready, interposer))
    }

    fn transit(&self, ready: f64, interposer: Option<usize>) -> f64 {
        let hops = if interposer.is_some() { 2.0 } else { 1.0 };
        ready + hops * self.sc.timing.per_hop_tx
    }

    fn send_control(&mut self, from: usize, to: usize, msg: Message) -> bool {
        match self.link(from, to) {
            Some((ready, interposer)) => {
                let at = self.transit(ready, interposer);
                self.schedule(at, EventKind::Arrive { to, from, msg });
                true
            }
            None => false,
        }
    }

    fn broadcast_request(&mut self, u: usize, req: Rc<RouteRequest>, opening: Option<OpenParam>) {
        let neighbors = self.honest_neighbors(u);
        if self.sc.protocol.is_secure() {
            let offered = neighbors.iter().map(|&n| NodeAddr(n as u32)).collect();
            let out = Outgoing { req: req.clone(), opening, offered, excluded: BTreeSet::new() };
            self.outgoing.insert((u, req.msg_id), out);
        }
        for n in neighbors {
            self.send_control(u, n, Message::Request(req.clone()));
        }
    }

    fn on_request(&mut self, v: usize, req: Rc<RouteRequest>) {
        let secure = self.sc.protocol.is_secure();
        let now = self.now;
        let node = &mut self.nodes[v];
        let mut view = NodeView {
            addr: NodeAddr(v as u32),
            pos: node.kin.pos,
            speed: node.kin.speed,
            now,
            cache: &mut node.cache,
        };
        let action = handle_rreq(&mut view, &req, secure);
        let msg_id = req.msg_id;
        match action {
            RreqAction::Discard(reason) => self.record(v, || TraceEvent::Discard { msg_id, reason }),
            RreqAction::Forward(r) => self.forward(v, r, None),
            RreqAction::Reply(rep) => self.emit_reply(v, rep),
            RreqAction::StartHandshake { with, then } => self.start_handshake(v, with.0 as usize, &req, then),
        }
    }

    fn forward(&mut self, v: usize, r: RouteRequest, opening: Option<OpenParam>) {
        let pos = self.pos(v);
        self.record(v, || TraceEvent::Forward { msg_id: r.msg_id, pos, request: r.clone() });
        self.broadcast_request(v, Rc::new(r), opening);
    }

    fn start_handshake(&mut self, v: usize, u: usize, req: &RouteRequest, then: Accepted) {
        let msg_id = req.msg_id;
        let bits = self.sc.auth_bits;
        let strategy = self.sc.attacker_strategy;
        let interposer = self.sessions.get(&pair(u, v)).and_then(|s| s.interposer);
        let (Some(params), Some(out), Some(commitment)) =
            (self.params.as_ref(), self.outgoing.get(&(u, msg_id)), req.commitment)
        else {
            return;
        };
        let (Some(opening), Some((u_priv, _)), Some((v_priv, v_pub))) =
            (out.opening.as_ref(), self.nodes[u].keys.as_ref(), self.nodes[v].keys.as_ref())
        else {
            return;
        };
        let init = Initiator { addr: NodeAddr(u as u32), private: u_priv, commitment, opening };
        let resp = Responder {
            addr: NodeAddr(v as u32),
            private: v_priv,
            public: v_pub,
            string: RandomString::random(bits, &mut self.crypto_rng),
        };
        let interceptor = interposer.and_then(|m| {
            self.nodes[m].keys.as_ref().map(|(_, public)| Interceptor { addr: NodeAddr(m as u32), public, strategy })
        });
        let report = run_handshake(params, &init, &resp, interceptor.as_ref(), &self.sc.timing, &mut self.crypto_rng);
        let done = self.now + report.outcome.delay();
        let verified = !report.outcome.is_detected();
        self.schedule(done, EventKind::HandshakeDone { responder: v, initiator: u, msg_id, verified, then });
    }

    fn on_handshake_done(&mut self, v: usize, u: usize, msg_id: MsgId, verified: bool, then: Accepted) {
        let peer = NodeAddr(u as u32);
        self.record(v, || TraceEvent::Handshake { msg_id, peer, verified });
        if verified {
            if let Some(s) = self.sessions.get_mut(&pair(u, v)) {
                s.trust = Trust::Verified;
            }
        } else {
            self.sessions.remove(&pair(u, v));
            self.oob_paired.insert(pair(u, v));
        }
        if verified {
            match then {
                Accepted::Forward(mut r) => {
                    let public = self.nodes[v].keys.as_ref().expect("secure nodes hold keys").1.clone();
                    let random_string = RandomString::random(self.sc.auth_bits, &mut self.crypto_rng);
                    let (c, w) =
                        commit_fresh(Concatenation { public_key: public, random_string }, &mut self.crypto_rng);
                    r.commitment = Some(c);
                    self.forward(v, r, Some(w));
                }
                Accepted::Reply(rep) => self.emit_reply(v, rep),
            }
            return;
        }
        let flow = self.msgs[msg_id.0 as usize].flow;
        self.flows[flow].log.mitm_detections += 1;
        self.record(v, || TraceEvent::Discard { msg_id, reason: DiscardReason::MitmDetected });
        // the tampered copy does not count as received
        self.nodes[v].cache.forget(msg_id);
        let dest_pos = self.msgs[msg_id.0 as usize].dest_pos;
        let neighbors: Vec<(NodeAddr, Vec2)> =
            self.honest_neighbors(u).into_iter().map(|j| (NodeAddr(j as u32), self.pos(j))).collect();
        let Some(out) = self.outgoing.get_mut(&(u, msg_id)) else {
            return;
        };
        out.excluded.insert(NodeAddr(v as u32));
        let skip: BTreeSet<NodeAddr> = out.excluded.union(&out.offered).copied().collect();
        if let Some(alt) = select_alternate_neighbor(&neighbors, &out.req, dest_pos, &skip) {
            out.offered.insert(alt);
            let req = out.req.clone();
            self.send_control(u, alt.0 as usize, Message::Request(req));
        }
    }

    fn emit_reply(&mut self, d: usize, rep: RouteReply) {
        let msg_id = rep.msg_id;
        self.record(d, || TraceEvent::Reply { msg_id, reverse_path: rep.reverse_path.clone() });
        let rep = Rc::new(rep);
        match self.sc.reply_mode {
            ReplyMode::ReversePath => self.pass_reply(d, rep),
            ReplyMode::Flood => {
                self.reply_seen.insert((d, msg_id));
                self.flood_reply(d, rep);
            }
        }
    }

    fn flood_reply(&mut self, x: usize, rep: Rc<RouteReply>) {
        for n in self.honest_neighbors(x) {
            self.send_control(x, n, Message::Reply(rep.clone()));
        }
    }

    fn pass_reply(&mut self, x: usize, rep: Rc<RouteReply>) {
        let nodes = &self.nodes;
        let step = handle_rrep(NodeAddr(x as u32), &rep, |a| nodes[a.0 as usize].kin.pos, self.sc.tx_range);
        match step {
            Ok(RrepAction::ForwardReverse(next)) => {
                self.send_control(x, next.0 as usize, Message::Reply(rep));
            }
            Ok(RrepAction::DeliverToSource(route)) => self.install_route(&rep, route),
            Err(RoutingError::BrokenReversePath { to, .. }) => {
                let msg_id = rep.msg_id;
                self.record(x, || TraceEvent::ReplyLost { msg_id, next: to });
            }
            Err(_) => {}
        }
    }

    fn on_reply(&mut self, x: usize, rep: Rc<RouteReply>) {
        match self.sc.reply_mode {
            ReplyMode::ReversePath => self.pass_reply(x, rep),
            ReplyMode::Flood => {
                if !self.reply_seen.insert((x, rep.msg_id)) {
                    return;
                }
                let flow = self.msgs[rep.msg_id.0 as usize].flow;
                if self.flows[flow].src == x {
                    self.install_route(&rep, rep.route());
                } else {
                    self.flood_reply(x, rep);
                }
            }
        }
    }

    fn install_route(&mut self, rep: &RouteReply, route: Vec<NodeAddr>) {
        let info = &self.msgs[rep.msg_id.0 as usize];
        let f = info.flow;
        let flow = &mut self.flows[f];
        if flow.route.is_some() || info.epoch != flow.epoch {
            return;
        }
        let path: Rc<[usize]> = route.iter().map(|a| a.0 as usize).collect();
        flow.route = Some(path.clone());
        flow.record = LocationRecord::from_reply(rep);
        flow.discovery = None;
        let epoch = flow.epoch;
        let buffered = std::mem::take(&mut flow.buffer);
        let src = flow.src;
        self.record(src, || TraceEvent::RouteInstalled { flow: f, route });
        for packet in buffered {
            self.send_data(DataPacket { flow: f, packet, route: path.clone(), hop: 0, epoch });
        }
    }

    fn issue_flood(&mut self, f: usize, attempt: u32) {
        let msg_id = MsgId(self.msgs.len() as u64);
        let (src, dst, record, epoch) = {
            let flow = &self.flows[f];
            (flow.src, flow.dst, flow.record, flow.epoch)
        };
        self.msgs.push(MsgInfo { flow: f, epoch, dest_pos: record.pos });
        let (commitment, opening) = match self.nodes[src].keys.as_ref() {
            Some((_, public)) => {
                let random_string = RandomString::random(self.sc.auth_bits, &mut self.crypto_rng);
                let msg = Concatenation { public_key: public.clone(), random_string };
                let (c, w) = commit_fresh(msg, &mut self.crypto_rng);
                (Some(c), Some(w))
            }
            None => (None, None),
        };
        let now = self.now;
        let node = &mut self.nodes[src];
        let mut view = NodeView {
            addr: NodeAddr(src as u32),
            pos: node.kin.pos,
            speed: node.kin.speed,
            now,
            cache: &mut node.cache,
        };
        let req = initiate_rreq(&mut view, NodeAddr(dst as u32), Some(&record), self.sc.protocol, msg_id, commitment)
            .expect("record is never newer than the clock");
        let flow = &mut self.flows[f];
        flow.floods += 1;
        if flow.floods > 1 {
            flow.log.route_rediscoveries += 1;
        }
        flow.discovery = Some((msg_id, attempt));
        let pos = self.pos(src);
        self.record(src, || TraceEvent::Initiate { msg_id, pos, request: req.clone() });
        self.broadcast_request(src, Rc::new(req), opening);
        self.schedule(now + self.sc.discovery_timeout, EventKind::DiscoveryTimeout { flow: f, msg_id });
    }

    fn on_discovery_timeout(&mut self, f: usize, msg_id: MsgId) {
        let Some((pending, attempt)) = self.flows[f].discovery else {
            return;
        };
        if pending != msg_id {
            return;
        }
        if attempt < self.sc.discovery_attempts {
            self.issue_flood(f, attempt + 1);
            return;
        }
        let flow = &mut self.flows[f];
        flow.discovery = None;
        let dropped = std::mem::take(&mut flow.buffer);
        let src = flow.src;
        self.record(src, || TraceEvent::DiscoveryFailed { flow: f });
        for packet in dropped {
            self.record(src, || TraceEvent::PacketDropped { flow: f, packet, reason: DropReason::DiscoveryFailed });
        }
    }

    fn on_route_timeout(&mut self, f: usize, epoch: u64) {
        let flow = &mut self.flows[f];
        if flow.epoch != epoch || flow.route.is_none() {
            return;
        }
        flow.route = None;
        flow.epoch += 1;
        let src = flow.src;
        self.record(src, || TraceEvent::RouteBroken { flow: f });
        self.issue_flood(f, 1);
    }

    fn on_send(&mut self, f: usize, packet: usize) {
        let flow = &mut self.flows[f];
        if let Some(route) = flow.route.clone() {
            let epoch = flow.epoch;
            self.send_data(DataPacket { flow: f, packet, route, hop: 0, epoch });
            return;
        }
        flow.buffer.push(packet);
        if flow.discovery.is_none() {
            self.issue_flood(f, 1);
        }
    }

    fn send_data(&mut self, pkt: DataPacket) {
        let (x, y) = (pkt.route[pkt.hop], pkt.route[pkt.hop + 1]);
        let usable = if !self.in_range(x, y) {
            None
        } else if self.sc.protocol.is_secure() {
            // data only rides sessions whose pairing succeeded
            self.sessions
                .get(&pair(x, y))
                .filter(|s| s.trust == Trust::Verified)
                .map(|s| (s.ready_at.max(self.now), s.interposer))
        } else {
            self.link(x, y)
        };
        let (flow, packet) = (pkt.flow, pkt.packet);
        match usable {
            None => {
                self.record(x, || TraceEvent::PacketDropped { flow, packet, reason: DropReason::LinkBroken });
                let f = &mut self.flows[flow];
                if f.timeout_armed != Some(pkt.epoch) {
                    f.timeout_armed = Some(pkt.epoch);
                    let at = self.now + self.sc.ack_timeout;
                    self.schedule(at, EventKind::RouteTimeout { flow, epoch: pkt.epoch });
                }
            }
            Some((ready, interposer)) => {
                if let Some(m) = interposer {
                    if attacker_act(NodeRole::MaliciousMitm, self.sc.attacker_strategy, Traffic::Data)
                        == AttackEffect::Drop
                    {
                        self.record(m, || TraceEvent::PacketDropped { flow, packet, reason: DropReason::Attacker });
                        return;
                    }
                }
                let at = self.transit(ready, interposer);
                self.schedule(at, EventKind::Arrive { to: y, from: x, msg: Message::Data(pkt) });
            }
        }
    }

    fn on_data(&mut self, y: usize, _from: usize, mut pkt: DataPacket) {
        pkt.hop += 1;
        if pkt.hop + 1 < pkt.route.len() {
            self.send_data(pkt);
            return;
        }
        debug_assert_eq!(y, self.flows[pkt.flow].dst);
        let rec = &mut self.flows[pkt.flow].log.packets[pkt.packet];
        if rec.delivered_at.is_none() {
            rec.delivered_at = Some(self.now);
            let (flow, packet, delay) = (pkt.flow, pkt.packet, self.now - rec.sent_at);
            self.record(y, || TraceEvent::PacketDelivered { flow, packet, delay });
        }
    }

    fn on_tick(&mut self, k: u64) {
        let dt = self.sc.tick;
        let cfg = self.mobility;
        for node in &mut self.nodes {
            node.kin = advance(node.kin, dt, &cfg, &mut node.rng);
        }
        let nodes = &self.nodes;
        let range = self.sc.tx_range;
        let near = |a: usize, b: usize| distance(nodes[a].kin.pos, nodes[b].kin.pos) <= range;
        // sessions end when the pair separates or the capturing attacker leaves
        self.sessions.retain(|&(a, b), s| near(a, b) && s.interposer.is_none_or(|m| near(m, a) && near(m, b)));
        let next = (k + 1) as f64 * dt;
        if next <= self.end {
            self.schedule(next, EventKind::Tick(k + 1));
        }
    }
}
