//! Pairwise key agreement between consecutive hops, with an optional
//! attacker sitting inside the link.
//!
//! Message order: the initiator's commitment travels with the request, the
//! responder answers with its public key and random string, the initiator
//! opens its commitment, and both sides compare authentication strings over
//! the out-of-band channel.

use rand::Rng;

use super::{AttackStrategy, NodeAddr};
use crate::crypto::{
    auth_string, commit_fresh, open_verify, shared_key, AuthString, Commitment, Concatenation, DhParams, OpenParam,
    PrivateKey, PublicKey, RandomString, SharedKey,
};
use crate::link::{oob_compare, LinkTiming, OobChannel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandshakeStage {
    SentCommit,
    GotPeerMsg,
    SentOpen,
    Verified,
    Detected,
}

/// One endpoint's view. `shared` is set iff `stage` is `Verified`.
#[derive(Debug, Clone, PartialEq)]
pub struct HandshakeState {
    pub stage: HandshakeStage,
    pub own_private: PrivateKey,
    pub own_string: RandomString,
    pub peer_concat: Option<Concatenation>,
    pub shared: Option<SharedKey>,
}

impl HandshakeState {
    fn new(stage: HandshakeStage, own_private: &PrivateKey, own_string: &RandomString) -> Self {
        Self {
            stage,
            own_private: own_private.clone(),
            own_string: own_string.clone(),
            peer_concat: None,
            shared: None,
        }
    }
}

/// The node whose commitment went out with the request.
#[derive(Debug, Clone, Copy)]
pub struct Initiator<'a> {
    pub addr: NodeAddr,
    pub private: &'a PrivateKey,
    pub commitment: Commitment,
    pub opening: &'a OpenParam,
}

#[derive(Debug, Clone)]
pub struct Responder<'a> {
    pub addr: NodeAddr,
    pub private: &'a PrivateKey,
    pub public: &'a PublicKey,
    pub string: RandomString,
}

/// An attacker that controls the in-band link between the two parties.
#[derive(Debug, Clone, Copy)]
pub struct Interceptor<'a> {
    pub addr: NodeAddr,
    pub public: &'a PublicKey,
    pub strategy: AttackStrategy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HandshakeOutcome {
    Established { initiator_key: SharedKey, responder_key: SharedKey, delay: f64 },
    MitmDetected { delay: f64 },
}

impl HandshakeOutcome {
    pub fn delay(&self) -> f64 {
        match self {
            HandshakeOutcome::Established { delay, .. } | HandshakeOutcome::MitmDetected { delay } => *delay,
        }
    }

    pub fn is_detected(&self) -> bool {
        matches!(self, HandshakeOutcome::MitmDetected { .. })
    }
}

#[derive(Debug, Clone)]
pub struct HandshakeReport {
    pub outcome: HandshakeOutcome,
    pub initiator: HandshakeState,
    pub responder: HandshakeState,
    /// Strings each side put on the out-of-band channel, if it got that far.
    pub initiator_sas: Option<AuthString>,
    pub responder_sas: Option<AuthString>,
}

fn random_string_other_than<R: Rng + ?Sized>(avoid: &RandomString, rng: &mut R) -> RandomString {
    loop {
        let s = RandomString::random(avoid.len(), rng);
        if s != *avoid {
            return s;
        }
    }
}

/// Runs the exchange to completion. `rng` is only drawn from by the
/// attacker.
pub fn run_handshake<R: Rng + ?Sized>(
    params: &DhParams,
    initiator: &Initiator<'_>,
    responder: &Responder<'_>,
    attacker: Option<&Interceptor<'_>>,
    timing: &LinkTiming,
    rng: &mut R,
) -> HandshakeReport {
    let own_a = &initiator.opening.committed_message.random_string;
    let mut init_state = HandshakeState::new(HandshakeStage::SentCommit, initiator.private, own_a);
    let mut resp_state = HandshakeState::new(HandshakeStage::SentCommit, responder.private, &responder.string);
    let strategy = attacker.map(|a| a.strategy).unwrap_or(AttackStrategy::Passive);
    let hops = if attacker.is_some() { 2.0 } else { 1.0 };

    // commitment and opening as they reach the responder
    let (c_rx, w_rx) = match (attacker, strategy) {
        (Some(m), AttackStrategy::SubstituteBoth) => {
            let fake =
                Concatenation { public_key: m.public.clone(), random_string: RandomString::random(own_a.len(), rng) };
            commit_fresh(fake, rng)
        }
        _ => (initiator.commitment, initiator.opening.clone()),
    };

    let m_n = Concatenation { public_key: responder.public.clone(), random_string: responder.string.clone() };
    let m_rx = match (attacker, strategy) {
        (Some(m), AttackStrategy::SubstituteResponder) => Concatenation {
            public_key: m.public.clone(),
            random_string: random_string_other_than(&responder.string, rng),
        },
        (Some(m), AttackStrategy::SubstituteBoth) => {
            Concatenation { public_key: m.public.clone(), random_string: w_rx.committed_message.random_string.clone() }
        }
        _ => m_n,
    };
    init_state.stage = HandshakeStage::GotPeerMsg;
    init_state.peer_concat = Some(m_rx.clone());
    init_state.stage = HandshakeStage::SentOpen;
    resp_state.stage = HandshakeStage::SentOpen;

    let exchange_delay = 2.0 * hops * timing.per_hop_tx;
    let detected = |mut i: HandshakeState, mut r: HandshakeState, delay, si, sr| {
        i.stage = HandshakeStage::Detected;
        r.stage = HandshakeStage::Detected;
        HandshakeReport {
            outcome: HandshakeOutcome::MitmDetected { delay },
            initiator: i,
            responder: r,
            initiator_sas: si,
            responder_sas: sr,
        }
    };

    let opened = match open_verify(&c_rx, &w_rx) {
        Ok(m) => m,
        Err(_) => return detected(init_state, resp_state, exchange_delay, None, None),
    };
    resp_state.peer_concat = Some(opened.clone());
    resp_state.stage = HandshakeStage::GotPeerMsg;

    let (s_i, s_r) =
        match (auth_string(own_a, &m_rx.random_string), auth_string(&opened.random_string, &responder.string)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return detected(init_state, resp_state, exchange_delay, None, None),
        };
    let (matched, oob_delay) = oob_compare(&OobChannel::new(initiator.addr, responder.addr), &s_i, &s_r, timing);
    let delay = exchange_delay + oob_delay;
    if !matched {
        return detected(init_state, resp_state, delay, Some(s_i), Some(s_r));
    }
    let initiator_key = shared_key(params, &m_rx.public_key, initiator.private);
    let responder_key = shared_key(params, &opened.public_key, responder.private);
    init_state.stage = HandshakeStage::Verified;
    init_state.shared = Some(initiator_key.clone());
    resp_state.stage = HandshakeStage::Verified;
    resp_state.shared = Some(responder_key.clone());
    HandshakeReport {
        outcome: HandshakeOutcome::Established { initiator_key, responder_key, delay },
        initiator: init_state,
        responder: resp_state,
        initiator_sas: Some(s_i),
        responder_sas: Some(s_r),
    }
}
