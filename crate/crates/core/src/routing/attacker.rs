use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Honest,
    MaliciousMitm,
}

/// How an interposed attacker treats a key exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackStrategy {
    /// Relays every message unchanged.
    Passive,
    /// Replaces the responder's reply toward the initiator with its own key
    /// and a random string different from the responder's.
    SubstituteResponder,
    /// Replaces both directions with its own key and one random string of
    /// its own. Escapes detection exactly when the two honest strings agree.
    SubstituteBoth,
}

impl AttackStrategy {
    pub fn name(self) -> &'static str {
        match self {
            AttackStrategy::Passive => "passive",
            AttackStrategy::SubstituteResponder => "substitute_responder",
            AttackStrategy::SubstituteBoth => "substitute_both",
        }
    }
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [AttackStrategy::Passive, AttackStrategy::SubstituteResponder, AttackStrategy::SubstituteBoth]
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| {
                format!("unknown attacker strategy `{s}`, expected passive, substitute_responder or substitute_both")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Traffic {
    Control,
    Handshake,
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackEffect {
    None,
    Relay,
    Drop,
    Substitute,
}

/// Effect of a node with `role` sitting inside a link that carries `traffic`.
pub fn attacker_act(role: NodeRole, strategy: AttackStrategy, traffic: Traffic) -> AttackEffect {
    match (role, traffic) {
        (NodeRole::Honest, _) => AttackEffect::None,
        (NodeRole::MaliciousMitm, Traffic::Data) => AttackEffect::Drop,
        (NodeRole::MaliciousMitm, Traffic::Control) => AttackEffect::Relay,
        (NodeRole::MaliciousMitm, Traffic::Handshake) => match strategy {
            AttackStrategy::Passive => AttackEffect::Relay,
            _ => AttackEffect::Substitute,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_nodes_never_interfere() {
        for t in [Traffic::Control, Traffic::Handshake, Traffic::Data] {
            assert_eq!(attacker_act(NodeRole::Honest, AttackStrategy::SubstituteBoth, t), AttackEffect::None);
        }
    }

    #[test]
    fn attacker_effects() {
        let m = NodeRole::MaliciousMitm;
        assert_eq!(attacker_act(m, AttackStrategy::SubstituteResponder, Traffic::Data), AttackEffect::Drop);
        assert_eq!(attacker_act(m, AttackStrategy::SubstituteResponder, Traffic::Control), AttackEffect::Relay);
        assert_eq!(attacker_act(m, AttackStrategy::SubstituteResponder, Traffic::Handshake), AttackEffect::Substitute);
        assert_eq!(attacker_act(m, AttackStrategy::Passive, Traffic::Handshake), AttackEffect::Relay);
    }

    #[test]
    fn strategy_names_parse() {
        for s in [AttackStrategy::Passive, AttackStrategy::SubstituteResponder, AttackStrategy::SubstituteBoth] {
            assert_eq!(s.name().parse::<AttackStrategy>(), Ok(s));
        }
        assert!("loud".parse::<AttackStrategy>().is_err());
    }
}
