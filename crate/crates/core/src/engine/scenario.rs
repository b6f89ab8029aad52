use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{CryptoError, DhParams};
use crate::link::LinkTiming;
use crate::mobility::{MobilityConfig, MobilityError};
use crate::routing::{AttackStrategy, Protocol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMode {
    Fixed(f64),
    Uniform { min: f64, max: f64 },
}

impl std::fmt::Display for SpeedMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpeedMode::Fixed(v) => write!(f, "{v}"),
            SpeedMode::Uniform { min, max } => write!(f, "{min}..{max}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Malicious {
    Count(usize),
    /// Rounded against the honest node count.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DhSource {
    /// One modulus and base drawn per scenario from the built-in prime list.
    Random,
    Fixed {
        modulus: u64,
        base: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplyMode {
    /// Unicast back along the request's path; a broken hop loses the reply.
    ReversePath,
    /// The destination floods the reply; the source takes the first copy.
    Flood,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("node count must be even and at least 2, got {0}")]
    NodeCount(usize),
    #[error("malicious count {count} must be below the node count {nodes}")]
    TooManyMalicious { count: usize, nodes: usize },
    #[error("malicious fraction must lie in [0, 1), got {0}")]
    MaliciousFraction(f64),
    #[error("{name} must be {expect}, got {value}")]
    OutOfBounds { name: &'static str, expect: &'static str, value: f64 },
    #[error("authentication strings need 1 to 64 bits, got {0}")]
    AuthBits(usize),
    #[error("link timings must be finite and non-negative")]
    Timing,
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Honest vehicles. Flow `i` runs from node `i` to node `i + nodes/2`.
    pub nodes: usize,
    /// Extra attacker devices, on top of the honest nodes.
    pub malicious: Malicious,
    pub protocol: Protocol,
    pub duration: f64,
    pub send_rate: f64,
    pub packets_per_flow: Option<usize>,
    pub speed: SpeedMode,
    pub tx_range: f64,
    pub region_width: f64,
    pub region_height: f64,
    pub mean_leg: f64,
    pub timing: LinkTiming,
    pub dh: DhSource,
    pub auth_bits: usize,
    pub attacker_strategy: AttackStrategy,
    pub reply_mode: ReplyMode,
    pub discovery_timeout: f64,
    pub discovery_attempts: u32,
    pub ack_timeout: f64,
    pub tick: f64,
    /// Time after the last send during which packets may still arrive.
    pub drain: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            nodes: 40,
            malicious: Malicious::Fraction(0.1),
            protocol: Protocol::SecureDlar,
            duration: 10.0,
            send_rate: 50.0,
            packets_per_flow: None,
            speed: SpeedMode::Fixed(5.0),
            tx_range: 200.0,
            region_width: 1000.0,
            region_height: 1000.0,
            mean_leg: 25.0,
            timing: LinkTiming::default(),
            dh: DhSource::Random,
            auth_bits: crate::crypto::DEFAULT_AUTH_BITS,
            attacker_strategy: AttackStrategy::SubstituteResponder,
            reply_mode: ReplyMode::ReversePath,
            discovery_timeout: 0.5,
            discovery_attempts: 3,
            ack_timeout: 0.1,
            tick: 0.01,
            drain: 1.0,
            seed: 1,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::OutOfBounds { name, expect: "positive", value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::OutOfBounds { name, expect: "non-negative", value })
    }
}

impl Scenario {
    pub fn flows(&self) -> usize {
        self.nodes / 2
    }

    pub fn malicious_count(&self) -> usize {
        match self.malicious {
            Malicious::Count(c) => c,
            Malicious::Fraction(f) => (f * self.nodes as f64).round() as usize,
        }
    }

    pub fn mobility(&self) -> MobilityConfig {
        let (speed_min, speed_max) = match self.speed {
            SpeedMode::Fixed(v) => (v, v),
            SpeedMode::Uniform { min, max } => (min, max),
        };
        MobilityConfig {
            region_width: self.region_width,
            region_height: self.region_height,
            speed_min,
            speed_max,
            mean_leg: self.mean_leg,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nodes < 2 || !self.nodes.is_multiple_of(2) {
            return Err(ConfigError::NodeCount(self.nodes));
        }
        if let Malicious::Fraction(f) = self.malicious {
            if !(0.0..1.0).contains(&f) {
                return Err(ConfigError::MaliciousFraction(f));
            }
        }
        let count = self.malicious_count();
        if count >= self.nodes {
            return Err(ConfigError::TooManyMalicious { count, nodes: self.nodes });
        }
        non_negative("duration", self.duration)?;
        positive("send_rate", self.send_rate)?;
        positive("tx_range", self.tx_range)?;
        positive("discovery_timeout", self.discovery_timeout)?;
        positive("ack_timeout", self.ack_timeout)?;
        positive("tick", self.tick)?;
        non_negative("drain", self.drain)?;
        if self.discovery_attempts == 0 {
            return Err(ConfigError::OutOfBounds { name: "discovery_attempts", expect: "at least 1", value: 0.0 });
        }
        if !(1..=64).contains(&self.auth_bits) {
            return Err(ConfigError::AuthBits(self.auth_bits));
        }
        if !self.timing.is_valid() {
            return Err(ConfigError::Timing);
        }
        self.mobility().validate()?;
        if let DhSource::Fixed { modulus, base } = self.dh {
            DhParams::from_u64(modulus, base)?;
        }
        Ok(())
    }
}
