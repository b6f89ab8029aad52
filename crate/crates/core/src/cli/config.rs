//! Flat `key = value` scenario files. Blank lines and `#` comments are
//! ignored; later settings override earlier ones.

use std::path::Path;
use std::str::FromStr;

use crate::engine::{DhSource, Malicious, ReplyMode, Scenario, SpeedMode};
use crate::routing::Protocol;

use super::CliError;

/// Every key [`apply_setting`] understands.
pub const KEYS: &[&str] = &[
    "nodes",
    "duration",
    "send_rate",
    "packets_per_flow",
    "speed",
    "malicious",
    "malicious_fraction",
    "protocol",
    "seed",
    "tx_range",
    "region_width",
    "region_height",
    "mean_leg",
    "discovery_ms",
    "go_negotiation_ms",
    "wps_ms",
    "addr_config_ms",
    "per_hop_ms",
    "oob_ms",
    "dh",
    "auth_bits",
    "attacker_strategy",
    "reply_mode",
    "discovery_timeout_ms",
    "discovery_attempts",
    "ack_timeout_ms",
    "tick_ms",
    "drain",
];

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Syntax { line: i + 1, text: raw.to_string() })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splits a `KEY=VALUE` command-line override.
pub fn parse_override(s: &str) -> Result<(String, String), CliError> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| CliError::Syntax { line: 0, text: s.to_string() })
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| CliError::Value {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn ms(key: &str, value: &str) -> Result<f64, CliError> {
    Ok(num::<f64>(key, value)? / 1000.0)
}

fn parse_speed(value: &str) -> Result<SpeedMode, CliError> {
    match value.split_once("..") {
        Some((lo, hi)) => Ok(SpeedMode::Uniform { min: num("speed", lo.trim())?, max: num("speed", hi.trim())? }),
        None => Ok(SpeedMode::Fixed(num("speed", value)?)),
    }
}

fn parse_dh(value: &str) -> Result<DhSource, CliError> {
    if value == "random" {
        return Ok(DhSource::Random);
    }
    let (m, b) = value.split_once(':').ok_or_else(|| CliError::Value {
        key: "dh".into(),
        value: value.into(),
        reason: "expected `random` or MODULUS:BASE".into(),
    })?;
    Ok(DhSource::Fixed { modulus: num("dh", m.trim())?, base: num("dh", b.trim())? })
}

pub fn apply_setting(sc: &mut Scenario, key: &str, value: &str) -> Result<(), CliError> {
    let t = &mut sc.timing;
    match key {
        "nodes" => sc.nodes = num(key, value)?,
        "duration" => sc.duration = num(key, value)?,
        "send_rate" => sc.send_rate = num(key, value)?,
        "packets_per_flow" => {
            sc.packets_per_flow = if value == "none" { None } else { Some(num(key, value)?) };
        }
        "speed" => sc.speed = parse_speed(value)?,
        "malicious" => sc.malicious = Malicious::Count(num(key, value)?),
        "malicious_fraction" => sc.malicious = Malicious::Fraction(num(key, value)?),
        "protocol" => {
            sc.protocol = Protocol::from_str(value).map_err(|e| CliError::Value {
                key: key.into(),
                value: value.into(),
                reason: e.to_string(),
            })?
        }
        "seed" => sc.seed = num(key, value)?,
        "tx_range" => sc.tx_range = num(key, value)?,
        "region_width" => sc.region_width = num(key, value)?,
        "region_height" => sc.region_height = num(key, value)?,
        "mean_leg" => sc.mean_leg = num(key, value)?,
        "discovery_ms" => t.discovery = ms(key, value)?,
        "go_negotiation_ms" => t.go_negotiation = ms(key, value)?,
        "wps_ms" => t.wps = ms(key, value)?,
        "addr_config_ms" => t.addr_config = ms(key, value)?,
        "per_hop_ms" => t.per_hop_tx = ms(key, value)?,
        "oob_ms" => t.oob = ms(key, value)?,
        "dh" => sc.dh = parse_dh(value)?,
        "auth_bits" => sc.auth_bits = num(key, value)?,
        "attacker_strategy" => {
            sc.attacker_strategy =
                value.parse().map_err(|reason| CliError::Value { key: key.into(), value: value.into(), reason })?
        }
        "reply_mode" => {
            sc.reply_mode = match value {
                "reverse_path" => ReplyMode::ReversePath,
                "flood" => ReplyMode::Flood,
                _ => {
                    return Err(CliError::Value {
                        key: key.into(),
                        value: value.into(),
                        reason: "expected reverse_path or flood".into(),
                    })
                }
            }
        }
        "discovery_timeout_ms" => sc.discovery_timeout = ms(key, value)?,
        "discovery_attempts" => sc.discovery_attempts = num(key, value)?,
        "ack_timeout_ms" => sc.ack_timeout = ms(key, value)?,
        "tick_ms" => sc.tick = ms(key, value)?,
        "drain" => sc.drain = num(key, value)?,
        _ => return Err(CliError::UnknownKey(key.to_string())),
    }
    Ok(())
}

/// Defaults, then the file at `path`, then `overrides`; validated.
pub fn load_scenario(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Scenario, CliError> {
    let mut sc = Scenario::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        for (k, v) in parse_config(&text)? {
            apply_setting(&mut sc, &k, &v)?;
        }
    }
    for (k, v) in overrides {
        apply_setting(&mut sc, k, v)?;
    }
    sc.validate()?;
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let text = "# header\nnodes = 20\n\n  protocol=dlar   # inline\n";
        assert_eq!(
            parse_config(text).unwrap(),
            vec![("nodes".into(), "20".into()), ("protocol".into(), "dlar".into())]
        );
        assert!(matches!(parse_config("nodes 20"), Err(CliError::Syntax { line: 1, .. })));
    }

    #[test]
    fn every_key_is_accepted() {
        let samples = [
            ("nodes", "20"),
            ("duration", "5"),
            ("send_rate", "25"),
            ("packets_per_flow", "100"),
            ("speed", "2..40"),
            ("malicious", "3"),
            ("malicious_fraction", "0.2"),
            ("protocol", "secure_rlar"),
            ("seed", "7"),
            ("tx_range", "150"),
            ("region_width", "800"),
            ("region_height", "900"),
            ("mean_leg", "30"),
            ("discovery_ms", "1"),
            ("go_negotiation_ms", "1"),
            ("wps_ms", "1"),
            ("addr_config_ms", "1"),
            ("per_hop_ms", "0.5"),
            ("oob_ms", "3"),
            ("dh", "23:5"),
            ("auth_bits", "16"),
            ("attacker_strategy", "passive"),
            ("reply_mode", "flood"),
            ("discovery_timeout_ms", "300"),
            ("discovery_attempts", "2"),
            ("ack_timeout_ms", "50"),
            ("tick_ms", "20"),
            ("drain", "0.5"),
        ];
        assert_eq!(samples.len(), KEYS.len());
        let mut sc = Scenario::default();
        for (k, v) in samples {
            apply_setting(&mut sc, k, v).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
        assert!(sc.validate().is_ok());
        assert_eq!(sc.speed, SpeedMode::Uniform { min: 2.0, max: 40.0 });
        assert_eq!(sc.malicious, Malicious::Fraction(0.2));
        assert!((sc.timing.per_hop_tx - 0.0005).abs() < 1e-15);
        assert_eq!(sc.dh, DhSource::Fixed { modulus: 23, base: 5 });
    }

    #[test]
    fn bad_values_are_reported() {
        let mut sc = Scenario::default();
        let err = apply_setting(&mut sc, "protocol", "aodv").unwrap_err().to_string();
        assert!(err.contains("rlar, dlar, secure_rlar, secure_dlar"), "{err}");
        assert!(matches!(apply_setting(&mut sc, "nodez", "3"), Err(CliError::UnknownKey(_))));
        assert!(matches!(apply_setting(&mut sc, "nodes", "many"), Err(CliError::Value { .. })));
        assert!(apply_setting(&mut sc, "dh", "23").is_err());
    }

    #[test]
    fn overrides_win_and_validation_runs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.conf");
        std::fs::write(&path, "nodes = 20\nseed = 3\n").unwrap();
        let sc = load_scenario(Some(&path), &[("seed".into(), "9".into())]).unwrap();
        assert_eq!((sc.nodes, sc.seed), (20, 9));
        let odd = load_scenario(Some(&path), &[("nodes".into(), "21".into())]);
        assert!(matches!(odd, Err(CliError::Config(_))));
    }
}
