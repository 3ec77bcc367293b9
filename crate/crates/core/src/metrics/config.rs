use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::adversaries::{AdversaryError, EveSpec};
use crate::engine::{ChannelConfig, PartyId};

/// Invalid configuration, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: &str, message: impl Into<String>) -> Self {
        Self { path: path.to_owned(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Gv,
    KoashiImoto,
    Ev,
    GuoShi,
    N09,
    Pp,
    Cl,
    Dll,
    PpGv,
    DllGv,
    GvCheck,
    Bb84Check,
}

impl Protocol {
    pub const ALL: [Protocol; 12] = [
        Protocol::Gv,
        Protocol::KoashiImoto,
        Protocol::Ev,
        Protocol::GuoShi,
        Protocol::N09,
        Protocol::Pp,
        Protocol::Cl,
        Protocol::Dll,
        Protocol::PpGv,
        Protocol::DllGv,
        Protocol::GvCheck,
        Protocol::Bb84Check,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Gv => "gv",
            Protocol::KoashiImoto => "koashi-imoto",
            Protocol::Ev => "ev",
            Protocol::GuoShi => "guo-shi",
            Protocol::N09 => "n09",
            Protocol::Pp => "pp",
            Protocol::Cl => "cl",
            Protocol::Dll => "dll",
            Protocol::PpGv => "pp-gv",
            Protocol::DllGv => "dll-gv",
            Protocol::GvCheck => "gv-check",
            Protocol::Bb84Check => "bb84-check",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ConfigError> {
        Self::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
            ConfigError::at("protocol", format!("unknown protocol `{name}`; valid names: {}", names.join(", ")))
        })
    }

    pub fn summary(self) -> &'static str {
        match self {
            Protocol::Gv => "two-packet orthogonal-state QKD with balanced splitters",
            Protocol::KoashiImoto => "two-packet QKD with unbalanced splitters and a fixed schedule",
            Protocol::Ev => "interaction-free bomb testing",
            Protocol::GuoShi => "absorber-based interferometric QKD",
            Protocol::N09 => "counterfactual QKD on a Michelson interferometer",
            Protocol::Pp => "ping-pong direct communication, one bit per pair",
            Protocol::Cl => "ping-pong with dense coding, two bits per pair",
            Protocol::Dll => "two-step dense-coding direct communication",
            Protocol::PpGv => "ping-pong with decoy Bell pairs and permutation",
            Protocol::DllGv => "two-step dense coding with decoy Bell pairs and permutation",
            Protocol::GvCheck => "decoy Bell-pair eavesdropping check on its own",
            Protocol::Bb84Check => "conjugate-basis eavesdropping check on its own",
        }
    }

    /// What `params.n` counts for this protocol.
    pub fn size_unit(self) -> &'static str {
        match self {
            Protocol::Gv | Protocol::KoashiImoto => "bits",
            Protocol::Ev | Protocol::GuoShi | Protocol::N09 => "rounds",
            Protocol::GvCheck => "message qubits",
            _ => "Bell pairs",
        }
    }

    fn default_n(self) -> usize {
        match self {
            Protocol::Gv | Protocol::KoashiImoto | Protocol::Bb84Check => 1000,
            Protocol::Ev | Protocol::GuoShi | Protocol::N09 => 10_000,
            _ => 64,
        }
    }

    /// Conjugate-basis checks tolerate some noise; orthogonal-state checks
    /// run on ideal devices and treat any error as an intrusion.
    pub fn default_threshold(self) -> f64 {
        match self {
            Protocol::Pp | Protocol::Cl | Protocol::Dll | Protocol::Bb84Check => 0.11,
            _ => 0.0,
        }
    }

    /// Required message length for size `n`, for protocols that carry one.
    pub fn message_len(self, n: usize) -> Option<usize> {
        match self {
            Protocol::Pp => Some(n / 4),
            Protocol::Cl | Protocol::Dll | Protocol::PpGv => Some(n / 2),
            Protocol::DllGv | Protocol::GvCheck => Some(n),
            _ => None,
        }
    }

    fn uses_reflectivity(self) -> bool {
        matches!(self, Protocol::KoashiImoto | Protocol::N09)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranscriptPolicy {
    /// Only trial 0.
    #[default]
    First,
    All,
    None,
}

/// Protocol parameters; anything left out gets the protocol's default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reflectivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bomb_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verifier: Option<PartyId>,
    /// Fixed message as a string of 0/1; random per trial when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: String,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub transcripts: TranscriptPolicy,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub eve: EveSpec,
}

impl ExperimentConfig {
    pub fn new(protocol: Protocol) -> Self {
        Self {
            protocol: protocol.name().to_owned(),
            trials: 1,
            seed: 0,
            output: None,
            transcripts: TranscriptPolicy::default(),
            params: Params::default(),
            channel: ChannelConfig::default(),
            eve: EveSpec::None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::at("", e.to_string().trim_end().to_owned()))
    }

    pub fn protocol(&self) -> Result<Protocol, ConfigError> {
        Protocol::from_name(&self.protocol)
    }

    pub fn n(&self) -> usize {
        self.params.n.unwrap_or_else(|| self.protocol().map_or(0, Protocol::default_n))
    }

    /// Validates against the protocol's preconditions and fills in every
    /// default, so the result echoes exactly what ran.
    pub fn resolve(&self) -> Result<Self, ConfigError> {
        let protocol = self.protocol()?;
        if self.trials == 0 {
            return Err(ConfigError::at("trials", "must be at least 1"));
        }
        let mut out = self.clone();
        let p = &mut out.params;
        let n = *p.n.get_or_insert(protocol.default_n());
        let size_ok = match protocol {
            Protocol::Pp | Protocol::Cl | Protocol::Dll | Protocol::PpGv | Protocol::DllGv => n >= 4 && n % 4 == 0,
            Protocol::GvCheck => n >= 2 && n % 2 == 0,
            Protocol::Gv | Protocol::KoashiImoto => n >= 2,
            _ => n >= 1,
        };
        if !size_ok {
            let rule = match protocol {
                Protocol::GvCheck => "a positive even number",
                Protocol::Gv | Protocol::KoashiImoto => "at least 2",
                Protocol::Ev | Protocol::GuoShi | Protocol::N09 | Protocol::Bb84Check => "at least 1",
                _ => "a positive multiple of 4",
            };
            return Err(ConfigError::at("params.n", format!("{n} {} must be {rule}", protocol.size_unit())));
        }

        let threshold = *p.threshold.get_or_insert(protocol.default_threshold());
        if !(0.0..=1.0).contains(&threshold) {
            return Err(ConfigError::at("params.threshold", format!("{threshold} must lie in [0, 1]")));
        }
        p.max_restarts.get_or_insert(3);

        if protocol.uses_reflectivity() {
            let default = if protocol == Protocol::KoashiImoto { 0.3 } else { 0.5 };
            let r = *p.reflectivity.get_or_insert(default);
            if !(r > 0.0 && r < 1.0) {
                return Err(ConfigError::at("params.reflectivity", format!("{r} must lie in (0, 1)")));
            }
            if protocol == Protocol::KoashiImoto && (r - 0.5).abs() < 1e-12 {
                return Err(ConfigError::at("params.reflectivity", "koashi-imoto needs R != 0.5"));
            }
        } else if p.reflectivity.is_some() {
            return Err(ConfigError::at("params.reflectivity", format!("not used by {protocol}")));
        }

        if protocol == Protocol::Ev {
            let b = *p.bomb_probability.get_or_insert(1.0);
            if !(0.0..=1.0).contains(&b) {
                return Err(ConfigError::at("params.bomb_probability", format!("{b} must lie in [0, 1]")));
            }
        }
        if protocol == Protocol::Bb84Check && *p.verifier.get_or_insert(PartyId::Alice) == PartyId::Eve {
            return Err(ConfigError::at("params.verifier", "must be Alice or Bob"));
        }
        match (protocol.message_len(n), &p.message) {
            (Some(len), Some(m)) => {
                if m.len() != len || !m.chars().all(|c| c == '0' || c == '1') {
                    return Err(ConfigError::at("params.message", format!("expected {len} characters of 0/1, got {:?}", m)));
                }
            }
            (None, Some(_)) => return Err(ConfigError::at("params.message", format!("{protocol} carries no message"))),
            _ => {}
        }

        if matches!(protocol, Protocol::Gv | Protocol::KoashiImoto) && out.channel.tau <= out.channel.theta {
            return Err(ConfigError::at(
                "channel.tau",
                format!("must exceed channel.theta ({} <= {})", out.channel.tau, out.channel.theta),
            ));
        }
        if protocol == Protocol::KoashiImoto && out.channel.random_send_time {
            return Err(ConfigError::at("channel.random_send_time", "koashi-imoto runs on a fixed schedule"));
        }
        out.eve.validate().map_err(|e| match e {
            AdversaryError::Probability { field, .. } => ConfigError::at(&format!("eve.{field}"), e.to_string()),
            other => ConfigError::at("eve", other.to_string()),
        })?;
        Ok(out)
    }

    /// Parsed fixed message, if any.
    pub fn message_bits(&self) -> Option<Vec<u8>> {
        self.params.message.as_ref().map(|m| m.bytes().map(|c| c - b'0').collect())
    }
}
