//! Scenario files: users, optional fixed allocations, estimator settings.

use std::path::Path;

use hetmac::channel::{BitAllocation, ChannelConfig, SchemeType, UserLink};
use hetmac::fblrate::GaussianInput;
use hetmac::infodensity::DEFAULT_SAMPLES;
use hetmac::num_complex::Complex64;
use hetmac::pipeline::SelectionPolicy;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub users: Vec<UserEntry>,
    #[serde(default)]
    pub allocations: Vec<AllocationEntry>,
    #[serde(default)]
    pub estimator: EstimatorEntry,
    #[serde(default)]
    pub flags: FlagsEntry,
}

/// Either `snr_db` alone (unit gain, power = SNR) or both `power` and `gain`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub snr_db: Option<f64>,
    pub power: Option<f64>,
    pub gain: Option<Gain>,
    pub blocklength: u64,
    pub target_eps: f64,
}

/// A real gain or a complex one written as `[re, im]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Gain {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationEntry {
    pub id: String,
    /// Row `k` holds user `k`'s orders in sub-blocks `1..=k`.
    pub m: Vec<Vec<u32>>,
    /// `"1"`, `"2"` or `"both"`; defaults to the scenario-wide setting.
    pub scheme: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorEntry {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl Default for EstimatorEntry {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsEntry {
    #[serde(default = "yes")]
    pub even_only: bool,
    #[serde(default = "both")]
    pub scheme_types: String,
    #[serde(default = "max_min")]
    pub selection_policy: String,
    #[serde(default = "iid")]
    pub benchmark_input: String,
}

fn yes() -> bool {
    true
}
fn both() -> String {
    "both".into()
}
fn max_min() -> String {
    "max-min".into()
}
fn iid() -> String {
    "iid".into()
}

impl Default for FlagsEntry {
    fn default() -> Self {
        Self {
            even_only: true,
            scheme_types: both(),
            selection_policy: max_min(),
            benchmark_input: iid(),
        }
    }
}

/// Parses `"1"`, `"2"` or `"both"`.
pub fn parse_schemes(s: &str) -> Result<Vec<SchemeType>, CliError> {
    match s {
        "1" | "I" => Ok(vec![SchemeType::TypeI]),
        "2" | "II" => Ok(vec![SchemeType::TypeII]),
        "both" | "1&2" => Ok(SchemeType::ALL.to_vec()),
        other => Err(CliError::Config(format!(
            "unknown scheme type {other:?} (expected 1, 2 or both)"
        ))),
    }
}

/// A named allocation with the scheme types to evaluate it under.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedAllocation {
    pub id: String,
    pub alloc: BitAllocation,
    pub schemes: Vec<SchemeType>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub channel: ChannelConfig,
    pub allocations: Vec<NamedAllocation>,
    pub samples: usize,
    pub seed: u64,
    pub even_only: bool,
    pub schemes: Vec<SchemeType>,
    pub policy: SelectionPolicy,
    pub benchmark_input: GaussianInput,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self, CliError> {
        let links = file
            .users
            .iter()
            .enumerate()
            .map(|(k, u)| user_link(k, u))
            .collect::<Result<Vec<_>, _>>()?;
        let channel = ChannelConfig::new(&links)?;
        let schemes = parse_schemes(&file.flags.scheme_types)?;
        let mut allocations = Vec::new();
        for a in &file.allocations {
            if allocations.iter().any(|b: &NamedAllocation| b.id == a.id) {
                return Err(CliError::Config(format!(
                    "duplicate allocation id {:?}",
                    a.id
                )));
            }
            let alloc = BitAllocation::new(a.m.clone())
                .map_err(|e| CliError::Config(format!("allocation {}: {e}", a.id)))?;
            if alloc.num_users() != channel.num_users() {
                return Err(CliError::Config(format!(
                    "allocation {} has {} rows for {} users",
                    a.id,
                    alloc.num_users(),
                    channel.num_users()
                )));
            }
            let schemes = match &a.scheme {
                Some(s) => parse_schemes(s)?,
                None => schemes.clone(),
            };
            allocations.push(NamedAllocation {
                id: a.id.clone(),
                alloc,
                schemes,
            });
        }
        Ok(Self {
            channel,
            allocations,
            samples: file.estimator.samples,
            seed: file.estimator.seed,
            even_only: file.flags.even_only,
            schemes,
            policy: file.flags.selection_policy.parse()?,
            benchmark_input: file.flags.benchmark_input.parse()?,
        })
    }

    pub fn allocation(&self, id: &str) -> Result<&NamedAllocation, CliError> {
        self.allocations
            .iter()
            .find(|a| a.id == id)
            .ok_or_else(|| CliError::Config(format!("unknown allocation id {id:?}")))
    }
}

fn user_link(k: usize, u: &UserEntry) -> Result<UserLink, CliError> {
    let (power, gain) = match (u.snr_db, u.power, u.gain) {
        (Some(db), None, None) => (hetmac::channel::db_to_linear(db), Complex64::new(1.0, 0.0)),
        (None, Some(p), Some(g)) => (
            p,
            match g {
                Gain::Real(h) => Complex64::new(h, 0.0),
                Gain::Complex([re, im]) => Complex64::new(re, im),
            },
        ),
        _ => {
            return Err(CliError::Config(format!(
                "user {}: give either snr_db or both power and gain",
                k + 1
            )))
        }
    };
    Ok(UserLink {
        power,
        gain,
        blocklength: u.blocklength,
        target_eps: u.target_eps,
    })
}
