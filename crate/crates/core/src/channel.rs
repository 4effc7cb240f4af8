//! Scenario description: per-user channel conditions and the modulation-order table.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Deterministic channel gain `max(0, ceil(log2 snr))`.
pub fn deterministic_gain(snr: f64) -> u32 {
    let l = snr.log2().ceil();
    if l > 0.0 {
        l as u32
    } else {
        0
    }
}

/// One user's link as supplied by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct UserLink {
    /// Transmit power budget.
    pub power: f64,
    /// Complex channel coefficient; only its magnitude is kept.
    pub gain: Complex64,
    /// Number of channel uses in the user's block.
    pub blocklength: u64,
    /// Target decoding error probability.
    pub target_eps: f64,
}

impl UserLink {
    /// A user with `power = SNR` and unit real gain.
    pub fn from_snr_db(snr_db: f64, blocklength: u64, target_eps: f64) -> Self {
        Self {
            power: db_to_linear(snr_db),
            gain: Complex64::new(1.0, 0.0),
            blocklength,
            target_eps,
        }
    }
}

/// The uplink scenario: users indexed by nondecreasing blocklength.
///
/// Channel phases are removed at construction (each transmitter pre-rotates
/// by the conjugate phase), so `gain` holds magnitudes only.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    power: Vec<f64>,
    gain: Vec<f64>,
    blocklength: Vec<u64>,
    eps: Vec<f64>,
}

impl ChannelConfig {
    pub fn new(users: &[UserLink]) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::InvalidConfig("at least one user is required".into()));
        }
        for (k, u) in users.iter().enumerate() {
            if !(u.power.is_finite() && u.power > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "user {}: power must be positive and finite",
                    k + 1
                )));
            }
            let h = u.gain.norm();
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "user {}: channel gain must be nonzero and finite",
                    k + 1
                )));
            }
            if u.blocklength == 0 {
                return Err(Error::InvalidConfig(format!(
                    "user {}: blocklength must be positive",
                    k + 1
                )));
            }
            if !(u.target_eps > 0.0 && u.target_eps < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "user {}: target error probability {} is outside (0, 1)",
                    k + 1,
                    u.target_eps
                )));
            }
        }
        if users
            .windows(2)
            .any(|w| w[0].blocklength > w[1].blocklength)
        {
            return Err(Error::InvalidConfig(
                "users must be ordered by nondecreasing blocklength".into(),
            ));
        }
        Ok(Self {
            power: users.iter().map(|u| u.power).collect(),
            gain: users.iter().map(|u| u.gain.norm()).collect(),
            blocklength: users.iter().map(|u| u.blocklength).collect(),
            eps: users.iter().map(|u| u.target_eps).collect(),
        })
    }

    /// Convenience constructor from `(snr_db, blocklength, eps)` triples.
    pub fn from_snr_db(users: &[(f64, u64, f64)]) -> Result<Self> {
        let links: Vec<UserLink> = users
            .iter()
            .map(|&(db, n, eps)| UserLink::from_snr_db(db, n, eps))
            .collect();
        Self::new(&links)
    }

    pub fn num_users(&self) -> usize {
        self.power.len()
    }

    pub fn power(&self, k: usize) -> f64 {
        self.power[k]
    }

    pub fn gain(&self, k: usize) -> f64 {
        self.gain[k]
    }

    /// `SNR_k = P_k |h_k|^2`.
    pub fn snr(&self, k: usize) -> f64 {
        self.power[k] * self.gain[k] * self.gain[k]
    }

    pub fn snr_db(&self, k: usize) -> f64 {
        linear_to_db(self.snr(k))
    }

    pub fn log2_snr(&self, k: usize) -> f64 {
        self.snr(k).log2()
    }

    pub fn blocklength(&self, k: usize) -> u64 {
        self.blocklength[k]
    }

    pub fn blocklengths(&self) -> &[u64] {
        &self.blocklength
    }

    pub fn target_eps(&self, k: usize) -> f64 {
        self.eps[k]
    }

    /// Symbols in sub-block `l` (0-based): `N_l - N_{l-1}` with `N_{-1} = 0`.
    pub fn sub_block_len(&self, l: usize) -> u64 {
        let prev = if l == 0 { 0 } else { self.blocklength[l - 1] };
        self.blocklength[l] - prev
    }

    /// Deterministic gains `n_k`.
    pub fn det_gains(&self) -> Vec<u32> {
        (0..self.num_users())
            .map(|k| deterministic_gain(self.snr(k)))
            .collect()
    }

    /// A copy with different target error probabilities.
    pub fn with_target_eps(&self, eps: &[f64]) -> Result<Self> {
        if eps.len() != self.num_users() {
            return Err(Error::InvalidArgument(
                "one target per user expected".into(),
            ));
        }
        let users: Vec<UserLink> = (0..self.num_users())
            .map(|k| UserLink {
                power: self.power[k],
                gain: Complex64::new(self.gain[k], 0.0),
                blocklength: self.blocklength[k],
                target_eps: eps[k],
            })
            .collect();
        Self::new(&users)
    }

    /// A copy with every blocklength multiplied by `factor`.
    pub fn with_scaled_blocklengths(&self, factor: u64) -> Result<Self> {
        let users: Vec<UserLink> = (0..self.num_users())
            .map(|k| UserLink {
                power: self.power[k],
                gain: Complex64::new(self.gain[k], 0.0),
                blocklength: self.blocklength[k] * factor,
                target_eps: self.eps[k],
            })
            .collect();
        Self::new(&users)
    }
}

/// Which deterministic generator family a scheme is translated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeType {
    /// Each user's bits form one contiguous block stacked above all weaker users.
    TypeI,
    /// Each user first fills the levels only it can reach, then places the
    /// remainder directly below the weaker users' block.
    TypeII,
}

impl SchemeType {
    pub const ALL: [SchemeType; 2] = [SchemeType::TypeI, SchemeType::TypeII];

    pub fn label(self) -> &'static str {
        match self {
            SchemeType::TypeI => "1",
            SchemeType::TypeII => "2",
        }
    }
}

impl fmt::Display for SchemeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The modulation-order table `m[k][l]` (bits), `l <= k`, 0-based.
///
/// Row `k` lists user `k`'s orders in its sub-blocks `0..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitAllocation {
    table: Vec<Vec<u32>>,
}

impl BitAllocation {
    pub fn new(table: Vec<Vec<u32>>) -> Result<Self> {
        for (k, row) in table.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(Error::InvalidArgument(format!(
                    "user {} needs {} sub-block orders, got {}",
                    k + 1,
                    k + 1,
                    row.len()
                )));
            }
        }
        Ok(Self { table })
    }

    pub fn zeros(num_users: usize) -> Self {
        Self {
            table: (0..num_users).map(|k| vec![0; k + 1]).collect(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.table.len()
    }

    /// Order of user `k` in sub-block `l`; zero when `l > k`.
    pub fn get(&self, k: usize, l: usize) -> u32 {
        self.table[k].get(l).copied().unwrap_or(0)
    }

    pub fn set(&mut self, k: usize, l: usize, bits: u32) {
        self.table[k][l] = bits;
    }

    pub fn table(&self) -> &[Vec<u32>] {
        &self.table
    }

    /// Entries in user-major order `m[0][0], m[1][0], m[1][1], ...`.
    pub fn flatten(&self) -> Vec<u32> {
        self.table.iter().flatten().copied().collect()
    }

    pub fn all_even(&self) -> bool {
        self.table.iter().flatten().all(|m| m % 2 == 0)
    }

    /// Sum of orders in component `l` over users `l..K`.
    pub fn component_sum(&self, l: usize) -> u32 {
        (l..self.num_users()).map(|k| self.get(k, l)).sum()
    }
}

impl fmt::Display for BitAllocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.flatten().iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_gain_examples() {
        assert_eq!(deterministic_gain(db_to_linear(24.0)), 8);
        assert_eq!(deterministic_gain(db_to_linear(12.0)), 4);
        assert_eq!(deterministic_gain(1.0), 0);
        assert_eq!(deterministic_gain(0.3), 0);
        assert_eq!(deterministic_gain(4.0), 2);
    }

    #[test]
    fn phase_is_removed() {
        let u = UserLink {
            power: 2.0,
            gain: Complex64::new(0.0, -3.0),
            blocklength: 10,
            target_eps: 1e-3,
        };
        let cfg = ChannelConfig::new(&[u]).unwrap();
        assert_eq!(cfg.gain(0), 3.0);
        assert_eq!(cfg.snr(0), 18.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ChannelConfig::from_snr_db(&[]).is_err());
        assert!(ChannelConfig::from_snr_db(&[(10.0, 200, 1e-3), (5.0, 100, 1e-3)]).is_err());
        assert!(ChannelConfig::from_snr_db(&[(10.0, 200, 1.0)]).is_err());
        assert!(ChannelConfig::from_snr_db(&[(10.0, 0, 0.1)]).is_err());
    }

    #[test]
    fn sub_blocks_keep_empty_segments() {
        let cfg = ChannelConfig::from_snr_db(&[(10.0, 100, 0.1), (5.0, 100, 0.1), (3.0, 150, 0.1)])
            .unwrap();
        assert_eq!(cfg.sub_block_len(0), 100);
        assert_eq!(cfg.sub_block_len(1), 0);
        assert_eq!(cfg.sub_block_len(2), 50);
    }

    #[test]
    fn allocation_shape_checked() {
        assert!(BitAllocation::new(vec![vec![1], vec![2]]).is_err());
        let a = BitAllocation::new(vec![vec![4], vec![4, 4]]).unwrap();
        assert_eq!(a.flatten(), vec![4, 4, 4]);
        assert_eq!(a.component_sum(0), 8);
        assert_eq!(a.component_sum(1), 4);
        assert_eq!(a.to_string(), "(4,4,4)");
    }
}
