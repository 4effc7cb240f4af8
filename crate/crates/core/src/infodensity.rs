//! Monte-Carlo statistics of the TIN information density.
//!
//! For user `k` in component `l` the receiver sees
//! `y = h_k x_k + sum_{i != k} h_i x_i + z` with `z ~ CN(0, 1)` and evaluates
//!
//! ```text
//! i(x_k; y) = log2 [ (1/M_I) sum_u exp(-|y - x_k - u|^2) ]
//!           - log2 [ (1/(M_k M_I)) sum_{s,u} exp(-|y - s - u|^2) ]
//! ```
//!
//! where `u` runs over all interference tuples with multiplicity.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{BitAllocation, ChannelConfig};
use crate::error::{Error, Result};
use crate::signaling::{Constellation, SchemeSignaling, DEFAULT_POINT_CAP};

/// Smallest accepted Monte-Carlo sample count.
pub const MIN_SAMPLES: usize = 10_000;
pub const DEFAULT_SAMPLES: usize = 200_000;

/// Samples per independent random substream.
const CHUNK: usize = 2048;

/// `log2(5 pi e / 6)`, the shaping-plus-distance loss of a unit-spaced QAM ladder.
pub fn qam_gap_bits() -> f64 {
    (5.0 * std::f64::consts::PI * std::f64::consts::E / 6.0).log2()
}

/// Sample moments of the information density, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityStats {
    pub mi: f64,
    pub dispersion: f64,
    pub third_moment: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl DensityStats {
    /// Statistics of a density that is identically zero.
    pub fn zero(samples: usize) -> Self {
        Self {
            mi: 0.0,
            dispersion: 0.0,
            third_moment: 0.0,
            std_error: 0.0,
            samples,
        }
    }

    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let (mut m2, mut m3) = (0.0, 0.0);
        for v in values {
            let d = v - mean;
            m2 += d * d;
            m3 += d.abs().powi(3);
        }
        let var = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
        Self {
            mi: mean,
            dispersion: var,
            third_moment: m3 / nf,
            std_error: (var / nf).sqrt(),
            samples: n,
        }
    }
}

/// Received point sets for one user and component.
///
/// `sup[s * M_I + u] = own[s] + interference[u]`.
#[derive(Debug, Clone)]
pub struct TinDensity {
    own: Vec<Complex64>,
    interference: Vec<Complex64>,
    sup: Vec<Complex64>,
}

impl TinDensity {
    pub fn from_parts(
        own: Vec<Complex64>,
        interference: Vec<Complex64>,
        cap: usize,
    ) -> Result<Self> {
        if own.is_empty() || interference.is_empty() {
            return Err(Error::InvalidArgument(
                "point sets must be non-empty".into(),
            ));
        }
        let size = own.len() as u128 * interference.len() as u128;
        if size > cap as u128 {
            return Err(Error::ConstellationTooLarge { size, cap });
        }
        let mut sup = Vec::with_capacity(size as usize);
        for s in &own {
            for u in &interference {
                sup.push(s + u);
            }
        }
        Ok(Self {
            own,
            interference,
            sup,
        })
    }

    /// Density of user `k` in component `l`, treating the other users as noise.
    pub fn new(
        cfg: &ChannelConfig,
        sig: &SchemeSignaling,
        k: usize,
        l: usize,
        cap: usize,
    ) -> Result<Self> {
        check_indices(sig, k, l)?;
        let own = sig.rx_constellation(cfg, k, l).points().to_vec();
        let mut interference = Constellation::origin();
        for i in (l..sig.num_users()).filter(|&i| i != k) {
            interference = interference.minkowski(&sig.rx_constellation(cfg, i, l), 1.0, cap)?;
        }
        Self::from_parts(own, interference.points().to_vec(), cap)
    }

    /// Density of the whole superposition `sum_i h_i X_{i,l}` (no interference).
    pub fn superposition(
        cfg: &ChannelConfig,
        sig: &SchemeSignaling,
        l: usize,
        cap: usize,
    ) -> Result<Self> {
        check_indices(sig, l, l)?;
        let mut acc = Constellation::origin();
        for i in l..sig.num_users() {
            acc = acc.minkowski(&sig.rx_constellation(cfg, i, l), 1.0, cap)?;
        }
        Self::from_parts(acc.points().to_vec(), vec![Complex64::new(0.0, 0.0)], cap)
    }

    pub fn own(&self) -> &[Complex64] {
        &self.own
    }

    pub fn interference(&self) -> &[Complex64] {
        &self.interference
    }

    /// Information density in bits for output `y` when own point `own_idx` was sent.
    pub fn density(&self, y: Complex64, own_idx: usize) -> f64 {
        self.density_with(y, own_idx, &mut Vec::with_capacity(self.sup.len()))
    }

    fn density_with(&self, y: Complex64, own_idx: usize, dist: &mut Vec<f64>) -> f64 {
        let mi = self.interference.len();
        dist.clear();
        dist.extend(self.sup.iter().map(|p| (y - p).norm_sqr()));
        let slice = &dist[own_idx * mi..(own_idx + 1) * mi];
        let num = log_sum_exp_neg(slice);
        let den = log_sum_exp_neg(dist);
        (num - den + (self.own.len() as f64).ln()) / std::f64::consts::LN_2
    }

    /// Draws `samples` densities; the result depends only on `seed`.
    pub fn sample(&self, samples: usize, seed: u64) -> Vec<f64> {
        let chunks = samples.div_ceil(CHUNK);
        let per_chunk: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                let len = CHUNK.min(samples - c * CHUNK);
                let mut buf = Vec::with_capacity(self.sup.len());
                (0..len).map(|_| self.draw(&mut rng, &mut buf)).collect()
            })
            .collect();
        per_chunk.concat()
    }

    fn draw<R: Rng>(&self, rng: &mut R, buf: &mut Vec<f64>) -> f64 {
        let s = rng.random_range(0..self.own.len());
        let u = rng.random_range(0..self.interference.len());
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let z = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        self.density_with(self.own[s] + self.interference[u] + z, s, buf)
    }

    pub fn estimate(&self, samples: usize, seed: u64) -> Result<DensityStats> {
        check_samples(samples)?;
        if self.own.len() == 1 {
            return Ok(DensityStats::zero(samples));
        }
        Ok(DensityStats::from_samples(&self.sample(samples, seed)))
    }
}

/// `ln sum_j exp(-d_j)`, shifted by the smallest `d_j`.
///
/// Terms more than `TAIL` below the largest one cannot change the sum in
/// double precision and are skipped.
fn log_sum_exp_neg(d: &[f64]) -> f64 {
    const TAIL: f64 = 40.0;
    let shift = d.iter().copied().fold(f64::INFINITY, f64::min);
    let sum: f64 = d
        .iter()
        .filter(|&&x| x - shift < TAIL)
        .map(|&x| (shift - x).exp())
        .sum();
    sum.ln() - shift
}

fn check_indices(sig: &SchemeSignaling, k: usize, l: usize) -> Result<()> {
    if k >= sig.num_users() || l > k {
        return Err(Error::InvalidArgument(format!(
            "no sub-block {} for user {}",
            l + 1,
            k + 1
        )));
    }
    Ok(())
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples are required, got {samples}"
        )));
    }
    Ok(())
}

/// Seed of the substream family for `(k, l)`.
fn stream_seed(seed: u64, k: usize, l: usize) -> u64 {
    let tag = ((k as u64) << 32) | l as u64;
    seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Information density of user `k` in component `l` at output `y` given its point `x_k`.
pub fn information_density(
    y: Complex64,
    cfg: &ChannelConfig,
    sig: &SchemeSignaling,
    k: usize,
    l: usize,
    x_k: Complex64,
) -> Result<f64> {
    let d = TinDensity::new(cfg, sig, k, l, DEFAULT_POINT_CAP)?;
    let tx = sig.constellation(k, l).points();
    let idx = tx.iter().position(|p| *p == x_k).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{x_k} is not a point of user {}'s constellation",
            k + 1
        ))
    })?;
    Ok(d.density(y, idx))
}

/// Monte-Carlo mutual information, dispersion and third absolute moment.
pub fn estimate_stats(
    cfg: &ChannelConfig,
    sig: &SchemeSignaling,
    k: usize,
    l: usize,
    samples: usize,
    seed: u64,
) -> Result<DensityStats> {
    check_indices(sig, k, l)?;
    check_samples(samples)?;
    if sig.alloc().get(k, l) == 0 {
        return Ok(DensityStats::zero(samples));
    }
    TinDensity::new(cfg, sig, k, l, DEFAULT_POINT_CAP)?.estimate(samples, stream_seed(seed, k, l))
}

/// [`estimate_stats`] for every sub-block, indexed `[k][l]`.
pub fn estimate_all(
    cfg: &ChannelConfig,
    sig: &SchemeSignaling,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<DensityStats>>> {
    let pairs: Vec<(usize, usize)> = (0..sig.num_users())
        .flat_map(|k| (0..=k).map(move |l| (k, l)))
        .collect();
    let flat: Vec<DensityStats> = pairs
        .par_iter()
        .map(|&(k, l)| estimate_stats(cfg, sig, k, l, samples, seed))
        .collect::<Result<_>>()?;
    let mut it = flat.into_iter();
    Ok((0..sig.num_users())
        .map(|k| it.by_ref().take(k + 1).collect())
        .collect())
}

/// Mutual information of the received superposition in component `l`.
pub fn estimate_superposition_mi(
    cfg: &ChannelConfig,
    sig: &SchemeSignaling,
    l: usize,
    samples: usize,
    seed: u64,
) -> Result<DensityStats> {
    let d = TinDensity::superposition(cfg, sig, l, DEFAULT_POINT_CAP)?;
    d.estimate(samples, stream_seed(seed, usize::MAX, l))
}

/// Guaranteed TIN rate `max(0, m_{k,l} - log2(5 pi e / 6))`.
pub fn mi_lower_bound(alloc: &BitAllocation, k: usize, l: usize) -> f64 {
    (f64::from(alloc.get(k, l)) - qam_gap_bits()).max(0.0)
}

/// TIN rate of Gaussian codebooks: `log2(1 + SNR_k / (1 + sum_{i >= l, i != k} SNR_i))`.
pub fn gaussian_tin_mi(cfg: &ChannelConfig, k: usize, l: usize) -> f64 {
    let interference: f64 = (l..cfg.num_users())
        .filter(|&i| i != k)
        .map(|i| cfg.snr(i))
        .sum();
    (1.0 + cfg.snr(k) / (1.0 + interference)).log2()
}
