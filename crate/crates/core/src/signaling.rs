//! QAM signaling translated from the deterministic layouts.
//!
//! A user's piece occupying received levels `[lo, lo + b)` of component `l`
//! becomes the term `2^{(q_l - log2 SNR_k + lo)/2} * QAM(2^b, 1)`; the
//! user's transmit constellation is the Minkowski sum of its pieces scaled
//! by `eta_l * sqrt(P_k)`, where `eta_l` normalizes the largest per-user
//! energy in the component to one.

use std::cmp::Ordering;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::channel::{BitAllocation, ChannelConfig, SchemeType};
use crate::detmac::{component_layout, DetConfig};
use crate::error::{Error, Result};

/// Default cap on explicit point sets.
pub const DEFAULT_POINT_CAP: usize = 1 << 20;

/// A finite set of complex points, used with uniform probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>) -> Self {
        Self { points }
    }

    /// The single point at the origin (a silent transmitter).
    pub fn origin() -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0)])
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn cardinality(&self) -> usize {
        self.points.len()
    }

    pub fn mean(&self) -> Complex64 {
        let n = self.points.len() as f64;
        self.points.iter().sum::<Complex64>() / n
    }

    pub fn avg_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Exact minimum pairwise distance; `None` with fewer than two points.
    pub fn dmin(&self) -> Option<f64> {
        min_distance(self).ok()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.points.iter().map(|p| p * factor).collect())
    }

    /// `{a + scale * b}` over all pairs, `a`-major.
    pub fn minkowski(&self, other: &Constellation, scale: f64, cap: usize) -> Result<Self> {
        let size = self.points.len() as u128 * other.points.len() as u128;
        if size > cap as u128 {
            return Err(Error::ConstellationTooLarge { size, cap });
        }
        let mut points = Vec::with_capacity(size as usize);
        for a in &self.points {
            for b in &other.points {
                points.push(a + b * scale);
            }
        }
        Ok(Self::new(points))
    }

    /// Drops exact duplicates; the result is sorted by `(re, im)`.
    pub fn dedup_exact(mut self) -> Self {
        self.points.sort_by(cmp_points);
        self.points.dedup();
        self
    }

    /// Whether the points form a square regular QAM grid centred on the
    /// origin with spacing `delta`, up to `tol` per coordinate.
    pub fn is_regular_qam(&self, delta: f64, tol: f64) -> bool {
        let n = self.points.len();
        let bits = n.trailing_zeros();
        if !n.is_power_of_two() || !bits.is_multiple_of(2) || bits == 0 {
            return false;
        }
        let Ok(reference) = regular_qam(bits, delta) else {
            return false;
        };
        let mut mine = self.points.clone();
        let mut theirs = reference.points;
        // Snap to the grid before sorting so rounding cannot reorder rows.
        let snap = |p: &Complex64| {
            Complex64::new((p.re / delta * 2.0).round(), (p.im / delta * 2.0).round())
        };
        mine.sort_by(|a, b| cmp_points(&snap(a), &snap(b)));
        theirs.sort_by(|a, b| cmp_points(&snap(a), &snap(b)));
        mine.iter()
            .zip(&theirs)
            .all(|(a, b)| (a.re - b.re).abs() <= tol && (a.im - b.im).abs() <= tol)
    }

    /// Writes `re,im` lines with a header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re,im")?;
        for p in &self.points {
            writeln!(w, "{},{}", p.re, p.im)?;
        }
        Ok(())
    }
}

fn cmp_points(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Square QAM with `2^order_bits` points, zero mean and minimum distance `dmin`.
pub fn regular_qam(order_bits: u32, dmin: f64) -> Result<Constellation> {
    if order_bits == 0 || !order_bits.is_multiple_of(2) {
        return Err(Error::UnsupportedOrder(order_bits));
    }
    if order_bits > 40 {
        return Err(Error::ConstellationTooLarge {
            size: 1u128 << order_bits,
            cap: DEFAULT_POINT_CAP,
        });
    }
    if !(dmin.is_finite() && dmin > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dmin must be positive, got {dmin}"
        )));
    }
    let side = 1usize << (order_bits / 2);
    let half = (side as f64 - 1.0) / 2.0;
    let axis: Vec<f64> = (0..side).map(|i| (i as f64 - half) * dmin).collect();
    let mut points = Vec::with_capacity(side * side);
    for &im in &axis {
        for &re in &axis {
            points.push(Complex64::new(re, im));
        }
    }
    Ok(Constellation::new(points))
}

/// Exact minimum Euclidean distance between distinct indices.
///
/// Sweeps the points in order of real part and stops scanning ahead once the
/// real-axis gap alone exceeds the best distance found.
pub fn min_distance(c: &Constellation) -> Result<f64> {
    if c.points.len() < 2 {
        return Err(Error::InvalidArgument(
            "minimum distance needs at least two points".into(),
        ));
    }
    let mut pts = c.points.clone();
    pts.sort_by(cmp_points);
    let mut best_sq = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let dx = pts[j].re - pts[i].re;
            if dx * dx >= best_sq {
                break;
            }
            let d = (pts[j] - pts[i]).norm_sqr();
            if d < best_sq {
                best_sq = d;
            }
        }
    }
    Ok(best_sq.sqrt())
}

/// One user's signaling in one sub-block.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBlockSignal {
    pub user: usize,
    pub component: usize,
    /// `(amplitude, bits)` per piece, before `eta_l * sqrt(P_k)` scaling.
    pub pieces: Vec<(f64, u32)>,
    /// Average energy `E_{k,l}` of the unscaled sum of pieces.
    pub energy: f64,
    /// Transmit constellation `Lambda_{k,l}`.
    pub constellation: Constellation,
}

impl SubBlockSignal {
    pub fn order(&self) -> u32 {
        self.pieces.iter().map(|p| p.1).sum()
    }
}

/// Complete QAM signaling of a scheme for one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSignaling {
    scheme: SchemeType,
    alloc: BitAllocation,
    eta: Vec<f64>,
    /// `blocks[k][l]` for `l <= k`.
    blocks: Vec<Vec<SubBlockSignal>>,
}

impl SchemeSignaling {
    pub fn scheme(&self) -> SchemeType {
        self.scheme
    }

    pub fn alloc(&self) -> &BitAllocation {
        &self.alloc
    }

    pub fn num_users(&self) -> usize {
        self.blocks.len()
    }

    /// Normalization `eta_l`; zero when nobody transmits in component `l`.
    pub fn eta(&self, l: usize) -> f64 {
        self.eta[l]
    }

    pub fn block(&self, k: usize, l: usize) -> &SubBlockSignal {
        &self.blocks[k][l]
    }

    pub fn energy(&self, k: usize, l: usize) -> f64 {
        self.blocks[k][l].energy
    }

    pub fn constellation(&self, k: usize, l: usize) -> &Constellation {
        &self.blocks[k][l].constellation
    }

    /// `h_k * Lambda_{k,l}` as seen by the receiver.
    pub fn rx_constellation(&self, cfg: &ChannelConfig, k: usize, l: usize) -> Constellation {
        self.constellation(k, l).scaled(cfg.gain(k))
    }

    /// Power ratio `zeta_{k,l} = E_{k,l} / max_i E_{i,l}`.
    pub fn zeta(&self, k: usize, l: usize) -> f64 {
        let max = self.max_energy(l);
        if max > 0.0 {
            self.blocks[k][l].energy / max
        } else {
            0.0
        }
    }

    fn max_energy(&self, l: usize) -> f64 {
        (l..self.num_users())
            .map(|i| self.blocks[i][l].energy)
            .fold(0.0, f64::max)
    }

    /// Smallest power ratio over the sub-blocks where user `k` transmits,
    /// zero if it never does.
    pub fn min_active_zeta(&self, k: usize) -> f64 {
        (0..=k)
            .filter(|&l| self.alloc.get(k, l) > 0)
            .map(|l| self.zeta(k, l))
            .reduce(f64::min)
            .unwrap_or(0.0)
    }

    /// Actual average transmit power `E|X_{k,l}|^2`.
    pub fn tx_power(&self, k: usize, l: usize) -> f64 {
        self.constellation(k, l).avg_energy()
    }
}

/// `(amplitude, bits)` of each QAM in a sub-block's ladder.
type Pieces = Vec<(f64, u32)>;

/// Builds the QAM signaling of `scheme` for `alloc`.
///
/// Every piece of the deterministic layout must carry an even number of
/// bits; adjacent pieces are fused first so a split that recombines into a
/// square constellation is accepted.
pub fn build_scheme(
    cfg: &ChannelConfig,
    alloc: &BitAllocation,
    scheme: SchemeType,
) -> Result<SchemeSignaling> {
    build_scheme_capped(cfg, alloc, scheme, DEFAULT_POINT_CAP)
}

pub fn build_scheme_capped(
    cfg: &ChannelConfig,
    alloc: &BitAllocation,
    scheme: SchemeType,
    cap: usize,
) -> Result<SchemeSignaling> {
    let k_total = cfg.num_users();
    if alloc.num_users() != k_total {
        return Err(Error::InvalidArgument(format!(
            "allocation has {} users, channel has {k_total}",
            alloc.num_users()
        )));
    }
    let det = DetConfig::from_channel(cfg, alloc.clone())?;
    let mut blocks: Vec<Vec<Option<SubBlockSignal>>> =
        (0..k_total).map(|k| vec![None; k + 1]).collect();
    let mut eta = vec![0.0; k_total];

    for l in 0..k_total {
        let layout = component_layout(&det, l, scheme)?.merged();
        let q = f64::from(layout.q);
        let mut unit: Vec<(usize, Pieces, f64)> = Vec::new();
        for (k, pieces) in &layout.users {
            let mut terms = Vec::with_capacity(pieces.len());
            let mut energy = 0.0;
            for p in pieces {
                if p.bits % 2 != 0 {
                    return Err(Error::UnsupportedOrder(p.bits));
                }
                let exponent = q - cfg.log2_snr(*k) + f64::from(p.level);
                terms.push((exponent.exp2().sqrt(), p.bits));
                energy += exponent.exp2() * ((p.bits as f64).exp2() - 1.0) / 6.0;
            }
            unit.push((*k, terms, energy));
        }
        let max_e = unit.iter().map(|u| u.2).fold(0.0, f64::max);
        eta[l] = if max_e > 0.0 { 1.0 / max_e.sqrt() } else { 0.0 };
        for (k, terms, energy) in unit {
            let mut c = Constellation::origin();
            for &(amp, bits) in &terms {
                c = c.minkowski(&regular_qam(bits, 1.0)?, amp, cap)?;
            }
            let constellation = c.scaled(eta[l] * cfg.power(k).sqrt());
            blocks[k][l] = Some(SubBlockSignal {
                user: k,
                component: l,
                pieces: terms,
                energy,
                constellation,
            });
        }
    }
    let blocks = blocks
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|b| b.expect("every sub-block is built"))
                .collect()
        })
        .collect();
    Ok(SchemeSignaling {
        scheme,
        alloc: alloc.clone(),
        eta,
        blocks,
    })
}

/// Received superposition `sum_{i >= l} h_i Lambda_{i,l}` with exact
/// duplicates collapsed.
pub fn superimpose(
    sig: &SchemeSignaling,
    cfg: &ChannelConfig,
    l: usize,
    cap: usize,
) -> Result<Constellation> {
    if l >= sig.num_users() {
        return Err(Error::InvalidArgument(format!("no component {l}")));
    }
    let mut acc = Constellation::origin();
    for i in l..sig.num_users() {
        acc = acc.minkowski(&sig.rx_constellation(cfg, i, l), 1.0, cap)?;
    }
    Ok(acc.dedup_exact())
}

/// Outcome of checking the QAM ladder `Lambda_1 + sum_k 2^{(sum_{i<k} o_i)/2} Lambda_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderVerdict {
    pub constellation: Constellation,
    pub regular: bool,
    pub zero_mean: bool,
    pub dmin: f64,
    pub cardinality: usize,
    pub expected_cardinality: usize,
}

impl LadderVerdict {
    pub fn holds(&self, delta: f64) -> bool {
        self.regular
            && self.zero_mean
            && (self.dmin - delta).abs() <= 1e-12 * delta.max(1.0)
            && self.cardinality == self.expected_cardinality
    }
}

/// Builds the QAM ladder for `orders` with spacing `delta` and checks that
/// it is a regular zero-mean QAM with the same spacing.
pub fn verify_lemma2(orders: &[u32], delta: f64) -> Result<LadderVerdict> {
    let total: u32 = orders.iter().sum();
    if total > 16 {
        return Err(Error::ConstellationTooLarge {
            size: 1u128 << total,
            cap: 1 << 16,
        });
    }
    if orders.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one order is required".into(),
        ));
    }
    let mut acc = Constellation::origin();
    let mut below = 0u32;
    for &o in orders {
        let layer = regular_qam(o, delta)?;
        acc = acc.minkowski(&layer, f64::from(below).exp2().sqrt(), 1 << 16)?;
        below += o;
    }
    let distinct = acc.clone().dedup_exact().cardinality();
    let mean = acc.mean();
    let side = f64::from(total / 2).exp2();
    let tol = 1e-12 * delta * side;
    Ok(LadderVerdict {
        regular: distinct == acc.cardinality() && acc.is_regular_qam(delta, tol),
        zero_mean: mean.norm() <= 1e-12 * delta.max(1.0),
        dmin: min_distance(&acc)?,
        cardinality: distinct,
        expected_cardinality: 1usize << total,
        constellation: acc,
    })
}
