//! Finite-blocklength rates under TIN, their error-probability bounds, and
//! Gaussian reference schemes.
//!
//! User `k` spreads one codeword over sub-blocks `0..=k`. With per-symbol
//! statistics `(I_l, V_l, T_l)` of sub-block `l` and `dN_l` symbols in it,
//! the normal approximation reads
//!
//! ```text
//! R_k = sum_l dN_l I_l / N_k - sqrt(sum_l dN_l V_l) / N_k * Qinv(eps_k)
//! ```
//!
//! and the `O(1/N_k)` remainder is dropped.

use std::f64::consts::{LOG2_E, PI, SQRT_2};

use statrs::function::erf::{erfc, erfc_inv};

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::infodensity::DensityStats;

/// Berry-Esseen constant for non-identical summands.
pub const BERRY_ESSEEN_C0: f64 = 0.56;

/// Gaussian tail `Q(x) = P[Z > x]`.
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse of [`q_func`] on `(0, 1)`.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Q inverse needs a probability in (0, 1), got {p}"
        )));
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * p);
    // A couple of Newton steps on Q(x) - p polish the series inverse.
    for _ in 0..3 {
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if pdf == 0.0 {
            break;
        }
        let step = (q_func(x) - p) / pdf;
        if !step.is_finite() {
            break;
        }
        x += step;
    }
    Ok(x)
}

/// Per-user aggregate of the sub-block statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    /// `sum_l dN_l I_l`, bits per block.
    pub info: f64,
    /// `sum_l dN_l V_l`, bits squared per block.
    pub dispersion: f64,
    /// `sum_l dN_l T_l`.
    pub third: f64,
    pub blocklength: u64,
}

impl Aggregate {
    pub fn weighted_mi(&self) -> f64 {
        self.info / self.blocklength as f64
    }
}

/// Sums the statistics of user `k`'s sub-blocks weighted by their lengths.
pub fn aggregate(cfg: &ChannelConfig, stats: &[DensityStats], k: usize) -> Result<Aggregate> {
    if k >= cfg.num_users() {
        return Err(Error::InvalidArgument(format!("no user {}", k + 1)));
    }
    if stats.len() != k + 1 {
        return Err(Error::InvalidArgument(format!(
            "user {} needs statistics for {} sub-blocks, got {}",
            k + 1,
            k + 1,
            stats.len()
        )));
    }
    let mut agg = Aggregate {
        info: 0.0,
        dispersion: 0.0,
        third: 0.0,
        blocklength: cfg.blocklength(k),
    };
    for (l, s) in stats.iter().enumerate() {
        let dn = cfg.sub_block_len(l) as f64;
        agg.info += dn * s.mi;
        agg.dispersion += dn * s.dispersion;
        agg.third += dn * s.third_moment;
    }
    Ok(agg)
}

/// Normal-approximation rate of user `k`, clamped at zero.
pub fn fbl_rate(cfg: &ChannelConfig, stats: &[DensityStats], k: usize) -> Result<f64> {
    let agg = aggregate(cfg, stats, k)?;
    Ok(normal_rate(agg, cfg.target_eps(k)))
}

fn normal_rate(agg: Aggregate, eps: f64) -> f64 {
    let n = agg.blocklength as f64;
    // eps is validated to lie in (0, 1) when the channel is built.
    let back_off = agg.dispersion.sqrt() / n * q_inv(eps).expect("target in (0, 1)");
    (agg.weighted_mi() - back_off).max(0.0)
}

/// Berry-Esseen ratio `B_k`; `None` when the dispersion vanishes.
pub fn berry_esseen_b(
    cfg: &ChannelConfig,
    stats: &[DensityStats],
    k: usize,
) -> Result<Option<f64>> {
    let agg = aggregate(cfg, stats, k)?;
    let n = agg.blocklength as f64;
    let v = agg.dispersion / n;
    if v <= 0.0 {
        return Ok(None);
    }
    Ok(Some(BERRY_ESSEEN_C0 * (agg.third / n) / v.powf(1.5)))
}

fn refinement_terms(agg: Aggregate, b: f64) -> f64 {
    2.0 / (2.0 * PI * agg.dispersion).sqrt() + 5.0 * b / (agg.blocklength as f64).sqrt()
}

/// Threshold `lambda_k` that splits the target between the Berry-Esseen
/// terms and the Gaussian tail; `None` when the terms alone exceed the target.
pub fn lambda(cfg: &ChannelConfig, stats: &[DensityStats], k: usize) -> Result<Option<f64>> {
    let agg = aggregate(cfg, stats, k)?;
    let Some(b) = berry_esseen_b(cfg, stats, k)? else {
        return Ok(None);
    };
    let arg = cfg.target_eps(k) - refinement_terms(agg, b);
    if arg <= 0.0 {
        return Ok(None);
    }
    Ok(Some(q_inv(arg)?))
}

/// Three-term error bound `2/sqrt(2 pi sum dN V) + Q(lambda) + 5 B_k / sqrt(N_k)`.
pub fn refined_epsilon(
    cfg: &ChannelConfig,
    stats: &[DensityStats],
    k: usize,
    lambda: f64,
) -> Result<f64> {
    let agg = aggregate(cfg, stats, k)?;
    let b = berry_esseen_b(cfg, stats, k)?.ok_or_else(|| {
        Error::InvalidArgument("the refined bound needs positive dispersion".into())
    })?;
    Ok(refinement_terms(agg, b) + q_func(lambda))
}

/// Normal-approximation error probability for a codebook of `log_m` bits.
pub fn epsilon_bound(
    cfg: &ChannelConfig,
    stats: &[DensityStats],
    k: usize,
    log_m: f64,
) -> Result<f64> {
    let agg = aggregate(cfg, stats, k)?;
    if agg.dispersion <= 0.0 {
        return Ok(if log_m >= agg.info { 1.0 } else { 0.0 });
    }
    Ok(q_func((agg.info - log_m) / agg.dispersion.sqrt()))
}

/// Everything computed for one user's rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub user: usize,
    pub rate: f64,
    pub stats: Vec<DensityStats>,
    pub weighted_mi: f64,
    pub dispersion_sum: f64,
    pub b_k: Option<f64>,
    pub lambda: Option<f64>,
    /// The `O(1/N_k)` remainder is not included in `rate`.
    pub residual_dropped: bool,
}

pub fn rate_report(cfg: &ChannelConfig, stats: &[DensityStats], k: usize) -> Result<RateReport> {
    let agg = aggregate(cfg, stats, k)?;
    Ok(RateReport {
        user: k,
        rate: normal_rate(agg, cfg.target_eps(k)),
        stats: stats.to_vec(),
        weighted_mi: agg.weighted_mi(),
        dispersion_sum: agg.dispersion,
        b_k: berry_esseen_b(cfg, stats, k)?,
        lambda: lambda(cfg, stats, k)?,
        residual_dropped: true,
    })
}

/// Codebook model behind the Gaussian reference rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GaussianInput {
    /// Symbols drawn i.i.d. from `CN(0, SNR)`. Independence across symbols
    /// is what lets a codeword's statistics add up over sub-blocks.
    #[default]
    Iid,
    /// Power-shell codebooks with the channel dispersion `1 - (1 + SNR)^-2`.
    Shell,
}

impl GaussianInput {
    /// Dispersion in bits squared per complex channel use.
    pub fn dispersion(self, snr: f64) -> f64 {
        match self {
            GaussianInput::Iid => 2.0 * snr / (1.0 + snr) * LOG2_E * LOG2_E,
            GaussianInput::Shell => gaussian_dispersion(snr),
        }
    }

    /// Per-symbol statistics at signal-to-interference-plus-noise ratio `sinr`.
    pub fn stats(self, sinr: f64) -> DensityStats {
        DensityStats {
            mi: (1.0 + sinr).log2(),
            dispersion: self.dispersion(sinr),
            third_moment: 0.0,
            std_error: 0.0,
            samples: 0,
        }
    }
}

impl std::str::FromStr for GaussianInput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(Self::Iid),
            "shell" => Ok(Self::Shell),
            other => Err(Error::InvalidConfig(format!(
                "unknown Gaussian input model {other:?} (expected iid or shell)"
            ))),
        }
    }
}

/// Channel dispersion of the complex AWGN channel, bits squared.
pub fn gaussian_dispersion(snr: f64) -> f64 {
    (1.0 - (1.0 + snr).powi(-2)) * LOG2_E * LOG2_E
}

/// Rate of user `k` with Gaussian codebooks and the given per-sub-block SINRs.
///
/// With `asymptotic` set the second-order term is dropped.
pub fn gaussian_rate(
    cfg: &ChannelConfig,
    k: usize,
    sinr: &[f64],
    input: GaussianInput,
    asymptotic: bool,
) -> Result<f64> {
    let stats: Vec<DensityStats> = sinr.iter().map(|&s| input.stats(s)).collect();
    let agg = aggregate(cfg, &stats, k)?;
    Ok(if asymptotic {
        agg.weighted_mi()
    } else {
        normal_rate(agg, cfg.target_eps(k))
    })
}

/// Gaussian codebooks decoded by treating interference as noise.
pub fn gaussian_tin_rates(cfg: &ChannelConfig, input: GaussianInput) -> Result<Vec<f64>> {
    (0..cfg.num_users())
        .map(|k| {
            let sinr: Vec<f64> = (0..=k)
                .map(|l| {
                    let interference: f64 = (l..cfg.num_users())
                        .filter(|&i| i != k)
                        .map(|i| cfg.snr(i))
                        .sum();
                    cfg.snr(k) / (1.0 + interference)
                })
                .collect();
            gaussian_rate(cfg, k, &sinr, input, false)
        })
        .collect()
}

/// Two-user region spanned by corner points and everything below them.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRegion {
    corners: Vec<[f64; 2]>,
    hull: Vec<[f64; 2]>,
}

impl BenchmarkRegion {
    pub fn from_corners(corners: Vec<[f64; 2]>) -> Result<Self> {
        if corners
            .iter()
            .flatten()
            .any(|c| !(c.is_finite() && *c >= 0.0))
        {
            return Err(Error::InvalidArgument(
                "corner coordinates must be nonnegative".into(),
            ));
        }
        let mut pts = corners.clone();
        pts.push([0.0, 0.0]);
        for c in &corners {
            pts.push([c[0], 0.0]);
            pts.push([0.0, c[1]]);
        }
        Ok(Self {
            hull: convex_hull(pts),
            corners,
        })
    }

    pub fn corners(&self) -> &[[f64; 2]] {
        &self.corners
    }

    /// Hull vertices in counter-clockwise order starting at the origin.
    pub fn hull(&self) -> &[[f64; 2]] {
        &self.hull
    }

    /// Largest signed distance from `p` to the hull's edge lines; positive
    /// means outside.
    pub fn outside_margin(&self, p: [f64; 2]) -> f64 {
        let n = self.hull.len();
        if n < 3 {
            // Degenerate region: distance to the segment or point.
            return self
                .hull
                .iter()
                .map(|h| ((p[0] - h[0]).powi(2) + (p[1] - h[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
        }
        (0..n)
            .map(|i| {
                let a = self.hull[i];
                let b = self.hull[(i + 1) % n];
                let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                let len = (ex * ex + ey * ey).sqrt();
                // Outward normal of a counter-clockwise edge is (ey, -ex).
                ((p[0] - a[0]) * ey - (p[1] - a[1]) * ex) / len
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.outside_margin(p) <= 1e-12
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; collinear points are dropped.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Gaussian signaling with perfect successive cancellation, two users.
///
/// The corners are the two decoding orders; the short-block user only
/// overlaps the first sub-block of the long-block user.
pub fn gaussian_sic_region(
    cfg: &ChannelConfig,
    input: GaussianInput,
    asymptotic: bool,
) -> Result<BenchmarkRegion> {
    if cfg.num_users() != 2 {
        return Err(Error::Unsupported(format!(
            "the SIC benchmark is defined for two users, got {}",
            cfg.num_users()
        )));
    }
    let (s0, s1) = (cfg.snr(0), cfg.snr(1));
    let r0_clean = gaussian_rate(cfg, 0, &[s0], input, asymptotic)?;
    let r0_tin = gaussian_rate(cfg, 0, &[s0 / (1.0 + s1)], input, asymptotic)?;
    let r1_clean = gaussian_rate(cfg, 1, &[s1, s1], input, asymptotic)?;
    let r1_tin = gaussian_rate(cfg, 1, &[s1 / (1.0 + s0), s1], input, asymptotic)?;
    BenchmarkRegion::from_corners(vec![
        [r0_clean, 0.0],
        [r0_clean, r1_tin],
        [r0_tin, r1_clean],
        [0.0, r1_clean],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(mi: f64, v: f64) -> DensityStats {
        DensityStats {
            mi,
            dispersion: v,
            third_moment: v.powf(1.5),
            std_error: 0.0,
            samples: 0,
        }
    }

    /// Bisection on `Q`, independent of the inverse error function.
    fn q_inv_bisect(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_func(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn q_inv_examples() {
        assert!(q_inv(0.5).unwrap().abs() < 1e-12);
        assert!((q_inv(1e-6).unwrap() - 4.7534).abs() < 1e-4);
        for p in [1e-9, 1e-7, 1e-5, 1e-3, 0.01, 0.1, 0.25, 0.4, 0.7, 0.99] {
            let x = q_inv(p).unwrap();
            assert!((x - q_inv_bisect(p)).abs() < 1e-10, "{p}");
            assert!((q_func(x) - p).abs() <= 1e-12 * p.max(1e-3));
        }
        assert!(q_inv(0.0).is_err());
        assert!(q_inv(1.0).is_err());
    }

    #[test]
    fn single_user_rate_example() {
        let cfg = ChannelConfig::from_snr_db(&[(10.0, 128, 1e-6)]).unwrap();
        let r = fbl_rate(&cfg, &[stats(3.0, 1.0)], 0).unwrap();
        assert!((r - 2.580).abs() < 5e-4, "{r}");
        assert_eq!(fbl_rate(&cfg, &[stats(3.0, 0.0)], 0).unwrap(), 3.0);
        let half = cfg.with_target_eps(&[0.5]).unwrap();
        assert!((fbl_rate(&half, &[stats(3.0, 1.0)], 0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_sub_block_weighting() {
        let cfg = ChannelConfig::from_snr_db(&[(20.0, 100, 0.5), (10.0, 400, 0.5)]).unwrap();
        let r = fbl_rate(&cfg, &[stats(1.0, 2.0), stats(3.0, 2.0)], 1).unwrap();
        assert!((r - (100.0 * 1.0 + 300.0 * 3.0) / 400.0).abs() < 1e-12);
    }

    #[test]
    fn epsilon_bound_round_trip() {
        let cfg = ChannelConfig::from_snr_db(&[(20.0, 100, 1e-5), (10.0, 300, 1e-5)]).unwrap();
        let st = [stats(1.2, 0.7), stats(3.1, 0.4)];
        let r = fbl_rate(&cfg, &st, 1).unwrap();
        let eps = epsilon_bound(&cfg, &st, 1, r * 300.0).unwrap();
        assert!((eps - 1e-5).abs() < 1e-12 * 1e-5, "{eps}");
        let agg = aggregate(&cfg, &st, 1).unwrap();
        assert_eq!(epsilon_bound(&cfg, &st, 1, agg.info).unwrap(), 0.5);
        assert!(epsilon_bound(&cfg, &st, 1, agg.info + 5.0).unwrap() > 0.5);
        let flat = [stats(1.0, 0.0)];
        let one = ChannelConfig::from_snr_db(&[(20.0, 10, 0.1)]).unwrap();
        assert_eq!(epsilon_bound(&one, &flat, 0, 10.0).unwrap(), 1.0);
        assert_eq!(epsilon_bound(&one, &flat, 0, 9.0).unwrap(), 0.0);
    }

    #[test]
    fn refined_bound_terms() {
        let cfg = ChannelConfig::from_snr_db(&[(10.0, 20_000, 0.1)]).unwrap();
        let st = [stats(1.8, 0.5)];
        let b = berry_esseen_b(&cfg, &st, 0).unwrap().unwrap();
        assert!((b - 0.56).abs() < 1e-12);
        let lam = lambda(&cfg, &st, 0).unwrap().unwrap();
        let e = refined_epsilon(&cfg, &st, 0, lam).unwrap();
        assert!((e - 0.1).abs() < 1e-12);
        let tail = refined_epsilon(&cfg, &st, 0, 50.0).unwrap();
        let expected = 2.0 / (2.0 * PI * 10_000.0).sqrt() + 5.0 * 0.56 / 20_000f64.sqrt();
        assert!((tail - expected).abs() < 1e-15);
        // Too short for the target: the Berry-Esseen terms alone exceed it.
        let short = ChannelConfig::from_snr_db(&[(10.0, 50, 1e-3)]).unwrap();
        assert_eq!(lambda(&short, &st, 0).unwrap(), None);
    }

    #[test]
    fn gaussian_dispersion_limits() {
        assert_eq!(gaussian_dispersion(0.0), 0.0);
        assert!((gaussian_dispersion(1e12) - LOG2_E * LOG2_E).abs() < 1e-9);
    }

    #[test]
    fn user2_single_user_corner() {
        let cfg = ChannelConfig::from_snr_db(&[(24.0, 128, 1e-6), (12.0, 200, 1e-5)]).unwrap();
        let s = cfg.snr(1);
        let r = gaussian_rate(&cfg, 1, &[s, s], GaussianInput::Shell, false).unwrap();
        let v = gaussian_dispersion(s);
        let expected = (1.0 + s).log2() - (200.0 * v).sqrt() / 200.0 * q_inv(1e-5).unwrap();
        assert!((r - expected).abs() < 1e-12);
        assert!(r < 4.07);
        let iid = gaussian_rate(&cfg, 1, &[s, s], GaussianInput::Iid, false).unwrap();
        assert!(iid < r);
    }

    #[test]
    fn iid_dispersion_exceeds_shell() {
        for snr in [0.01, 1.0, 15.85, 251.2] {
            let iid = GaussianInput::Iid.dispersion(snr);
            let shell = GaussianInput::Shell.dispersion(snr);
            assert!(iid > shell);
            // 2 s / (1 + s) against s (2 + s) / (1 + s)^2.
            assert!((iid - shell - (snr / (1.0 + snr)).powi(2) * LOG2_E * LOG2_E).abs() < 1e-12);
        }
        assert_eq!("iid".parse::<GaussianInput>().unwrap(), GaussianInput::Iid);
        assert!("x".parse::<GaussianInput>().is_err());
    }

    #[test]
    fn sic_region_shape() {
        let cfg = ChannelConfig::from_snr_db(&[(24.0, 128, 1e-6), (12.0, 200, 1e-5)]).unwrap();
        let reg = gaussian_sic_region(&cfg, GaussianInput::Iid, false).unwrap();
        assert!(reg.contains([0.0, 0.0]));
        for c in reg.corners() {
            assert!(reg.contains(*c));
            assert!(reg.contains([c[0] * 0.5, c[1] * 0.9]));
        }
        let asym = gaussian_sic_region(&cfg, GaussianInput::Iid, true).unwrap();
        let c0 = (1.0 + cfg.snr(0)).log2();
        assert!(asym.corners().iter().any(|c| (c[0] - c0).abs() < 1e-12));
        assert!(!reg.contains([c0, 0.0]));
        let three =
            ChannelConfig::from_snr_db(&[(1.0, 1, 0.1), (1.0, 2, 0.1), (1.0, 3, 0.1)]).unwrap();
        assert!(matches!(
            gaussian_sic_region(&three, GaussianInput::Iid, false),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn hull_of_square() {
        let reg = BenchmarkRegion::from_corners(vec![[1.0, 1.0]]).unwrap();
        assert_eq!(reg.hull().len(), 4);
        assert!((reg.outside_margin([2.0, 0.5]) - 1.0).abs() < 1e-12);
        assert!(reg.contains([0.5, 1.0]));
    }
}
