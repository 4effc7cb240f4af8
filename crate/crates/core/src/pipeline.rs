//! End-to-end parameter selection: feasible orders, rates and code sizes.

use rayon::prelude::*;

use crate::channel::{BitAllocation, ChannelConfig, SchemeType};
use crate::detmac::{component_layout, is_feasible, ComponentLayout, DetConfig};
use crate::error::{Error, Result};
use crate::fblrate::{rate_report, RateReport};
use crate::infodensity::estimate_all;
use crate::signaling::{build_scheme, SchemeSignaling};

/// Default cap on the number of enumerated allocations.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 20;

/// Deterministic gains `n_k = max(0, ceil(log2 SNR_k))`.
pub fn derive_n(cfg: &ChannelConfig) -> Vec<u32> {
    cfg.det_gains()
}

/// Feasible order vectors `(m_{l,l}, ..., m_{K-1,l})` of one component.
fn component_vectors(
    gains: &[u32],
    l: usize,
    even_only: bool,
    cap: usize,
) -> Result<Vec<Vec<u32>>> {
    let mut order: Vec<usize> = (l..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].cmp(&gains[a]).then(a.cmp(&b)));
    // Weakest user first so the running sum is the suffix of the order.
    order.reverse();
    let step = if even_only { 2 } else { 1 };
    let mut walk = Walk {
        gains,
        order: &order,
        first: l,
        step,
        cap,
        current: vec![0u32; gains.len() - l],
        out: Vec::new(),
    };
    walk.descend(0, 0)?;
    Ok(walk.out)
}

struct Walk<'a> {
    gains: &'a [u32],
    order: &'a [usize],
    first: usize,
    step: usize,
    cap: usize,
    current: Vec<u32>,
    out: Vec<Vec<u32>>,
}

impl Walk<'_> {
    fn descend(&mut self, pos: usize, suffix: u32) -> Result<()> {
        if pos == self.order.len() {
            if self.out.len() >= self.cap {
                return Err(Error::EnumerationTooLarge {
                    size: self.out.len() as u128 + 1,
                    cap: self.cap,
                });
            }
            self.out.push(self.current.clone());
            return Ok(());
        }
        let u = self.order[pos];
        let room = self.gains[u].saturating_sub(suffix);
        for m in (0..=room).step_by(self.step) {
            self.current[u - self.first] = m;
            self.descend(pos + 1, suffix + m)?;
        }
        self.current[u - self.first] = 0;
        Ok(())
    }
}

/// Every allocation inside the deterministic region, sorted
/// lexicographically in user-major order.
pub fn enumerate_allocations(
    cfg: &ChannelConfig,
    even_only: bool,
    cap: usize,
) -> Result<Vec<BitAllocation>> {
    enumerate_for_gains(&derive_n(cfg), even_only, cap)
}

/// [`enumerate_allocations`] for explicit deterministic gains.
pub fn enumerate_for_gains(
    gains: &[u32],
    even_only: bool,
    cap: usize,
) -> Result<Vec<BitAllocation>> {
    let k_total = gains.len();
    let per_component: Vec<Vec<Vec<u32>>> = (0..k_total)
        .map(|l| component_vectors(gains, l, even_only, cap))
        .collect::<Result<_>>()?;
    let size = per_component
        .iter()
        .fold(1u128, |acc, v| acc.saturating_mul(v.len() as u128));
    if size > cap as u128 {
        return Err(Error::EnumerationTooLarge { size, cap });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut idx = vec![0usize; k_total];
    loop {
        let mut alloc = BitAllocation::zeros(k_total);
        for (l, &i) in idx.iter().enumerate() {
            for (j, &m) in per_component[l][i].iter().enumerate() {
                alloc.set(l + j, l, m);
            }
        }
        out.push(alloc);
        // Odometer over the component choices.
        let mut c = k_total;
        loop {
            if c == 0 {
                out.sort();
                return Ok(out);
            }
            c -= 1;
            idx[c] += 1;
            if idx[c] < per_component[c].len() {
                break;
            }
            idx[c] = 0;
        }
    }
}

/// Code sizes chosen for one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserCode {
    /// `I_k = floor(R_k N_k)`, capped at `L_k`.
    pub info_bits: u64,
    /// `L_k = sum_l dN_l m_{k,l}`.
    pub codeword_bits: u64,
    /// `R_k N_k < 1`: no useful code exists at this rate.
    pub degenerate: bool,
}

impl UserCode {
    pub fn code_rate(&self) -> f64 {
        if self.codeword_bits == 0 {
            0.0
        } else {
            self.info_bits as f64 / self.codeword_bits as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeParams {
    pub users: Vec<UserCode>,
}

/// Matches the achievable rates with binary code dimensions.
pub fn select_code_params(
    cfg: &ChannelConfig,
    alloc: &BitAllocation,
    rates: &[f64],
) -> Result<CodeParams> {
    let k_total = cfg.num_users();
    if alloc.num_users() != k_total || rates.len() != k_total {
        return Err(Error::InvalidArgument(format!(
            "expected {k_total} users in the allocation and the rates"
        )));
    }
    let users = (0..k_total)
        .map(|k| {
            let codeword_bits: u64 = (0..=k)
                .map(|l| cfg.sub_block_len(l) * u64::from(alloc.get(k, l)))
                .sum();
            let bits = rates[k].max(0.0) * cfg.blocklength(k) as f64;
            UserCode {
                info_bits: (bits.floor() as u64).min(codeword_bits),
                codeword_bits,
                degenerate: bits < 1.0,
            }
        })
        .collect();
    Ok(CodeParams { users })
}

/// One evaluated point of the rate region.
#[derive(Debug, Clone)]
pub struct RegionPoint {
    /// Position of the originating job in a sweep; 0 for single evaluations.
    pub job: usize,
    pub alloc: BitAllocation,
    /// Scheme types that yield this exact signaling.
    pub schemes: Vec<SchemeType>,
    pub signaling: SchemeSignaling,
    pub reports: Vec<RateReport>,
}

impl RegionPoint {
    pub fn rates(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.rate).collect()
    }

    /// `"1"`, `"2"` or `"1&2"`.
    pub fn scheme_label(&self) -> String {
        self.schemes
            .iter()
            .map(|s| s.label())
            .collect::<Vec<_>>()
            .join("&")
    }
}

/// A scheme variant that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedVariant {
    pub job: usize,
    pub alloc: BitAllocation,
    pub scheme: SchemeType,
    pub error: Error,
}

#[derive(Debug, Clone)]
pub struct RegionSweep {
    pub points: Vec<RegionPoint>,
    pub skipped: Vec<SkippedVariant>,
}

fn layouts(det: &DetConfig, scheme: SchemeType) -> Result<Vec<ComponentLayout>> {
    (0..det.num_users())
        .map(|l| component_layout(det, l, scheme).map(|c| c.merged()))
        .collect()
}

/// Groups the requested scheme types by the signaling they produce.
///
/// Fails with [`Error::InfeasibleAllocation`] outside the deterministic region.
pub fn scheme_variants(
    cfg: &ChannelConfig,
    alloc: &BitAllocation,
    schemes: &[SchemeType],
) -> Result<Vec<Vec<SchemeType>>> {
    let det = DetConfig::from_channel(cfg, alloc.clone())?;
    if !is_feasible(&det) {
        let bad = crate::detmac::verify_region(&det)
            .into_iter()
            .find(|v| !v.feasible())
            .expect("an infeasible component exists");
        return Err(Error::InfeasibleAllocation {
            component: bad.component,
            reason: format!(
                "load {} against capacity {} (smallest per-user slack {})",
                bad.load, bad.capacity, bad.min_suffix_slack
            ),
        });
    }
    let mut groups: Vec<(Vec<ComponentLayout>, Vec<SchemeType>)> = Vec::new();
    for &s in schemes {
        let lay = layouts(&det, s)?;
        match groups.iter_mut().find(|g| g.0 == lay) {
            Some(g) => g.1.push(s),
            None => groups.push((lay, vec![s])),
        }
    }
    Ok(groups.into_iter().map(|g| g.1).collect())
}

/// Evaluates one allocation under one group of equivalent scheme types.
pub fn evaluate(
    cfg: &ChannelConfig,
    alloc: &BitAllocation,
    schemes: Vec<SchemeType>,
    samples: usize,
    seed: u64,
) -> Result<RegionPoint> {
    let signaling = build_scheme(cfg, alloc, schemes[0])?;
    let stats = estimate_all(cfg, &signaling, samples, seed)?;
    let reports = stats
        .iter()
        .enumerate()
        .map(|(k, row)| rate_report(cfg, row, k))
        .collect::<Result<_>>()?;
    Ok(RegionPoint {
        job: 0,
        alloc: alloc.clone(),
        schemes,
        signaling,
        reports,
    })
}

/// Rates of every allocation under every requested scheme type.
///
/// Variants whose signaling coincides are merged into one point; variants
/// that need an unsupported (odd) QAM order are reported as skipped. The
/// output order follows the input order, then scheme type.
pub fn rate_region_sweep(
    cfg: &ChannelConfig,
    allocations: &[BitAllocation],
    schemes: &[SchemeType],
    samples: usize,
    seed: u64,
) -> Result<RegionSweep> {
    let jobs: Vec<(BitAllocation, Vec<SchemeType>)> = allocations
        .iter()
        .map(|a| (a.clone(), schemes.to_vec()))
        .collect();
    sweep_jobs(cfg, &jobs, samples, seed)
}

/// [`rate_region_sweep`] with a scheme list per allocation.
pub fn sweep_jobs(
    cfg: &ChannelConfig,
    jobs: &[(BitAllocation, Vec<SchemeType>)],
    samples: usize,
    seed: u64,
) -> Result<RegionSweep> {
    let mut variants = Vec::new();
    for (job, (alloc, schemes)) in jobs.iter().enumerate() {
        if schemes.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one scheme type is required".into(),
            ));
        }
        for group in scheme_variants(cfg, alloc, schemes)? {
            variants.push((job, alloc, group));
        }
    }
    let results: Vec<(usize, BitAllocation, Vec<SchemeType>, Result<RegionPoint>)> = variants
        .into_par_iter()
        .map(|(job, alloc, group)| {
            let r = evaluate(cfg, alloc, group.clone(), samples, seed)
                .map(|p| RegionPoint { job, ..p });
            (job, alloc.clone(), group, r)
        })
        .collect();
    let mut sweep = RegionSweep {
        points: Vec::new(),
        skipped: Vec::new(),
    };
    for (job, alloc, group, r) in results {
        match r {
            Ok(p) => sweep.points.push(p),
            Err(e @ Error::UnsupportedOrder(_)) => {
                for scheme in group {
                    sweep.skipped.push(SkippedVariant {
                        job,
                        alloc: alloc.clone(),
                        scheme,
                        error: e.clone(),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(sweep)
}

/// How to pick one point out of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionPolicy {
    /// Largest minimum user rate.
    MaxMin,
    /// Largest sum rate.
    SumRate,
}

impl std::str::FromStr for SelectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-min" | "maxmin" => Ok(Self::MaxMin),
            "sum-rate" | "sum" => Ok(Self::SumRate),
            other => Err(Error::InvalidConfig(format!(
                "unknown selection policy {other:?}"
            ))),
        }
    }
}

/// Indices of all points attaining the best score; ties are all reported.
pub fn select_best(points: &[RegionPoint], policy: SelectionPolicy) -> Vec<usize> {
    let score = |p: &RegionPoint| {
        let r = p.rates();
        match policy {
            SelectionPolicy::MaxMin => r.iter().copied().fold(f64::INFINITY, f64::min),
            SelectionPolicy::SumRate => r.iter().sum(),
        }
    };
    let best = points.iter().map(score).fold(f64::NEG_INFINITY, f64::max);
    (0..points.len())
        .filter(|&i| score(&points[i]) == best)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_user_cfg() -> ChannelConfig {
        ChannelConfig::from_snr_db(&[(24.0, 128, 1e-6), (12.0, 200, 1e-5)]).unwrap()
    }

    fn alloc(m1: u32, m21: u32, m22: u32) -> BitAllocation {
        BitAllocation::new(vec![vec![m1], vec![m21, m22]]).unwrap()
    }

    #[test]
    fn derive_n_examples() {
        assert_eq!(derive_n(&two_user_cfg()), vec![8, 4]);
        let low = ChannelConfig::from_snr_db(&[(0.0, 10, 0.1), (-3.0, 10, 0.1)]).unwrap();
        assert_eq!(derive_n(&low), vec![0, 0]);
    }

    #[test]
    fn two_user_points_enumerated() {
        let all = enumerate_allocations(&two_user_cfg(), true, DEFAULT_ENUMERATION_CAP).unwrap();
        let with_m22_4: Vec<(u32, u32)> = all
            .iter()
            .filter(|a| a.get(1, 1) == 4)
            .map(|a| (a.get(0, 0), a.get(1, 0)))
            .collect();
        for p in [(8, 0), (6, 2), (4, 4), (2, 4), (0, 4)] {
            assert!(with_m22_4.contains(&p), "{p:?}");
        }
        assert!(all.contains(&alloc(8, 0, 0)));
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn trivial_enumerations() {
        assert_eq!(
            enumerate_for_gains(&[0, 0], true, 100).unwrap(),
            vec![BitAllocation::zeros(2)]
        );
        let single: Vec<u32> = enumerate_for_gains(&[6], true, 100)
            .unwrap()
            .iter()
            .map(|a| a.get(0, 0))
            .collect();
        assert_eq!(single, vec![0, 2, 4, 6]);
        assert!(matches!(
            enumerate_for_gains(&[12, 12, 12, 12], false, 1000),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for gains in [
            vec![5, 3],
            vec![3, 5],
            vec![4, 4, 2],
            vec![2, 6, 3],
            vec![6],
        ] {
            for even in [false, true] {
                let got = enumerate_for_gains(&gains, even, DEFAULT_ENUMERATION_CAP).unwrap();
                let k = gains.len();
                let max = *gains.iter().max().unwrap();
                let slots = k * (k + 1) / 2;
                let mut want = Vec::new();
                let mut digits = vec![0u32; slots];
                'outer: loop {
                    let mut table = Vec::new();
                    let mut it = digits.iter();
                    for row in 0..k {
                        table.push(it.by_ref().take(row + 1).copied().collect::<Vec<_>>());
                    }
                    let a = BitAllocation::new(table).unwrap();
                    let det = DetConfig::new(gains.clone(), a.clone()).unwrap();
                    if is_feasible(&det) && (!even || a.all_even()) {
                        want.push(a);
                    }
                    for d in digits.iter_mut() {
                        *d += 1;
                        if *d <= max {
                            continue 'outer;
                        }
                        *d = 0;
                    }
                    break;
                }
                want.sort();
                assert_eq!(got, want, "{gains:?} even={even}");
            }
        }
    }

    #[test]
    fn code_params_examples() {
        let cfg = two_user_cfg();
        let e = select_code_params(&cfg, &alloc(4, 4, 4), &[3.0, 2.5]).unwrap();
        assert_eq!(e.users[0].codeword_bits, 512);
        assert_eq!(e.users[1].codeword_bits, 800);
        assert_eq!(e.users[1].info_bits, 500);
        assert!(e.users.iter().all(|u| u.code_rate() <= 1.0));
        let a = select_code_params(&cfg, &alloc(8, 0, 0), &[7.0, 0.0]).unwrap();
        assert_eq!(a.users[0].codeword_bits, 1024);
        assert_eq!(
            a.users[1],
            UserCode {
                info_bits: 0,
                codeword_bits: 0,
                degenerate: true
            }
        );
        let g = select_code_params(&cfg, &alloc(0, 4, 4), &[0.0, 3.0]).unwrap();
        assert_eq!((g.users[0].info_bits, g.users[0].codeword_bits), (0, 0));
        assert!(g.users[0].degenerate);
        // Rates above the modulation throughput are capped.
        let over = select_code_params(&cfg, &alloc(4, 4, 4), &[9.0, 2.5]).unwrap();
        assert_eq!(over.users[0].info_bits, 512);
    }

    #[test]
    fn variants_merge_like_two_user() {
        let cfg = two_user_cfg();
        let both = SchemeType::ALL;
        for (a, n) in [
            (alloc(8, 0, 0), 1),
            (alloc(8, 0, 4), 1),
            (alloc(6, 2, 4), 2),
            (alloc(4, 4, 4), 1),
            (alloc(2, 4, 4), 1),
            (alloc(0, 4, 4), 1),
        ] {
            assert_eq!(scheme_variants(&cfg, &a, &both).unwrap().len(), n, "{a}");
        }
        assert!(matches!(
            scheme_variants(&cfg, &alloc(6, 4, 4), &both),
            Err(Error::InfeasibleAllocation { component: 0, .. })
        ));
    }

    #[test]
    fn sweep_point_g_and_selection() {
        let cfg = two_user_cfg();
        let sweep = rate_region_sweep(
            &cfg,
            &[alloc(0, 4, 4), alloc(8, 0, 4)],
            &SchemeType::ALL,
            10_000,
            5,
        )
        .unwrap();
        assert_eq!(sweep.points.len(), 2);
        assert_eq!(sweep.points[0].rates()[0], 0.0);
        assert_eq!(sweep.points[0].scheme_label(), "1&2");
        for p in &sweep.points {
            for r in &p.reports {
                assert!(r.rate <= r.weighted_mi);
            }
        }
        assert_eq!(select_best(&sweep.points, SelectionPolicy::MaxMin), vec![1]);
    }
}
