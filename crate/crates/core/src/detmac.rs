//! The cascaded linear deterministic MAC over GF(2).
//!
//! Each user `k` has a gain `n_k` (bits above the noise floor). In component
//! `l` the users `l..K` share a bit pipe of `q_l = max(n_l..n_K)` levels; a
//! user's codeword is shifted down by `q_l - n_k` and everything is XORed.
//! Levels are counted from the noise floor: level 0 is the lowest surviving
//! bit, level `q_l - 1` the most significant.
//!
//! A [`ComponentLayout`] records which received levels each user's message
//! bits occupy; generator matrices are derived from it so that the GF(2)
//! model and the QAM translation share one placement rule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{BitAllocation, ChannelConfig, SchemeType};
use crate::error::{Error, Result};
use crate::f2::{shift_matrix, F2Matrix};

/// Deterministic gains plus the modulation-order table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetConfig {
    gains: Vec<u32>,
    alloc: BitAllocation,
}

impl DetConfig {
    pub fn new(gains: Vec<u32>, alloc: BitAllocation) -> Result<Self> {
        if gains.len() != alloc.num_users() {
            return Err(Error::InvalidArgument(format!(
                "{} gains for a {}-user allocation",
                gains.len(),
                alloc.num_users()
            )));
        }
        Ok(Self { gains, alloc })
    }

    pub fn from_channel(cfg: &ChannelConfig, alloc: BitAllocation) -> Result<Self> {
        Self::new(cfg.det_gains(), alloc)
    }

    pub fn num_users(&self) -> usize {
        self.gains.len()
    }

    pub fn gain(&self, k: usize) -> u32 {
        self.gains[k]
    }

    pub fn gains(&self) -> &[u32] {
        &self.gains
    }

    pub fn alloc(&self) -> &BitAllocation {
        &self.alloc
    }

    /// `q_l = max(n_l, ..., n_K)`.
    pub fn q(&self, l: usize) -> u32 {
        self.gains[l..].iter().copied().max().unwrap_or(0)
    }

    /// Users active in component `l`, strongest first (ties by index).
    pub fn component_order(&self, l: usize) -> Vec<usize> {
        let mut users: Vec<usize> = (l..self.num_users()).collect();
        users.sort_by(|&a, &b| self.gains[b].cmp(&self.gains[a]).then(a.cmp(&b)));
        users
    }
}

/// A run of consecutive received levels `[level, level + bits)` carrying
/// consecutive rows of a user's `F` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Piece {
    pub level: u32,
    pub bits: u32,
}

impl Piece {
    pub fn top(&self) -> u32 {
        self.level + self.bits
    }
}

/// Level placement of every user's bits in one component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLayout {
    pub component: usize,
    pub q: u32,
    /// `(user, pieces)` for users `component..K` in index order; pieces are
    /// listed from the most significant level down.
    pub users: Vec<(usize, Vec<Piece>)>,
}

impl ComponentLayout {
    pub fn pieces(&self, k: usize) -> &[Piece] {
        self.users
            .iter()
            .find(|(u, _)| *u == k)
            .map(|(_, p)| p.as_slice())
            .unwrap_or(&[])
    }

    /// Same layout with adjacent pieces of a user fused into one.
    pub fn merged(&self) -> ComponentLayout {
        let users = self
            .users
            .iter()
            .map(|(u, pieces)| {
                let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
                for p in pieces {
                    match out.last_mut() {
                        Some(prev) if p.top() == prev.level => {
                            prev.level = p.level;
                            prev.bits += p.bits;
                        }
                        _ => out.push(*p),
                    }
                }
                (*u, out)
            })
            .collect();
        ComponentLayout {
            component: self.component,
            q: self.q,
            users,
        }
    }
}

fn infeasible(component: usize, reason: String) -> Error {
    Error::InfeasibleAllocation { component, reason }
}

/// Places every user's bits for component `l` according to `scheme`.
///
/// Fails with [`Error::InfeasibleAllocation`] when some user would need a
/// level at or above its own gain, i.e. the orders violate
/// `sum_{i weaker or equal to j} m_i <= n_j` for some user `j`.
pub fn component_layout(cfg: &DetConfig, l: usize, scheme: SchemeType) -> Result<ComponentLayout> {
    let k_total = cfg.num_users();
    if l >= k_total {
        return Err(Error::InvalidArgument(format!(
            "component {l} out of range for {k_total} users"
        )));
    }
    let order = cfg.component_order(l);
    let mut placed: Vec<(usize, Vec<Piece>)> = Vec::with_capacity(order.len());

    // Walk from the weakest user up, tracking the contiguous block [lo, hi)
    // already occupied by weaker users.
    let mut lo = 0u32;
    let mut hi = 0u32;
    for (pos, &u) in order.iter().enumerate().rev() {
        let m = cfg.alloc().get(u, l);
        let n = cfg.gain(u);
        let weakest = pos + 1 == order.len();
        let pieces = match scheme {
            SchemeType::TypeI => {
                if hi + m > n {
                    return Err(infeasible(
                        l,
                        format!(
                            "user {} needs levels up to {} but reaches only {n}",
                            u + 1,
                            hi + m
                        ),
                    ));
                }
                let p = Piece { level: hi, bits: m };
                hi += m;
                vec![p]
            }
            SchemeType::TypeII => {
                if weakest {
                    if m > n {
                        return Err(infeasible(
                            l,
                            format!("user {} sends {m} bits but reaches only {n}", u + 1),
                        ));
                    }
                    lo = n - m;
                    hi = n;
                    vec![Piece { level: lo, bits: m }]
                } else {
                    let above = m.min(n.saturating_sub(hi));
                    let below = m - above;
                    if below > lo {
                        return Err(infeasible(
                            l,
                            format!("user {} has {below} bits left below level {lo}", u + 1),
                        ));
                    }
                    let upper = Piece {
                        level: hi,
                        bits: above,
                    };
                    let lower = Piece {
                        level: lo - below,
                        bits: below,
                    };
                    hi += above;
                    lo -= below;
                    vec![upper, lower]
                }
            }
        };
        let pieces: Vec<Piece> = pieces.into_iter().filter(|p| p.bits > 0).collect();
        placed.push((u, pieces));
    }
    placed.sort_by_key(|(u, _)| *u);
    Ok(ComponentLayout {
        component: l,
        q: cfg.q(l),
        users: placed,
    })
}

/// Generator `G_{k,l}` (`q_l x m_{k,l}`) for user `k` in component `l`.
///
/// `f` must be an invertible `m_{k,l} x m_{k,l}` block. Its rows are laid
/// out top to bottom over the user's pieces; the bottom `q_l - n_k` rows of
/// `G` stay zero since the channel truncates them.
pub fn build_generator(
    cfg: &DetConfig,
    scheme: SchemeType,
    k: usize,
    l: usize,
    f: &F2Matrix,
) -> Result<F2Matrix> {
    if l > k || k >= cfg.num_users() {
        return Err(Error::InvalidArgument(format!(
            "user {k} has no sub-block {l}"
        )));
    }
    let m = cfg.alloc().get(k, l) as usize;
    if f.rows() != m || f.cols() != m {
        return Err(Error::InvalidArgument(format!(
            "F block is {}x{}, expected {m}x{m}",
            f.rows(),
            f.cols()
        )));
    }
    if f.rank() != m {
        return Err(Error::InvalidArgument("F block is not full rank".into()));
    }
    let layout = component_layout(cfg, l, scheme)?;
    generator_from_layout(cfg, &layout, k, f)
}

fn generator_from_layout(
    cfg: &DetConfig,
    layout: &ComponentLayout,
    k: usize,
    f: &F2Matrix,
) -> Result<F2Matrix> {
    let n = cfg.gain(k);
    let mut g = F2Matrix::zeros(layout.q as usize, f.cols());
    let mut cursor = 0usize;
    for p in layout.pieces(k) {
        let rows = f.row_slice(cursor, cursor + p.bits as usize);
        // Level L of user k sits at row n_k - 1 - L before the channel shift.
        let top_row = (n - p.top()) as usize;
        g.place(top_row, 0, &rows)?;
        cursor += p.bits as usize;
    }
    Ok(g)
}

/// Generators for every user `l..K` in component `l`, in index order.
///
/// `f_block(k, l, m)` supplies the invertible `m x m` block for user `k`.
pub fn component_generators<F>(
    cfg: &DetConfig,
    scheme: SchemeType,
    l: usize,
    mut f_block: F,
) -> Result<Vec<F2Matrix>>
where
    F: FnMut(usize, usize, usize) -> F2Matrix,
{
    let layout = component_layout(cfg, l, scheme)?;
    (l..cfg.num_users())
        .map(|k| {
            let m = cfg.alloc().get(k, l) as usize;
            let f = f_block(k, l, m);
            if f.rows() != m || f.cols() != m || f.rank() != m {
                return Err(Error::InvalidArgument(format!(
                    "F block for user {} in component {} must be an invertible {m}x{m} matrix",
                    k + 1,
                    l + 1
                )));
            }
            generator_from_layout(cfg, &layout, k, &f)
        })
        .collect()
}

/// Identity `F` blocks, the default witness of full rank.
pub fn identity_block(_k: usize, _l: usize, m: usize) -> F2Matrix {
    F2Matrix::identity(m)
}

/// Received contributions `S^{q_l - n_i} G_{i,l}` for users `l..K`.
fn shifted_generators(cfg: &DetConfig, l: usize, generators: &[F2Matrix]) -> Result<Vec<F2Matrix>> {
    let expected = cfg.num_users() - l;
    if generators.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "component {} needs {expected} generators, got {}",
            l + 1,
            generators.len()
        )));
    }
    let q = cfg.q(l) as usize;
    generators
        .iter()
        .enumerate()
        .map(|(j, g)| {
            if g.rows() != q {
                return Err(Error::InvalidArgument(format!(
                    "generator for user {} has {} rows, component {} has {q} levels",
                    l + j + 1,
                    g.rows(),
                    l + 1
                )));
            }
            let s = q - cfg.gain(l + j) as usize;
            shift_matrix(q, s)?.mul(g)
        })
        .collect()
}

/// TIN mutual information of user `k` in component `l`, in bits:
/// `rank[all received blocks] - rank[interferers' received blocks]`.
///
/// `generators` holds `G_{i,l}` for users `i = l..K` in index order.
pub fn det_mutual_info(
    cfg: &DetConfig,
    l: usize,
    generators: &[F2Matrix],
    k: usize,
) -> Result<usize> {
    if k < l || k >= cfg.num_users() {
        return Err(Error::InvalidArgument(format!(
            "user {} is not active in component {}",
            k + 1,
            l + 1
        )));
    }
    let shifted = shifted_generators(cfg, l, generators)?;
    let q = cfg.q(l) as usize;
    let empty = F2Matrix::zeros(q, 0);
    let all: Vec<&F2Matrix> = shifted.iter().collect();
    let mut interferers: Vec<&F2Matrix> = shifted
        .iter()
        .enumerate()
        .filter(|(j, _)| l + j != k)
        .map(|(_, g)| g)
        .collect();
    if interferers.is_empty() {
        interferers.push(&empty);
    }
    let total = F2Matrix::hconcat(&all)?.rank();
    let interference = F2Matrix::hconcat(&interferers)?.rank();
    Ok(total - interference)
}

/// `rank` of the received concatenation and the sum of the individual ranks.
pub fn rank_split(cfg: &DetConfig, l: usize, generators: &[F2Matrix]) -> Result<(usize, usize)> {
    let shifted = shifted_generators(cfg, l, generators)?;
    let all: Vec<&F2Matrix> = shifted.iter().collect();
    let joint = F2Matrix::hconcat(&all)?.rank();
    let separate = shifted.iter().map(F2Matrix::rank).sum();
    Ok((joint, separate))
}

/// Feasibility of one component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentVerdict {
    pub component: usize,
    /// `q_l`, the pipe width.
    pub capacity: u32,
    /// `sum_{k >= l} m_{k,l}`.
    pub load: u32,
    /// `capacity - load`; negative when the sum constraint is violated.
    pub slack: i64,
    /// Smallest `n_j - sum_{i weaker or equal to j} m_i` over active users;
    /// equals `slack` unless a weaker user is overloaded on its own.
    pub min_suffix_slack: i64,
}

impl ComponentVerdict {
    pub fn feasible(&self) -> bool {
        self.slack >= 0 && self.min_suffix_slack >= 0
    }
}

/// Checks the deterministic rate region for every component.
pub fn verify_region(cfg: &DetConfig) -> Vec<ComponentVerdict> {
    (0..cfg.num_users())
        .map(|l| {
            let order = cfg.component_order(l);
            let capacity = cfg.q(l);
            let load = cfg.alloc().component_sum(l);
            let mut suffix = 0i64;
            let mut min_suffix_slack = i64::MAX;
            for &u in order.iter().rev() {
                suffix += i64::from(cfg.alloc().get(u, l));
                min_suffix_slack = min_suffix_slack.min(i64::from(cfg.gain(u)) - suffix);
            }
            ComponentVerdict {
                component: l,
                capacity,
                load,
                slack: i64::from(capacity) - i64::from(load),
                min_suffix_slack,
            }
        })
        .collect()
}

pub fn is_feasible(cfg: &DetConfig) -> bool {
    verify_region(cfg).iter().all(ComponentVerdict::feasible)
}

/// Random invertible `F` blocks drawn from a seeded stream.
pub fn seeded_full_rank_blocks(seed: u64) -> impl FnMut(usize, usize, usize) -> F2Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move |_k, _l, m| F2Matrix::random_full_rank(m, &mut rng)
}

/// TIN rates `mi[k][l]` achieved by the generators of `scheme`.
pub fn achieved_rates<F>(
    cfg: &DetConfig,
    scheme: SchemeType,
    mut f_block: F,
) -> Result<Vec<Vec<usize>>>
where
    F: FnMut(usize, usize, usize) -> F2Matrix,
{
    let k_total = cfg.num_users();
    let mut mi: Vec<Vec<usize>> = (0..k_total).map(|k| vec![0; k + 1]).collect();
    for l in 0..k_total {
        let gens = component_generators(cfg, scheme, l, &mut f_block)?;
        for (k, row) in mi.iter_mut().enumerate().skip(l) {
            row[l] = det_mutual_info(cfg, l, &gens, k)?;
        }
    }
    Ok(mi)
}
