//! Commands behind the `hetmac` binary.
//!
//! Each command takes a parsed [`Scenario`] and writes its report to the
//! given writers, so tests can drive them without spawning a process.

pub mod scenario;

use std::fmt;
use std::io::{self, Write};

use hetmac::channel::{BitAllocation, SchemeType};
use hetmac::detmac::{
    achieved_rates, identity_block, seeded_full_rank_blocks, verify_region, DetConfig,
};
use hetmac::fblrate::{gaussian_sic_region, gaussian_tin_rates, GaussianInput};
use hetmac::infodensity::gaussian_tin_mi;
use hetmac::pipeline::{
    enumerate_allocations, evaluate, scheme_variants, select_best, select_code_params, sweep_jobs,
    RegionPoint, DEFAULT_ENUMERATION_CAP,
};
use hetmac::signaling::{build_scheme, superimpose, DEFAULT_POINT_CAP};
use hetmac::Error;

pub use scenario::Scenario;

/// Failure of a command, carrying its process exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Exit 1.
    Io(String),
    /// Exit 2.
    Config(String),
    /// Exit 3.
    Infeasible(String),
    /// Exit 4.
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Property(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible allocation: {m}"),
            CliError::Property(m) => write!(f, "property violation: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InfeasibleAllocation { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Formats with six significant digits, without exponent where readable.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

fn tuple<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = xs.into_iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

/// Checks the deterministic model for every allocation in the scenario.
///
/// Each feasible allocation is built with identity and seeded random `F`
/// blocks and its TIN rates must equal the requested orders.
pub fn cmd_det_verify<W: Write>(sc: &Scenario, out: &mut W) -> Result<(), CliError> {
    let gains = sc.channel.det_gains();
    writeln!(out, "n = {}", tuple(gains.iter()))?;
    if sc.allocations.is_empty() {
        writeln!(out, "no allocations listed; nothing to verify")?;
        return Ok(());
    }
    let mut infeasible = Vec::new();
    let mut violations = Vec::new();
    for named in &sc.allocations {
        let det = DetConfig::from_channel(&sc.channel, named.alloc.clone())?;
        writeln!(out, "allocation {} {}", named.id, named.alloc)?;
        let verdicts = verify_region(&det);
        for v in &verdicts {
            writeln!(
                out,
                "  component {}: q={} load={} slack={} min-user-slack={} {}",
                v.component + 1,
                v.capacity,
                v.load,
                v.slack,
                v.min_suffix_slack,
                if v.feasible() { "ok" } else { "INFEASIBLE" }
            )?;
            if !v.feasible() {
                infeasible.push(format!("{} component {}", named.id, v.component + 1));
            }
        }
        if verdicts.iter().any(|v| !v.feasible()) {
            continue;
        }
        let want: Vec<Vec<usize>> = named
            .alloc
            .table()
            .iter()
            .map(|row| row.iter().map(|&m| m as usize).collect())
            .collect();
        for &scheme in &named.schemes {
            let ident = achieved_rates(&det, scheme, identity_block)?;
            let random = achieved_rates(&det, scheme, seeded_full_rank_blocks(sc.seed))?;
            let ok = ident == want && random == want;
            writeln!(
                out,
                "  scheme {scheme}: TIN rates {} {}",
                tuple(ident.iter().flatten()),
                if ok { "ok" } else { "MISMATCH" }
            )?;
            if !ok {
                violations.push(format!("{} scheme {scheme}", named.id));
            }
        }
    }
    if !violations.is_empty() {
        return Err(CliError::Property(format!(
            "TIN rates differ from the orders for {}",
            violations.join(", ")
        )));
    }
    if !infeasible.is_empty() {
        return Err(CliError::Infeasible(infeasible.join(", ")));
    }
    Ok(())
}

/// Overrides for `region` given on the command line.
#[derive(Debug, Clone, Default)]
pub struct RegionOptions {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub even_only: Option<bool>,
    pub schemes: Option<Vec<SchemeType>>,
    pub benchmark_input: Option<GaussianInput>,
}

/// One evaluated row of the region, as summarized on the terminal.
#[derive(Debug, Clone)]
pub struct RegionRow {
    pub id: String,
    pub point: RegionPoint,
}

#[derive(Debug, Clone)]
pub struct RegionSummary {
    pub rows: Vec<RegionRow>,
    /// Indices into `rows` chosen by the selection policy.
    pub selected: Vec<usize>,
    pub skipped: Vec<String>,
}

fn alloc_id(a: &BitAllocation) -> String {
    a.flatten()
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

/// Sweeps the scenario's allocations (or every feasible one) and writes the
/// rate region as CSV.
pub fn cmd_region<W: Write>(
    sc: &Scenario,
    opts: &RegionOptions,
    out: W,
) -> Result<RegionSummary, CliError> {
    let samples = opts.samples.unwrap_or(sc.samples);
    let seed = opts.seed.unwrap_or(sc.seed);
    let even_only = opts.even_only.unwrap_or(sc.even_only);
    let input = opts.benchmark_input.unwrap_or(sc.benchmark_input);
    let cfg = &sc.channel;

    let named: Vec<(String, BitAllocation, Vec<SchemeType>)> = if sc.allocations.is_empty() {
        let schemes = opts.schemes.clone().unwrap_or_else(|| sc.schemes.clone());
        enumerate_allocations(cfg, even_only, DEFAULT_ENUMERATION_CAP)?
            .into_iter()
            .map(|a| (alloc_id(&a), a, schemes.clone()))
            .collect()
    } else {
        sc.allocations
            .iter()
            .map(|n| {
                let schemes = opts.schemes.clone().unwrap_or_else(|| n.schemes.clone());
                (n.id.clone(), n.alloc.clone(), schemes)
            })
            .collect()
    };
    let jobs: Vec<(BitAllocation, Vec<SchemeType>)> = named
        .iter()
        .map(|(_, a, s)| (a.clone(), s.clone()))
        .collect();
    let sweep = sweep_jobs(cfg, &jobs, samples, seed)?;

    let mut rows = Vec::new();
    for p in sweep.points {
        rows.push(RegionRow {
            id: named[p.job].0.clone(),
            point: p,
        });
    }
    let skipped: Vec<String> = sweep
        .skipped
        .iter()
        .map(|s| format!("{} scheme {}: {}", named[s.job].0, s.scheme, s.error))
        .collect();
    if !sc.allocations.is_empty() {
        for (job, (id, _, _)) in named.iter().enumerate() {
            if !rows.iter().any(|r| r.point.job == job) {
                return Err(CliError::Config(format!(
                    "allocation {id} cannot be signaled: every scheme needs an odd QAM order"
                )));
            }
        }
    }
    for r in &rows {
        for rep in &r.point.reports {
            if rep.rate > rep.weighted_mi {
                return Err(CliError::Property(format!(
                    "allocation {} user {}: rate {} exceeds its mutual information {}",
                    r.id,
                    rep.user + 1,
                    rep.rate,
                    rep.weighted_mi
                )));
            }
        }
    }

    write_region_csv(sc, &rows, samples, seed, even_only, input, out)?;
    let points: Vec<RegionPoint> = rows.iter().map(|r| r.point.clone()).collect();
    Ok(RegionSummary {
        selected: select_best(&points, sc.policy),
        rows,
        skipped,
    })
}

fn write_region_csv<W: Write>(
    sc: &Scenario,
    rows: &[RegionRow],
    samples: usize,
    seed: u64,
    even_only: bool,
    input: GaussianInput,
    mut out: W,
) -> Result<(), CliError> {
    let cfg = &sc.channel;
    let k_total = cfg.num_users();
    let input_name = match input {
        GaussianInput::Iid => "iid",
        GaussianInput::Shell => "shell",
    };
    writeln!(out, "# hetmac region v1")?;
    writeln!(
        out,
        "# samples={samples} seed={seed} even_only={even_only} benchmark_input={input_name}"
    )?;
    let pairs: Vec<(usize, usize)> = (0..k_total)
        .flat_map(|k| (0..=k).map(move |l| (k, l)))
        .collect();
    let mut header = vec!["kind".to_string(), "id".into(), "scheme".into()];
    header.extend(pairs.iter().map(|(k, l)| format!("m_{}_{}", k + 1, l + 1)));
    header.extend((1..=k_total).map(|k| format!("R_{k}")));
    header.extend((1..=k_total).map(|k| format!("mi_{k}")));
    header.extend((1..=k_total).map(|k| format!("V_{k}")));
    header.extend(
        pairs
            .iter()
            .map(|(k, l)| format!("zeta_{}_{}", k + 1, l + 1)),
    );
    header.extend((1..=k_total).map(|k| format!("zeta_{k}")));
    header.extend(pairs.iter().map(|(k, l)| format!("se_{}_{}", k + 1, l + 1)));
    let width = header.len();

    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for r in rows {
        let p = &r.point;
        let mut rec = vec!["point".to_string(), r.id.clone(), p.scheme_label()];
        rec.extend(pairs.iter().map(|&(k, l)| p.alloc.get(k, l).to_string()));
        rec.extend(p.reports.iter().map(|x| sig6(x.rate)));
        rec.extend(p.reports.iter().map(|x| sig6(x.weighted_mi)));
        rec.extend(
            p.reports
                .iter()
                .map(|x| sig6(x.dispersion_sum / cfg.blocklength(x.user) as f64)),
        );
        rec.extend(pairs.iter().map(|&(k, l)| sig6(p.signaling.zeta(k, l))));
        rec.extend((0..k_total).map(|k| sig6(p.signaling.min_active_zeta(k))));
        rec.extend(
            pairs
                .iter()
                .map(|&(k, l)| sig6(p.reports[k].stats[l].std_error)),
        );
        w.write_record(&rec)?;
    }
    let rate_row = |kind: &str, id: String, rates: &[f64]| {
        let mut rec = vec![String::new(); width];
        rec[0] = kind.to_string();
        rec[1] = id;
        let start = 3 + pairs.len();
        for (i, r) in rates.iter().enumerate() {
            rec[start + i] = sig6(*r);
        }
        rec
    };
    if k_total == 2 {
        let region = gaussian_sic_region(cfg, input, false)?;
        for (i, c) in region.corners().iter().enumerate() {
            w.write_record(rate_row("benchmark_corner", format!("c{}", i + 1), c))?;
        }
        for (i, h) in region.hull().iter().enumerate() {
            w.write_record(rate_row("benchmark_hull", format!("h{}", i + 1), h))?;
        }
    }
    w.write_record(rate_row(
        "gaussian_tin",
        "tin".into(),
        &gaussian_tin_rates(cfg, input)?,
    ))?;
    w.flush()?;
    Ok(())
}

/// Prints a one-line-per-point summary of a region run.
pub fn print_region_summary<W: Write>(
    sc: &Scenario,
    s: &RegionSummary,
    out: &mut W,
) -> io::Result<()> {
    for (i, r) in s.rows.iter().enumerate() {
        let rates: Vec<String> = r.point.rates().iter().map(|x| sig6(*x)).collect();
        writeln!(
            out,
            "{:<8} scheme {:<3} m={} R=({}){}",
            r.id,
            r.point.scheme_label(),
            r.point.alloc,
            rates.join(", "),
            if s.selected.contains(&i) {
                "  <- selected"
            } else {
                ""
            }
        )?;
    }
    for k in 0..sc.channel.num_users() {
        for l in 0..k {
            let mi = gaussian_tin_mi(&sc.channel, k, l);
            writeln!(
                out,
                "Gaussian TIN mutual information of user {} in sub-block {}: {} bits",
                k + 1,
                l + 1,
                sig6(mi)
            )?;
        }
    }
    for sk in &s.skipped {
        writeln!(out, "skipped {sk}")?;
    }
    Ok(())
}

/// Prints the channel-code dimensions for one allocation.
pub fn cmd_codeparams<W: Write>(
    sc: &Scenario,
    id: &str,
    samples: Option<usize>,
    seed: Option<u64>,
    out: &mut W,
) -> Result<(), CliError> {
    let named = sc.allocation(id)?;
    let cfg = &sc.channel;
    let samples = samples.unwrap_or(sc.samples);
    let seed = seed.unwrap_or(sc.seed);
    let mut evaluated = 0;
    for group in scheme_variants(cfg, &named.alloc, &named.schemes)? {
        let point = match evaluate(cfg, &named.alloc, group, samples, seed) {
            Ok(p) => p,
            Err(Error::UnsupportedOrder(b)) => {
                writeln!(out, "skipped a variant needing {b}-bit QAM")?;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        evaluated += 1;
        let params = select_code_params(cfg, &named.alloc, &point.rates())?;
        writeln!(
            out,
            "allocation {} {} scheme {}",
            id,
            named.alloc,
            point.scheme_label()
        )?;
        for (k, u) in params.users.iter().enumerate() {
            writeln!(
                out,
                "  user {}: I={} L={} code rate {} (R={} bits/symbol, N={})",
                k + 1,
                u.info_bits,
                u.codeword_bits,
                sig6(u.code_rate()),
                sig6(point.reports[k].rate),
                cfg.blocklength(k)
            )?;
            if u.degenerate {
                writeln!(
                    out,
                    "  warning: user {} has R*N < 1, no useful code exists",
                    k + 1
                )?;
            }
        }
    }
    if evaluated == 0 {
        return Err(CliError::Config(format!(
            "allocation {id} cannot be signaled: every scheme needs an odd QAM order"
        )));
    }
    Ok(())
}

/// Writes the superimposed receive constellation of one component as CSV.
///
/// `component` counts from 1.
pub fn cmd_constellation<W: Write>(
    sc: &Scenario,
    id: &str,
    component: usize,
    scheme: Option<SchemeType>,
    out: W,
) -> Result<usize, CliError> {
    let named = sc.allocation(id)?;
    let k_total = sc.channel.num_users();
    if component == 0 || component > k_total {
        return Err(CliError::Config(format!(
            "component must be between 1 and {k_total}, got {component}"
        )));
    }
    let scheme = scheme.unwrap_or(named.schemes[0]);
    let sig = build_scheme(&sc.channel, &named.alloc, scheme)?;
    let c = superimpose(&sig, &sc.channel, component - 1, DEFAULT_POINT_CAP)?;
    c.write_csv(out)?;
    Ok(c.cardinality())
}
