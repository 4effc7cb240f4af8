use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hetmac::fblrate::GaussianInput;
use hetmac_cli::scenario::parse_schemes;
use hetmac_cli::{
    cmd_codeparams, cmd_constellation, cmd_det_verify, cmd_region, print_region_summary, CliError,
    RegionOptions, Scenario,
};

/// Uplink multiple access with heterogeneous blocklengths: deterministic
/// designs, QAM signaling and finite-blocklength rates under TIN decoding.
#[derive(Parser)]
#[command(name = "hetmac", version)]
struct Cli {
    /// Worker threads for Monte-Carlo estimation (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep allocations and write the rate region as CSV.
    Region {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Only even QAM orders (the default unless the scenario says otherwise).
        #[arg(long, conflicts_with = "all_orders")]
        even_only: bool,
        /// Allow odd orders when enumerating allocations.
        #[arg(long)]
        all_orders: bool,
        /// Scheme types to evaluate: 1, 2 or both.
        #[arg(long)]
        scheme: Option<String>,
        /// Gaussian codebook model for the reference rows: iid or shell.
        #[arg(long)]
        benchmark_input: Option<String>,
    },
    /// Check the deterministic model for the scenario's allocations.
    DetVerify {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print channel-code dimensions for one allocation.
    Codeparams {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        alloc: String,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dump the superimposed receive constellation of one component.
    Constellation {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        alloc: String,
        /// Component index, starting at 1.
        #[arg(long)]
        component: usize,
        #[arg(long)]
        out: PathBuf,
        /// Scheme type 1 or 2 (defaults to the allocation's first).
        #[arg(long)]
        scheme: Option<String>,
    },
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let stdout = io::stdout();
    let mut stdout = stdout.lock();
    match cli.command {
        Command::Region {
            scenario,
            out,
            samples,
            seed,
            even_only,
            all_orders,
            scheme,
            benchmark_input,
        } => {
            let sc = Scenario::load(&scenario)?;
            let opts = RegionOptions {
                samples,
                seed,
                even_only: if all_orders {
                    Some(false)
                } else if even_only {
                    Some(true)
                } else {
                    None
                },
                schemes: scheme.as_deref().map(parse_schemes).transpose()?,
                benchmark_input: benchmark_input
                    .as_deref()
                    .map(str::parse::<GaussianInput>)
                    .transpose()?,
            };
            let mut file = create(&out)?;
            let summary = cmd_region(&sc, &opts, &mut file)?;
            file.flush()?;
            print_region_summary(&sc, &summary, &mut stdout)?;
            writeln!(stdout, "wrote {}", out.display())?;
        }
        Command::DetVerify { scenario } => {
            let sc = Scenario::load(&scenario)?;
            cmd_det_verify(&sc, &mut stdout)?;
        }
        Command::Codeparams {
            scenario,
            alloc,
            samples,
            seed,
        } => {
            let sc = Scenario::load(&scenario)?;
            cmd_codeparams(&sc, &alloc, samples, seed, &mut stdout)?;
        }
        Command::Constellation {
            scenario,
            alloc,
            component,
            out,
            scheme,
        } => {
            let sc = Scenario::load(&scenario)?;
            let scheme = match scheme.as_deref() {
                None => None,
                Some(s) => match parse_schemes(s)?.as_slice() {
                    [one] => Some(*one),
                    _ => return Err(CliError::Config("pick scheme 1 or 2".into())),
                },
            };
            let mut file = create(&out)?;
            let n = cmd_constellation(&sc, &alloc, component, scheme, &mut file)?;
            file.flush()?;
            writeln!(stdout, "wrote {n} points to {}", out.display())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hetmac: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
