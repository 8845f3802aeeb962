use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use subtree_core::asymptotics::{self, BoundsRow, LowerFactor, XiTail, DEFAULT_K_HAT};
use subtree_core::census::{self, Budget, GCountTable, MAX_K};
use subtree_core::directed::DEFAULT_PRECISION;
use subtree_core::montecarlo::{self, SimulationConfig};
use subtree_core::subtree::DEFAULT_LOG_PRECISION;
use subtree_core::Error;

mod verify;

const CACHE_FILE: &str = "gcount.csv";

#[derive(Parser)]
#[command(name = "subtrees", version, about = "Subtree counts of random labelled trees")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certified bounds on the growth constant for K' = 1..=K.
    Bounds(BoundsArgs),
    /// Estimate E[c(T_n)]^(1/n) with bootstrap percentiles.
    Simulate(SimulateArgs),
    /// Compute the census x(k, g) and write it to a file, resuming from it if present.
    Enumerate(EnumerateArgs),
    /// Run the built-in consistency suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum Upper2Factor {
    Enclosure,
    Printed,
}

impl From<Upper2Factor> for LowerFactor {
    fn from(f: Upper2Factor) -> Self {
        match f {
            Upper2Factor::Enclosure => LowerFactor::Enclosure,
            Upper2Factor::Printed => LowerFactor::Printed,
        }
    }
}

#[derive(Args)]
struct BudgetArgs {
    /// Stop before starting a new k after this many seconds.
    #[arg(long)]
    max_seconds: Option<u64>,
    /// Stop once the census holds more than this many entries.
    #[arg(long)]
    max_entries: Option<usize>,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        Budget {
            wall_clock: self.max_seconds.map(Duration::from_secs),
            max_entries: self.max_entries,
        }
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=MAX_K as i64))]
    k: u32,
    /// Largest pendant size in the second upper bound.
    #[arg(long, default_value_t = DEFAULT_K_HAT)]
    k_hat: usize,
    /// Mantissa bits.
    #[arg(long, default_value_t = DEFAULT_PRECISION, value_parser = clap::value_parser!(u32).range(32..=65536))]
    precision: u32,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Lower-bound factor inside upper2: the certified enclosure, or the
    /// lower bound truncated to the printed decimals.
    #[arg(long, value_enum, default_value = "enclosure")]
    upper2_factor: Upper2Factor,
    /// Census file to load, extend and checkpoint.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Directory for the census cache, used when --table is absent.
    #[arg(long, env = "SUBTREES_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    #[arg(long, default_value_t = montecarlo::DEFAULT_REPS as u64, value_parser = clap::value_parser!(u64).range(2..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = montecarlo::DEFAULT_BOOTSTRAP_REPS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    bootstrap_reps: u64,
    /// Defaults to --seed; the bootstrap uses separate streams either way.
    #[arg(long)]
    bootstrap_seed: Option<u64>,
    /// Mantissa bits for ln c(T); raised automatically for large n.
    #[arg(long, default_value_t = DEFAULT_LOG_PRECISION, value_parser = clap::value_parser!(u32).range(53..=4096))]
    precision: u32,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=MAX_K as i64))]
    k: u32,
    /// Output file; an existing census there is extended rather than recomputed.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "SUBTREES_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Compare the census against exhaustive enumeration up to this size.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=census::EXHAUSTIVE_MAX_K as i64))]
    oracle_k: u32,
    /// Also validate this census file.
    #[arg(long)]
    table: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Bounds(args) => cmd_bounds(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Enumerate(args) => cmd_enumerate(&args),
        Command::Verify(args) => verify::run(args.oracle_k as usize, args.table.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn cache_path(explicit: Option<&Path>, cache_dir: Option<&Path>) -> anyhow::Result<Option<PathBuf>> {
    if let Some(path) = explicit {
        return Ok(Some(path.to_path_buf()));
    }
    match cache_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Ok(Some(dir.join(CACHE_FILE)))
        }
        None => Ok(None),
    }
}

/// Loads the census from `path` when present, extends it to `k`, and saves
/// after every completed size.
fn obtain_table(k: usize, path: Option<&Path>, budget: &Budget) -> Result<GCountTable, Error> {
    let start = match path {
        Some(p) if p.exists() => {
            let table = census::load_tables(p)?;
            if table.k_max() >= k {
                return Ok(table);
            }
            eprintln!("resuming from {} (k <= {})", p.display(), table.k_max());
            table
        }
        _ => GCountTable::base(),
    };
    if let Some(p) = path {
        if start.k_max() == 1 && !p.exists() {
            census::save_tables(&start, p)?;
        }
    }
    start.extend_to(k, budget, |table| {
        let k = table.k_max();
        eprintln!("k = {k}: {} distinct g", table.row(k).len());
        match path {
            Some(p) => census::save_tables(table, p),
            None => Ok(()),
        }
    })
}

fn cmd_bounds(args: &BoundsArgs) -> anyhow::Result<()> {
    let k = args.k as usize;
    if args.k_hat <= k {
        bail!("--k-hat ({}) must exceed --k ({k})", args.k_hat);
    }
    let path = cache_path(args.table.as_deref(), args.cache_dir.as_deref())?;
    let (table, failure) = match obtain_table(k, path.as_deref(), &args.budget.budget()) {
        Ok(table) => (table, None),
        Err(Error::Budget { reason, partial }) => (*partial, Some(reason)),
        Err(e) => return Err(e.into()),
    };
    let rows_k = table.k_max().min(k);
    let tail = XiTail::new(args.k_hat, args.precision)?;
    let rows: Vec<BoundsRow> = (1..=rows_k)
        .map(|kk| BoundsRow::compute_with(&table, kk, &tail, args.precision, args.upper2_factor.into()))
        .collect::<Result<_, _>>()?;
    let text = match args.format {
        Format::Csv => asymptotics::render_csv(&rows),
        Format::Md => asymptotics::render_markdown(&rows),
    };
    emit(args.output.as_deref(), &text)?;
    match failure {
        Some(reason) => bail!("budget exceeded, rows stop at K = {rows_k}: {reason}"),
        None => Ok(()),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let config = SimulationConfig {
        n: args.n as usize,
        reps: args.reps as usize,
        master_seed: args.seed,
        bootstrap_reps: args.bootstrap_reps as usize,
        bootstrap_seed: args.bootstrap_seed,
        precision: args.precision,
    };
    let summary = montecarlo::run_simulation(&config)?;
    emit(args.output.as_deref(), &format!("{}\n{}\n", montecarlo::CSV_HEADER, summary.to_csv()))
}

fn cmd_enumerate(args: &EnumerateArgs) -> anyhow::Result<()> {
    let k = args.k as usize;
    let path = match cache_path(args.out.as_deref(), args.cache_dir.as_deref())? {
        Some(p) => p,
        None => PathBuf::from(CACHE_FILE),
    };
    let (table, failure) = match obtain_table(k, Some(&path), &args.budget.budget()) {
        Ok(table) => (table.truncated(k), None),
        Err(Error::Budget { reason, partial }) => (*partial, Some(reason)),
        Err(e) => return Err(e.into()),
    };
    let mut report = String::from("k,entries,mass,expected,check\n");
    let mut all_ok = true;
    for kk in 1..=table.k_max() {
        let mass = table.mass(kk);
        let expected = census::rooted_tree_count(kk);
        let ok = mass == expected;
        all_ok &= ok;
        report.push_str(&format!("{kk},{},{mass},{expected},{}\n", table.row(kk).len(), if ok { "ok" } else { "MISMATCH" }));
    }
    emit(None, &report)?;
    eprintln!("wrote {}", path.display());
    if let Some(reason) = failure {
        bail!("budget exceeded, census stops at k = {}: {reason}", table.k_max());
    }
    if !all_ok {
        bail!("census mass check failed");
    }
    Ok(())
}
