//! `gepi`: dimensions, coupling-coefficient generation, appendix tables and
//! benchmarks for SO(3)/SU(2)/O(3) equivariant and permutation-invariant bases.

use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gepi_core::dims::{dim_report, Method};
use gepi_core::io::{bench_csv, bench_one, parse_channels, save_basis, table_fixed_ell, table_fixed_n, BenchRecord, FileFormat};
use gepi_core::recursion::{assemble_ge, assemble_gepi};
use gepi_core::solver::{basis, o3_basis};
use gepi_core::verify::verify_basis;
use gepi_core::{CouplingBasis, Error, Group, HalfInt, Kind, LVector, Parity};
use rayon::prelude::*;

/// Writes to stdout, exiting quietly when the reader has gone away.
fn emit(text: &str) {
    if let Err(e) = std::io::stdout().lock().write_all(text.as_bytes()) {
        if e.kind() == ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

macro_rules! outln {
    ($($t:tt)*) => {
        emit(&format!("{}\n", format_args!($($t)*)))
    };
}

#[derive(Parser)]
#[command(name = "gepi", version, about = "Equivariant and permutation-invariant coupling coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    So3,
    Su2,
    O3,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Ge,
    Gepi,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Ge => Kind::Ge,
            KindArg::Gepi => Kind::Gepi,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ParityArg {
    #[value(name = "+", alias = "even")]
    Even,
    #[value(name = "-", alias = "odd")]
    Odd,
}

#[derive(Clone, Copy, ValueEnum)]
enum DimMethod {
    Exact,
    Explicit,
    Recursive,
    Asymptotic,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenMethod {
    Direct,
    Recursive,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableStyle {
    AppendixD,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Markdown,
    Csv,
}

#[derive(clap::Args)]
struct Problem {
    /// Channels: `1,1,1`, `3x8` or `(tag,l)xCount` groups such as `(0,1)x2,(1,1)x1`.
    #[arg(long = "l", allow_hyphen_values = true)]
    lvec: String,
    /// Output angular momentum.
    #[arg(long = "L")]
    big_l: String,
    /// Read all numbers as doubled values (half-integer spins).
    #[arg(long)]
    two: bool,
    /// Defaults to so3 for integer input and su2 otherwise.
    #[arg(long, value_enum)]
    group: Option<GroupArg>,
    #[arg(long, value_enum, default_value = "ge")]
    kind: KindArg,
    /// O(3) parity of the output (defaults to (-1)^{Σl}).
    #[arg(long, value_enum)]
    parity: Option<ParityArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension of the coupling space.
    Dim {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, value_enum, default_value = "exact")]
        method: DimMethod,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Generate a coupling basis and write it to a file.
    Gen {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        #[arg(long, value_enum, default_value = "direct")]
        method: GenMethod,
        /// Run the verification checks; exit with status 2 on failure.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dimension tables in the appendix layout.
    Table {
        #[arg(long, value_enum, default_value = "appendix-d")]
        style: TableStyle,
        /// Homogeneous `l` values for the fixed-l tables (columns N = 1..n-max).
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        l_values: Vec<u32>,
        #[arg(long, default_value_t = 8)]
        n_max: u32,
        /// Lengths for the fixed-N tables (columns l = 0..ell-max).
        #[arg(long, value_delimiter = ',', default_value = "3,4")]
        n_values: Vec<u32>,
        #[arg(long, default_value_t = 8)]
        ell_max: u32,
        #[arg(long, value_enum, default_value = "markdown")]
        format: TableFormat,
    },
    /// Time basis construction over a sweep of homogeneous inputs, or one job.
    Bench {
        #[arg(long, default_value_t = 4)]
        l_max: u32,
        #[arg(long, default_value_t = 8)]
        n_max: u32,
        #[arg(long, value_enum, default_value = "gepi")]
        kind: KindArg,
        /// Single job: channel spec (requires --L).
        #[arg(long = "l", allow_hyphen_values = true)]
        lvec: Option<String>,
        /// Output L for a single job or comma-separated sweep values (default: all).
        #[arg(long = "L", value_delimiter = ',')]
        big_l: Vec<u32>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

enum Failure {
    Usage(String),
    Verification(String),
    Consistency(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::KernelDimension { .. } => Failure::Consistency(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

struct Resolved {
    lvec: LVector,
    l: HalfInt,
    group: Group,
    kind: Kind,
    parity: Option<Parity>,
}

fn resolve(p: &Problem) -> Result<Resolved, Failure> {
    let lvec = parse_channels(&p.lvec, p.two)?;
    let l = if p.two {
        p.big_l.trim().parse::<i32>().map(HalfInt::from_twice).map_err(|_| Failure::Usage(format!("bad L '{}'", p.big_l)))?
    } else {
        p.big_l.parse::<HalfInt>().map_err(|e| Failure::Usage(e.to_string()))?
    };
    if l.twice() < 0 {
        return Err(Error::NegativeEll(l).into());
    }
    let group = match p.group {
        Some(GroupArg::So3) => Group::So3,
        Some(GroupArg::Su2) => Group::Su2,
        Some(GroupArg::O3) => Group::O3,
        None if lvec.ells().chain([l]).all(HalfInt::is_integer) => Group::So3,
        None => Group::Su2,
    };
    if group != Group::Su2 {
        if let Some(bad) = lvec.ells().chain([l]).find(|x| !x.is_integer()) {
            return Err(Error::UnsupportedGroup(bad).into());
        }
    }
    let natural = if (lvec.sum_ell().twice() / 2) % 2 == 0 { Parity::Even } else { Parity::Odd };
    let parity = match (group, p.parity) {
        (Group::O3, Some(ParityArg::Even)) => Some(Parity::Even),
        (Group::O3, Some(ParityArg::Odd)) => Some(Parity::Odd),
        (Group::O3, None) => Some(natural),
        (_, Some(_)) => return Err(Failure::Usage("--parity applies to --group o3 only".into())),
        _ => None,
    };
    Ok(Resolved { lvec, l, group, kind: p.kind.into(), parity })
}

impl Resolved {
    /// Reason the space is trivially empty, if any.
    fn empty_reason(&self) -> Option<String> {
        if !self.lvec.parity_allows(self.l) {
            return Some(format!("L + Σl = {} + {} is not an integer", self.l, self.lvec.sum_ell()));
        }
        if self.l > self.lvec.sum_ell() {
            return Some(format!("L = {} exceeds Σl = {}", self.l, self.lvec.sum_ell()));
        }
        let natural = if (self.lvec.sum_ell().twice() / 2) % 2 == 0 { Parity::Even } else { Parity::Odd };
        match self.parity {
            Some(p) if p != natural => Some(format!("O(3) parity {p} differs from (-1)^Σl = {natural}")),
            _ => None,
        }
    }
}

fn cmd_dim(p: &Problem, method: DimMethod, json: bool) -> Result<(), Failure> {
    let r = resolve(p)?;
    let method = match method {
        DimMethod::Exact => Method::Exact,
        DimMethod::Explicit => Method::Explicit,
        DimMethod::Recursive => Method::Recursive,
        DimMethod::Asymptotic => Method::Asymptotic,
    };
    let reason = r.empty_reason();
    let report = dim_report(&r.lvec, r.l, r.kind, method)?;
    let exact = if reason.is_some() { "0".to_string() } else { report.exact.to_string() };
    if json {
        let v = serde_json::json!({
            "lvec": r.lvec.to_string(),
            "L": r.l.to_string(),
            "group": r.group,
            "kind": r.kind,
            "parity": r.parity,
            "dim": exact,
            "method": method.to_string(),
            "estimate": report.estimate,
            "var_l": report.var_l,
            "reason": reason,
        });
        outln!("{}", serde_json::to_string_pretty(&v).map_err(|e| Failure::Usage(e.to_string()))?);
        return Ok(());
    }
    outln!("{exact}");
    if let Some(reason) = reason {
        eprintln!("note: {reason}");
    }
    if let Some(est) = report.estimate {
        outln!("estimate: {est:.6e}");
    }
    Ok(())
}

fn build(r: &Resolved, method: GenMethod) -> Result<CouplingBasis, Failure> {
    let mut b = match (r.parity, method) {
        (Some(p), GenMethod::Direct) => o3_basis(r.kind, &r.lvec, r.l, p)?,
        (_, GenMethod::Direct) => basis(r.kind, &r.lvec, r.l)?,
        (_, GenMethod::Recursive) => recursive(r)?,
    };
    if r.parity.is_some() && r.empty_reason().is_some() {
        b.vectors.clear();
    }
    b.group = r.group;
    b.parity = r.parity;
    Ok(b)
}

fn recursive(r: &Resolved) -> Result<CouplingBasis, Failure> {
    Ok(match r.kind {
        Kind::Ge => assemble_ge(&r.lvec, r.l)?,
        Kind::Gepi => assemble_gepi(&r.lvec, r.l)?,
    })
}

fn cmd_gen(p: &Problem, out: &Path, format: FormatArg, method: GenMethod, verify: bool, seed: u64) -> Result<(), Failure> {
    let r = resolve(p)?;
    let b = build(&r, method)?;
    if b.is_empty() {
        let reason = r.empty_reason().unwrap_or_else(|| "no equivariant coupling exists".into());
        eprintln!("warning: empty basis: {reason}");
    }
    let format = match format {
        FormatArg::Json => FileFormat::Json,
        FormatArg::Bin => FileFormat::Binary,
    };
    save_basis(out, &b, format)?;
    outln!("wrote {} vectors to {}", b.dim(), out.display());
    if verify {
        let report = verify_basis(&b, 20, seed)?;
        outln!("{}", report.to_json()?);
        if !report.passed() {
            return Err(Failure::Verification("verification failed".into()));
        }
    }
    Ok(())
}

fn cmd_table(l_values: &[u32], n_max: u32, n_values: &[u32], ell_max: u32, format: TableFormat) -> Result<(), Failure> {
    let tables = l_values
        .iter()
        .map(|&l| table_fixed_ell(l, n_max))
        .chain(n_values.iter().map(|&n| table_fixed_n(n, ell_max)));
    for t in tables {
        match format {
            TableFormat::Markdown => outln!("{}", t.to_markdown()),
            TableFormat::Csv => outln!("# {}\n{}", t.title, t.to_csv()?),
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    l_max: u32,
    n_max: u32,
    kind: Kind,
    lvec: Option<&str>,
    big_l: &[u32],
    csv: Option<&PathBuf>,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let jobs: Vec<(LVector, HalfInt)> = match lvec {
        Some(spec) => {
            let v = parse_channels(spec, false)?;
            if big_l.is_empty() {
                return Err(Failure::Usage("--l requires --L".into()));
            }
            big_l.iter().map(|&l| (v.clone(), HalfInt::from_int(l as i32))).collect()
        }
        None => {
            let mut jobs = Vec::new();
            for ell in 1..=l_max {
                for n in 1..=n_max {
                    let v = LVector::homogeneous(HalfInt::from_int(ell as i32), n as usize);
                    for l in 0..=ell * n {
                        if big_l.is_empty() || big_l.contains(&l) {
                            jobs.push((v.clone(), HalfInt::from_int(l as i32)));
                        }
                    }
                }
            }
            jobs
        }
    };
    let run = || -> Result<Vec<BenchRecord>, Error> {
        jobs.par_iter().map(|(v, l)| bench_one(kind, v, *l).map(|r| r.0)).collect()
    };
    let records = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Failure::Usage(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let text = bench_csv(&records)?;
    match csv {
        Some(path) => std::fs::write(path, &text).map_err(Error::from)?,
        None => emit(&text),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Dim { problem, method, json } => cmd_dim(problem, *method, *json),
        Command::Gen { problem, out, format, method, verify, seed } => {
            cmd_gen(problem, out, *format, *method, *verify, *seed)
        }
        Command::Table { style: TableStyle::AppendixD, l_values, n_max, n_values, ell_max, format } => {
            cmd_table(l_values, *n_max, n_values, *ell_max, *format)
        }
        Command::Bench { l_max, n_max, kind, lvec, big_l, csv, threads } => {
            cmd_bench(*l_max, *n_max, (*kind).into(), lvec.as_deref(), big_l, csv.as_ref(), *threads)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Consistency(m)) => {
            eprintln!("internal consistency error: {m}");
            ExitCode::from(3)
        }
    }
}
