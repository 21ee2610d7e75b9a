//! `seminar-vns`: solve, generate, benchmark and inspect assignment instances.
//!
//! Exit codes: 0 success, 1 internal failure, 2 invalid input, 3 instance
//! too large for exhaustive enumeration.

use std::fmt::Display;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use seminar_vns::bench::{run_benchmark, BenchmarkConfig, Method};
use seminar_vns::formats::{self, LoadOptions, MatrixOptions};
use seminar_vns::instgen::{derive_family, generate, GeneratorConfig};
use seminar_vns::oracle::{solve as exact, OracleError, DEFAULT_GUARD};
use seminar_vns::search::SearchError;
use seminar_vns::{run_vns, Instance, Mode, NeighborhoodKind, SearchConfig};
use seminar_vns_service::ServiceConfig;

/// Overrides the default benchmark worker count.
const WORKERS_ENV: &str = "SEMINAR_VNS_WORKERS";

#[derive(Parser)]
#[command(name = "seminar-vns", version, about = "Assign students to seminar topics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search one instance and write the archive and run report.
    Solve(SolveArgs),
    /// Write a random instance.
    Generate(GenerateArgs),
    /// Derive instances of other sizes from a base instance.
    Family(FamilyArgs),
    /// Compare single neighborhoods with the combined search over a family.
    Benchmark(BenchmarkArgs),
    /// Bi-objective search; writes outcome points as tab-separated columns.
    Frontier(FrontierArgs),
    /// Enumerate a small instance exhaustively.
    Oracle(OracleArgs),
    /// Convert a weight matrix export into an instance file.
    Import(ImportArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Bi,
}

#[derive(Args)]
struct InstanceArg {
    /// Instance file (TOML).
    instance: PathBuf,
    /// Rescale weight rows that do not sum to w_max.
    #[arg(long)]
    normalize: bool,
}

impl InstanceArg {
    fn load(&self) -> Result<Instance, CliError> {
        formats::load_instance(&self.instance, LoadOptions { normalize: self.normalize }).map_err(CliError::input)
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluation budget.
    #[arg(long, default_value_t = 100_000)]
    evals: u64,
    /// Most alternatives kept per outcome.
    #[arg(long, default_value_t = 1_000)]
    cap: usize,
    /// Omit timestamps and wall times so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[arg(long, value_enum, default_value = "single")]
    mode: ModeArg,
    /// Comma-separated subset of swap2, swap3, shift, shift+swap2.
    #[arg(long, value_delimiter = ',')]
    neighborhoods: Option<Vec<NeighborhoodKind>>,
    #[command(flatten)]
    search: SearchArgs,
    /// Directory receiving archive.json and report.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    w_max: u32,
    /// Number of staff members.
    #[arg(long, default_value_t = 1)]
    groups: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Favored topics per student, e.g. 2 or 1-4.
    #[arg(long, default_value = "2", value_parser = parse_range)]
    favored: (usize, usize),
    /// Share of w_max given to the favored topics.
    #[arg(long, default_value_t = 0.8)]
    favored_share: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FamilyArgs {
    #[command(flatten)]
    base: InstanceArg,
    /// Student counts, e.g. 30-45 or 30,34,40.
    #[arg(long, value_parser = parse_targets)]
    targets: Targets,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving n<size>.toml files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    base: InstanceArg,
    #[arg(long, value_parser = parse_targets, default_value = "30-45")]
    targets: Targets,
    #[arg(long, default_value_t = 25)]
    runs: usize,
    #[arg(long, default_value_t = 100_000)]
    evals: u64,
    /// Base seed; every run derives its own seed from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parallel runs; defaults to $SEMINAR_VNS_WORKERS or all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Omit run times so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
    /// Directory receiving table.tsv, differences.tsv and runs.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FrontierArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[command(flatten)]
    search: SearchArgs,
    /// Tab-separated frontier file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the archive.
    #[arg(long)]
    archive: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InstanceArg,
    /// Largest m^n to enumerate.
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    guard: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImportArgs {
    /// Matrix file: one student per line, optional header and name column.
    matrix: PathBuf,
    /// Required row sum; inferred from the first row if absent.
    #[arg(long)]
    w_max: Option<u32>,
    #[arg(long)]
    normalize: bool,
    /// Topics per staff member, e.g. "1,2,3;4,5".
    #[arg(long, value_parser = parse_groups)]
    groups: Option<Groups>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long)]
    data_dir: PathBuf,
    /// Jobs searching at the same time.
    #[arg(long, default_value_t = 1)]
    parallel_jobs: usize,
    /// Built web frontend to serve alongside the API.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Targets(Vec<usize>);

#[derive(Clone, Debug)]
struct Groups(Vec<Vec<usize>>);

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let bad = |_| format!("`{s}` is not a number or a range like 1-4");
    match s.split_once('-') {
        Some((a, b)) => Ok((a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?)),
        None => {
            let k = s.trim().parse().map_err(bad)?;
            Ok((k, k))
        }
    }
}

fn parse_targets(s: &str) -> Result<Targets, String> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (a, b) = parse_range(part)?;
        if a > b {
            return Err(format!("empty range `{part}`"));
        }
        out.extend(a..=b);
    }
    if out.is_empty() {
        return Err("no target sizes given".into());
    }
    Ok(Targets(out))
}

fn parse_groups(s: &str) -> Result<Groups, String> {
    s.split(';')
        .map(|g| {
            g.split(',')
                .map(|t| match t.trim().parse::<usize>() {
                    Ok(j) if j >= 1 => Ok(j - 1),
                    _ => Err(format!("`{t}` is not a topic number (they start at 1)")),
                })
                .collect()
        })
        .collect::<Result<_, _>>()
        .map(Groups)
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Guard(String),
    Internal(String),
}

impl CliError {
    fn input(e: impl Display) -> Self {
        CliError::Input(e.to_string())
    }

    fn internal(e: impl Display) -> Self {
        CliError::Internal(e.to_string())
    }

    fn search(e: SearchError) -> Self {
        match e {
            SearchError::Cancelled { .. } => CliError::internal(e),
            _ => CliError::input(e),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

fn now() -> Option<u64> {
    SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
}

fn search_config(mode: Mode, neighborhoods: Option<Vec<NeighborhoodKind>>, s: &SearchArgs) -> SearchConfig {
    SearchConfig { mode, neighborhoods, max_evaluations: s.evals, seed: s.seed, archive_cap: s.cap }
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let inst = args.input.load()?;
    let mode = match args.mode {
        ModeArg::Single => Mode::SingleObjective,
        ModeArg::Bi => Mode::BiObjective,
    };
    let config = search_config(mode, args.neighborhoods, &args.search);
    let (archive, mut report) = run_vns(&inst, &config).map_err(CliError::search)?;
    if args.search.no_timing {
        report.wall_time_ms = None;
    } else {
        report.timestamp_unix = now();
    }
    create_dir(&args.out)?;
    write(&args.out.join("archive.json"), &formats::archive_to_string(&archive, &inst))?;
    write(&args.out.join("report.json"), &formats::report_to_string(&report))?;
    for e in &report.exclusions {
        eprintln!("note: {} not used ({})", e.kind, e.reason);
    }
    println!(
        "best utility {}, {} alternatives over {} outcome(s){}",
        report.best_utility,
        report.archive_size,
        report.alternatives.len(),
        if report.cap_hit { ", cap reached" } else { "" }
    );
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let cfg = GeneratorConfig {
        favored: args.favored,
        favored_share: args.favored_share,
        ..GeneratorConfig::new(args.n, args.m, args.w_max, args.groups, args.seed)
    };
    let inst = generate(&cfg).map_err(CliError::input)?;
    write(&args.out, &formats::instance_to_string(&inst))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_family(args: FamilyArgs) -> Result<(), CliError> {
    let base = args.base.load()?;
    create_dir(&args.out)?;
    for &n in &args.targets.0 {
        let inst = derive_family(&base, n, seminar_vns::bench::family_seed(args.seed, n)).map_err(CliError::input)?;
        write(&args.out.join(format!("n{n}.toml")), &formats::instance_to_string(&inst))?;
    }
    println!("wrote {} instances to {}", args.targets.0.len(), args.out.display());
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), CliError> {
    let base = args.base.load()?;
    let workers = match args.workers {
        Some(w) => w,
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Input(format!("{WORKERS_ENV}=`{v}` is not a number")))?,
            Err(_) => 0,
        },
    };
    let cfg = BenchmarkConfig {
        targets: args.targets.0,
        runs: args.runs,
        evaluations: args.evals,
        base_seed: args.seed,
        workers,
    };
    let table = run_benchmark(&base, &cfg).map_err(CliError::input)?;
    create_dir(&args.out)?;
    write(&args.out.join("table.tsv"), &table.to_tsv())?;
    write(&args.out.join("differences.tsv"), &table.differences_tsv())?;
    let rows: Vec<_> = table
        .rows
        .iter()
        .map(|row| {
            let cells: serde_json::Map<String, serde_json::Value> = row
                .cells
                .iter()
                .map(|c| {
                    let v = if c.applicable() {
                        json!({
                            "mean": c.mean(),
                            "utilities": c.utilities,
                            "mean_ms": (!args.no_timing).then_some(c.mean_ms),
                        })
                    } else {
                        serde_json::Value::Null
                    };
                    (c.method.name().to_string(), v)
                })
                .collect();
            json!({ "n": row.n, "cells": cells })
        })
        .collect();
    let runs = json!({
        "format_version": formats::FORMAT_VERSION,
        "targets": cfg.targets,
        "runs": cfg.runs,
        "evaluations": cfg.evaluations,
        "base_seed": cfg.base_seed,
        "methods": Method::ALL.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "rows": rows,
        "timestamp_unix": if args.no_timing { None } else { now() },
    });
    write(&args.out.join("runs.json"), &format!("{}\n", serde_json::to_string_pretty(&runs).map_err(CliError::internal)?))?;
    print!("{}", table.to_tsv());
    Ok(())
}

fn cmd_frontier(args: FrontierArgs) -> Result<(), CliError> {
    let inst = args.input.load()?;
    let config = search_config(Mode::BiObjective, None, &args.search);
    let (archive, report) = run_vns(&inst, &config).map_err(CliError::search)?;
    let table = formats::frontier_table(&report.alternatives);
    write(&args.out, &table)?;
    if let Some(path) = &args.archive {
        write(path, &formats::archive_to_string(&archive, &inst))?;
    }
    print!("{table}");
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let inst = args.input.load()?;
    let result = exact(&inst, args.guard).map_err(|e @ OracleError::GuardExceeded { .. }| CliError::Guard(e.to_string()))?;
    write(&args.out, &formats::oracle_to_string(&result))?;
    println!(
        "optimum {} reached by {} of {} feasible assignments; {} frontier point(s)",
        result.optimum_utility,
        result.optimal_count,
        result.enumerated,
        result.frontier.len()
    );
    Ok(())
}

fn cmd_import(args: ImportArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.matrix).map_err(|e| CliError::Input(format!("{}: {e}", args.matrix.display())))?;
    let opts = MatrixOptions { w_max: args.w_max, normalize: args.normalize, groups: args.groups.map(|g| g.0) };
    let inst = formats::import_matrix(&text, &opts).map_err(|e| CliError::Input(format!("{}: {e}", args.matrix.display())))?;
    write(&args.out, &formats::instance_to_string(&inst))?;
    println!("{} students, {} topics, w_max {} -> {}", inst.n(), inst.m(), inst.w_max(), args.out.display());
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<(), CliError> {
    let config = ServiceConfig { parallel_jobs: args.parallel_jobs, static_dir: args.static_dir, ..ServiceConfig::new(args.data_dir) };
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::internal)?;
    runtime.block_on(seminar_vns_service::serve(args.addr, config)).map_err(CliError::internal)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Family(a) => cmd_family(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Frontier(a) => cmd_frontier(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Import(a) => cmd_import(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Guard(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
