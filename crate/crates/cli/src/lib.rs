//! Command-line front end: `solve`, `reduce`, `rk`, `bench`, `filter-report` and `generate`.
//!
//! Exit codes: 0 on success, 1 when a computation or I/O step fails, 2 on usage errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rqz::generate::{generate_problem, ProblemKind};
use rqz::io::{
    deflation_kind_name, parse_points_csv, read_matrix_market, read_points_csv,
    write_matrix_market, EigenvalueRecord, SolveReport,
};
use rqz::oracles::backward_error;
use rqz::reduce::{reduce_to_hessenberg_pair, reduce_with_deflation_monitoring, DeflationEvent};
use rqz::rk_filter::{restarted_rk_solve, DenseOperator, RestartOptions, Selection};
use rqz::rqz::{convergence_factor_report, rqz_solve, PoleStrategy, SolveOptions, DEFAULT_MAX_IT};
use rqz::{ComplexMatrix, Error, ProjectivePoint, C64};

#[derive(Parser, Debug)]
#[command(name = "rqz", version, about = "Rational QZ solver for dense generalized eigenvalue problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generalized Schur form and eigenvalues of (A, B).
    Solve(SolveArgs),
    /// Reduction to a Hessenberg pair with prescribed poles.
    Reduce(ReduceArgs),
    /// Restarted rational Krylov eigensolver.
    Rk(RkArgs),
    /// Iteration and swap counts over seeded synthetic problems.
    Bench(BenchArgs),
    /// Magnitudes of the rational filter of repeated steps at given eigenvalues.
    FilterReport(FilterArgs),
    /// Write a seeded synthetic pencil as two Matrix Market files.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct PencilArgs {
    /// Matrix Market file with A.
    #[arg(long)]
    a: PathBuf,
    /// Matrix Market file with B.
    #[arg(long)]
    b: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyName {
    Infinity,
    Zero,
    Random,
    Wilkinson,
    Rayleigh,
}

impl StrategyName {
    fn name(self) -> &'static str {
        match self {
            StrategyName::Infinity => "infinity",
            StrategyName::Zero => "zero",
            StrategyName::Random => "random",
            StrategyName::Wilkinson => "wilkinson",
            StrategyName::Rayleigh => "rayleigh",
        }
    }

    /// Rayleigh poles come from a leading block of at least 2x2, or `packed` when larger.
    fn strategy(self, seed: u64, packed: usize) -> PoleStrategy {
        match self {
            StrategyName::Infinity => PoleStrategy::Infinity,
            StrategyName::Zero => PoleStrategy::Zero,
            StrategyName::Random => PoleStrategy::Random { seed },
            StrategyName::Wilkinson => PoleStrategy::Wilkinson,
            StrategyName::Rayleigh => PoleStrategy::Rayleigh(packed.max(2)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ShiftName {
    Wilkinson,
}

#[derive(Args, Debug)]
struct IterationArgs {
    #[arg(long, value_enum, default_value = "infinity")]
    pole_strategy: StrategyName,
    /// Shifts per sweep; 1 gives single-shift steps.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    packed: u64,
    #[arg(long, value_enum, default_value = "wilkinson")]
    shift: ShiftName,
    /// Constant of the interior deflation criterion.
    #[arg(long, default_value_t = 1.0)]
    defl_c: f64,
    /// Seed of the random pole strategy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration budget per eigenvalue.
    #[arg(long, default_value_t = DEFAULT_MAX_IT)]
    max_it: usize,
}

impl IterationArgs {
    fn options(&self) -> SolveOptions {
        let packed = self.packed as usize;
        SolveOptions {
            pole: self.pole_strategy.strategy(self.seed, packed),
            packed,
            c: self.defl_c,
            max_it: self.max_it,
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "pole_strategy": self.pole_strategy.name(),
            "packed": self.packed,
            "shift": "wilkinson",
            "defl_c": self.defl_c,
            "seed": self.seed,
            "max_it": self.max_it,
        })
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    pencil: PencilArgs,
    #[command(flatten)]
    iteration: IterationArgs,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[command(flatten)]
    pencil: PencilArgs,
    /// CSV with `n - 1` poles, one `re,im` or `inf` per line.
    #[arg(long)]
    poles: PathBuf,
    /// Also test both ends of the result for rank-one deflations.
    #[arg(long)]
    monitor: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SelectName {
    Rightmost,
    Leftmost,
}

#[derive(Args, Debug)]
struct RkArgs {
    #[command(flatten)]
    pencil: PencilArgs,
    /// CSV with the poles of the expansion, used cyclically.
    #[arg(long)]
    poles: PathBuf,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    l: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, value_enum, default_value = "rightmost")]
    select: SelectName,
    #[arg(long, default_value_t = 50)]
    max_restarts: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindName {
    Random,
    TwoCluster,
}

impl KindName {
    fn problem(self) -> ProblemKind {
        match self {
            KindName::Random => ProblemKind::Random,
            KindName::TwoCluster => ProblemKind::TwoCluster { c1: C64::new(0.0, 0.0), c2: C64::new(10.0, 0.0) },
        }
    }

    fn name(self) -> &'static str {
        match self {
            KindName::Random => "random",
            KindName::TwoCluster => "two-cluster",
        }
    }
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "random")]
    kind: KindName,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    sizes: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "infinity,wilkinson")]
    strategies: Vec<StrategyName>,
    #[arg(long, default_value_t = 3)]
    reps: u64,
    /// Problem seed of the first repetition; repetition r uses `seed + r`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    packed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FilterArgs {
    /// CSV with the eigenvalues.
    #[arg(long)]
    eigs: PathBuf,
    /// Pole of the pair, `re,im` or `inf`.
    #[arg(long, allow_hyphen_values = true)]
    pole: String,
    /// Repeated shift, `re,im` or `inf`.
    #[arg(long, allow_hyphen_values = true)]
    shift: String,
    /// Number of repeated steps.
    #[arg(long, default_value_t = 1)]
    s: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "random")]
    kind: KindName,
    /// CSV with a planted spectrum; overrides `--kind` and sets the size.
    #[arg(long)]
    planted: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_a: PathBuf,
    #[arg(long)]
    out_b: PathBuf,
}

fn read_pencil(args: &PencilArgs) -> rqz::Result<(ComplexMatrix, ComplexMatrix)> {
    Ok((read_matrix_market(&args.a)?, read_matrix_market(&args.b)?))
}

fn emit(value: &Value, out: Option<&Path>) -> rqz::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_point(text: &str) -> rqz::Result<ProjectivePoint> {
    let points = parse_points_csv(text)?;
    match points.as_slice() {
        [p] => Ok(*p),
        _ => Err(Error::InvalidInput(format!("expected one point, got '{text}'"))),
    }
}

fn run_solve(args: &SolveArgs) -> rqz::Result<()> {
    let (a, b) = read_pencil(&args.pencil)?;
    let result = rqz_solve(&a, &b, &args.iteration.options())?;
    let problem = json!({ "a": args.pencil.a, "b": args.pencil.b, "n": a.rows() });
    let report = SolveReport::new(problem, args.iteration.to_json(), &result, &a, &b);
    let value = serde_json::to_value(&report).map_err(|e| Error::InvalidInput(e.to_string()))?;
    emit(&value, args.out.as_deref())
}

fn deflation_json(e: &DeflationEvent) -> Value {
    json!({
        "position": e.position,
        "kind": deflation_kind_name(e.kind),
        "eigenvalue": e.eigenvalue.as_ref().map(EigenvalueRecord::from),
    })
}

fn run_reduce(args: &ReduceArgs) -> rqz::Result<()> {
    let (a, b) = read_pencil(&args.pencil)?;
    let poles = read_points_csv(&args.poles)?;
    let (pair, report) = if args.monitor {
        reduce_with_deflation_monitoring(&a, &b, &poles, |e| log::info!("deflation {:?} at {}", e.kind, e.position))?
    } else {
        reduce_to_hessenberg_pair(&a, &b, &poles)?
    };
    let acc = pair.acc.as_ref().expect("reduction accumulates Q and Z");
    let value = json!({
        "n": a.rows(),
        "subdiagonal_profile": report.subdiagonal_profile,
        "deflations": report.deflations.iter().map(deflation_json).collect::<Vec<_>>(),
        "infinite_eigenvalues": report.infinite_eigenvalues,
        "mismatched_positions": report.mismatched_positions,
        "plain_rotations": report.plain_rotations,
        "pole_rotations": report.pole_rotations,
        "backward_error_A": backward_error(&pair.a, &acc.q, &a, &acc.z),
        "backward_error_B": backward_error(&pair.b, &acc.q, &b, &acc.z),
    });
    emit(&value, args.out.as_deref())
}

fn run_rk(args: &RkArgs) -> rqz::Result<()> {
    let (a, b) = read_pencil(&args.pencil)?;
    let poles = read_points_csv(&args.poles)?;
    let n = a.rows();
    let op = DenseOperator::new(a, b)?;
    let v0 = vec![C64::new(1.0, 0.0); n];
    let opts = RestartOptions {
        m: args.m,
        p: args.p,
        l: args.l,
        tol: args.tol,
        select: match args.select {
            SelectName::Rightmost => Selection::Rightmost,
            SelectName::Leftmost => Selection::Leftmost,
        },
        max_restarts: args.max_restarts,
    };
    let r = restarted_rk_solve(&op, &v0, &poles, &opts)?;
    let pairs: Vec<Value> = r
        .pairs
        .iter()
        .map(|p| json!({ "value": EigenvalueRecord::from(&p.value), "residual": p.residual }))
        .collect();
    let value = json!({
        "n": n,
        "restarts": r.restarts,
        "converged": r.converged,
        "ritz": pairs,
        "recurrence_residual": r.decomposition.recurrence_residual(&op),
    });
    emit(&value, args.out.as_deref())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn run_bench(args: &BenchArgs) -> rqz::Result<()> {
    let packed = args.packed as usize;
    let mut cells = Vec::new();
    let mut summary = Vec::new();
    for &n in &args.sizes {
        for &strategy in &args.strategies {
            let (mut its, mut swaps) = (Vec::new(), Vec::new());
            for rep in 0..args.reps {
                let seed = args.seed + rep;
                let (a, b) = generate_problem(&args.kind.problem(), n, seed)?;
                let opts = SolveOptions { pole: strategy.strategy(seed, packed), packed, ..SolveOptions::default() };
                let r = rqz_solve(&a, &b, &opts)?;
                its.push(r.stats.iterations_per_eigenvalue);
                swaps.push(r.stats.swaps_per_n2);
                cells.push(json!({
                    "n": n,
                    "strategy": strategy.name(),
                    "seed": seed,
                    "it_per_n": r.stats.iterations_per_eigenvalue,
                    "swaps_per_n2": r.stats.swaps_per_n2,
                }));
            }
            let mean = its.iter().sum::<f64>() / its.len().max(1) as f64;
            summary.push(json!({
                "n": n,
                "strategy": strategy.name(),
                "mean_it_per_n": mean,
                "median_it_per_n": median(its),
                "median_swaps_per_n2": median(swaps),
            }));
        }
    }
    let value = json!({
        "schema_version": rqz::io::SCHEMA_VERSION,
        "kind": args.kind.name(),
        "packed": packed,
        "cells": cells,
        "summary": summary,
    });
    emit(&value, args.out.as_deref())
}

fn run_filter(args: &FilterArgs) -> rqz::Result<()> {
    let eigs: Vec<C64> = read_points_csv(&args.eigs)?
        .iter()
        .map(|p| p.to_complex().ok_or_else(|| Error::InvalidInput("eigenvalues must be finite".into())))
        .collect::<rqz::Result<_>>()?;
    let pole = parse_point(&args.pole)?;
    let shift = parse_point(&args.shift)?;
    let r = convergence_factor_report(&eigs, &[pole], &[shift], args.s);
    let value = json!({
        "values": r.values,
        "min": r.min,
        "bottom_factor": r.bottom_factor,
        "top_factor": r.top_factor,
    });
    emit(&value, args.out.as_deref())
}

fn run_generate(args: &GenerateArgs) -> rqz::Result<()> {
    let (kind, n) = match &args.planted {
        Some(path) => {
            let eigs: Vec<C64> = read_points_csv(path)?
                .iter()
                .map(|p| p.to_complex().ok_or_else(|| Error::InvalidInput("planted eigenvalues must be finite".into())))
                .collect::<rqz::Result<_>>()?;
            let n = eigs.len();
            (ProblemKind::Planted(eigs), n)
        }
        None => (args.kind.problem(), args.n),
    };
    let (a, b) = generate_problem(&kind, n, args.seed)?;
    write_matrix_market(&args.out_a, &a)?;
    write_matrix_market(&args.out_b, &b)?;
    Ok(())
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn cli_main(argv: Vec<String>) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Reduce(a) => run_reduce(a),
        Command::Rk(a) => run_rk(a),
        Command::Bench(a) => run_bench(a),
        Command::FilterReport(a) => run_filter(a),
        Command::Generate(a) => run_generate(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rqz: {e}");
            1
        }
    }
}
