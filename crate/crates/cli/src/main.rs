//! Command-line front end for the solver.
//!
//! Four subcommands cover the pipeline: `precompute` builds and caches
//! the geometry-dependent artifacts (basis expansions plus the
//! factorized influence matrix), `solve` runs one coupled solve against
//! a cache and writes the interior field on a uniform grid, `converge`
//! sweeps the resolution for one benchmark source, and `cond` tracks the
//! influence-matrix conditioning.
//!
//! Exit codes are stable: 0 success, 1 unexpected I/O failure, 2 invalid
//! flags, 3 quadrature or solver failure, 4 cache mismatch.  All numeric
//! output carries 17 significant digits so downstream comparisons are
//! exact; output files are replaced atomically.

mod cache;
mod io;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use influxion::bench::{self, SourceSpec, StudyOptions};
use influxion::cheb::ChebCoeffs2D;
use influxion::influence::{self, CollocationMode};
use influxion::interior::DirichletSolver;
use influxion::{Error as CoreError, Geometry};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "influxion",
    version,
    about = "Spectral Poisson solver on a rectangle coupled to the unbounded exterior",
    max_term_width = 100
)]
struct Cli {
    /// Thread budget for internal parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the exterior basis and influence matrix for one geometry
    /// and store them as a cache file.
    Precompute(PrecomputeArgs),
    /// Solve one source against a cached basis and write the interior
    /// field as CSV plus a summary JSON.
    Solve(SolveArgs),
    /// Resolution sweep for a benchmark source: error against the
    /// analytic reference and against the finest run.
    Converge(ConvergeArgs),
    /// Condition number of the influence matrix across resolutions.
    Cond(CondArgs),
}

#[derive(clap::Args)]
struct PrecomputeArgs {
    /// Horizontal half-width of the rectangle [-H, H] x [-1, 1].
    #[arg(long = "H", default_value_t = 1.0)]
    h: f64,
    /// Chebyshev truncation degree along x.
    #[arg(long = "K")]
    k: usize,
    /// Chebyshev truncation degree along y.
    #[arg(long = "L")]
    l: usize,
    /// Adaptive quadrature tolerance for the basis boundary data.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Boundary collocation rule for the Neumann matching.
    #[arg(long, value_parser = ["lobatto", "gauss"], default_value = "lobatto")]
    collocation: String,
    /// Cache path; defaults to a canonical name under $INFLUXION_CACHE_DIR
    /// (or the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of dropped singular directions stored in the
    /// cache (default: the assembly rule for the collocation mode).
    #[arg(long)]
    dropped_rank: Option<usize>,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Cache file written by precompute.
    #[arg(long)]
    basis: PathBuf,
    /// Benchmark source "m=<int>,delta=<float>[,rot=<deg>]".
    #[arg(long)]
    source: Option<String>,
    /// Chebyshev coefficient file of the source (header
    /// "# cheb-coeffs K=<K> L=<L> H=<H>").
    #[arg(long)]
    rho_file: Option<PathBuf>,
    /// Output grid "AxB" over the closed rectangle (A x-points, B y-points).
    #[arg(long, default_value = "101x101")]
    grid: String,
    /// Field CSV path; the summary JSON lands next to it as
    /// <stem>.summary.json.
    #[arg(long)]
    out: PathBuf,
    /// "analytic": also report the relative error against the closed-form
    /// potential (benchmark sources only).
    #[arg(long)]
    reference: Option<String>,
}

#[derive(clap::Args)]
struct ConvergeArgs {
    /// Angular order of the benchmark source (0, 1, or 2).
    #[arg(long)]
    m: usize,
    /// Gaussian width of the source envelope.
    #[arg(long)]
    delta: Option<f64>,
    /// Squared Gaussian width; alternative to --delta.
    #[arg(long)]
    delta2: Option<f64>,
    /// Resolution range "a..b[,step]", inclusive; K = L = N per row.
    #[arg(long = "N")]
    n: String,
    /// Horizontal half-width of the rectangle.
    #[arg(long = "H", default_value_t = 1.0)]
    h: f64,
    /// Adaptive quadrature tolerance for the basis boundary data.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Boundary collocation rule for the Neumann matching.
    #[arg(long, value_parser = ["lobatto", "gauss"], default_value = "lobatto")]
    collocation: String,
    /// Override the number of dropped singular directions per solve.
    #[arg(long)]
    dropped_rank: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct CondArgs {
    /// Resolution range "a..b[,step]", inclusive; K = L = N per row.
    #[arg(long = "N")]
    n: String,
    /// Horizontal half-width of the rectangle.
    #[arg(long = "H", default_value_t = 1.0)]
    h: f64,
    /// Adaptive quadrature tolerance for the basis boundary data.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Boundary collocation rule for the Neumann matching.
    #[arg(long, value_parser = ["lobatto", "gauss"], default_value = "lobatto")]
    collocation: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

/// A failed run: what to print and which stable exit code to use.
#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn flags(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }
    fn solver(msg: impl Into<String>) -> Self {
        Self { code: 3, msg: msg.into() }
    }
    fn cache(msg: impl Into<String>) -> Self {
        Self { code: 4, msg: msg.into() }
    }
    fn io(err: anyhow::Error) -> Self {
        Self { code: 1, msg: format!("{err:#}") }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::solver(e.to_string())
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            std::process::exit(2);
        }
        // Ignore the error: the global pool can only be set once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match cli.cmd {
        Cmd::Precompute(args) => run_precompute(args),
        Cmd::Solve(args) => run_solve(args),
        Cmd::Converge(args) => run_converge(args),
        Cmd::Cond(args) => run_cond(args),
    };
    if let Err(f) = result {
        eprintln!("error: {}", f.msg);
        std::process::exit(f.code);
    }
}

fn parse_mode(name: &str) -> CollocationMode {
    // clap restricts the value set; this cannot fail.
    cache::mode_from_name(name).expect("validated by clap")
}

/// Inclusive "a..b[,step]" resolution range.
fn parse_range(text: &str) -> Result<Vec<usize>, Failure> {
    let (range, step) = match text.split_once(',') {
        Some((r, s)) => {
            let step: usize = s
                .parse()
                .map_err(|_| Failure::flags(format!("bad range step {s:?}")))?;
            if step == 0 {
                return Err(Failure::flags("range step must be at least 1"));
            }
            (r, step)
        }
        None => (text, 1),
    };
    let (a, b) = range
        .split_once("..")
        .ok_or_else(|| Failure::flags(format!("range {text:?} is not of the form a..b[,step]")))?;
    let a: usize = a.parse().map_err(|_| Failure::flags(format!("bad range start {a:?}")))?;
    let b: usize = b.parse().map_err(|_| Failure::flags(format!("bad range end {b:?}")))?;
    if a > b {
        return Err(Failure::flags(format!("range start {a} exceeds end {b}")));
    }
    Ok((a..=b).step_by(step).collect())
}

/// "AxB" grid shape, both at least 2 (the grid spans the closed rectangle).
fn parse_grid(text: &str) -> Result<(usize, usize), Failure> {
    let (a, b) = text
        .split_once('x')
        .ok_or_else(|| Failure::flags(format!("grid {text:?} is not of the form AxB")))?;
    let a: usize = a.parse().map_err(|_| Failure::flags(format!("bad grid width {a:?}")))?;
    let b: usize = b.parse().map_err(|_| Failure::flags(format!("bad grid height {b:?}")))?;
    if a < 2 || b < 2 {
        return Err(Failure::flags("grid needs at least 2 points per direction"));
    }
    Ok((a, b))
}

/// "m=<int>,delta=<float>[,rot=<deg>]" benchmark source description.
fn parse_source(text: &str) -> Result<SourceSpec, Failure> {
    let (mut m, mut delta, mut rot) = (None, None, None);
    for field in text.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Failure::flags(format!("bad source field {field:?}")))?;
        match key.trim() {
            "m" => {
                m = Some(value.parse::<usize>().map_err(|_| {
                    Failure::flags(format!("bad source order {value:?}"))
                })?)
            }
            "delta" => {
                delta = Some(value.parse::<f64>().map_err(|_| {
                    Failure::flags(format!("bad source width {value:?}"))
                })?)
            }
            "rot" => {
                rot = Some(value.parse::<f64>().map_err(|_| {
                    Failure::flags(format!("bad source rotation {value:?}"))
                })?)
            }
            other => return Err(Failure::flags(format!("unknown source field {other:?}"))),
        }
    }
    let m = m.ok_or_else(|| Failure::flags("source must set m"))?;
    let delta = delta.ok_or_else(|| Failure::flags("source must set delta"))?;
    let spec = SourceSpec::new(m, delta).map_err(|e| Failure::flags(e.to_string()))?;
    Ok(match rot {
        Some(deg) => spec.with_rotation(deg),
        None => spec,
    })
}

fn default_cache_path(h: f64, k: usize, l: usize, mode: CollocationMode, tol: f64) -> PathBuf {
    let dir = std::env::var_os("INFLUXION_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("basis-H{h}-K{k}-L{l}-{}-tol{tol:e}.json", cache::mode_name(mode)))
}

fn run_precompute(args: PrecomputeArgs) -> Result<(), Failure> {
    let mode = parse_mode(&args.collocation);
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(Failure::flags("--tol must be a positive number"));
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_cache_path(args.h, args.k, args.l, mode, args.tol));

    if out.exists() {
        if let Ok(doc) = cache::load(&out) {
            if cache::matches_request(&doc, args.h, args.k, args.l, mode, args.tol, args.dropped_rank)
            {
                println!("cache up to date: {}", out.display());
                return Ok(());
            }
        }
        // Mismatched or unreadable: fall through and rebuild in place.
    }

    let geom = Geometry::new(args.h, args.k, args.l).map_err(|e| match e {
        CoreError::DegenerateSegment => Failure::solver(
            "H = 2 makes the horizontal sides degenerate: the k=0 single-layer density \
             amplitude is normalized by log(H/2), which vanishes; pick a different H"
                .to_string(),
        ),
        CoreError::InvalidGeometry(msg) => Failure::flags(format!("invalid geometry: {msg}")),
        other => Failure::solver(other.to_string()),
    })?;
    let start = Instant::now();
    let basis = influence::build_basis(&geom, args.tol)?;
    let solver = DirichletSolver::new(geom)?;
    let mut sys = influence::assemble(&solver, &basis, mode)?;
    if let Some(r) = args.dropped_rank {
        sys.set_dropped_rank(r).map_err(|e| Failure::flags(e.to_string()))?;
    }
    let doc = cache::from_system(&sys, basis);
    cache::save(&doc, &out).map_err(Failure::io)?;
    println!(
        "wrote cache {} (matrix {}x{}, cond {:.3e}, dropped rank {}, {:.2}s)",
        out.display(),
        sys.dim(),
        sys.dim(),
        sys.condition_number(),
        sys.dropped_rank(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

#[derive(Serialize)]
struct SolveTimings {
    load_seconds: f64,
    solve_seconds: f64,
    evaluate_seconds: f64,
}

#[derive(Serialize)]
struct SolveSummary {
    command: &'static str,
    basis: String,
    h: f64,
    k: usize,
    l: usize,
    collocation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_file: Option<String>,
    grid: [usize; 2],
    coefficient_norm: f64,
    neumann_residual: f64,
    condition_number: f64,
    dropped_rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_error: Option<f64>,
    timings: SolveTimings,
}

fn run_solve(args: SolveArgs) -> Result<(), Failure> {
    let (grid_a, grid_b) = parse_grid(&args.grid)?;
    let reference_analytic = match args.reference.as_deref() {
        None => false,
        Some("analytic") => true,
        Some(other) => {
            return Err(Failure::flags(format!(
                "unknown reference {other:?}; the only supported value is \"analytic\""
            )))
        }
    };

    let t_load = Instant::now();
    let doc = cache::load(&args.basis).map_err(|e| Failure::cache(format!("{e:#}")))?;
    let (geom, solver, sys) =
        cache::reassemble(&doc).map_err(|e| Failure::cache(format!("{e:#}")))?;
    let load_seconds = t_load.elapsed().as_secs_f64();

    let (spec, rho) = match (&args.source, &args.rho_file) {
        (Some(_), Some(_)) => {
            return Err(Failure::flags("--source and --rho-file are mutually exclusive"))
        }
        (None, None) => return Err(Failure::flags("one of --source or --rho-file is required")),
        (Some(text), None) => {
            let spec = parse_source(text)?;
            let rho = bench::source_field(&spec, &geom)?;
            (Some(spec), rho)
        }
        (None, Some(path)) => {
            let file = io::read_rho(path).map_err(|e| Failure::flags(format!("{e:#}")))?;
            if file.k != doc.k || file.l != doc.l || file.h != doc.h {
                return Err(Failure::cache(format!(
                    "coefficient file declares K={} L={} H={}, cache holds K={} L={} H={}",
                    file.k, file.l, file.h, doc.k, doc.l, doc.h
                )));
            }
            (None, file.coeffs)
        }
    };
    if reference_analytic && spec.is_none() {
        return Err(Failure::flags(
            "--reference analytic needs a --source with a closed-form potential",
        ));
    }

    let t_solve = Instant::now();
    let (_, rhs) = influence::particular_rhs(&rho, &sys, &solver)?;
    let (field, coefficients) = influence::solve_coupled(&rho, &sys, &solver)?;
    let neumann_residual = influence::neumann_residual(&sys, &coefficients, &rhs);
    let solve_seconds = t_solve.elapsed().as_secs_f64();

    let relative_error = match (&spec, reference_analytic) {
        (Some(spec), true) => Some(bench::relative_error_sup(&field, spec, &geom)?),
        _ => None,
    };

    let t_eval = Instant::now();
    let csv = field_csv(&field, &geom, grid_a, grid_b)?;
    io::atomic_write(&args.out, csv.as_bytes()).map_err(Failure::io)?;
    let evaluate_seconds = t_eval.elapsed().as_secs_f64();

    let summary = SolveSummary {
        command: "solve",
        basis: args.basis.display().to_string(),
        h: doc.h,
        k: doc.k,
        l: doc.l,
        collocation: doc.collocation.clone(),
        source: args.source.clone(),
        rho_file: args.rho_file.as_ref().map(|p| p.display().to_string()),
        grid: [grid_a, grid_b],
        coefficient_norm: coefficients.coeffs.norm(),
        neumann_residual,
        condition_number: sys.condition_number(),
        dropped_rank: sys.dropped_rank(),
        relative_error,
        timings: SolveTimings { load_seconds, solve_seconds, evaluate_seconds },
    };
    let summary_path = args.out.with_extension("summary.json");
    let mut bytes =
        serde_json::to_vec_pretty(&summary).expect("summary serialization cannot fail");
    bytes.push(b'\n');
    io::atomic_write(&summary_path, &bytes).map_err(Failure::io)?;
    println!("wrote field {} and summary {}", args.out.display(), summary_path.display());
    Ok(())
}

/// Interior field on an `a x b` uniform grid over the closed rectangle,
/// x fastest, one "x,y,phi" row per point.
fn field_csv(
    field: &ChebCoeffs2D,
    geom: &Geometry,
    a: usize,
    b: usize,
) -> Result<String, Failure> {
    let mut out = String::from("x,y,phi\n");
    for j in 0..b {
        // Normalized coordinates first, so the endpoints are exact.
        let eta = -1.0 + 2.0 * j as f64 / (b - 1) as f64;
        for i in 0..a {
            let xi = -1.0 + 2.0 * i as f64 / (a - 1) as f64;
            let value = field.eval(xi, eta)?;
            out.push_str(&io::full(geom.h() * xi));
            out.push(',');
            out.push_str(&io::full(eta));
            out.push(',');
            out.push_str(&io::full(value));
            out.push('\n');
        }
    }
    Ok(out)
}

fn run_converge(args: ConvergeArgs) -> Result<(), Failure> {
    let delta = match (args.delta, args.delta2) {
        (Some(_), Some(_)) => {
            return Err(Failure::flags("--delta and --delta2 are mutually exclusive"))
        }
        (None, None) => return Err(Failure::flags("one of --delta or --delta2 is required")),
        (Some(d), None) => d,
        (None, Some(d2)) => {
            if !(d2.is_finite() && d2 > 0.0) {
                return Err(Failure::flags("--delta2 must be a positive number"));
            }
            d2.sqrt()
        }
    };
    let spec = SourceSpec::new(args.m, delta).map_err(|e| Failure::flags(e.to_string()))?;
    let ns = parse_range(&args.n)?;
    let opts = StudyOptions {
        collocation: parse_mode(&args.collocation),
        quad_tol: args.tol,
        dropped_rank: args.dropped_rank,
        ..StudyOptions::default()
    };
    let start = Instant::now();
    let rows = bench::convergence_study(&spec, &ns, args.h, &opts)?;
    let mut csv = String::from("N,E,E_self,cond,seconds\n");
    for row in &rows {
        // A single-row study is its own finest resolution, so the
        // self-error column reads 0 there by the same rule as the last
        // row of a longer sweep.
        let error_self = row.error_self.unwrap_or(0.0);
        csv.push_str(&format!(
            "{},{},{},{},{:.3}\n",
            row.n,
            io::full(row.error_vs_analytic),
            io::full(error_self),
            io::full(row.condition_number),
            row.seconds
        ));
    }
    io::atomic_write(&args.out, csv.as_bytes()).map_err(Failure::io)?;
    println!(
        "wrote {} rows to {} ({:.2}s)",
        rows.len(),
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn run_cond(args: CondArgs) -> Result<(), Failure> {
    let ns = parse_range(&args.n)?;
    let mode = parse_mode(&args.collocation);
    let start = Instant::now();
    let rows = bench::conditioning_study(&ns, args.h, mode, args.tol)?;
    let mut csv = String::from("N,cond,sv1,sv2,sv3,sv4,sv5\n");
    for row in &rows {
        csv.push_str(&format!("{},{}", row.n, io::full(row.condition_number)));
        for sv in row.smallest {
            csv.push(',');
            csv.push_str(&io::full(sv));
        }
        csv.push('\n');
    }
    match bench::quadratic_fit(&rows) {
        Some((a, b, c)) => {
            csv.push_str(&format!(
                "# fit a={} b={} c={}\n",
                io::full(a),
                io::full(b),
                io::full(c)
            ));
        }
        None => {
            log::warn!("quadratic fit needs at least 3 resolutions, got {}", rows.len());
            csv.push_str("# fit omitted: fewer than 3 resolutions\n");
        }
    }
    io::atomic_write(&args.out, csv.as_bytes()).map_err(Failure::io)?;
    println!(
        "wrote {} rows to {} ({:.2}s)",
        rows.len(),
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
