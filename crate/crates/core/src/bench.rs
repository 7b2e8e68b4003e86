//! Electrostatic benchmark: localized sources, their free-space
//! potentials, and error, convergence, and conditioning studies.
//!
//! The source family is
//!
//! ```text
//! rho_m(r, theta) = r^m exp(-r^2/delta^2) cos(m(theta - alpha)),
//! ```
//!
//! for `m` in {0, 1, 2}, truncated to the unit square and optionally
//! rotated by `alpha` about the origin.  `r^m cos(m theta)` is a
//! harmonic polynomial, so samples are evaluated in Cartesian form with
//! no coordinate singularity at the origin.  The matching free-space
//! potentials, finite at `r = 0` and carrying no additive constant, are
//!
//! ```text
//! Phi_0 = (delta^2/4) [E_1(u) + 2 ln r],               u = r^2/delta^2,
//! Phi_1 = (delta^4/(4r)) (exp(-u) - 1) cos(theta),
//! Phi_2 = (delta^4/(4r^2)) ((delta^2 + r^2) exp(-u) - delta^2) cos(2 theta).
//! ```
//!
//! Each solves `Laplacian Phi = rho_m` (untruncated source) and decays
//! like the plane Green's-function convolution, the same gauge the
//! coupled solver produces, so fields are compared without any shift.
//! `E_1` is the exponential integral `int_1^inf exp(-u t)/t dt`.
//!
//! Two error metrics are provided.  The study error `E` is the
//! sup-normalized form `max |field - reference| / max |reference|`
//! ([`relative_error_sup`]); the pointwise form ([`relative_error`])
//! divides by the local reference value and is kept as a diagnostic,
//! with an exclusion threshold around the reference's zero sets where
//! it is denominator-dominated.  Because the reference belongs to the
//! untruncated source while the solver sees the truncation, comparisons
//! against the reference saturate at the truncation tail's potential
//! (about `2e-4` relative at `delta^2 = 0.15`, smaller for narrower
//! sources); self-convergence between resolutions is the
//! machine-precision check.

use std::time::Instant;

use crate::cheb::ChebCoeffs2D;
use crate::geometry::Geometry;
use crate::influence::{self, CollocationMode, HomogeneousCoefficients};
use crate::interior::{self, DirichletSolver};
use crate::{Error, Result};

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Evaluation grid edge: errors are measured on a fixed uniform
/// `EVAL_GRID x EVAL_GRID` grid over the closed rectangle.
pub const EVAL_GRID: usize = 101;

/// Default nodal-line exclusion threshold for [`relative_error`].
pub const DEFAULT_EXCLUSION: f64 = 1e-3;

/// A localized source `r^m exp(-r^2/delta^2) cos(m(theta - alpha))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    m: usize,
    delta: f64,
    rotation_deg: f64,
}

impl SourceSpec {
    /// A source with azimuthal index `m` in {0, 1, 2} and width
    /// `delta > 0`, unrotated.
    pub fn new(m: usize, delta: f64) -> Result<Self> {
        if m > 2 {
            return Err(Error::OutOfDomain(format!(
                "azimuthal index {m} has no analytic reference (supported: 0, 1, 2)"
            )));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::OutOfDomain(format!("source width {delta} must be positive")));
        }
        Ok(Self { m, delta, rotation_deg: 0.0 })
    }

    /// The same source rotated by `deg` degrees about the origin.
    pub fn with_rotation(mut self, deg: f64) -> Self {
        self.rotation_deg = deg;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rotation_deg(&self) -> f64 {
        self.rotation_deg
    }

    fn alpha(&self) -> f64 {
        self.rotation_deg.to_radians()
    }

    /// `r^m cos(m(theta - alpha))` as a polynomial in `(x, y)`.
    fn angular_polynomial(&self, x: f64, y: f64) -> f64 {
        let a = self.alpha();
        match self.m {
            0 => 1.0,
            1 => x * a.cos() + y * a.sin(),
            2 => (x * x - y * y) * (2.0 * a).cos() + 2.0 * x * y * (2.0 * a).sin(),
            _ => unreachable!("validated in SourceSpec::new"),
        }
    }
}

/// Pointwise source density, truncated to the unit square.
pub fn source_value(spec: &SourceSpec, x: f64, y: f64) -> f64 {
    if x.abs() > 1.0 || y.abs() > 1.0 {
        return 0.0;
    }
    let u = (x * x + y * y) / (spec.delta * spec.delta);
    spec.angular_polynomial(x, y) * (-u).exp()
}

/// Source samples on the Lobatto grid of `geom`, transformed to
/// Chebyshev coefficients.
pub fn source_field(spec: &SourceSpec, geom: &Geometry) -> Result<ChebCoeffs2D> {
    interior::project_function(geom, |x, y| source_value(spec, x, y))
}

/// Exponential integral `E_1(lambda) = int_1^inf exp(-lambda t)/t dt`
/// for `lambda > 0`: ascending series below 1, modified Lentz continued
/// fraction above.
pub fn e1(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return f64::INFINITY;
    }
    if lambda <= 1.0 {
        e1_series_part(lambda) - EULER_GAMMA - lambda.ln()
    } else {
        e1_continued_fraction(lambda)
    }
}

/// The entire part of the ascending series:
/// `E_1(u) + gamma + ln u = sum_{n>=1} (-1)^{n+1} u^n / (n n!)`.
fn e1_series_part(u: f64) -> f64 {
    let mut term = u;
    let mut sum = u;
    for n in 2..200 {
        term *= -u / n as f64;
        let contribution = term / n as f64;
        sum += contribution;
        if contribution.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn e1_continued_fraction(lambda: f64) -> f64 {
    // E_1 = exp(-lambda) / (lambda + 1 - 1^2/(lambda + 3 - 2^2/(...))).
    let tiny = 1e-300;
    let mut b = lambda + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-lambda).exp()
}

/// `((1 + u) exp(-u) - 1)/u`, the radial profile of the quadrupole
/// potential, computed without cancellation for small `u`.
fn quadrupole_profile(u: f64) -> f64 {
    if u < 0.5 {
        // sum_{k>=2} (-1)^k (1-k)/k! u^{k-1} = -u/2 + u^2/3 - ...
        let mut kfact = 1.0;
        let mut upow = 1.0;
        let mut acc = 0.0;
        for k in 2..60u32 {
            kfact *= k as f64;
            upow *= u;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let term = sign * (1.0 - k as f64) / kfact * upow;
            acc += term;
            if term.abs() < 1e-18 * acc.abs().max(1e-300) {
                break;
            }
        }
        acc
    } else {
        ((1.0 + u) * (-u).exp() - 1.0) / u
    }
}

/// Free-space reference potential of `spec` at the point `(x, y)`.
pub fn reference_value(spec: &SourceSpec, x: f64, y: f64) -> f64 {
    let d2 = spec.delta * spec.delta;
    let r2 = x * x + y * y;
    let u = r2 / d2;
    match spec.m {
        0 => {
            let core = if u <= 1.0 {
                e1_series_part(u) - EULER_GAMMA
            } else {
                e1_continued_fraction(u) + u.ln()
            };
            (d2 / 4.0) * (core + d2.ln())
        }
        1 => {
            if r2 == 0.0 {
                return 0.0;
            }
            let a = spec.alpha();
            let radial = (d2 * d2 / 4.0) * (-u).exp_m1() / r2;
            radial * (x * a.cos() + y * a.sin())
        }
        2 => {
            if r2 == 0.0 {
                return 0.0;
            }
            let a = 2.0 * spec.alpha();
            let angular = ((x * x - y * y) * a.cos() + 2.0 * x * y * a.sin()) / r2;
            (d2 * d2 / 4.0) * quadrupole_profile(u) * angular
        }
        _ => unreachable!("validated in SourceSpec::new"),
    }
}

/// The uniform evaluation grid over the closed rectangle.
fn eval_points(h: f64) -> impl Iterator<Item = (f64, f64)> {
    let n = EVAL_GRID;
    (0..n).flat_map(move |i| {
        let x = -h + 2.0 * h * i as f64 / (n - 1) as f64;
        (0..n).map(move |j| {
            let y = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
            (x, y)
        })
    })
}

/// Pointwise relative error against the analytic reference over the
/// fixed evaluation grid, skipping points where `|reference|` is below
/// `exclusion` times its grid maximum (nodal lines of the m >= 1
/// references would otherwise divide by zero).
pub fn relative_error(
    field: &ChebCoeffs2D,
    spec: &SourceSpec,
    geom: &Geometry,
    exclusion: f64,
) -> Result<f64> {
    let h = geom.h();
    let reference: Vec<f64> =
        eval_points(h).map(|(x, y)| reference_value(spec, x, y)).collect();
    let scale = reference.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if scale == 0.0 {
        return Err(Error::OutOfDomain(
            "analytic reference vanishes on the whole evaluation grid".into(),
        ));
    }
    let threshold = exclusion * scale;
    let mut worst = f64::NEG_INFINITY;
    for ((x, y), reference) in eval_points(h).zip(reference) {
        if reference.abs() < threshold {
            continue;
        }
        let value = field.eval(x / h, y)?;
        worst = worst.max((value - reference).abs() / reference.abs());
    }
    if worst == f64::NEG_INFINITY {
        return Err(Error::OutOfDomain(format!(
            "exclusion threshold {exclusion} removed every evaluation point"
        )));
    }
    Ok(worst)
}

/// Sup-norm relative error: `max |field - reference| / max |reference|`
/// over the evaluation grid.  No exclusion is needed since the
/// denominator is a single scale.
pub fn relative_error_sup(field: &ChebCoeffs2D, spec: &SourceSpec, geom: &Geometry) -> Result<f64> {
    let h = geom.h();
    let mut scale = 0.0f64;
    let mut diff = 0.0f64;
    for (x, y) in eval_points(h) {
        let reference = reference_value(spec, x, y);
        let value = field.eval(x / h, y)?;
        scale = scale.max(reference.abs());
        diff = diff.max((value - reference).abs());
    }
    if scale == 0.0 {
        return Err(Error::OutOfDomain(
            "analytic reference vanishes on the whole evaluation grid".into(),
        ));
    }
    Ok(diff / scale)
}

/// Knobs shared by the study drivers.
#[derive(Debug, Clone, Copy)]
pub struct StudyOptions {
    pub collocation: CollocationMode,
    pub quad_tol: f64,
    /// Override for the dropped singular-direction count; `None` keeps
    /// the assembly default.
    pub dropped_rank: Option<usize>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            collocation: CollocationMode::Lobatto,
            quad_tol: 1e-10,
            dropped_rank: None,
        }
    }
}

/// A fresh end-to-end solve of `spec` on `geom`.
pub struct SolveOutcome {
    pub field: ChebCoeffs2D,
    pub coefficients: HomogeneousCoefficients,
    pub neumann_residual: f64,
    pub condition_number: f64,
}

/// Build basis, influence system, and coupled solution for one source.
pub fn solve_source(spec: &SourceSpec, geom: &Geometry, opts: &StudyOptions) -> Result<SolveOutcome> {
    let solver = DirichletSolver::new(*geom)?;
    let basis = influence::build_basis(geom, opts.quad_tol)?;
    let mut sys = influence::assemble(&solver, &basis, opts.collocation)?;
    if let Some(r) = opts.dropped_rank {
        sys.set_dropped_rank(r)?;
    }
    solve_with_system(spec, &sys, &solver)
}

/// Coupled solution of one source against a prebuilt influence system;
/// lets callers amortize the basis build over many sources.
pub fn solve_with_system(
    spec: &SourceSpec,
    sys: &crate::influence::InfluenceSystem,
    solver: &DirichletSolver,
) -> Result<SolveOutcome> {
    let rho = source_field(spec, solver.geometry())?;
    // The coupled solve recomputes this rhs internally from the same
    // deterministic pipeline; it is needed separately for the residual.
    let (_, rhs) = influence::particular_rhs(&rho, sys, solver)?;
    let (field, coefficients) = influence::solve_coupled(&rho, sys, solver)?;
    let neumann_residual = influence::neumann_residual(&sys, &coefficients, &rhs);
    Ok(SolveOutcome {
        field,
        coefficients,
        neumann_residual,
        condition_number: sys.condition_number(),
    })
}

/// One resolution step of a convergence study.
#[derive(Debug, Clone, Copy)]
pub struct StudyRow {
    pub n: usize,
    /// Sup-normalized relative error against the analytic reference.
    pub error_vs_analytic: f64,
    /// Sup difference against the largest-N run, relative to that run's
    /// sup; absent when the study has a single row.
    pub error_self: Option<f64>,
    pub condition_number: f64,
    pub seconds: f64,
}

/// Solve `spec` at `K = L = N` for each requested `N` (ascending) on the
/// rectangle of half-width `h` and report per-resolution errors.  The
/// self-error column compares grids against the largest `N`.
pub fn convergence_study(
    spec: &SourceSpec,
    ns: &[usize],
    h: f64,
    opts: &StudyOptions,
) -> Result<Vec<StudyRow>> {
    if ns.is_empty() {
        return Err(Error::ShapeMismatch("empty resolution list".into()));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ShapeMismatch("resolution list must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    let mut grids: Vec<Vec<f64>> = Vec::with_capacity(ns.len());
    for &n in ns {
        let start = Instant::now();
        let geom = Geometry::new(h, n, n)?;
        let outcome = solve_source(spec, &geom, opts)?;
        let error_vs_analytic = relative_error_sup(&outcome.field, spec, &geom)?;
        let values: Result<Vec<f64>> =
            eval_points(h).map(|(x, y)| outcome.field.eval(x / h, y)).collect();
        grids.push(values?);
        rows.push(StudyRow {
            n,
            error_vs_analytic,
            error_self: None,
            condition_number: outcome.condition_number,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    if rows.len() > 1 {
        let reference = grids.last().expect("nonempty");
        let scale = reference.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
        for (row, grid) in rows.iter_mut().zip(&grids) {
            let diff = grid
                .iter()
                .zip(reference)
                .fold(0.0f64, |a, (&v, &r)| a.max((v - r).abs()));
            row.error_self = Some(diff / scale);
        }
    }
    Ok(rows)
}

/// One resolution step of a conditioning study.
#[derive(Debug, Clone, Copy)]
pub struct CondRow {
    pub n: usize,
    pub condition_number: f64,
    /// The five smallest singular values, ascending.
    pub smallest: [f64; 5],
}

/// Assemble the influence system at each `N` and record its conditioning.
pub fn conditioning_study(
    ns: &[usize],
    h: f64,
    mode: CollocationMode,
    quad_tol: f64,
) -> Result<Vec<CondRow>> {
    if ns.is_empty() {
        return Err(Error::ShapeMismatch("empty resolution list".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let geom = Geometry::new(h, n, n)?;
        let solver = DirichletSolver::new(geom)?;
        let basis = influence::build_basis(&geom, quad_tol)?;
        let sys = influence::assemble(&solver, &basis, mode)?;
        let s = sys.singular_values();
        let dim = s.len();
        // s is descending; report the last five in ascending order.
        let mut smallest = [0.0f64; 5];
        for (k, &v) in s.as_slice()[dim.saturating_sub(5)..].iter().rev().enumerate() {
            smallest[k] = v;
        }
        rows.push(CondRow { n, condition_number: sys.condition_number(), smallest });
    }
    Ok(rows)
}

/// Least-squares fit `cond ~ a N^2 + b N + c` over the study rows; needs
/// at least three rows.
pub fn quadratic_fit(rows: &[CondRow]) -> Option<(f64, f64, f64)> {
    if rows.len() < 3 {
        return None;
    }
    // Normal equations for the basis (N^2, N, 1).
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for row in rows {
        let n = row.n as f64;
        let basis = [n * n, n, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += basis[i] * basis[j];
            }
            atb[i] += basis[i] * row.condition_number;
        }
    }
    solve_3x3(ata, atb).map(|x| (x[0], x[1], x[2]))
}

/// Log-log least-squares slope of condition number vs N.
pub fn growth_exponent(rows: &[CondRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.condition_number > 0.0 && r.condition_number.is_finite())
        .map(|r| ((r.n as f64).ln(), r.condition_number.ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

fn solve_3x3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
