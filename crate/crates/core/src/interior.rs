//! Dirichlet Poisson solver on the rectangle by Chebyshev collocation.
//!
//! The Laplacian is collocated at interior tensor Lobatto nodes; boundary
//! rows impose the trace directly.  The resulting Sylvester equation
//! `A X + X B^T = F` (with `A`, `B` the interior blocks of the 1D
//! second-derivative matrices) is solved through the eigendecompositions
//! of `A` and `B`, so one factorization per geometry serves any number of
//! right-hand sides.

use crate::cheb::{self, ChebCoeffs1D, ChebCoeffs2D, GridField2D};
use crate::geometry::{BoundaryTrace, Geometry, SideId};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// First-derivative collocation matrix on `lobatto_points(n)` scaled to an
/// interval of half-length `a`, with the negative-sum diagonal.
pub(crate) fn diff_matrix(n: usize, a: f64) -> DMatrix<f64> {
    let x = cheb::lobatto_points(n);
    let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = sign * c(i) / (c(j) * (x[i] - x[j]));
            }
        }
    }
    for i in 0..=n {
        let mut row_sum = 0.0;
        for j in 0..=n {
            if i != j {
                row_sum += d[(i, j)];
            }
        }
        d[(i, i)] = -row_sum;
    }
    d / a
}

fn second_diff_matrix(n: usize, a: f64) -> DMatrix<f64> {
    let d = diff_matrix(n, a);
    &d * &d
}

struct EigPair {
    /// Eigenvector columns, sorted by ascending eigenvalue.
    p: DMatrix<f64>,
    p_inv: DMatrix<f64>,
    lambda: DVector<f64>,
}

/// Real eigendecomposition of the (non-symmetric) interior block of a
/// second-derivative matrix.  The spectrum is real, negative, and simple;
/// a complex pair or a failed factorization is a reported breakdown.
fn real_eig(a: &DMatrix<f64>) -> Result<EigPair> {
    let n = a.nrows();
    let scale = a.abs().max().max(1.0);
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), 1e-14, 100_000)
        .ok_or_else(|| Error::SolverBreakdown("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    for i in 0..n.saturating_sub(1) {
        if t[(i + 1, i)].abs() > 1e-10 * scale {
            return Err(Error::SolverBreakdown(format!(
                "complex eigenvalue pair in second-derivative spectrum (subdiagonal {:.3e})",
                t[(i + 1, i)]
            )));
        }
    }
    // Eigenvectors of the triangular factor by back-substitution, guarded
    // against vanishing divisors from near-multiple eigenvalues.
    let guard = 1e3 * f64::EPSILON * scale;
    let mut p = DMatrix::zeros(n, n);
    let mut lambda = DVector::zeros(n);
    for i in 0..n {
        let li = t[(i, i)];
        lambda[i] = li;
        let mut y = DVector::zeros(n);
        y[i] = 1.0;
        for j in (0..i).rev() {
            let mut s = 0.0;
            for m in (j + 1)..=i {
                s += t[(j, m)] * y[m];
            }
            let mut d = t[(j, j)] - li;
            if d.abs() < guard {
                d = if d >= 0.0 { guard } else { -guard };
            }
            y[j] = -s / d;
        }
        let v = &q * y;
        let norm = v.abs().max();
        p.set_column(i, &(v / norm));
    }
    // Deterministic ordering: ascending eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lambda[i].total_cmp(&lambda[j]));
    let p = DMatrix::from_columns(&order.iter().map(|&i| p.column(i).into_owned()).collect::<Vec<_>>());
    let lambda = DVector::from_iterator(n, order.iter().map(|&i| lambda[i]));
    if lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::SolverBreakdown("non-finite eigenvalue".into()));
    }
    let p_inv = p
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SolverBreakdown("singular eigenvector matrix".into()))?;
    let residual = (a * &p - &p * DMatrix::from_diagonal(&lambda)).abs().max();
    if !(residual <= 1e-8 * scale) {
        return Err(Error::SolverBreakdown(format!(
            "eigendecomposition residual {residual:.3e} exceeds 1e-8 * {scale:.3e}"
        )));
    }
    Ok(EigPair { p, p_inv, lambda })
}

/// Factorized Dirichlet solver for one geometry.
pub struct DirichletSolver {
    geom: Geometry,
    /// Physical Lobatto nodes, decreasing: `xs[0] = H`, `ys[0] = 1`.
    xs: Vec<f64>,
    ys: Vec<f64>,
    d2x: DMatrix<f64>,
    d2y: DMatrix<f64>,
    ex: EigPair,
    ey: EigPair,
}

impl DirichletSolver {
    pub fn new(geom: Geometry) -> Result<Self> {
        let (k, l, h) = (geom.k(), geom.l(), geom.h());
        let xs: Vec<f64> = cheb::lobatto_points(k).iter().map(|&x| h * x).collect();
        let ys = cheb::lobatto_points(l);
        let d2x = second_diff_matrix(k, h);
        let d2y = second_diff_matrix(l, 1.0);
        let ex = real_eig(&d2x.view((1, 1), (k - 1, k - 1)).into_owned())?;
        let ey = real_eig(&d2y.view((1, 1), (l - 1, l - 1)).into_owned())?;
        Ok(Self { geom, xs, ys, d2x, d2y, ex, ey })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    /// Grid values of the boundary frame implied by a trace, with corner
    /// entries averaged between the two adjacent sides.
    fn boundary_frame(&self, trace: &BoundaryTrace) -> Result<DMatrix<f64>> {
        let (k, l, h) = (self.geom.k(), self.geom.l(), self.geom.h());
        let mut v = DMatrix::zeros(k + 1, l + 1);
        for (i, &x) in self.xs.iter().enumerate() {
            let xi = x / h;
            v[(i, 0)] = cheb::eval_series(&trace.top, xi)?;
            v[(i, l)] = cheb::eval_series(&trace.bottom, xi)?;
        }
        for (j, &y) in self.ys.iter().enumerate() {
            v[(0, j)] = cheb::eval_series(&trace.right, y)?;
            v[(k, j)] = cheb::eval_series(&trace.left, y)?;
        }
        v[(0, 0)] = 0.5 * (trace.top.at_plus_one() + trace.right.at_plus_one());
        v[(k, 0)] = 0.5 * (trace.top.at_minus_one() + trace.left.at_plus_one());
        v[(0, l)] = 0.5 * (trace.bottom.at_plus_one() + trace.right.at_minus_one());
        v[(k, l)] = 0.5 * (trace.bottom.at_minus_one() + trace.left.at_minus_one());
        Ok(v)
    }

    /// Solve `laplacian(phi) = rho` with Dirichlet data `trace`.
    ///
    /// `rho` must be shaped `(K+1) x (L+1)` for this geometry and `trace`
    /// must be corner-consistent.
    pub fn solve(&self, rho: &ChebCoeffs2D, trace: &BoundaryTrace) -> Result<ChebCoeffs2D> {
        let (k, l) = (self.geom.k(), self.geom.l());
        if rho.coeffs.nrows() != k + 1 || rho.coeffs.ncols() != l + 1 {
            return Err(Error::ShapeMismatch(format!(
                "rho is {}x{}, geometry wants {}x{}",
                rho.coeffs.nrows(),
                rho.coeffs.ncols(),
                k + 1,
                l + 1
            )));
        }
        trace.check_shape(&self.geom)?;
        trace.check_corners(1e-10)?;

        let rho_grid = cheb::to_values_2d(rho)?;
        let vb = self.boundary_frame(trace)?;

        // F = rho - (D2x vb + vb D2y^T) restricted to interior nodes.
        let coupling = &self.d2x * &vb + &vb * self.d2y.transpose();
        let mut f = DMatrix::zeros(k - 1, l - 1);
        for i in 1..k {
            for j in 1..l {
                f[(i - 1, j - 1)] = rho_grid.values[(i, j)] - coupling[(i, j)];
            }
        }

        // A X + X B^T = F through the eigenbases of A and B.
        let g = &self.ex.p_inv * f * self.ey.p_inv.transpose();
        let mut y = g;
        for i in 0..k - 1 {
            for j in 0..l - 1 {
                let denom = self.ex.lambda[i] + self.ey.lambda[j];
                if denom.abs() < 1e-300 {
                    return Err(Error::SolverBreakdown("vanishing eigenvalue sum".into()));
                }
                y[(i, j)] /= denom;
            }
        }
        let x = &self.ex.p * y * self.ey.p.transpose();

        let mut v = vb;
        for i in 1..k {
            for j in 1..l {
                v[(i, j)] = x[(i - 1, j - 1)];
            }
        }
        cheb::to_coeffs_2d(&GridField2D { values: v })
    }
}

/// Outward normal derivative of a field on one side, as an expansion in
/// the side's scaled arc coordinate.
///
/// The sign convention follows the outward normal: `-d/dy` on Bottom,
/// `+d/dy` on Top, `-d/dx` on Left, `+d/dx` on Right.
pub fn normal_derivative(field: &ChebCoeffs2D, geom: &Geometry, side: SideId) -> ChebCoeffs1D {
    match side {
        SideId::Bottom | SideId::Top => {
            let d = field.diff_y();
            let nx = d.coeffs.nrows();
            let mut coeffs = vec![0.0; nx];
            for (i, c) in coeffs.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..d.coeffs.ncols() {
                    let tl = if side == SideId::Top || j % 2 == 0 { 1.0 } else { -1.0 };
                    acc += d.coeffs[(i, j)] * tl;
                }
                // Outward is -y on Bottom.
                *c = if side == SideId::Bottom { -acc } else { acc };
            }
            ChebCoeffs1D { coeffs }
        }
        SideId::Left | SideId::Right => {
            let d = field.diff_x(geom.h());
            let ny = d.coeffs.ncols();
            let mut coeffs = vec![0.0; ny];
            for (j, c) in coeffs.iter_mut().enumerate() {
                let mut acc = 0.0;
                for i in 0..d.coeffs.nrows() {
                    let tk = if side == SideId::Right || i % 2 == 0 { 1.0 } else { -1.0 };
                    acc += d.coeffs[(i, j)] * tk;
                }
                *c = if side == SideId::Left { -acc } else { acc };
            }
            ChebCoeffs1D { coeffs }
        }
    }
}

/// Outward normal derivatives of a field on all four sides.
pub fn neumann_trace(field: &ChebCoeffs2D, geom: &Geometry) -> BoundaryTrace {
    BoundaryTrace {
        bottom: normal_derivative(field, geom, SideId::Bottom),
        top: normal_derivative(field, geom, SideId::Top),
        left: normal_derivative(field, geom, SideId::Left),
        right: normal_derivative(field, geom, SideId::Right),
    }
}

/// Restriction of a field to one side, as an expansion in the side's
/// scaled arc coordinate: the transverse direction collapses to the sum
/// of coefficients, with alternating signs on the `-1` sides.
pub fn dirichlet_restriction(field: &ChebCoeffs2D, side: SideId) -> ChebCoeffs1D {
    let (nx, ny) = (field.coeffs.nrows(), field.coeffs.ncols());
    match side {
        SideId::Bottom | SideId::Top => {
            let mut coeffs = vec![0.0; nx];
            for (i, c) in coeffs.iter_mut().enumerate() {
                for j in 0..ny {
                    let tl = if side == SideId::Top || j % 2 == 0 { 1.0 } else { -1.0 };
                    *c += field.coeffs[(i, j)] * tl;
                }
            }
            ChebCoeffs1D { coeffs }
        }
        SideId::Left | SideId::Right => {
            let mut coeffs = vec![0.0; ny];
            for (j, c) in coeffs.iter_mut().enumerate() {
                for i in 0..nx {
                    let tk = if side == SideId::Right || i % 2 == 0 { 1.0 } else { -1.0 };
                    *c += field.coeffs[(i, j)] * tk;
                }
            }
            ChebCoeffs1D { coeffs }
        }
    }
}

/// All four side restrictions of a field.
pub fn dirichlet_trace(field: &ChebCoeffs2D) -> BoundaryTrace {
    BoundaryTrace {
        bottom: dirichlet_restriction(field, SideId::Bottom),
        top: dirichlet_restriction(field, SideId::Top),
        left: dirichlet_restriction(field, SideId::Left),
        right: dirichlet_restriction(field, SideId::Right),
    }
}

/// Maximum of `|laplacian(field) - rho|` over the interior Lobatto nodes,
/// computed from coefficient-space derivatives (independent of the
/// collocation matrices used by the solver).
pub fn laplacian_residual(field: &ChebCoeffs2D, rho: &ChebCoeffs2D, geom: &Geometry) -> Result<f64> {
    let (k, l, h) = (geom.k(), geom.l(), geom.h());
    let dxx = field.diff_x(h).diff_x(h);
    let dyy = field.diff_y().diff_y();
    let xi = cheb::lobatto_points(k);
    let eta = cheb::lobatto_points(l);
    let mut worst = 0.0f64;
    for &x in xi.iter().take(k).skip(1) {
        for &y in eta.iter().take(l).skip(1) {
            let lap = dxx.eval(x, y)? + dyy.eval(x, y)?;
            let r = rho.eval(x, y)?;
            worst = worst.max((lap - r).abs());
        }
    }
    Ok(worst)
}

/// Sample a closure on the tensor Lobatto grid of a geometry and return
/// its coefficient expansion.
pub fn project_function(geom: &Geometry, f: impl Fn(f64, f64) -> f64) -> Result<ChebCoeffs2D> {
    let (k, l, h) = (geom.k(), geom.l(), geom.h());
    let xs = cheb::lobatto_points(k);
    let ys = cheb::lobatto_points(l);
    let mut values = DMatrix::zeros(k + 1, l + 1);
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            values[(i, j)] = f(h * x, y);
        }
    }
    cheb::to_coeffs_2d(&GridField2D { values })
}

/// Sample a closure along one side at its Lobatto nodes and expand in the
/// scaled arc coordinate.
pub fn project_side(geom: &Geometry, side: SideId, f: impl Fn(f64, f64) -> f64) -> Result<ChebCoeffs1D> {
    let a = geom.half_length(side);
    let vals: Vec<f64> = cheb::lobatto_points(geom.side_degree(side))
        .iter()
        .map(|&t| {
            let (x, y) = geom.side_point(side, a * t);
            f(x, y)
        })
        .collect();
    cheb::to_coeffs(&vals)
}
