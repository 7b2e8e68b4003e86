//! Chebyshev nodes, discrete transforms, series evaluation, and
//! differentiation.
//!
//! All expansions use the reference interval `[-1, 1]`.  A function on a
//! physical interval `[-a, a]` is represented through the scaled argument
//! `xi = x / a`; operations that depend on the physical length take the
//! half-length `a` explicitly.
//!
//! Grid convention: `lobatto_points(n)` and `gauss_points(n)` are listed
//! in decreasing order (`cos` of increasing angles), so index 0 is the
//! right endpoint side.

use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Coefficients `a_k` of a Chebyshev series `sum_k a_k T_k(xi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebCoeffs1D {
    pub coeffs: Vec<f64>,
}

/// Tensor-product coefficients `a_{kl}` of `sum_{kl} a_{kl} T_k(x/H) T_l(y)`.
///
/// Row index is the x-degree `k`, column index the y-degree `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebCoeffs2D {
    pub coeffs: DMatrix<f64>,
}

/// Values on the tensor Lobatto grid.
///
/// `values[(i, j)]` lives at `(x_i, y_j)` with `x_i = H cos(pi i / K)` and
/// `y_j = cos(pi j / L)`, both decreasing in their index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField2D {
    pub values: DMatrix<f64>,
}

/// `cos(pi * num / den)` with the symmetries of the exact value: the
/// result is computed as a sine of a reduced angle in `[-pi/2, pi/2]`, so
/// antisymmetric pairs cancel exactly and the midpoint is exactly zero.
pub(crate) fn cos_pi_frac(num: i64, den: i64) -> f64 {
    debug_assert!(den > 0);
    let m = num.rem_euclid(2 * den);
    let (sign, m) = if m > den { (1.0, 2 * den - m) } else { (1.0, m) };
    sign * (((den - 2 * m) as f64) * std::f64::consts::PI / ((2 * den) as f64)).sin()
}

/// Gauss-Lobatto nodes `cos(pi j / n)`, `j = 0..=n`, strictly decreasing.
pub fn lobatto_points(n: usize) -> Vec<f64> {
    assert!(n >= 1, "need at least two Lobatto points");
    (0..=n as i64).map(|j| cos_pi_frac(j, n as i64)).collect()
}

/// Gauss nodes `cos(pi (2j+1) / (2n))`, `j = 0..n` (roots of `T_n`),
/// strictly decreasing.  These avoid the interval endpoints.
pub fn gauss_points(n: usize) -> Vec<f64> {
    assert!(n >= 1, "need at least one Gauss point");
    (0..n as i64).map(|j| cos_pi_frac(2 * j + 1, 2 * n as i64)).collect()
}

/// Discrete Chebyshev transform of values sampled at `lobatto_points(n)`
/// (length `n + 1`).  Exact for polynomials of degree `<= n`.
pub fn to_coeffs(values: &[f64]) -> Result<ChebCoeffs1D> {
    let n = values.len().checked_sub(1).filter(|&n| n >= 1).ok_or_else(|| {
        Error::ShapeMismatch(format!("need >= 2 samples, got {}", values.len()))
    })?;
    let ni = n as i64;
    let mut coeffs = vec![0.0; n + 1];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &v) in values.iter().enumerate() {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            acc += w * v * cos_pi_frac((j * k) as i64, ni);
        }
        let ck = if k == 0 || k == n { 2.0 } else { 1.0 };
        *c = 2.0 * acc / (ck * n as f64);
    }
    Ok(ChebCoeffs1D { coeffs })
}

/// Inverse transform: series values at `lobatto_points(n)`.
pub fn to_values(coeffs: &ChebCoeffs1D) -> Result<Vec<f64>> {
    let n = coeffs.coeffs.len().checked_sub(1).filter(|&n| n >= 1).ok_or_else(|| {
        Error::ShapeMismatch(format!("need >= 2 coefficients, got {}", coeffs.coeffs.len()))
    })?;
    let ni = n as i64;
    Ok((0..=n)
        .map(|j| {
            coeffs
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &a)| a * cos_pi_frac((j * k) as i64, ni))
                .sum()
        })
        .collect())
}

/// Transform of values sampled at `gauss_points(n + 1)` (length `n + 1`)
/// into a degree-`n` expansion.  Exact for polynomials of degree `<= n`.
///
/// Used where samples must stay clear of the interval endpoints.
pub fn gauss_to_coeffs(values: &[f64]) -> Result<ChebCoeffs1D> {
    let m = values.len();
    if m < 2 {
        return Err(Error::ShapeMismatch(format!("need >= 2 samples, got {m}")));
    }
    let den = 2 * m as i64;
    let mut coeffs = vec![0.0; m];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &v) in values.iter().enumerate() {
            acc += v * cos_pi_frac(k as i64 * (2 * j as i64 + 1), den);
        }
        let norm = if k == 0 { 1.0 } else { 2.0 };
        *c = norm * acc / m as f64;
    }
    Ok(ChebCoeffs1D { coeffs })
}

/// Clenshaw evaluation of the series at `xi`.
///
/// `xi` must satisfy `|xi| <= 1 + 1e-12`; values outside are a domain
/// error rather than an extrapolation.
pub fn eval_series(coeffs: &ChebCoeffs1D, xi: f64) -> Result<f64> {
    if !(xi.abs() <= 1.0 + 1e-12) {
        return Err(Error::OutOfDomain(format!("series argument {xi} outside [-1, 1]")));
    }
    Ok(eval_series_unchecked(&coeffs.coeffs, xi))
}

pub(crate) fn eval_series_unchecked(coeffs: &[f64], xi: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &a in coeffs.iter().skip(1).rev() {
        let b = a + 2.0 * xi * b1 - b2;
        b2 = b1;
        b1 = b;
    }
    coeffs.first().copied().unwrap_or(0.0) + xi * b1 - b2
}

/// Coefficients of the derivative with respect to the physical coordinate
/// `x = scale * xi`.  The output has one coefficient fewer (a constant
/// maps to the zero series of length 1).
pub fn diff_coeffs(coeffs: &ChebCoeffs1D, scale: f64) -> ChebCoeffs1D {
    ChebCoeffs1D { coeffs: diff_vec(&coeffs.coeffs, scale) }
}

pub(crate) fn diff_vec(a: &[f64], scale: f64) -> Vec<f64> {
    let n = a.len().saturating_sub(1);
    if n == 0 {
        return vec![0.0];
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 2.0 * n as f64 * a[n];
    if n >= 2 {
        b[n - 2] = 2.0 * (n as f64 - 1.0) * a[n - 1];
    }
    for k in (0..n.saturating_sub(2)).rev() {
        b[k] = b[k + 2] + 2.0 * (k as f64 + 1.0) * a[k + 1];
    }
    b[0] *= 0.5;
    for c in &mut b {
        *c /= scale;
    }
    b
}

impl ChebCoeffs1D {
    pub fn zeros(len: usize) -> Self {
        Self { coeffs: vec![0.0; len] }
    }

    /// Unit coefficient on `T_k`, all others zero.
    pub fn unit(len: usize, k: usize) -> Self {
        assert!(k < len);
        let mut coeffs = vec![0.0; len];
        coeffs[k] = 1.0;
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Series value at the scaled argument; panics only on internal misuse.
    pub fn eval(&self, xi: f64) -> Result<f64> {
        eval_series(self, xi)
    }

    /// Value at `xi = 1` (right endpoint): the plain coefficient sum.
    pub fn at_plus_one(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Value at `xi = -1` (left endpoint): the alternating sum.
    pub fn at_minus_one(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &a)| if k % 2 == 0 { a } else { -a })
            .sum()
    }

    pub fn axpy(&mut self, alpha: f64, other: &ChebCoeffs1D) {
        assert_eq!(self.len(), other.len());
        for (c, &o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += alpha * o;
        }
    }
}

impl ChebCoeffs2D {
    pub fn zeros(k: usize, l: usize) -> Self {
        Self { coeffs: DMatrix::zeros(k + 1, l + 1) }
    }

    /// Polynomial degree in x.
    pub fn deg_x(&self) -> usize {
        self.coeffs.nrows() - 1
    }

    /// Polynomial degree in y.
    pub fn deg_y(&self) -> usize {
        self.coeffs.ncols() - 1
    }

    /// Value at scaled arguments `(xi, eta)`, both in `[-1, 1]`.
    pub fn eval(&self, xi: f64, eta: f64) -> Result<f64> {
        if !(xi.abs() <= 1.0 + 1e-12) || !(eta.abs() <= 1.0 + 1e-12) {
            return Err(Error::OutOfDomain(format!("series argument ({xi}, {eta}) outside the square")));
        }
        // Collapse the y-direction first, then one Clenshaw pass in x.
        let (nx, ny) = (self.coeffs.nrows(), self.coeffs.ncols());
        let mut row = vec![0.0; nx];
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = self.coeffs[(i, j)];
            }
            row[i] = eval_series_unchecked(&col, eta);
        }
        Ok(eval_series_unchecked(&row, xi))
    }

    /// Coefficients of the x-derivative scaled by the half-length of the
    /// x-interval; the x-degree drops by one.
    pub fn diff_x(&self, scale: f64) -> ChebCoeffs2D {
        let (nx, ny) = (self.coeffs.nrows(), self.coeffs.ncols());
        let out_rows = (nx - 1).max(1);
        let mut out = DMatrix::zeros(out_rows, ny);
        let mut col = vec![0.0; nx];
        for j in 0..ny {
            for i in 0..nx {
                col[i] = self.coeffs[(i, j)];
            }
            for (i, v) in diff_vec(&col, scale).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        ChebCoeffs2D { coeffs: out }
    }

    /// Coefficients of the y-derivative; the y-degree drops by one.
    pub fn diff_y(&self) -> ChebCoeffs2D {
        let (nx, ny) = (self.coeffs.nrows(), self.coeffs.ncols());
        let out_cols = (ny - 1).max(1);
        let mut out = DMatrix::zeros(nx, out_cols);
        let mut row = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                row[j] = self.coeffs[(i, j)];
            }
            for (j, v) in diff_vec(&row, 1.0).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        ChebCoeffs2D { coeffs: out }
    }
}

/// 2D transform: tensor Lobatto grid values to coefficients, one discrete
/// transform per direction.
pub fn to_coeffs_2d(field: &GridField2D) -> Result<ChebCoeffs2D> {
    let (nx, ny) = (field.values.nrows(), field.values.ncols());
    if nx < 2 || ny < 2 {
        return Err(Error::ShapeMismatch(format!("grid {nx}x{ny} too small")));
    }
    let mut half = DMatrix::zeros(nx, ny);
    let mut col = vec![0.0; nx];
    for j in 0..ny {
        for i in 0..nx {
            col[i] = field.values[(i, j)];
        }
        for (i, v) in to_coeffs(&col)?.coeffs.into_iter().enumerate() {
            half[(i, j)] = v;
        }
    }
    let mut out = DMatrix::zeros(nx, ny);
    let mut row = vec![0.0; ny];
    for i in 0..nx {
        for j in 0..ny {
            row[j] = half[(i, j)];
        }
        for (j, v) in to_coeffs(&row)?.coeffs.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(ChebCoeffs2D { coeffs: out })
}

/// Inverse 2D transform: coefficients to tensor Lobatto grid values.
pub fn to_values_2d(coeffs: &ChebCoeffs2D) -> Result<GridField2D> {
    let (nx, ny) = (coeffs.coeffs.nrows(), coeffs.coeffs.ncols());
    if nx < 2 || ny < 2 {
        return Err(Error::ShapeMismatch(format!("coefficient block {nx}x{ny} too small")));
    }
    let mut half = DMatrix::zeros(nx, ny);
    let mut row = ChebCoeffs1D::zeros(ny);
    for i in 0..nx {
        for j in 0..ny {
            row.coeffs[j] = coeffs.coeffs[(i, j)];
        }
        for (j, v) in to_values(&row)?.into_iter().enumerate() {
            half[(i, j)] = v;
        }
    }
    let mut out = DMatrix::zeros(nx, ny);
    let mut col = ChebCoeffs1D::zeros(nx);
    for j in 0..ny {
        for i in 0..nx {
            col.coeffs[i] = half[(i, j)];
        }
        for (i, v) in to_values(&col)?.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(GridField2D { values: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn t_k(k: usize, x: f64) -> f64 {
        // Direct trigonometric form, independent of Clenshaw.
        if x.abs() <= 1.0 {
            (k as f64 * x.acos()).cos()
        } else {
            let t = x.abs().max(1.0);
            let v = (k as f64 * (t + (t * t - 1.0).sqrt()).ln()).cosh();
            if x < 0.0 && k % 2 == 1 { -v } else { v }
        }
    }

    #[test]
    fn lobatto_endpoints_and_symmetry() {
        let pts = lobatto_points(2);
        assert_eq!(pts, vec![1.0, 0.0, -1.0]);
        let pts = lobatto_points(9);
        assert_eq!(pts.len(), 10);
        assert_eq!(pts[0], 1.0);
        assert_eq!(pts[9], -1.0);
        for j in 0..=9 {
            assert_eq!(pts[j], -pts[9 - j], "antisymmetric about the midpoint");
        }
        for w in pts.windows(2) {
            assert!(w[1] < w[0], "strictly decreasing");
        }
    }

    #[test]
    fn gauss_points_interior_and_symmetric() {
        let pts = gauss_points(2);
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(pts[0], s, epsilon = 1e-15);
        assert_abs_diff_eq!(pts[1], -s, epsilon = 1e-15);
        let pts = gauss_points(7);
        assert!(pts.iter().all(|&x| x.abs() < 1.0));
        for j in 0..7 {
            assert_eq!(pts[j], -pts[6 - j]);
        }
        assert_eq!(pts[3], 0.0);
    }

    #[test]
    fn transform_of_x_squared() {
        // x^2 = (T_0 + T_2) / 2.
        let v: Vec<f64> = lobatto_points(2).iter().map(|x| x * x).collect();
        let c = to_coeffs(&v).unwrap();
        assert_abs_diff_eq!(c.coeffs[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.coeffs[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.coeffs[2], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn round_trip_random_polynomial() {
        // Degree-8 polynomial with fixed pseudo-random monomial
        // coefficients, evaluated directly by Horner as the oracle.
        let mono = [0.7, -1.3, 0.21, 0.9, -0.44, 1.7, -0.08, 0.33, -1.05];
        let horner = |x: f64| mono.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        let n = 8;
        let vals: Vec<f64> = lobatto_points(n).iter().map(|&x| horner(x)).collect();
        let c = to_coeffs(&vals).unwrap();
        let back = to_values(&c).unwrap();
        for (a, b) in vals.iter().zip(&back) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
        // The interpolant reproduces the polynomial off the grid too.
        for &x in &[-0.971, -0.5, -0.123, 0.0, 0.456, 0.8, 0.999] {
            assert_abs_diff_eq!(eval_series(&c, x).unwrap(), horner(x), epsilon = 1e-13);
        }
    }

    #[test]
    fn gauss_transform_matches_lobatto_transform() {
        let mono = [0.3, 1.1, -0.6, 0.25, 0.4, -0.9, 0.05];
        let horner = |x: f64| mono.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        let n = 6;
        let vals_g: Vec<f64> = gauss_points(n + 1).iter().map(|&x| horner(x)).collect();
        let cg = gauss_to_coeffs(&vals_g).unwrap();
        let vals_l: Vec<f64> = lobatto_points(n).iter().map(|&x| horner(x)).collect();
        let cl = to_coeffs(&vals_l).unwrap();
        for (a, b) in cg.coeffs.iter().zip(&cl.coeffs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn eval_series_against_trig_sum() {
        let coeffs = ChebCoeffs1D { coeffs: vec![0.4, -0.2, 1.3, 0.0, -0.7, 0.9] };
        for &x in &[-1.0, -0.73, -0.2, 0.11, 0.5, 0.98, 1.0] {
            let direct: f64 = coeffs
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &a)| a * t_k(k, x))
                .sum();
            assert_abs_diff_eq!(eval_series(&coeffs, x).unwrap(), direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn eval_series_rejects_far_outside() {
        let c = ChebCoeffs1D::unit(3, 2);
        assert!(eval_series(&c, 1.5).is_err());
        assert!(eval_series(&c, -1.0 - 1e-6).is_err());
        assert!(eval_series(&c, 1.0 + 1e-13).is_ok());
    }

    #[test]
    fn diff_t2_and_constant() {
        let d = diff_coeffs(&ChebCoeffs1D::unit(3, 2), 1.0);
        assert_eq!(d.coeffs, vec![0.0, 4.0]);
        let d = diff_coeffs(&ChebCoeffs1D { coeffs: vec![3.7] }, 1.0);
        assert_eq!(d.coeffs, vec![0.0]);
    }

    #[test]
    fn diff_matches_finite_differences() {
        let coeffs = ChebCoeffs1D { coeffs: vec![0.1, 0.8, -0.5, 0.3, 0.2, -0.15, 0.07] };
        let scale = 1.7;
        let d = diff_coeffs(&coeffs, scale);
        let h = 1e-6;
        for &xi in &[-0.9, -0.4, 0.0, 0.3, 0.85] {
            // Physical derivative at x = scale * xi via central differences
            // in xi: df/dx = (1/scale) df/dxi.
            let fp = eval_series(&coeffs, xi + h).unwrap();
            let fm = eval_series(&coeffs, xi - h).unwrap();
            let fd = (fp - fm) / (2.0 * h * scale);
            let an = eval_series(&d, xi).unwrap();
            assert!((fd - an).abs() / an.abs().max(1.0) < 1e-7, "fd {fd} vs analytic {an}");
        }
    }

    #[test]
    fn two_dimensional_round_trip_and_eval() {
        // f(x, y) = x^3 y - 2 x y^2 + 0.5, degree (3, 2).
        let f = |x: f64, y: f64| x.powi(3) * y - 2.0 * x * y * y + 0.5;
        let (k, l) = (5, 4);
        let xs = lobatto_points(k);
        let ys = lobatto_points(l);
        let mut values = DMatrix::zeros(k + 1, l + 1);
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                values[(i, j)] = f(x, y);
            }
        }
        let field = GridField2D { values };
        let c = to_coeffs_2d(&field).unwrap();
        let back = to_values_2d(&c).unwrap();
        for i in 0..=k {
            for j in 0..=l {
                assert_abs_diff_eq!(back.values[(i, j)], field.values[(i, j)], epsilon = 1e-13);
            }
        }
        assert_abs_diff_eq!(c.eval(0.3, -0.7).unwrap(), f(0.3, -0.7), epsilon = 1e-13);
        // Coefficients beyond the function's degree vanish.
        for i in 4..=k {
            for j in 0..=l {
                assert_abs_diff_eq!(c.coeffs[(i, j)], 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn partial_derivatives_in_coefficient_space() {
        let f = |x: f64, y: f64| x.powi(3) * y - 2.0 * x * y * y + 0.5;
        let fx = |x: f64, y: f64| 3.0 * x * x * y - 2.0 * y * y;
        let fy = |x: f64, y: f64| x.powi(3) - 4.0 * x * y;
        let h = 1.5;
        let (k, l) = (6, 5);
        let xs = lobatto_points(k);
        let ys = lobatto_points(l);
        let mut values = DMatrix::zeros(k + 1, l + 1);
        for (i, &xi) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                values[(i, j)] = f(h * xi, y);
            }
        }
        let c = to_coeffs_2d(&GridField2D { values }).unwrap();
        let dx = c.diff_x(h);
        let dy = c.diff_y();
        for &(xi, eta) in &[(0.2, 0.9), (-0.8, -0.3), (1.0, -1.0)] {
            assert_abs_diff_eq!(dx.eval(xi, eta).unwrap(), fx(h * xi, eta), epsilon = 1e-12);
            assert_abs_diff_eq!(dy.eval(xi, eta).unwrap(), fy(h * xi, eta), epsilon = 1e-12);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            // Lobatto sampling and coefficient recovery invert each other.
            #[test]
            fn lobatto_transform_round_trips(
                coeffs in proptest::collection::vec(-10.0f64..10.0, 2..24)
            ) {
                let c = ChebCoeffs1D { coeffs };
                let scale: f64 = c.coeffs.iter().map(|v| v.abs()).sum::<f64>().max(1e-30);
                let back = to_coeffs(&to_values(&c).unwrap()).unwrap();
                prop_assert_eq!(back.len(), c.len());
                for (a, b) in back.coeffs.iter().zip(&c.coeffs) {
                    prop_assert!((a - b).abs() <= 1e-12 * scale, "{} vs {}", a, b);
                }
            }

            // Interior Gauss sampling recovers the same coefficients.
            #[test]
            fn gauss_transform_round_trips(
                coeffs in proptest::collection::vec(-10.0f64..10.0, 2..24)
            ) {
                let c = ChebCoeffs1D { coeffs };
                let scale: f64 = c.coeffs.iter().map(|v| v.abs()).sum::<f64>().max(1e-30);
                let samples: Vec<f64> = gauss_points(c.len())
                    .iter()
                    .map(|&x| c.eval(x).unwrap())
                    .collect();
                let back = gauss_to_coeffs(&samples).unwrap();
                prop_assert_eq!(back.len(), c.len());
                for (a, b) in back.coeffs.iter().zip(&c.coeffs) {
                    prop_assert!((a - b).abs() <= 1e-12 * scale, "{} vs {}", a, b);
                }
            }

            // Clenshaw evaluation agrees with the plain basis sum.
            #[test]
            fn clenshaw_matches_the_direct_sum(
                coeffs in proptest::collection::vec(-10.0f64..10.0, 1..16),
                xi in -1.0f64..=1.0,
            ) {
                let c = ChebCoeffs1D { coeffs };
                let scale: f64 = c.coeffs.iter().map(|v| v.abs()).sum::<f64>().max(1e-30);
                let direct: f64 = c.coeffs.iter().enumerate().map(|(k, a)| a * t_k(k, xi)).sum();
                prop_assert!((c.eval(xi).unwrap() - direct).abs() <= 1e-12 * scale);
            }
        }
    }
}
