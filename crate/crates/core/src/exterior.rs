//! Exterior harmonic basis fields: single-layer potentials supported on
//! the rectangle sides.
//!
//! A mode-`k` density on a segment of half-length `a` is
//!
//! ```text
//! sigma_k(s) = A_k T_k(s/a) / (pi a sqrt(1 - (s/a)^2)),   |s| < a,
//! A_k = 2 pi k (k > 0),   A_0 = -2 pi / ln(a/2),
//! ```
//!
//! chosen so the potential restricted to the generating segment is
//! exactly `T_k(s/a)`.  Off the segment the potential and its derivatives
//! are evaluated by adaptive quadrature after the substitution
//! `s = a cos(theta)`, which absorbs the inverse-square-root weight:
//! `sigma ds = -(A_k/pi) cos(k theta) d theta`.
//!
//! `A_0` is undefined for `a = 2`; geometries constructed with the
//! degenerate opt-in substitute a unit amplitude there.

use crate::cheb::{self, ChebCoeffs1D};
use crate::geometry::{BoundaryTrace, Geometry, SideId};
use crate::quad;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

const PI: f64 = std::f64::consts::PI;

/// Amplitude `A_k` giving a unit Chebyshev trace on the generating
/// segment of half-length `a`.
pub fn density_amplitude(k: usize, a: f64) -> Result<f64> {
    if k > 0 {
        return Ok(2.0 * PI * k as f64);
    }
    let log_half = (a / 2.0).ln();
    if log_half == 0.0 {
        return Err(Error::DegenerateSegment);
    }
    Ok(-2.0 * PI / log_half)
}

/// One single-layer density: mode `k` on a rectangle side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideDensity {
    pub side: SideId,
    pub mode: usize,
    half_length: f64,
    amplitude: f64,
}

impl SideDensity {
    pub fn new(geom: &Geometry, side: SideId, mode: usize) -> Result<Self> {
        let a = geom.half_length(side);
        let amplitude = match density_amplitude(mode, a) {
            Ok(amp) => {
                if mode == 0 && (a / 2.0).ln().abs() < 0.05 {
                    log::warn!(
                        "side {} half-length {a} is near the degenerate value 2; \
                         constant-mode amplitude {amp:.3e} is poorly conditioned",
                        side.name()
                    );
                }
                amp
            }
            Err(Error::DegenerateSegment) if geom.degenerate_ok() => {
                log::warn!(
                    "side {} has the degenerate half-length 2; substituting a \
                     unit-amplitude constant mode",
                    side.name()
                );
                1.0
            }
            Err(e) => return Err(e),
        };
        Ok(Self { side, mode, half_length: a, amplitude })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Arc coordinate `t` along the generating segment and signed
    /// perpendicular offset `dp` of a physical point, in the segment frame.
    fn segment_frame(&self, geom: &Geometry, p: (f64, f64)) -> (f64, f64) {
        match self.side {
            SideId::Bottom => (p.0, p.1 + 1.0),
            SideId::Top => (p.0, p.1 - 1.0),
            SideId::Left => (p.1, p.0 + geom.h()),
            SideId::Right => (p.1, p.0 - geom.h()),
        }
    }
}

/// Density value at arc coordinate `s`; the open segment `|s| < a` only,
/// since the endpoints carry the inverse-square-root divergence.
pub fn density_value(d: &SideDensity, s: f64) -> Result<f64> {
    let a = d.half_length;
    let u = s / a;
    if !(u.abs() < 1.0) {
        return Err(Error::OutOfDomain(format!(
            "density evaluated at |s| = {} >= half-length {a}",
            s.abs()
        )));
    }
    let tk = (d.mode as f64 * u.acos()).cos();
    Ok(d.amplitude * tk / (PI * a * (1.0 - u * u).sqrt()))
}

/// Tangential separation `t - a cos(theta)` in a cancellation-free form:
/// near `theta = 0` the half-angle identity isolates the small quantity
/// `1 - cos(theta)`, so corner evaluations (`t = +-a`) stay exact down to
/// vanishing panel sizes instead of rounding to zero.
fn tangential_separation(t: f64, a: f64, theta: f64) -> f64 {
    if theta <= 0.5 * PI {
        let s = (0.5 * theta).sin();
        (t - a) + 2.0 * a * s * s
    } else {
        let c = (0.5 * theta).cos();
        (t + a) - 2.0 * a * c * c
    }
}

/// Initial quadrature partition of `[0, pi]` for a kernel whose nearest
/// approach to the segment is at arc position `t`, offset `dp`.
fn theta_breakpoints(t: f64, dp: f64, a: f64) -> Vec<f64> {
    if t.abs() < a {
        let theta0 = (t / a).acos();
        if theta0 > 1e-9 && theta0 < PI - 1e-9 {
            return vec![0.0, theta0, PI];
        }
        return vec![0.0, PI];
    }
    // Nearest approach at an endpoint: theta = 0 for t >= a, pi for
    // t <= -a.  Grade panels geometrically toward it when close; the
    // theta-scale of the feature is sqrt(2 d / a).
    let end_dist = ((t.abs() - a).hypot(dp)) / a;
    if end_dist < 0.05 {
        let smallest = (2.0 * end_dist.max(1e-26)).sqrt().min(0.1) * 0.5;
        quad::graded_breakpoints(0.0, PI, t < 0.0, smallest)
    } else {
        vec![0.0, PI]
    }
}

/// Potential of the density at any point of the plane.
///
/// On the open generating segment the value is analytic: `T_k(t/a)`.
/// Everywhere else a quadrature with absolute tolerance `tol` is used.
pub fn single_layer_value(d: &SideDensity, geom: &Geometry, p: (f64, f64), tol: f64) -> Result<f64> {
    let a = d.half_length;
    let (t, dp) = d.segment_frame(geom, p);
    if dp == 0.0 && t.abs() < a {
        return Ok((d.mode as f64 * (t / a).acos()).cos());
    }
    let pref = -d.amplitude / (2.0 * PI * PI);
    let k = d.mode as f64;
    let pts = theta_breakpoints(t, dp, a);
    let r = quad::integrate_with_breakpoints(
        |theta| {
            let ds = tangential_separation(t, a, theta);
            let r2 = ds * ds + dp * dp;
            pref * 0.5 * r2.ln() * (k * theta).cos()
        },
        &pts,
        tol,
    )?;
    Ok(r.value)
}

/// Outward normal derivative of the potential on a rectangle side, at arc
/// coordinate `s` of `eval_side`.
///
/// On the generating side the jump relation gives the exterior limit
/// `-sigma(s)/2` exactly.  Corner points are rejected: the normal
/// derivative is unbounded at the segment endpoints.
pub fn single_layer_normal_derivative(
    d: &SideDensity,
    geom: &Geometry,
    eval_side: SideId,
    s: f64,
    tol: f64,
) -> Result<f64> {
    let half = geom.half_length(eval_side);
    if !(s.abs() < half) {
        return Err(Error::OutOfDomain(format!(
            "normal derivative at |s| = {} >= side half-length {half} (corner)",
            s.abs()
        )));
    }
    if eval_side == d.side {
        return Ok(-0.5 * density_value(d, s)?);
    }
    let p = geom.side_point(eval_side, s);
    let n = eval_side.outward_normal();
    let a = d.half_length;
    let (t, dp) = d.segment_frame(geom, p);
    let pref = -d.amplitude / (2.0 * PI * PI);
    let k = d.mode as f64;
    let pts = theta_breakpoints(t, dp, a);
    // Kernel grad G . n in the segment frame: the tangential component of
    // p - x'(theta) is t - a cos(theta), the perpendicular one is dp, with
    // both frame axes aligned to the positive coordinate directions.
    let (nt, np) = match d.side {
        SideId::Bottom | SideId::Top => (n.0, n.1),
        SideId::Left | SideId::Right => (n.1, n.0),
    };
    let r = quad::integrate_with_breakpoints(
        |theta| {
            let ds = tangential_separation(t, a, theta);
            let r2 = ds * ds + dp * dp;
            pref * ((ds * nt + dp * np) / r2) * (k * theta).cos()
        },
        &pts,
        tol,
    )?;
    Ok(r.value)
}

/// One exterior basis field with its boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorBasisEntry {
    pub generator: SideDensity,
    /// Dirichlet trace on all four sides; exactly `T_k` on the
    /// generating side.
    pub trace: BoundaryTrace,
    /// Outward-normal-derivative expansions, indexed by `SideId::index`.
    /// Built from interior Gauss samples: corner values of the underlying
    /// function diverge and are never sampled.
    pub neumann: [ChebCoeffs1D; 4],
    pub quad_tol: f64,
}

impl ExteriorBasisEntry {
    /// The Neumann expansions repackaged per side.
    pub fn neumann_trace(&self) -> BoundaryTrace {
        BoundaryTrace {
            bottom: self.neumann[SideId::Bottom.index()].clone(),
            top: self.neumann[SideId::Top.index()].clone(),
            left: self.neumann[SideId::Left.index()].clone(),
            right: self.neumann[SideId::Right.index()].clone(),
        }
    }
}

/// Build the basis entry for mode `k` on `side`: its trace expansions on
/// all sides and its Neumann expansions from interior Gauss samples.
pub fn build_basis_entry(geom: &Geometry, side: SideId, k: usize, tol: f64) -> Result<ExteriorBasisEntry> {
    if k >= geom.side_degree(side) {
        return Err(Error::ShapeMismatch(format!(
            "mode {k} exceeds the degree budget {} of side {}",
            geom.side_degree(side) - 1,
            side.name()
        )));
    }
    let gen = SideDensity::new(geom, side, k)?;
    let mut trace = BoundaryTrace::zeros(geom);
    for s in SideId::ALL {
        let deg = geom.side_degree(s);
        if s == side {
            *trace.side_mut(s) = ChebCoeffs1D::unit(deg + 1, k);
            continue;
        }
        let a = geom.half_length(s);
        let vals = cheb::lobatto_points(deg)
            .iter()
            .map(|&xi| single_layer_value(&gen, geom, geom.side_point(s, a * xi), tol))
            .collect::<Result<Vec<f64>>>()?;
        *trace.side_mut(s) = cheb::to_coeffs(&vals)?;
    }
    let mut neumann: [ChebCoeffs1D; 4] = std::array::from_fn(|_| ChebCoeffs1D::zeros(1));
    for s in SideId::ALL {
        let deg = geom.side_degree(s);
        let a = geom.half_length(s);
        let vals = cheb::gauss_points(deg + 1)
            .iter()
            .map(|&xi| single_layer_normal_derivative(&gen, geom, s, a * xi, tol))
            .collect::<Result<Vec<f64>>>()?;
        neumann[s.index()] = cheb::gauss_to_coeffs(&vals)?;
    }
    let finite = SideId::ALL
        .iter()
        .all(|&s| trace.side(s).coeffs.iter().all(|c| c.is_finite()))
        && neumann.iter().all(|c| c.coeffs.iter().all(|v| v.is_finite()));
    if !finite {
        return Err(Error::SolverBreakdown("non-finite basis entry data".into()));
    }
    Ok(ExteriorBasisEntry { generator: gen, trace, neumann, quad_tol: tol })
}
