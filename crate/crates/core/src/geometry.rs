//! Rectangle geometry, side identifiers, and boundary traces.
//!
//! The domain is `[-H, H] x [-1, 1]` with aspect half-width `H >= 1`.
//! Each side carries Chebyshev expansions in its scaled arc coordinate:
//! `x / H` on the horizontal sides, `y` on the vertical sides, both
//! ascending along the positive axis direction.

use crate::cheb::ChebCoeffs1D;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Rectangle `[-H, H] x [-1, 1]` with truncation degrees `K` (x) and `L` (y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    h: f64,
    k: usize,
    l: usize,
    #[serde(default)]
    degenerate_ok: bool,
}

impl Geometry {
    /// Validated constructor: `H >= 1`, `K >= L >= 2`.
    ///
    /// `H = 2` is rejected because a horizontal side of half-length 2
    /// leaves the constant-mode density amplitude undefined; use
    /// [`Geometry::new_allow_degenerate`] to opt in to the replacement
    /// amplitude.
    pub fn new(h: f64, k: usize, l: usize) -> Result<Self> {
        let g = Self::new_allow_degenerate(h, k, l)?;
        if h == 2.0 {
            return Err(Error::DegenerateSegment);
        }
        Ok(Self { degenerate_ok: false, ..g })
    }

    /// Same validation but permits `H = 2`; the exterior basis then
    /// substitutes a unit-amplitude constant mode on the horizontal sides.
    pub fn new_allow_degenerate(h: f64, k: usize, l: usize) -> Result<Self> {
        if !h.is_finite() || h < 1.0 {
            return Err(Error::InvalidGeometry(format!("H = {h}, need H >= 1")));
        }
        if l < 2 || k < l {
            return Err(Error::InvalidGeometry(format!("K = {k}, L = {l}, need K >= L >= 2")));
        }
        Ok(Self { h, k, l, degenerate_ok: true })
    }

    /// Whether the degenerate half-length-2 substitution was opted into.
    pub fn degenerate_ok(&self) -> bool {
        self.degenerate_ok
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Truncation degree along x.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Truncation degree along y.
    pub fn l(&self) -> usize {
        self.l
    }

    /// Half-length of a side's generating segment.
    pub fn half_length(&self, side: SideId) -> f64 {
        match side {
            SideId::Bottom | SideId::Top => self.h,
            SideId::Left | SideId::Right => 1.0,
        }
    }

    /// Expansion degree used on a side.
    pub fn side_degree(&self, side: SideId) -> usize {
        match side {
            SideId::Bottom | SideId::Top => self.k,
            SideId::Left | SideId::Right => self.l,
        }
    }

    /// Physical point on a side at arc coordinate `s` (measured along the
    /// positive axis direction, `|s| <= half_length`).
    pub fn side_point(&self, side: SideId, s: f64) -> (f64, f64) {
        match side {
            SideId::Bottom => (s, -1.0),
            SideId::Top => (s, 1.0),
            SideId::Left => (-self.h, s),
            SideId::Right => (self.h, s),
        }
    }

    /// True when `p` lies strictly outside the closed rectangle.
    pub fn is_exterior(&self, p: (f64, f64)) -> bool {
        p.0.abs() > self.h || p.1.abs() > 1.0
    }
}

/// The four sides of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SideId {
    Bottom,
    Top,
    Left,
    Right,
}

impl SideId {
    pub const ALL: [SideId; 4] = [SideId::Bottom, SideId::Top, SideId::Left, SideId::Right];

    /// Outward unit normal of the side.
    pub fn outward_normal(&self) -> (f64, f64) {
        match self {
            SideId::Bottom => (0.0, -1.0),
            SideId::Top => (0.0, 1.0),
            SideId::Left => (-1.0, 0.0),
            SideId::Right => (1.0, 0.0),
        }
    }

    pub fn index(&self) -> usize {
        match self {
            SideId::Bottom => 0,
            SideId::Top => 1,
            SideId::Left => 2,
            SideId::Right => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SideId::Bottom => "bottom",
            SideId::Top => "top",
            SideId::Left => "left",
            SideId::Right => "right",
        }
    }
}

/// The four rectangle corners, named by the sides that meet there.
/// Each corner stores the arc coordinates at which the two adjacent side
/// expansions must agree.
pub(crate) const CORNERS: [((SideId, f64), (SideId, f64)); 4] = [
    ((SideId::Bottom, -1.0), (SideId::Left, -1.0)),
    ((SideId::Bottom, 1.0), (SideId::Right, -1.0)),
    ((SideId::Top, -1.0), (SideId::Left, 1.0)),
    ((SideId::Top, 1.0), (SideId::Right, 1.0)),
];

/// Dirichlet data on the full boundary: one expansion per side in the
/// side's scaled arc coordinate (degree `K` horizontal, `L` vertical).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub bottom: ChebCoeffs1D,
    pub top: ChebCoeffs1D,
    pub left: ChebCoeffs1D,
    pub right: ChebCoeffs1D,
}

impl BoundaryTrace {
    pub fn new(
        bottom: ChebCoeffs1D,
        top: ChebCoeffs1D,
        left: ChebCoeffs1D,
        right: ChebCoeffs1D,
        geom: &Geometry,
    ) -> Result<Self> {
        let t = Self { bottom, top, left, right };
        t.check_shape(geom)?;
        Ok(t)
    }

    pub fn zeros(geom: &Geometry) -> Self {
        Self {
            bottom: ChebCoeffs1D::zeros(geom.k() + 1),
            top: ChebCoeffs1D::zeros(geom.k() + 1),
            left: ChebCoeffs1D::zeros(geom.l() + 1),
            right: ChebCoeffs1D::zeros(geom.l() + 1),
        }
    }

    pub fn check_shape(&self, geom: &Geometry) -> Result<()> {
        for side in SideId::ALL {
            let want = geom.side_degree(side) + 1;
            let got = self.side(side).len();
            if got != want {
                return Err(Error::ShapeMismatch(format!(
                    "{} trace has {got} coefficients, geometry wants {want}",
                    side.name()
                )));
            }
        }
        Ok(())
    }

    pub fn side(&self, side: SideId) -> &ChebCoeffs1D {
        match side {
            SideId::Bottom => &self.bottom,
            SideId::Top => &self.top,
            SideId::Left => &self.left,
            SideId::Right => &self.right,
        }
    }

    pub fn side_mut(&mut self, side: SideId) -> &mut ChebCoeffs1D {
        match side {
            SideId::Bottom => &mut self.bottom,
            SideId::Top => &mut self.top,
            SideId::Left => &mut self.left,
            SideId::Right => &mut self.right,
        }
    }

    /// Value of one side's expansion at scaled arc coordinate `xi`.
    fn side_end(&self, side: SideId, xi: f64) -> f64 {
        let c = self.side(side);
        if xi >= 0.0 { c.at_plus_one() } else { c.at_minus_one() }
    }

    /// Largest disagreement between adjacent side expansions over the four
    /// corners.
    pub fn corner_gap(&self) -> f64 {
        CORNERS
            .iter()
            .map(|&((sa, xa), (sb, xb))| (self.side_end(sa, xa) - self.side_end(sb, xb)).abs())
            .fold(0.0, f64::max)
    }

    /// Enforce the corner-consistency contract (default tolerance 1e-10
    /// on the boundary-data scale).
    pub fn check_corners(&self, tol: f64) -> Result<()> {
        let scale = self.infinity_scale().max(1.0);
        let gap = self.corner_gap();
        if gap > tol * scale {
            return Err(Error::CornerMismatch { gap, tol: tol * scale });
        }
        Ok(())
    }

    /// Crude magnitude scale of the data: largest coefficient sum.
    fn infinity_scale(&self) -> f64 {
        SideId::ALL
            .iter()
            .map(|&s| self.side(s).coeffs.iter().map(|c| c.abs()).sum())
            .fold(0.0, f64::max)
    }

    /// In-place `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &BoundaryTrace) {
        self.bottom.axpy(alpha, &other.bottom);
        self.top.axpy(alpha, &other.top);
        self.left.axpy(alpha, &other.left);
        self.right.axpy(alpha, &other.right);
    }

    /// Force exact corner agreement by moving each side's endpoint values
    /// to the corner averages through a linear (`a0 + a1 xi`) correction.
    /// Each side is perturbed by at most half its corner gaps; data that
    /// is already consistent is unchanged up to roundoff.
    pub fn reconcile_corners(&mut self) {
        // Per side: target values at the xi = -1 and xi = +1 ends.
        let mut targets = [[0.0; 2]; 4];
        for &((sa, xa), (sb, xb)) in &CORNERS {
            let avg = 0.5 * (self.side_end(sa, xa) + self.side_end(sb, xb));
            targets[sa.index()][usize::from(xa > 0.0)] = avg;
            targets[sb.index()][usize::from(xb > 0.0)] = avg;
        }
        for side in SideId::ALL {
            let [lo, hi] = targets[side.index()];
            let d_minus = lo - self.side(side).at_minus_one();
            let d_plus = hi - self.side(side).at_plus_one();
            let c = &mut self.side_mut(side).coeffs;
            c[0] += 0.5 * (d_plus + d_minus);
            c[1] += 0.5 * (d_plus - d_minus);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_validation() {
        assert!(Geometry::new(1.0, 8, 8).is_ok());
        assert!(Geometry::new(3.0, 12, 8).is_ok());
        assert!(Geometry::new(0.5, 8, 8).is_err());
        assert!(Geometry::new(1.0, 4, 8).is_err(), "K < L");
        assert!(Geometry::new(1.0, 8, 1).is_err(), "L < 2");
        assert!(matches!(Geometry::new(2.0, 8, 8), Err(Error::DegenerateSegment)));
        assert!(Geometry::new_allow_degenerate(2.0, 8, 8).is_ok());
    }

    #[test]
    fn side_parameterization() {
        let g = Geometry::new(1.5, 8, 6).unwrap();
        assert_eq!(g.side_point(SideId::Bottom, 0.7), (0.7, -1.0));
        assert_eq!(g.side_point(SideId::Top, -1.2), (-1.2, 1.0));
        assert_eq!(g.side_point(SideId::Left, 0.3), (-1.5, 0.3));
        assert_eq!(g.side_point(SideId::Right, -0.9), (1.5, -0.9));
        assert_eq!(g.half_length(SideId::Top), 1.5);
        assert_eq!(g.half_length(SideId::Left), 1.0);
        assert_eq!(g.side_degree(SideId::Bottom), 8);
        assert_eq!(g.side_degree(SideId::Right), 6);
    }

    #[test]
    fn exterior_predicate_counts_boundary_as_inside() {
        let g = Geometry::new(1.5, 8, 6).unwrap();
        assert!(g.is_exterior((2.0, 0.0)));
        assert!(g.is_exterior((0.0, -1.0000001)));
        assert!(!g.is_exterior((1.5, 1.0)), "corner is on the closed rectangle");
        assert!(!g.is_exterior((0.3, 0.4)));
    }

    #[test]
    fn corner_consistency_of_compatible_trace() {
        // g(x, y) = x + y restricted to the four sides of the unit square:
        // bottom x - 1, top x + 1, left y - 1, right y + 1.
        let g = Geometry::new(1.0, 3, 3).unwrap();
        let lin = |shift: f64| {
            let mut c = ChebCoeffs1D::zeros(4);
            c.coeffs[0] = shift;
            c.coeffs[1] = 1.0;
            c
        };
        let t = BoundaryTrace::new(lin(-1.0), lin(1.0), lin(-1.0), lin(1.0), &g).unwrap();
        assert!(t.corner_gap() < 1e-15);
        assert!(t.check_corners(1e-10).is_ok());

        let mut bad = t.clone();
        bad.top.coeffs[0] += 1e-6;
        assert!(bad.check_corners(1e-10).is_err());
    }

    #[test]
    fn reconcile_closes_corner_gaps() {
        let g = Geometry::new(1.0, 3, 3).unwrap();
        let lin = |shift: f64| {
            let mut c = ChebCoeffs1D::zeros(4);
            c.coeffs[0] = shift;
            c.coeffs[1] = 1.0;
            c
        };
        let mut t = BoundaryTrace::new(lin(-1.0), lin(1.0), lin(-1.0), lin(1.0), &g).unwrap();
        t.top.coeffs[0] += 3e-7;
        t.left.coeffs[1] -= 2e-7;
        let before = t.clone();
        let gap = t.corner_gap();
        assert!(gap > 1e-7);
        t.reconcile_corners();
        assert!(t.corner_gap() < 1e-15);
        // The correction never moves a side by more than its corner gaps.
        for side in SideId::ALL {
            for xi in [-1.0, -0.3, 0.5, 1.0] {
                let moved = (t.side(side).eval(xi).unwrap() - before.side(side).eval(xi).unwrap()).abs();
                assert!(moved <= gap, "side {} moved {moved} with gap {gap}", side.name());
            }
        }
        // Already-consistent data is a fixed point.
        let mut clean = BoundaryTrace::new(lin(-1.0), lin(1.0), lin(-1.0), lin(1.0), &g).unwrap();
        clean.reconcile_corners();
        for side in SideId::ALL {
            for (a, b) in clean.side(side).coeffs.iter().zip(&lin(if matches!(side, SideId::Top | SideId::Right) { 1.0 } else { -1.0 }).coeffs) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
