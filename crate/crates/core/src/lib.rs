//! Spectral solver for Poisson problems on a rectangle embedded in the
//! unbounded plane.
//!
//! The interior problem is solved by Chebyshev collocation on a tensor
//! Lobatto grid.  The exterior harmonic continuation is represented by
//! single-layer potentials supported on the four sides of the rectangle,
//! whose densities are known in closed form (weighted Chebyshev
//! polynomials).  Dirichlet continuity holds by construction; continuity
//! of the normal derivative is enforced at a set of boundary collocation
//! points through a regularized influence-matrix solve.
//!
//! Module layout:
//! - [`cheb`]: Chebyshev nodes, transforms, evaluation, differentiation.
//! - [`geometry`]: rectangle geometry, side identifiers, boundary traces.
//! - [`quad`]: adaptive Gauss-Kronrod quadrature.
//! - [`interior`]: Dirichlet Poisson solver on the rectangle.
//! - [`exterior`]: single-layer basis fields and their boundary data.
//! - [`influence`]: influence-matrix assembly and the coupled solve.
//! - [`bench`]: electrostatic benchmark sources, analytic references,
//!   convergence and conditioning studies.

pub mod bench;
pub mod cheb;
mod error;
pub mod exterior;
pub mod geometry;
pub mod influence;
pub mod interior;
pub mod quad;

pub use error::Error;

pub use geometry::{BoundaryTrace, Geometry, SideId};
pub use influence::{CollocationMode, HomogeneousCoefficients, InfluenceSystem};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
