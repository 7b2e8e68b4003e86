//! Basis cache files.
//!
//! Building the exterior basis is the expensive step: every trace and
//! Neumann expansion is an adaptive quadrature.  The cache stores those
//! expansions together with the assembled influence matrix and its
//! singular values in one JSON document (schema "v1", flat row-major
//! arrays with their dimensions alongside).  Loading re-runs only the
//! cheap assembly from the cached expansions and cross-checks the result
//! against the stored matrix, so a stale or hand-edited cache is caught
//! instead of silently trusted.

use std::path::Path;

use anyhow::{bail, Context, Result};
use influxion::exterior::ExteriorBasisEntry;
use influxion::influence::{self, CollocationMode, InfluenceSystem};
use influxion::interior::DirichletSolver;
use influxion::Geometry;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "v1";

/// Relative slack for the stored-vs-reassembled matrix comparison.  The
/// pipeline is deterministic, so same-machine reloads are bit-equal; the
/// slack only tolerates cross-build rounding differences.
const MATRIX_TOL: f64 = 1e-12;

/// A dense matrix as stored on disk: row-major data with its dimensions.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub built_at: String,
    pub version: String,
}

/// The cache document.  Header fields identify the build request; the
/// payload carries the basis expansions and the factorization summary.
#[derive(Debug, Serialize, Deserialize)]
pub struct BasisCache {
    pub schema: String,
    pub h: f64,
    pub k: usize,
    pub l: usize,
    pub collocation: String,
    pub quad_tol: f64,
    pub dropped_rank: usize,
    pub condition_number: f64,
    /// Descending, as factorized.
    pub singular_values: Vec<f64>,
    pub matrix: MatrixDoc,
    pub basis: Vec<ExteriorBasisEntry>,
    pub provenance: Provenance,
}

pub fn mode_name(mode: CollocationMode) -> &'static str {
    match mode {
        CollocationMode::Lobatto => "lobatto",
        CollocationMode::Gauss => "gauss",
    }
}

pub fn mode_from_name(name: &str) -> Result<CollocationMode> {
    match name {
        "lobatto" => Ok(CollocationMode::Lobatto),
        "gauss" => Ok(CollocationMode::Gauss),
        other => bail!("unknown collocation mode {other:?}"),
    }
}

pub fn from_system(sys: &InfluenceSystem, basis: Vec<ExteriorBasisEntry>) -> BasisCache {
    let geom = sys.geometry();
    BasisCache {
        schema: SCHEMA.into(),
        h: geom.h(),
        k: geom.k(),
        l: geom.l(),
        collocation: mode_name(sys.mode()).into(),
        quad_tol: sys.quad_tol(),
        dropped_rank: sys.dropped_rank(),
        condition_number: sys.condition_number(),
        singular_values: sys.singular_values().iter().copied().collect(),
        matrix: MatrixDoc::from_matrix(sys.matrix()),
        basis,
        provenance: Provenance {
            built_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            version: env!("CARGO_PKG_VERSION").into(),
        },
    }
}

pub fn save(doc: &BasisCache, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec(doc).context("serializing the cache")?;
    bytes.push(b'\n');
    crate::io::atomic_write(path, &bytes)
}

pub fn load(path: &Path) -> Result<BasisCache> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading cache {}", path.display()))?;
    let doc: BasisCache = serde_json::from_str(&text)
        .with_context(|| format!("parsing cache {}", path.display()))?;
    if doc.schema != SCHEMA {
        bail!(
            "cache {} has schema {:?}, this build reads {:?}; rebuild it with precompute",
            path.display(),
            doc.schema,
            SCHEMA
        );
    }
    Ok(doc)
}

/// True when the cached header answers exactly this build request.  A
/// `None` rank accepts whatever the cache holds.
pub fn matches_request(
    doc: &BasisCache,
    h: f64,
    k: usize,
    l: usize,
    mode: CollocationMode,
    quad_tol: f64,
    dropped_rank: Option<usize>,
) -> bool {
    doc.h == h
        && doc.k == k
        && doc.l == l
        && doc.collocation == mode_name(mode)
        && doc.quad_tol == quad_tol
        && dropped_rank.map_or(true, |r| doc.dropped_rank == r)
}

/// Rebuild a working solver stack from a cache document.
///
/// Assembly from the cached expansions costs a few interior solves and
/// one factorization; the quadrature that built the expansions is not
/// repeated.  The reassembled matrix must match the stored one, and the
/// re-derived condition number is checked against the stored value.
pub fn reassemble(doc: &BasisCache) -> Result<(Geometry, DirichletSolver, InfluenceSystem)> {
    let geom = Geometry::new(doc.h, doc.k, doc.l)
        .with_context(|| format!("cache declares geometry H={} K={} L={}", doc.h, doc.k, doc.l))?;
    let mode = mode_from_name(&doc.collocation)?;
    let solver = DirichletSolver::new(geom).context("interior solver from cached geometry")?;
    let mut sys = influence::assemble(&solver, &doc.basis, mode)
        .context("assembling the influence matrix from the cached basis")?;
    if sys.dropped_rank() != doc.dropped_rank {
        sys.set_dropped_rank(doc.dropped_rank)
            .context("applying the cached dropped rank")?;
    }

    let m = sys.matrix();
    if m.nrows() != doc.matrix.rows || m.ncols() != doc.matrix.cols {
        bail!(
            "cached matrix is {}x{}, the cached basis assembles to {}x{}",
            doc.matrix.rows,
            doc.matrix.cols,
            m.nrows(),
            m.ncols()
        );
    }
    let mut scale = 0.0f64;
    let mut diff = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let stored = doc.matrix.data[i * doc.matrix.cols + j];
            scale = scale.max(stored.abs());
            diff = diff.max((stored - m[(i, j)]).abs());
        }
    }
    if diff > MATRIX_TOL * scale.max(f64::MIN_POSITIVE) {
        bail!(
            "cached influence matrix deviates from the reassembled one by {diff:.3e} \
             (scale {scale:.3e}); the cache does not belong to its own basis payload"
        );
    }
    let cond = sys.condition_number();
    if cond.to_bits() != doc.condition_number.to_bits() {
        log::warn!(
            "cache condition number {} differs from the re-derived {} in the last bits; \
             the cache was likely written by a different build",
            crate::io::full(doc.condition_number),
            crate::io::full(cond)
        );
    }
    Ok((geom, solver, sys))
}

#[cfg(test)]
mod tests {
    use super::*;

    // The reload path promises bit-equality for same-build caches, which
    // requires serde_json's correctly rounded float parsing (the
    // "float_roundtrip" feature).  Guard the whole chain: document round
    // trip, reassembly from the parsed basis, and the condition number.
    #[test]
    fn cache_roundtrip_is_bit_exact() {
        let geom = Geometry::new(1.0, 8, 8).unwrap();
        let solver = DirichletSolver::new(geom).unwrap();
        let basis = influence::build_basis(&geom, 1e-10).unwrap();
        let sys = influence::assemble(&solver, &basis, CollocationMode::Lobatto).unwrap();
        let doc = from_system(&sys, basis.clone());
        let json = serde_json::to_vec(&doc).unwrap();
        let parsed: BasisCache = serde_json::from_slice(&json).unwrap();

        assert_eq!(parsed.basis, basis, "basis entries must survive the JSON round trip");
        for (stored, original) in parsed.matrix.data.iter().zip(&doc.matrix.data) {
            assert_eq!(stored.to_bits(), original.to_bits());
        }

        let (_, _, resys) = reassemble(&parsed).unwrap();
        assert!(
            resys
                .matrix()
                .iter()
                .zip(sys.matrix().iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()),
            "reassembled matrix must be bit-identical to the original"
        );
        assert_eq!(
            resys.condition_number().to_bits(),
            sys.condition_number().to_bits()
        );
    }
}
