//! File plumbing shared by the subcommands: atomic replacement writes,
//! full round-trip float formatting, and the Chebyshev coefficient file
//! format.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use influxion::cheb::ChebCoeffs2D;
use nalgebra::DMatrix;

/// Format with 17 significant digits so a reader recovers the exact bits.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write through a temporary file in the target directory and rename, so
/// an existing file is either intact or fully replaced.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

/// A parsed coefficient file: geometry header plus the coefficient grid.
pub struct RhoFile {
    pub k: usize,
    pub l: usize,
    pub h: f64,
    pub coeffs: ChebCoeffs2D,
}

/// Read a Chebyshev coefficient file: a header line
/// `# cheb-coeffs K=<K> L=<L> H=<H>` followed by `K+1` CSV rows (one per
/// x-degree) of `L+1` values (one per y-degree).
pub fn read_rho(path: &Path) -> Result<RhoFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty coefficient file")?;
    let (k, l, h) = parse_rho_header(header)?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad value {v:?}")))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != l + 1 {
            bail!("coefficient row has {} values, header wants {}", row.len(), l + 1);
        }
        rows.push(row);
    }
    if rows.len() != k + 1 {
        bail!("coefficient file has {} rows, header wants {}", rows.len(), k + 1);
    }
    let coeffs = ChebCoeffs2D {
        coeffs: DMatrix::from_fn(k + 1, l + 1, |i, j| rows[i][j]),
    };
    Ok(RhoFile { k, l, h, coeffs })
}

fn parse_rho_header(header: &str) -> Result<(usize, usize, f64)> {
    let rest = header
        .trim()
        .strip_prefix("# cheb-coeffs")
        .context("coefficient file must start with \"# cheb-coeffs K=<K> L=<L> H=<H>\"")?;
    let (mut k, mut l, mut h) = (None, None, None);
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .with_context(|| format!("bad header field {field:?}"))?;
        match key {
            "K" => k = Some(value.parse::<usize>().with_context(|| format!("bad K {value:?}"))?),
            "L" => l = Some(value.parse::<usize>().with_context(|| format!("bad L {value:?}"))?),
            "H" => h = Some(value.parse::<f64>().with_context(|| format!("bad H {value:?}"))?),
            _ => bail!("unknown header field {key:?}"),
        }
    }
    match (k, l, h) {
        (Some(k), Some(l), Some(h)) => Ok((k, l, h)),
        _ => bail!("header must declare K, L, and H"),
    }
}
