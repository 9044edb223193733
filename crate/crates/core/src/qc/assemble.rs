use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ring::{merge_row, ring_row};
use super::{Domain, SparseOperator};
use crate::beltrami::{CoeffField, ComplexField};
use crate::error::{Error, Result};
use crate::mls::Which;

/// How rows of the generalized Laplacian are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum M3Scheme {
    /// MLS rows in the interior, local-mesh rows on the boundary.
    #[default]
    Combined,
    /// MLS rows everywhere.
    MlsOnly,
    /// Local-mesh rows everywhere.
    LocalMeshOnly,
}

/// Relative weight of the second-order block in the hybrid operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gamma {
    Finite(f64),
    /// Second-order block alone.
    Infinite,
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::Finite(0.5)
    }
}

impl std::str::FromStr for Gamma {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Gamma::Infinite),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|g| *g >= 0.0 && g.is_finite())
                .map(Gamma::Finite)
                .ok_or_else(|| format!("gamma must be a non-negative number or 'inf', got '{s}'")),
        }
    }
}

impl std::fmt::Display for Gamma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Gamma::Finite(g) => write!(f, "{g}"),
            Gamma::Infinite => write!(f, "inf"),
        }
    }
}

fn check_len(domain: &Domain, mu: &ComplexField) -> Result<()> {
    if mu.len() != domain.len() {
        return Err(Error::DimensionMismatch {
            expected: domain.len(),
            found: mu.len(),
        });
    }
    Ok(())
}

/// First-order Beltrami system over stacked unknowns `[U; V]`.
///
/// Row `i` is `a1 u_x + a2 u_y - v_y` and row `i + N` is `a2 u_x + a3 u_y + v_x`,
/// both evaluated with the MLS derivative rows at point `i`.
pub fn assemble_m1(domain: &Domain, mu: &ComplexField) -> Result<SparseOperator> {
    check_len(domain, mu)?;
    let n = domain.len();
    let coeffs = CoeffField::from_mu(mu)?;
    type RowPair = (Vec<(usize, f64)>, Vec<(usize, f64)>);
    let rows: Vec<RowPair> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = domain.stencils().get(i);
            let dx = s.row(Which::Dx);
            let dy = s.row(Which::Dy);
            let [a1, a2, a3] = coeffs.alpha[i];
            let mut top = Vec::with_capacity(2 * s.len());
            let mut bottom = Vec::with_capacity(2 * s.len());
            for (l, &j) in s.neighbors.iter().enumerate() {
                top.push((j, a1 * dx[l] + a2 * dy[l]));
                top.push((j + n, -dy[l]));
                bottom.push((j, a2 * dx[l] + a3 * dy[l]));
                bottom.push((j + n, dx[l]));
            }
            (top, bottom)
        })
        .collect();
    let mut t = Vec::with_capacity(4 * n * domain.neighborhood().k());
    for (i, (top, bottom)) in rows.into_iter().enumerate() {
        t.extend(top.into_iter().map(|(c, v)| (i, c, v)));
        t.extend(bottom.into_iter().map(|(c, v)| (i + n, c, v)));
    }
    SparseOperator::from_triplets(2 * n, 2 * n, t)
}

/// MLS row of `div(A grad u)` at point `i`, with the coefficient derivatives
/// taken by MLS as well.
fn mls_row(domain: &Domain, alpha: &[[f64; 3]], i: usize) -> Vec<(usize, f64)> {
    let s = domain.stencils().get(i);
    let dx = s.row(Which::Dx);
    let dy = s.row(Which::Dy);
    let dxx = s.row(Which::Dxx);
    let dxy = s.row(Which::Dxy);
    let dyy = s.row(Which::Dyy);
    let d = |row: &[f64], c: usize| -> f64 {
        s.neighbors.iter().zip(row).map(|(&j, w)| w * alpha[j][c]).sum()
    };
    let cx = d(&dx, 0) + d(&dy, 1);
    let cy = d(&dx, 1) + d(&dy, 2);
    let [a1, a2, a3] = alpha[i];
    let row = s
        .neighbors
        .iter()
        .enumerate()
        .map(|(l, &j)| {
            (
                j,
                cx * dx[l] + cy * dy[l] + a1 * dxx[l] + 2.0 * a2 * dxy[l] + a3 * dyy[l],
            )
        })
        .collect();
    merge_row(row)
}

/// Generalized Laplacian `div(A(mu) grad ·)` as an `N x N` operator.
pub fn assemble_m3(domain: &Domain, mu: &ComplexField, scheme: M3Scheme) -> Result<SparseOperator> {
    check_len(domain, mu)?;
    let alpha = CoeffField::from_mu(mu)?.alpha;
    let rows = (0..domain.len())
        .into_par_iter()
        .map(|i| {
            let mesh = match scheme {
                M3Scheme::Combined => domain.is_boundary(i),
                M3Scheme::MlsOnly => false,
                M3Scheme::LocalMeshOnly => true,
            };
            if mesh {
                Ok(ring_row(domain.ring(i)?, |j| alpha[j]))
            } else {
                Ok(mls_row(domain, &alpha, i))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SparseOperator::from_rows(domain.len(), rows)
}

/// `M1 + gamma * blockdiag(M3, M3)`, unscaled. `gamma = inf` returns the
/// row-normalized second-order block alone.
///
/// Row-normalizing both blocks before summing makes the first-order and
/// second-order parts cancel on some resolved mode for gamma of order 1, and
/// the system becomes singular. Left unscaled, the second-order block
/// outweighs the first by a factor of order `1/h`, which keeps it stable.
pub fn assemble_hybrid(m1: &SparseOperator, m3: &SparseOperator, gamma: Gamma) -> Result<SparseOperator> {
    if m1.nrows() != 2 * m3.nrows() || m1.ncols() != 2 * m3.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m1.nrows(),
            found: 2 * m3.nrows(),
        });
    }
    match gamma {
        Gamma::Infinite => Ok(m3.row_normalized().block_diag2()),
        Gamma::Finite(0.0) => Ok(m1.clone()),
        Gamma::Finite(g) => {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!("gamma = {g}")));
            }
            m1.add_scaled(&m3.block_diag2(), g)
        }
    }
}
