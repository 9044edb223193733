use rayon::prelude::*;

use super::ring::{build_ring, LocalRing};
use crate::cloud::{LocalChart, Neighborhood};
use crate::error::{Error, Result};
use crate::mls::{build_stencil, StencilSet, WeightKind};

/// Everything the operator assembly needs about a cloud: neighborhoods,
/// local 2D coordinates of each neighborhood, MLS stencils, boundary flags and
/// Delaunay 1-rings.
///
/// For a planar cloud the local coordinates are plain offsets; for a surface
/// they come from per-point tangent charts.
#[derive(Debug, Clone)]
pub struct Domain {
    positions: Option<Vec<[f64; 2]>>,
    nbrs: Neighborhood,
    stencils: StencilSet,
    boundary: Vec<usize>,
    is_boundary: Vec<bool>,
    rings: Vec<Option<LocalRing>>,
}

impl Domain {
    /// Planar domain with `k` nearest neighbors per point.
    pub fn planar(points: &[[f64; 2]], boundary: Vec<usize>, k: usize, weight: WeightKind) -> Result<Self> {
        Self::planar_with(points, Neighborhood::planar(points, k)?, boundary, weight)
    }

    /// Planar domain over a given neighborhood structure, e.g. one computed
    /// on another embedding of the same points.
    pub fn planar_with(
        points: &[[f64; 2]],
        nbrs: Neighborhood,
        boundary: Vec<usize>,
        weight: WeightKind,
    ) -> Result<Self> {
        if nbrs.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: nbrs.len(),
            });
        }
        let local: Vec<Vec<[f64; 2]>> = (0..points.len())
            .map(|i| {
                let p = points[i];
                nbrs.neighbors(i)
                    .iter()
                    .map(|&j| [points[j][0] - p[0], points[j][1] - p[1]])
                    .collect()
            })
            .collect();
        let mut d = Self::from_local(nbrs, &local, boundary, weight)?;
        d.positions = Some(points.to_vec());
        Ok(d)
    }

    /// Surface domain whose local coordinates are the tangent-chart projections.
    pub fn from_charts(
        charts: &[LocalChart],
        nbrs: Neighborhood,
        boundary: Vec<usize>,
        weight: WeightKind,
    ) -> Result<Self> {
        let local: Vec<Vec<[f64; 2]>> = charts.iter().map(|c| c.coords.clone()).collect();
        Self::from_local(nbrs, &local, boundary, weight)
    }

    fn from_local(
        nbrs: Neighborhood,
        local: &[Vec<[f64; 2]>],
        boundary: Vec<usize>,
        weight: WeightKind,
    ) -> Result<Self> {
        let n = nbrs.len();
        let mut is_boundary = vec![false; n];
        for &b in &boundary {
            if b >= n {
                return Err(Error::InvalidCloud(format!("boundary index {b} out of range")));
            }
            is_boundary[b] = true;
        }
        let stencils = (0..n)
            .into_par_iter()
            .map(|i| build_stencil(i, nbrs.neighbors(i), &local[i], weight))
            .collect::<Result<Vec<_>>>()?;
        let mut rings: Vec<Option<LocalRing>> = (0..n)
            .into_par_iter()
            .map(|i| build_ring(i, nbrs.neighbors(i), &local[i]).ok())
            .collect();
        let m = boundary.len();
        for (pos, &b) in boundary.iter().enumerate() {
            let Some(ring) = &rings[b] else { continue };
            let nb = nbrs.neighbors(b);
            // Nearest cycle neighbor on each side that is also a k-neighbor.
            let find = |step: usize| {
                (1..m.min(8))
                    .map(|s| boundary[(pos + step * s) % m])
                    .find_map(|j| nb.iter().position(|&x| x == j))
            };
            let (Some(ja), Some(jb)) = (find(1), find(m - 1)) else { continue };
            let pts = &local[b];
            let inward = pts.iter().fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
            if let Some(c) = ring.clipped(pts[ja], pts[jb], inward) {
                rings[b] = Some(c);
            }
        }
        Ok(Self {
            positions: None,
            nbrs,
            stencils: StencilSet::from_vec(stencils),
            boundary,
            is_boundary,
            rings,
        })
    }

    pub fn len(&self) -> usize {
        self.nbrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nbrs.is_empty()
    }

    /// Planar positions, when the domain was built from them.
    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    pub fn neighborhood(&self) -> &Neighborhood {
        &self.nbrs
    }

    pub fn stencils(&self) -> &StencilSet {
        &self.stencils
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn ring(&self, i: usize) -> Result<&LocalRing> {
        self.rings[i].as_ref().ok_or(Error::DegenerateRing(i))
    }
}
