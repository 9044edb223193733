//! Second-order moving least squares: weights, the local reconstruction
//! matrix `A_x` and derivative rows at the stencil center.

use nalgebra::{DMatrix, Matrix6, SVD};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{LocalChart, Neighborhood};
use crate::error::{Error, Result};

/// Stencils whose normal matrix is worse conditioned than this are rejected.
pub const CONDITION_CAP: f64 = 1e12;

/// Minimum stencil size for a second-order fit.
pub const MIN_STENCIL: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    Constant,
    Exponential,
    InverseSquared,
    Wendland,
    Special,
    Gaussian,
}

impl WeightKind {
    /// Weight parameters for a stencil of `k` points with support radius `support`.
    /// The inverse-squared regularizer defaults to a tenth of the support.
    pub fn spec(self, k: usize, support: f64) -> WeightSpec {
        WeightSpec {
            kind: self,
            k,
            support,
            epsilon: 0.1 * support,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    /// Number of points in the neighborhood.
    pub k: usize,
    /// Largest distance in the neighborhood.
    pub support: f64,
    pub epsilon: f64,
}

/// Evaluates the weight function at distance `d`.
pub fn weight(spec: &WeightSpec, d: f64) -> Result<f64> {
    let dd = spec.support;
    let kk = spec.k.max(1) as f64;
    Ok(match spec.kind {
        WeightKind::Constant => 1.0,
        WeightKind::Exponential => {
            if dd <= 0.0 {
                return Err(Error::ZeroSupport);
            }
            (-(d * d) / (dd * dd)).exp()
        }
        WeightKind::InverseSquared => {
            if spec.epsilon <= 0.0 && d == 0.0 {
                return Err(Error::ZeroSupport);
            }
            1.0 / (d * d + spec.epsilon * spec.epsilon)
        }
        WeightKind::Wendland => {
            if dd <= 0.0 {
                return Err(Error::ZeroSupport);
            }
            let r = (d / dd).min(1.0);
            (1.0 - r).powi(4) * (4.0 * r + 1.0)
        }
        WeightKind::Special => {
            if d == 0.0 {
                1.0
            } else {
                1.0 / kk
            }
        }
        WeightKind::Gaussian => {
            if dd <= 0.0 {
                return Err(Error::ZeroSupport);
            }
            if d == 0.0 {
                1.0
            } else {
                (-(kk.sqrt()) * d * d / (dd * dd)).exp() / kk
            }
        }
    })
}

pub fn basis_q(x: [f64; 2]) -> [f64; 6] {
    [1.0, x[0], x[1], x[0] * x[0], x[0] * x[1], x[1] * x[1]]
}

/// Partial derivative of [`basis_q`] in the first coordinate.
pub fn basis_q1(x: [f64; 2]) -> [f64; 6] {
    [0.0, 1.0, 0.0, 2.0 * x[0], x[1], 0.0]
}

/// Partial derivative of [`basis_q`] in the second coordinate.
pub fn basis_q2(x: [f64; 2]) -> [f64; 6] {
    [0.0, 0.0, 1.0, 0.0, x[0], 2.0 * x[1]]
}

/// Which derivative a stencil row approximates at its center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Which {
    Value,
    Dx,
    Dy,
    Dxx,
    Dxy,
    Dyy,
    Lap,
}

/// Local MLS reconstruction around one point.
///
/// Coordinates are relative to the center, so `q`, `q1`, `q2` at the center are
/// unit vectors and every derivative row is a scaled row of `A_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlsStencil {
    pub center: usize,
    pub neighbors: Vec<usize>,
    /// `A_x`, 6 rows of length `K`, row-major.
    a: Vec<f64>,
    pub condition: f64,
}

impl MlsStencil {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Row `r` (0-based) of `A_x`.
    pub fn a_row(&self, r: usize) -> &[f64] {
        let k = self.neighbors.len();
        &self.a[r * k..(r + 1) * k]
    }

    /// Coefficients of the derivative row over the stencil's neighbors.
    pub fn row(&self, which: Which) -> Vec<f64> {
        let scaled = |r: usize, s: f64| self.a_row(r).iter().map(|v| s * v).collect();
        match which {
            Which::Value => self.a_row(0).to_vec(),
            Which::Dx => self.a_row(1).to_vec(),
            Which::Dy => self.a_row(2).to_vec(),
            Which::Dxx => scaled(3, 2.0),
            Which::Dxy => self.a_row(4).to_vec(),
            Which::Dyy => scaled(5, 2.0),
            Which::Lap => self
                .a_row(3)
                .iter()
                .zip(self.a_row(5))
                .map(|(a, b)| 2.0 * (a + b))
                .collect(),
        }
    }

    /// Applies a derivative row to per-point values indexed globally.
    pub fn apply(&self, which: Which, values: &[f64]) -> f64 {
        self.row(which)
            .iter()
            .zip(&self.neighbors)
            .map(|(c, &j)| c * values[j])
            .sum()
    }

    pub fn apply_complex(&self, which: Which, values: &[Complex64]) -> Complex64 {
        self.row(which)
            .iter()
            .zip(&self.neighbors)
            .map(|(c, &j)| values[j] * *c)
            .sum()
    }
}

/// Sparse derivative row over global point indices.
pub fn derivative_row(stencil: &MlsStencil, which: Which) -> Vec<(usize, f64)> {
    stencil
        .neighbors
        .iter()
        .copied()
        .zip(stencil.row(which))
        .collect()
}

/// Builds the stencil of point `center`.
///
/// `coords[j]` is the position of `neighbors[j]` relative to the center. The
/// support radius `D` is the largest of those distances. The fit is done in
/// coordinates scaled by `D` so the condition number is resolution independent.
pub fn build_stencil(
    center: usize,
    neighbors: &[usize],
    coords: &[[f64; 2]],
    kind: WeightKind,
) -> Result<MlsStencil> {
    let k = neighbors.len();
    if k < MIN_STENCIL || coords.len() != k {
        return Err(Error::SingularStencil {
            index: center,
            condition: f64::INFINITY,
        });
    }
    let dist: Vec<f64> = coords.iter().map(|c| c[0].hypot(c[1])).collect();
    let support = dist.iter().cloned().fold(0.0, f64::max);
    if support <= 0.0 {
        return Err(Error::SingularStencil {
            index: center,
            condition: f64::INFINITY,
        });
    }
    let spec = kind.spec(k, support);
    let mut qtw = DMatrix::<f64>::zeros(6, k);
    let mut m = Matrix6::<f64>::zeros();
    for j in 0..k {
        let w = weight(&spec, dist[j])?;
        let q = basis_q([coords[j][0] / support, coords[j][1] / support]);
        for r in 0..6 {
            qtw[(r, j)] = q[r] * w;
            for c in 0..6 {
                m[(r, c)] += q[r] * w * q[c];
            }
        }
    }
    let sv = SVD::new(m, false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < CONDITION_CAP) {
        return Err(Error::SingularStencil {
            index: center,
            condition,
        });
    }
    let lu = m.full_piv_lu();
    let mut a = Vec::with_capacity(6 * k);
    let mut sol = DMatrix::<f64>::zeros(6, k);
    for j in 0..k {
        let rhs = nalgebra::Vector6::from_iterator((0..6).map(|r| qtw[(r, j)]));
        let x = lu.solve(&rhs).ok_or(Error::SingularStencil {
            index: center,
            condition,
        })?;
        sol.set_column(j, &x);
    }
    // Undo the coordinate scaling: coefficient of x^a y^b picks up D^-(a+b).
    let scale = [
        1.0,
        1.0 / support,
        1.0 / support,
        1.0 / (support * support),
        1.0 / (support * support),
        1.0 / (support * support),
    ];
    for (r, s) in scale.iter().enumerate() {
        for j in 0..k {
            a.push(sol[(r, j)] * s);
        }
    }
    Ok(MlsStencil {
        center,
        neighbors: neighbors.to_vec(),
        a,
        condition,
    })
}

/// One stencil per point.
#[derive(Debug, Clone)]
pub struct StencilSet {
    stencils: Vec<MlsStencil>,
}

impl StencilSet {
    /// Stencils on a planar domain, neighbors taken from `nbrs`.
    pub fn planar(points: &[[f64; 2]], nbrs: &Neighborhood, kind: WeightKind) -> Result<Self> {
        let stencils = (0..points.len())
            .into_par_iter()
            .map(|i| {
                let nb = nbrs.neighbors(i);
                let p = points[i];
                let coords: Vec<[f64; 2]> = nb
                    .iter()
                    .map(|&j| [points[j][0] - p[0], points[j][1] - p[1]])
                    .collect();
                build_stencil(i, nb, &coords, kind)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { stencils })
    }

    /// Stencils in per-point tangent charts of a surface.
    pub fn from_charts(charts: &[LocalChart], nbrs: &Neighborhood, kind: WeightKind) -> Result<Self> {
        let stencils = charts
            .par_iter()
            .map(|c| build_stencil(c.center, nbrs.neighbors(c.center), &c.coords, kind))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { stencils })
    }

    pub fn from_vec(stencils: Vec<MlsStencil>) -> Self {
        Self { stencils }
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    pub fn get(&self, i: usize) -> &MlsStencil {
        &self.stencils[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MlsStencil> {
        self.stencils.iter()
    }

    /// Applies the same derivative to every point.
    pub fn apply_all(&self, which: Which, values: &[f64]) -> Vec<f64> {
        self.stencils.iter().map(|s| s.apply(which, values)).collect()
    }
}
