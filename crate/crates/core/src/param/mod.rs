//! Conformal parameterization of disk-type clouds onto a rectangle and
//! landmark-matching Teichmüller maps between rectangles.

mod conformal;
mod teich;

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beltrami::{map_gradients, pcbc_from_derivatives, ComplexField};
use crate::error::{Error, Result};
use crate::mls::StencilSet;

pub use conformal::{
    conformal_parameterize, disk_to_square_qc, harmonic_to_disk, height_energy, inverse_disk_mu, optimize_height,
    ConformalOptions, ConformalResult, HEIGHT_RANGE, HEIGHT_TOL,
};
pub use teich::{
    pct_certificate, teichmuller_parameterize, PctCertificate, Smoothing, Status, TeichOptions, TeichResult,
    SMOOTHING_LENGTH,
};

/// Where a mapping came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Conformal,
    Teichmuller,
    Composed,
}

/// Rectangle `[0, 1] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectDomain {
    pub height: f64,
}

impl RectDomain {
    pub fn new(height: f64) -> Result<Self> {
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::InvalidArgument(format!("rectangle height {height}")));
        }
        Ok(Self { height })
    }

    pub fn unit() -> Self {
        Self { height: 1.0 }
    }

    /// Corners counter-clockwise from the origin.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        [[0.0, 0.0], [1.0, 0.0], [1.0, self.height], [0.0, self.height]]
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        p[0] >= -tol && p[0] <= 1.0 + tol && p[1] >= -tol && p[1] <= self.height + tol
    }
}

/// Per-iteration diagnostics of the Teichmüller iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Mean `|mu|` over points with `|mu| < 1`.
    pub k: f64,
    pub mean_abs: f64,
    pub var_abs: f64,
    /// Points excluded from `k` (`|mu| >= 1` or undefined).
    pub excluded: usize,
    /// `||F_{n+1} - F_n||_2` (spectral norm of the N x 2 difference).
    pub step_norm: f64,
    pub solve_method: crate::qc::SolveMethod,
    pub residual: f64,
}

/// Target coordinates of every point, with provenance and iteration history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mapping {
    pub uv: Vec<[f64; 2]>,
    pub kind: MapKind,
    pub diagnostics: Vec<IterationRecord>,
}

impl Mapping {
    pub fn new(uv: Vec<[f64; 2]>, kind: MapKind) -> Self {
        Self {
            uv,
            kind,
            diagnostics: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.uv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uv.is_empty()
    }

    pub fn complex(&self) -> Vec<Complex64> {
        self.uv.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    }

    /// `index,u,v` with a header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("index,u,v\n");
        for (i, p) in self.uv.iter().enumerate() {
            s.push_str(&format!("{i},{:.17e},{:.17e}\n", p[0], p[1]));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(s.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// Diffuse PCBC that tolerates degenerate points: where the Jacobian
/// estimate vanishes the value is NaN instead of an error.
pub fn pcbc_or_nan(stencils: &StencilSet, uv: &[[f64; 2]]) -> ComplexField {
    let u: Vec<f64> = uv.iter().map(|p| p[0]).collect();
    let v: Vec<f64> = uv.iter().map(|p| p[1]).collect();
    let g = map_gradients(stencils, &u, &v);
    ComplexField(
        g.iter()
            .enumerate()
            .map(|(i, d)| {
                pcbc_from_derivatives(i, Complex64::new(d[0], d[2]), Complex64::new(d[1], d[3]))
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            })
            .collect(),
    )
}

/// `||A - B||_2` for N x 2 matrices given as rows.
pub fn spectral_norm_diff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let (mut s00, mut s01, mut s11) = (0.0, 0.0, 0.0);
    for (p, q) in a.iter().zip(b) {
        let d = [p[0] - q[0], p[1] - q[1]];
        s00 += d[0] * d[0];
        s01 += d[0] * d[1];
        s11 += d[1] * d[1];
    }
    let tr = s00 + s11;
    let det = s00 * s11 - s01 * s01;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 + disc).max(0.0).sqrt()
}
