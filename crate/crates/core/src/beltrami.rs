//! Beltrami coefficients of point-cloud maps and the scalar quantities built
//! from them.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mls::{StencilSet, Which};

/// Largest admissible `|mu|` for coefficient evaluation.
pub const FEASIBLE_MU: f64 = 1.0 - 1e-8;
/// Fields fed to solvers are clamped to this norm.
pub const SOLVER_CLAMP: f64 = 0.999;
/// Jacobian estimates below this magnitude are treated as vanishing.
pub const JACOBIAN_EPS: f64 = 1e-12;

/// Per-point complex values, typically a Beltrami coefficient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexField(pub Vec<Complex64>);

/// One bin of a `|mu|` histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub fraction: f64,
}

impl ComplexField {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self(values)
    }

    pub fn constant(n: usize, mu: Complex64) -> Self {
        Self(vec![mu; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norms(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm()).collect()
    }

    pub fn mean_abs(&self) -> f64 {
        mean(&self.norms())
    }

    /// Population variance of `|mu|`.
    pub fn var_abs(&self) -> f64 {
        variance(&self.norms())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Rescales entries with `|mu| > max` onto the circle of radius `max`.
    /// Returns the clamped field and how many entries were touched.
    pub fn clamped(&self, max: f64) -> (Self, usize) {
        let mut count = 0;
        let v = self
            .0
            .iter()
            .map(|&z| {
                let r = z.norm();
                if r > max {
                    count += 1;
                    z * (max / r)
                } else {
                    z
                }
            })
            .collect();
        (Self(v), count)
    }

    /// Histogram of `|mu|` over `[0, 1]` with `bins` equal bins; values at or
    /// above 1 land in the last bin.
    pub fn histogram(&self, bins: usize) -> Vec<HistogramBin> {
        let bins = bins.max(1);
        let mut counts = vec![0usize; bins];
        for z in &self.0 {
            let r = z.norm();
            if !r.is_finite() {
                continue;
            }
            let b = ((r * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let total = self.0.len().max(1) as f64;
        counts
            .iter()
            .enumerate()
            .map(|(b, &count)| HistogramBin {
                lo: b as f64 / bins as f64,
                hi: (b + 1) as f64 / bins as f64,
                count,
                fraction: count as f64 / total,
            })
            .collect()
    }

    /// Writes `index,re,im` rows with a header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "index,re,im").map_err(io)?;
        for (i, z) in self.0.iter().enumerate() {
            writeln!(w, "{i},{:.17e},{:.17e}", z.re, z.im).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn variance(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Entries of the symmetric coefficient matrix `[[a1, a2], [a2, a3]]` of the
/// generalized Laplace equation for Beltrami coefficient `mu`.
pub fn alpha_coeffs(mu: Complex64) -> Result<[f64; 3]> {
    let r2 = mu.norm_sqr();
    if !(r2.sqrt() < FEASIBLE_MU) {
        return Err(Error::InfeasibleMu(r2.sqrt()));
    }
    let (rho, tau) = (mu.re, mu.im);
    let den = 1.0 - r2;
    Ok([
        ((rho - 1.0).powi(2) + tau * tau) / den,
        -2.0 * tau / den,
        ((rho + 1.0).powi(2) + tau * tau) / den,
    ])
}

/// Per-point coefficient matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffField {
    pub alpha: Vec<[f64; 3]>,
}

impl CoeffField {
    pub fn from_mu(mu: &ComplexField) -> Result<Self> {
        let alpha = mu.0.iter().map(|&m| alpha_coeffs(m)).collect::<Result<_>>()?;
        Ok(Self { alpha })
    }

    pub fn matrix(&self, i: usize) -> [[f64; 2]; 2] {
        let a = self.alpha[i];
        [[a[0], a[1]], [a[1], a[2]]]
    }

    pub fn det(&self, i: usize) -> f64 {
        let a = self.alpha[i];
        a[0] * a[2] - a[1] * a[1]
    }
}

/// First derivatives `[u_x, u_y, v_x, v_y]` of a planar map at every point.
pub fn map_gradients(stencils: &StencilSet, u: &[f64], v: &[f64]) -> Vec<[f64; 4]> {
    stencils
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|s| {
            [
                s.apply(Which::Dx, u),
                s.apply(Which::Dy, u),
                s.apply(Which::Dx, v),
                s.apply(Which::Dy, v),
            ]
        })
        .collect()
}

/// Beltrami coefficient from the derivatives of `f = u + i v`.
pub fn pcbc_from_derivatives(index: usize, fx: Complex64, fy: Complex64) -> Result<Complex64> {
    let i = Complex64::i();
    let den = fx - i * fy;
    if !(den.norm() > JACOBIAN_EPS) {
        return Err(Error::DegenerateJacobian(index));
    }
    Ok((fx + i * fy) / den)
}

/// Diffuse Beltrami coefficient of the map `f` sampled at the stencil points.
pub fn diffuse_pcbc(stencils: &StencilSet, f: &[Complex64]) -> Result<ComplexField> {
    let v = stencils
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|s| {
            let fx = s.apply_complex(Which::Dx, f);
            let fy = s.apply_complex(Which::Dy, f);
            pcbc_from_derivatives(s.center, fx, fy)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexField(v))
}

/// Diffuse Beltrami coefficient when the sampled values depend on the
/// evaluation point: `value(i, j)` is the value of neighbor `j` as seen from
/// the stencil centered at `i` (for example its position in the tangent chart
/// of `i`).
pub fn diffuse_pcbc_local<F>(stencils: &StencilSet, value: F) -> Result<ComplexField>
where
    F: Fn(usize, usize) -> Complex64 + Sync,
{
    let v = stencils
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|s| {
            let vals: Vec<Complex64> = s.neighbors.iter().map(|&j| value(s.center, j)).collect();
            let dx = s.row(Which::Dx);
            let dy = s.row(Which::Dy);
            let fx: Complex64 = dx.iter().zip(&vals).map(|(c, z)| z * c).sum();
            let fy: Complex64 = dy.iter().zip(&vals).map(|(c, z)| z * c).sum();
            pcbc_from_derivatives(s.center, fx, fy)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexField(v))
}

/// Beltrami coefficient of `g ∘ f` at a point, given `mu_f`, `mu_g` evaluated at
/// the image point and the unit phase `f_z / |f_z|`.
pub fn compose_beltrami(mu_f: Complex64, mu_g_at_fz: Complex64, fz_phase: Complex64) -> Complex64 {
    let r = fz_phase.conj() / fz_phase;
    (mu_f + r * mu_g_at_fz) / (Complex64::new(1.0, 0.0) + r * mu_f.conj() * mu_g_at_fz)
}

/// Beltrami coefficient of `f⁻¹` at `f(z)`.
pub fn inverse_beltrami(mu_f: Complex64, fz_phase: Complex64) -> Complex64 {
    -mu_f * fz_phase / fz_phase.conj()
}

/// Maximal dilation `(1 + k) / (1 - k)`.
pub fn dilation(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::NormOutOfRange(k));
    }
    Ok((1.0 + k) / (1.0 - k))
}

/// Teichmüller distance `½ log K` for a representative norm `k`.
pub fn teich_distance(k: f64) -> Result<f64> {
    Ok(0.5 * dilation(k)?.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Neighborhood;
    use crate::mls::WeightKind;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid_set(n: usize) -> (Vec<[f64; 2]>, StencilSet) {
        let pts: Vec<[f64; 2]> = (0..n * n)
            .map(|i| [(i % n) as f64 / (n - 1) as f64, (i / n) as f64 / (n - 1) as f64])
            .collect();
        let nb = Neighborhood::planar(&pts, 12).unwrap();
        let s = StencilSet::planar(&pts, &nb, WeightKind::Gaussian).unwrap();
        (pts, s)
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha_coeffs(c(0.0, 0.0)).unwrap(), [1.0, 0.0, 1.0]);
        let a = alpha_coeffs(c(0.5, 0.0)).unwrap();
        assert_relative_eq!(a[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(a[1], 0.0);
        assert_relative_eq!(a[2], 3.0, epsilon = 1e-15);
        // Independent evaluation at mu = 0.5i: rho = 0, tau = 0.5, 1 - |mu|^2 = 0.75.
        let a = alpha_coeffs(c(0.0, 0.5)).unwrap();
        assert_relative_eq!(a[0], 1.25 / 0.75, epsilon = 1e-14);
        assert_relative_eq!(a[1], -1.0 / 0.75, epsilon = 1e-14);
        assert_relative_eq!(a[2], 1.25 / 0.75, epsilon = 1e-14);
        assert!(matches!(alpha_coeffs(c(0.6, 0.8)), Err(Error::InfeasibleMu(_))));
    }

    #[test]
    fn coefficient_matrix_matches_metric_form() {
        // [[1 + |mu|^2 - 2 Re mu, -2 Im mu], [., 1 + |mu|^2 + 2 Re mu]] / (1 - |mu|^2)
        let mu = c(0.3, -0.4);
        let a = alpha_coeffs(mu).unwrap();
        let d = 1.0 - mu.norm_sqr();
        assert_relative_eq!(a[0], (1.0 + mu.norm_sqr() - 2.0 * mu.re) / d, epsilon = 1e-14);
        assert_relative_eq!(a[1], -2.0 * mu.im / d, epsilon = 1e-14);
        assert_relative_eq!(a[2], (1.0 + mu.norm_sqr() + 2.0 * mu.re) / d, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn coefficient_determinant_is_one(r in 0.0f64..0.99, t in 0.0f64..std::f64::consts::TAU) {
            let f = CoeffField::from_mu(&ComplexField(vec![Complex64::from_polar(r, t)])).unwrap();
            prop_assert!((f.det(0) - 1.0).abs() < 1e-10 * f.alpha[0][2].max(1.0).powi(2));
            prop_assert!(f.alpha[0][0] > 0.0 && f.alpha[0][2] > 0.0);
        }

        #[test]
        fn distance_is_increasing(a in 0.0f64..0.99, b in 0.0f64..0.99) {
            prop_assume!(a < b);
            prop_assert!(teich_distance(a).unwrap() < teich_distance(b).unwrap());
        }
    }

    #[test]
    fn identity_map_is_conformal() {
        let (pts, s) = grid_set(11);
        let f: Vec<Complex64> = pts.iter().map(|p| c(p[0], p[1])).collect();
        let mu = diffuse_pcbc(&s, &f).unwrap();
        assert!(mu.max_abs() < 1e-9);
    }

    #[test]
    fn affine_map_recovers_constant_mu() {
        let (pts, s) = grid_set(11);
        let a = c(1.3, 0.4);
        let b = c(0.2, -0.1);
        let f: Vec<Complex64> = pts
            .iter()
            .map(|p| {
                let z = c(p[0], p[1]);
                a * z + b * z.conj()
            })
            .collect();
        let mu = diffuse_pcbc(&s, &f).unwrap();
        for m in mu.values() {
            assert!((m - b / a).norm() < 1e-9);
        }
    }

    #[test]
    fn constant_map_has_degenerate_jacobian() {
        let (pts, s) = grid_set(5);
        let f = vec![c(1.0, 1.0); pts.len()];
        assert!(matches!(diffuse_pcbc(&s, &f), Err(Error::DegenerateJacobian(_))));
    }

    #[test]
    fn composition_identities() {
        let mu_f = c(0.3, 0.1);
        let phase = Complex64::from_polar(1.0, 0.7);
        assert!((compose_beltrami(mu_f, c(0.0, 0.0), phase) - mu_f).norm() < 1e-15);
        let mu_g = c(-0.2, 0.25);
        assert!((compose_beltrami(c(0.0, 0.0), mu_g, c(1.0, 0.0)) - mu_g).norm() < 1e-15);
        let inv = inverse_beltrami(mu_f, phase);
        assert!(compose_beltrami(mu_f, inv, phase).norm() < 1e-15);
    }

    #[test]
    fn inverse_identity_matches_numeric_inverse() {
        // f(z) = a z + b conj(z) has inverse with mu = -b/conj(a)... evaluate both
        // through the explicit inverse matrix and compare with the identity.
        let a = c(1.1, 0.3);
        let b = c(0.25, -0.05);
        let mu_f = b / a;
        let phase = a / a.norm();
        // Real 2x2 matrix of f and its inverse; mu of a linear map from its columns.
        let m = [[a.re + b.re, -a.im + b.im], [a.im + b.im, a.re - b.re]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
        let fx = c(inv[0][0], inv[1][0]);
        let fy = c(inv[0][1], inv[1][1]);
        let mu_inv = pcbc_from_derivatives(0, fx, fy).unwrap();
        assert!((inverse_beltrami(mu_f, phase) - mu_inv).norm() < 1e-12);
    }

    #[test]
    fn dilation_and_distance() {
        assert_eq!(dilation(0.0).unwrap(), 1.0);
        assert_relative_eq!(dilation(1.0 / 3.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(dilation(0.5).unwrap(), 3.0, epsilon = 1e-15);
        assert!(dilation(1.0).is_err());
        assert_eq!(teich_distance(0.0).unwrap(), 0.0);
        assert_relative_eq!(teich_distance(1.0 / 3.0).unwrap(), 0.5 * 2f64.ln(), epsilon = 1e-15);
        assert!((teich_distance(0.2402).unwrap() - 0.24497).abs() < 5e-5);
    }

    #[test]
    fn field_statistics() {
        let f = ComplexField(vec![c(0.1, 0.0), c(0.0, 0.3), c(2.0, 0.0)]);
        let (cl, n) = f.clamped(0.999);
        assert_eq!(n, 1);
        assert_relative_eq!(cl.values()[2].re, 0.999);
        let h = f.histogram(10);
        assert_eq!(h.len(), 10);
        assert_eq!(h[1].count, 1);
        assert_eq!(h[3].count, 1);
        assert_eq!(h[9].count, 1);
        assert_relative_eq!(f.mean_abs(), 0.8);
        let g = ComplexField::constant(4, c(0.3, 0.4));
        assert!(g.var_abs() < 1e-30);
    }

    #[test]
    fn csv_output() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mu.csv");
        ComplexField(vec![c(0.5, -0.25)]).write_csv(&p).unwrap();
        let s = std::fs::read_to_string(&p).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("index,re,im"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 0.5, -0.25]);
    }
}
