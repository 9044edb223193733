use num_complex::Complex64;

use crate::beltrami::{inverse_beltrami, pcbc_from_derivatives};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Inverse stereographic projection onto the unit sphere.
pub fn stereographic(p: [f64; 2]) -> [f64; 3] {
    let r2 = p[0] * p[0] + p[1] * p[1];
    let d = r2 + 1.0;
    [2.0 * p[0] / d, 2.0 * p[1] / d, (r2 - 1.0) / d]
}

/// `(log(x + 1), asin(y / (2 + log²(x + 1))))`.
pub fn log_arcsin(p: [f64; 2]) -> Result<[f64; 2]> {
    if !(p[0] > -1.0) {
        return Err(Error::Domain(format!("log(x + 1) undefined at x = {}", p[0])));
    }
    let l = (p[0] + 1.0).ln();
    let a = p[1] / (2.0 + l * l);
    if !(-1.0..=1.0).contains(&a) {
        return Err(Error::Domain(format!("asin argument {a} outside [-1, 1]")));
    }
    Ok([l, a.asin()])
}

/// Jacobian `[[u_x, u_y], [v_x, v_y]]` of [`log_arcsin`].
pub fn log_arcsin_jacobian(p: [f64; 2]) -> Result<[[f64; 2]; 2]> {
    log_arcsin(p)?;
    let l = (p[0] + 1.0).ln();
    let s = 2.0 + l * l;
    let a = p[1] / s;
    let root = (1.0 - a * a).sqrt();
    let v_x = -p[1] * 2.0 * l / ((p[0] + 1.0) * s * s * root);
    let v_y = 1.0 / (s * root);
    Ok([[1.0 / (p[0] + 1.0), 0.0], [v_x, v_y]])
}

/// Beltrami coefficient of [`log_arcsin`] at `p`.
pub fn log_arcsin_mu(p: [f64; 2]) -> Result<Complex64> {
    let j = log_arcsin_jacobian(p)?;
    let fx = Complex64::new(j[0][0], j[1][0]);
    let fy = Complex64::new(j[0][1], j[1][1]);
    pcbc_from_derivatives(0, fx, fy)
}

/// Beltrami coefficient of the inverse map, evaluated at the image `f(p)`.
pub fn log_arcsin_inverse_mu(p: [f64; 2]) -> Result<Complex64> {
    let j = log_arcsin_jacobian(p)?;
    let fx = Complex64::new(j[0][0], j[1][0]);
    let fy = Complex64::new(j[0][1], j[1][1]);
    let fz = 0.5 * (fx - Complex64::i() * fy);
    let mu = pcbc_from_derivatives(0, fx, fy)?;
    Ok(inverse_beltrami(mu, fz / fz.norm()))
}

/// Applies [`stereographic`] to a planar cloud, keeping its annotations.
pub fn map_stereographic(cloud: &PointCloud) -> Result<PointCloud> {
    let pts = cloud.points().iter().map(|p| stereographic([p[0], p[1]])).collect();
    cloud.with_points(pts)
}

/// Applies [`log_arcsin`] to a planar cloud, keeping its annotations.
pub fn map_log_arcsin(cloud: &PointCloud) -> Result<PointCloud> {
    let pts = cloud
        .points()
        .iter()
        .map(|p| log_arcsin([p[0], p[1]]).map(|q| [q[0], q[1], 0.0]))
        .collect::<Result<Vec<_>>>()?;
    cloud.with_points(pts)
}
