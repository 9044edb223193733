use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{pcbc_or_nan, MapKind, Mapping, RectDomain};
use crate::beltrami::{map_gradients, pcbc_from_derivatives, ComplexField, SOLVER_CLAMP};
use crate::cloud::{build_charts, build_knn, detect_boundary, LocalChart, PointCloud};
use crate::error::{Error, Result};
use crate::mls::{StencilSet, Which, WeightKind};
use crate::qc::{assemble_m3, solve_constrained, Domain, M3Scheme};

/// Search interval for the rectangle height.
pub const HEIGHT_RANGE: (f64, f64) = (0.05, 20.0);
/// Golden-section stopping width, in `log h`.
pub const HEIGHT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalOptions {
    pub k: usize,
    pub weight: WeightKind,
    pub scheme: M3Scheme,
}

impl Default for ConformalOptions {
    fn default() -> Self {
        Self {
            k: 16,
            weight: WeightKind::Gaussian,
            scheme: M3Scheme::Combined,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConformalResult {
    /// `(u1, h v1)` for every point.
    pub mapping: Mapping,
    pub rect: RectDomain,
    pub boundary: Vec<usize>,
    pub corners: [usize; 4],
    /// Harmonic map onto the unit disk.
    pub disk: Vec<[f64; 2]>,
    /// Quasi-conformal map of the disk onto the unit square.
    pub square: Vec<[f64; 2]>,
    /// Beltrami coefficient of the inverse disk map, over the disk.
    pub mu_inv: ComplexField,
    /// Points of `mu_inv` clamped to the solver bound.
    pub clamped: usize,
    /// Diffuse PCBC of the final map, measured in the surface charts.
    pub pcbc: ComplexField,
    /// Height energy at the optimum.
    pub energy: f64,
}

/// Harmonic map of the surface onto the unit disk. The boundary cycle is
/// placed on the unit circle by cumulative arc length, starting at angle 0.
pub fn harmonic_to_disk(cloud: &PointCloud, surface: &Domain, scheme: M3Scheme) -> Result<Vec<[f64; 2]>> {
    let b = surface.boundary();
    if b.len() < 3 {
        return Err(Error::MissingBoundary);
    }
    let pts = cloud.points();
    let dist = |i: usize, j: usize| {
        let (p, q) = (pts[i], pts[j]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    };
    let mut s = vec![0.0; b.len()];
    for k in 1..b.len() {
        s[k] = s[k - 1] + dist(b[k - 1], b[k]);
    }
    let total = s[b.len() - 1] + dist(b[b.len() - 1], b[0]);
    let n = surface.len();
    let zero = ComplexField::constant(n, Complex64::new(0.0, 0.0));
    let lap = assemble_m3(surface, &zero, scheme)?;
    let rhs = vec![0.0; n];
    let angle = |k: usize| TAU * s[k] / total;
    let cu: Vec<(usize, f64)> = (0..b.len()).map(|k| (b[k], angle(k).cos())).collect();
    let cv: Vec<(usize, f64)> = (0..b.len()).map(|k| (b[k], angle(k).sin())).collect();
    let u = solve_constrained(&lap, &rhs, &cu)?;
    let v = solve_constrained(&lap, &rhs, &cv)?;
    Ok(u.x.into_iter().zip(v.x).map(|(a, b)| [a, b]).collect())
}

/// Diffuse PCBC of the inverse of the disk map: MLS over the disk positions,
/// with each neighbor valued by its coordinates in the center's tangent chart.
/// Points with a degenerate Jacobian get NaN.
pub fn inverse_disk_mu(disk: &StencilSet, charts: &[LocalChart], cloud: &PointCloud) -> ComplexField {
    let pts = cloud.points();
    ComplexField(
        disk.iter()
            .map(|s| {
                let ch = &charts[s.center];
                let vals: Vec<Complex64> = s
                    .neighbors
                    .iter()
                    .map(|&j| {
                        let q = ch.project(&pts[j]);
                        Complex64::new(q[0], q[1])
                    })
                    .collect();
                let dot = |w: Which| -> Complex64 { s.row(w).iter().zip(&vals).map(|(c, z)| z * c).sum() };
                let (fx, fy) = (dot(Which::Dx), dot(Which::Dy));
                pcbc_from_derivatives(s.center, fx, fy).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            })
            .collect(),
    )
}

/// Position of each corner in the boundary cycle, checked to be distinct and
/// in counter-clockwise order.
fn corner_positions(boundary: &[usize], corners: [usize; 4]) -> Result<[usize; 4]> {
    let mut pos = [0usize; 4];
    for (k, &c) in corners.iter().enumerate() {
        pos[k] = boundary
            .iter()
            .position(|&b| b == c)
            .ok_or_else(|| Error::InvalidArgument(format!("corner {c} is not on the boundary")))?;
    }
    let m = boundary.len();
    let rel: Vec<usize> = pos.iter().map(|&p| (p + m - pos[0]) % m).collect();
    if !(rel[0] < rel[1] && rel[1] < rel[2] && rel[2] < rel[3]) {
        return Err(Error::InvalidArgument(format!(
            "corners {corners:?} are not distinct and in boundary order"
        )));
    }
    Ok(pos)
}

/// Quasi-conformal map of the disk onto the unit square with Beltrami
/// coefficient `mu`. Corners go to `(0,0), (1,0), (1,1), (0,1)`; boundary
/// arcs between them keep the coordinate normal to their edge and slide
/// along it.
pub fn disk_to_square_qc(
    disk: &Domain,
    corners: [usize; 4],
    mu: &ComplexField,
    scheme: M3Scheme,
) -> Result<Vec<[f64; 2]>> {
    let b = disk.boundary();
    let pos = corner_positions(b, corners)?;
    let m = b.len();
    let mut cu: Vec<(usize, f64)> = Vec::new();
    let mut cv: Vec<(usize, f64)> = Vec::new();
    let square = RectDomain::unit().corners();
    for k in 0..4 {
        cu.push((corners[k], square[k][0]));
        cv.push((corners[k], square[k][1]));
        // Open arc from corner k to corner k+1.
        let mut p = (pos[k] + 1) % m;
        while p != pos[(k + 1) % 4] {
            match k {
                0 => cv.push((b[p], 0.0)),
                1 => cu.push((b[p], 1.0)),
                2 => cv.push((b[p], 1.0)),
                _ => cu.push((b[p], 0.0)),
            }
            p = (p + 1) % m;
        }
    }
    let op = assemble_m3(disk, mu, scheme)?;
    let rhs = vec![0.0; disk.len()];
    let u = solve_constrained(&op, &rhs, &cu)?;
    let v = solve_constrained(&op, &rhs, &cv)?;
    Ok(u.x.into_iter().zip(v.x).map(|(a, b)| [a, b]).collect())
}

/// `sum_i |sigma_i(h) - mu_i|^2`, where `sigma(h)` is the PCBC of `(u, h v)`
/// from cached gradients `[u_x, u_y, v_x, v_y]`. Points where either side is
/// undefined are skipped.
pub fn height_energy(grads: &[[f64; 4]], mu: &ComplexField, h: f64) -> f64 {
    grads
        .iter()
        .zip(mu.values())
        .filter_map(|(g, m)| {
            let fx = Complex64::new(g[0], h * g[2]);
            let fy = Complex64::new(g[1], h * g[3]);
            let s = pcbc_from_derivatives(0, fx, fy).ok()?;
            let d = (s - m).norm_sqr();
            d.is_finite().then_some(d)
        })
        .sum()
}

/// Golden-section search for the height minimizing [`height_energy`] over
/// [`HEIGHT_RANGE`], in `log h`. Returns the rectangle and the energy there.
pub fn optimize_height(square: &[[f64; 2]], mu: &ComplexField, stencils: &StencilSet) -> Result<(RectDomain, f64)> {
    let u: Vec<f64> = square.iter().map(|p| p[0]).collect();
    let v: Vec<f64> = square.iter().map(|p| p[1]).collect();
    let grads = map_gradients(stencils, &u, &v);
    let f = |t: f64| height_energy(&grads, mu, t.exp());
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (HEIGHT_RANGE.0.ln(), HEIGHT_RANGE.1.ln());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > HEIGHT_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let h = t.exp();
    if (t - HEIGHT_RANGE.0.ln()).abs() < 1e-3 || (t - HEIGHT_RANGE.1.ln()).abs() < 1e-3 {
        log::warn!("height optimum {h:.4} is at the search bound");
    }
    Ok((RectDomain::new(h)?, f(t)))
}

fn flip_all(charts: &mut [LocalChart]) {
    for c in charts {
        c.flip();
    }
}

/// Conformal map of a disk-type cloud with four annotated corners onto the
/// rectangle `[0, 1] x [0, h]`.
pub fn conformal_parameterize(cloud: &PointCloud, opts: &ConformalOptions) -> Result<ConformalResult> {
    let corners = cloud.corners().ok_or(Error::MissingCorners)?;
    let nbrs = build_knn(cloud, opts.k)?;
    let boundary = detect_boundary(cloud, &nbrs)?;
    let mut charts = build_charts(cloud, &nbrs)?;
    let mut surface = Domain::from_charts(&charts, nbrs.clone(), boundary.clone(), opts.weight)?;
    let disk = harmonic_to_disk(cloud, &surface, opts.scheme)?;
    let disk_dom = Domain::planar_with(&disk, nbrs.clone(), boundary.clone(), opts.weight)?;

    let mut mu_inv = inverse_disk_mu(disk_dom.stencils(), &charts, cloud);
    let reversed = mu_inv.values().iter().filter(|z| z.norm() > 1.0).count();
    if 2 * reversed > mu_inv.len() {
        // Charts are oriented against the disk map.
        flip_all(&mut charts);
        surface = Domain::from_charts(&charts, nbrs, boundary.clone(), opts.weight)?;
        mu_inv = inverse_disk_mu(disk_dom.stencils(), &charts, cloud);
    }
    let bad = mu_inv.values().iter().filter(|z| !z.is_finite()).count();
    if bad > 0 {
        log::warn!("{bad} points with undefined inverse Beltrami coefficient set to 0");
        for z in mu_inv.0.iter_mut().filter(|z| !z.is_finite()) {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    let (mu_c, clamped) = mu_inv.clamped(SOLVER_CLAMP);
    if clamped > 0 {
        log::warn!("{clamped} inverse Beltrami values clamped to {SOLVER_CLAMP}");
    }

    let square = disk_to_square_qc(&disk_dom, corners, &mu_c, opts.scheme)?;
    let (rect, energy) = optimize_height(&square, &mu_c, disk_dom.stencils())?;
    let uv: Vec<[f64; 2]> = square.iter().map(|p| [p[0], rect.height * p[1]]).collect();
    let pcbc = pcbc_or_nan(surface.stencils(), &uv);
    Ok(ConformalResult {
        mapping: Mapping::new(uv, MapKind::Conformal),
        rect,
        boundary,
        corners,
        disk,
        square,
        mu_inv,
        clamped,
        pcbc,
        energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Neighborhood;
    use crate::synth::{map_stereographic, sample_disk, sample_quasi_uniform};

    #[test]
    fn disk_cloud_maps_to_itself() {
        let c = sample_disk(1.0, 800, 3).unwrap();
        let nb = build_knn(&c, 16).unwrap();
        let ch = build_charts(&c, &nb).unwrap();
        let b = c.boundary().unwrap().to_vec();
        let dom = Domain::from_charts(&ch, nb, b, WeightKind::Gaussian).unwrap();
        let d = harmonic_to_disk(&c, &dom, M3Scheme::Combined).unwrap();
        let h = crate::cloud::uniformity_report(&c, dom.neighborhood()).fill_distance;
        let err = c
            .xy()
            .iter()
            .zip(&d)
            .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
            .fold(0.0, f64::max);
        assert!(err <= 2.0 * h, "{err} vs h = {h}");
    }

    #[test]
    fn boundary_angles_follow_arc_length() {
        let c = sample_quasi_uniform(1.0, 1.0, 400, 2).unwrap();
        let nb = build_knn(&c, 16).unwrap();
        let ch = build_charts(&c, &nb).unwrap();
        let b = c.boundary().unwrap().to_vec();
        let dom = Domain::from_charts(&ch, nb, b.clone(), WeightKind::Gaussian).unwrap();
        let d = harmonic_to_disk(&c, &dom, M3Scheme::Combined).unwrap();
        // Corners of the unit square sit at quarter turns.
        let corners = c.corners().unwrap();
        for (k, &i) in corners.iter().enumerate() {
            let t = TAU * k as f64 / 4.0;
            assert!((d[i][0] - t.cos()).abs() < 1e-12 && (d[i][1] - t.sin()).abs() < 1e-12);
        }
        for &i in &b {
            assert!((d[i][0].hypot(d[i][1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn curved_patch_stays_inside_the_disk() {
        let base = sample_quasi_uniform(1.0, 1.0, 600, 5).unwrap();
        let pts = base.xy().iter().map(|p| [p[0] - 0.5, p[1] - 0.5, 0.0]).collect();
        let c = map_stereographic(&base.with_points(pts).unwrap()).unwrap();
        let nb = build_knn(&c, 16).unwrap();
        let ch = build_charts(&c, &nb).unwrap();
        let b = c.boundary().unwrap().to_vec();
        let dom = Domain::from_charts(&ch, nb, b, WeightKind::Gaussian).unwrap();
        let d = harmonic_to_disk(&c, &dom, M3Scheme::Combined).unwrap();
        for i in 0..c.len() {
            if !dom.is_boundary(i) {
                assert!(d[i][0].hypot(d[i][1]) < 1.0);
            }
        }
    }

    fn flat(w: f64, h: f64, n: usize) -> PointCloud {
        sample_quasi_uniform(w, h, n, 1).unwrap()
    }

    #[test]
    fn module_of_flat_rectangles() {
        for (w, h, tol) in [(1.0, 1.0, 0.01), (1.0, 2.0, 0.02), (2.0, 1.0, 0.005)] {
            let r = conformal_parameterize(&flat(w, h, 1500), &ConformalOptions::default()).unwrap();
            let expect = h / w;
            assert!((r.rect.height - expect).abs() <= tol * expect.max(1.0), "{w}x{h}: {}", r.rect.height);
            assert!(r.pcbc.mean_abs() < 1e-2, "{}", r.pcbc.mean_abs());
        }
    }

    #[test]
    fn flat_square_maps_to_itself() {
        let c = flat(1.0, 1.0, 1000);
        let r = conformal_parameterize(&c, &ConformalOptions::default()).unwrap();
        let h = crate::cloud::uniformity_report(&c, &build_knn(&c, 12).unwrap()).fill_distance;
        let err = c
            .xy()
            .iter()
            .zip(&r.mapping.uv)
            .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
            .fold(0.0, f64::max);
        assert!(err <= 2.0 * h, "{err} vs {h}");
        for (k, &i) in r.corners.iter().enumerate() {
            assert_eq!(r.mapping.uv[i], r.rect.corners()[k]);
        }
    }

    #[test]
    fn golden_section_matches_grid_scan() {
        let base = sample_quasi_uniform(1.0, 1.0, 800, 4).unwrap();
        let pts = base.xy().iter().map(|p| [p[0] - 0.5, 1.5 * p[1] - 0.3, 0.0]).collect();
        let c = map_stereographic(&base.with_points(pts).unwrap()).unwrap();
        let r = conformal_parameterize(&c, &ConformalOptions::default()).unwrap();
        let nb = build_knn(&c, 16).unwrap();
        let dd = Domain::planar_with(&r.disk, nb, r.boundary.clone(), WeightKind::Gaussian).unwrap();
        let (mu, _) = r.mu_inv.clamped(SOLVER_CLAMP);
        let u: Vec<f64> = r.square.iter().map(|p| p[0]).collect();
        let v: Vec<f64> = r.square.iter().map(|p| p[1]).collect();
        let g = map_gradients(dd.stencils(), &u, &v);
        let mut best = (f64::INFINITY, 0.0);
        let mut h = 0.05;
        while h <= 20.0 {
            let e = height_energy(&g, &mu, h);
            if e < best.0 {
                best = (e, h);
            }
            h += 1e-3;
        }
        assert!((best.1 - r.rect.height).abs() <= 1e-3, "{} vs {}", best.1, r.rect.height);
        assert!(r.pcbc.mean_abs() < 0.1, "{}", r.pcbc.mean_abs());
    }

    #[test]
    fn corners_are_validated() {
        let c = flat(1.0, 1.0, 300);
        let nb = build_knn(&c, 16).unwrap();
        let b = c.boundary().unwrap().to_vec();
        let inner = (0..c.len()).find(|i| !b.contains(i)).unwrap();
        let dom = Domain::planar_with(&c.xy(), nb, b, WeightKind::Gaussian).unwrap();
        let zero = ComplexField::constant(c.len(), Complex64::new(0.0, 0.0));
        let k = c.corners().unwrap();
        assert!(disk_to_square_qc(&dom, [k[0], k[1], k[2], inner], &zero, M3Scheme::Combined).is_err());
        assert!(disk_to_square_qc(&dom, [k[0], k[2], k[1], k[3]], &zero, M3Scheme::Combined).is_err());
        let no = PointCloud::planar(&c.xy()).unwrap();
        assert!(matches!(
            conformal_parameterize(&no, &ConformalOptions::default()),
            Err(Error::MissingCorners)
        ));
        let _ = Neighborhood::planar(&c.xy(), 6).unwrap();
    }
}
