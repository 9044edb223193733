use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, FloatTriangulation, HasPosition, Point2, Triangulation};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::param::{
    conformal_parameterize, teichmuller_parameterize, ConformalOptions, ConformalResult, TeichOptions, TeichResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RegisterOptions {
    pub conformal: ConformalOptions,
    pub teich: TeichOptions,
}

#[derive(Debug, Clone)]
pub struct Registration {
    /// Image of every source point on the target surface.
    pub mapped: Vec<[f64; 3]>,
    /// Planar Teichmüller map between the two rectangles.
    pub planar: TeichResult,
    /// Mean `|mu|` of the planar map.
    pub k: f64,
    /// Points whose planar image fell outside the target's triangulation.
    pub hull_misses: usize,
}

#[derive(Debug, Clone, Copy)]
struct Vertex {
    pos: Point2<f64>,
    index: usize,
}

impl HasPosition for Vertex {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

/// Inverse of a planar parameterization, by barycentric interpolation over a
/// Delaunay triangulation of its image. Queries outside the hull snap to the
/// nearest vertex.
pub struct PlanarInverse<'a> {
    tri: DelaunayTriangulation<Vertex>,
    surface: &'a [[f64; 3]],
}

impl<'a> PlanarInverse<'a> {
    pub fn new(uv: &[[f64; 2]], surface: &'a [[f64; 3]]) -> Result<Self> {
        if uv.len() != surface.len() {
            return Err(Error::DimensionMismatch {
                expected: surface.len(),
                found: uv.len(),
            });
        }
        let mut tri = DelaunayTriangulation::new();
        for (index, p) in uv.iter().enumerate() {
            tri.insert(Vertex {
                pos: Point2::new(p[0], p[1]),
                index,
            })
            .map_err(|e| Error::InvalidArgument(format!("planar image point {index}: {e:?}")))?;
        }
        Ok(Self { tri, surface })
    }

    /// Surface point at `p`, and whether `p` was inside the hull.
    pub fn eval(&self, p: [f64; 2]) -> ([f64; 3], bool) {
        let q = Point2::new(p[0], p[1]);
        let bary = self.tri.barycentric();
        let coord = |c: usize| bary.interpolate(|v| self.surface[v.data().index][c], q);
        if let (Some(x), Some(y), Some(z)) = (coord(0), coord(1), coord(2)) {
            return ([x, y, z], true);
        }
        let v = self.tri.nearest_neighbor(q).expect("triangulation is not empty");
        (self.surface[v.data().index], false)
    }
}

/// Teichmüller registration between already parameterized clouds: solves the
/// planar problem with `h(g1(p_i)) = g2(q_j)` for each correspondence
/// `(i, j)` and pulls the result back onto the target surface.
pub fn register_parameterized(
    g1: &ConformalResult,
    g2: &ConformalResult,
    target: &PointCloud,
    correspondences: &[(usize, usize)],
    opts: &TeichOptions,
) -> Result<Registration> {
    if correspondences.is_empty() {
        return Err(Error::InvalidArgument("at least one correspondence is required".into()));
    }
    let n2 = g2.mapping.len();
    let mut landmarks = Vec::with_capacity(correspondences.len());
    for &(i, j) in correspondences {
        if i >= g1.mapping.len() || j >= n2 {
            return Err(Error::InvalidArgument(format!("correspondence ({i}, {j}) out of range")));
        }
        // Conformal images can overshoot the rectangle by round-off.
        let t = g2.mapping.uv[j];
        landmarks.push((i, [t[0].clamp(0.0, 1.0), t[1].clamp(0.0, g2.rect.height)]));
    }
    let planar = teichmuller_parameterize(&g1.mapping.uv, &g1.boundary, g1.rect, g2.rect, &landmarks, opts)?;
    let inverse = PlanarInverse::new(&g2.mapping.uv, target.points())?;
    let mut hull_misses = 0;
    let mapped = planar
        .mapping
        .uv
        .iter()
        .map(|&p| {
            let (x, inside) = inverse.eval(p);
            hull_misses += usize::from(!inside);
            x
        })
        .collect();
    if hull_misses > 0 {
        log::warn!("{hull_misses} points fell outside the target image and were snapped");
    }
    Ok(Registration {
        mapped,
        k: planar.k,
        planar,
        hull_misses,
    })
}

/// Landmark-matching Teichmüller registration of `src` onto `dst`.
pub fn register(
    src: &PointCloud,
    dst: &PointCloud,
    correspondences: &[(usize, usize)],
    opts: &RegisterOptions,
) -> Result<Registration> {
    let g1 = conformal_parameterize(src, &opts.conformal)?;
    let g2 = conformal_parameterize(dst, &opts.conformal)?;
    register_parameterized(&g1, &g2, dst, correspondences, &opts.teich)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::Status;
    use crate::synth::{bump_surface, correspondences, sample_quasi_uniform, BumpFamily};

    #[test]
    fn inverse_reproduces_linear_data() {
        let uv = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.4, 0.6]];
        let s: Vec<[f64; 3]> = uv.iter().map(|p| [p[0], p[1], 2.0 * p[0] - p[1]]).collect();
        let inv = PlanarInverse::new(&uv, &s).unwrap();
        let (x, inside) = inv.eval([0.3, 0.2]);
        assert!(inside);
        assert!((x[2] - 0.4).abs() < 1e-12);
        let (x, inside) = inv.eval([2.0, 2.0]);
        assert!(!inside);
        assert_eq!(x, s[2]);
    }

    #[test]
    fn self_registration_is_identity() {
        let c = sample_quasi_uniform(1.0, 1.0, 600, 4).unwrap();
        let k = c.corners().unwrap();
        let corr: Vec<(usize, usize)> = k.iter().map(|&i| (i, i)).collect();
        let r = register(&c, &c, &corr, &RegisterOptions::default()).unwrap();
        assert_eq!(r.planar.status, Status::Converged);
        assert!(r.k <= 1e-2, "{}", r.k);
        let h = crate::cloud::uniformity_report(&c, &crate::cloud::build_knn(&c, 12).unwrap()).fill_distance;
        let d = c
            .points()
            .iter()
            .zip(&r.mapped)
            .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]).hypot(p[2] - q[2]))
            .fold(0.0, f64::max);
        assert!(d <= 3.0 * h, "{d} vs {h}");
    }

    #[test]
    fn square_to_rectangle_is_affine() {
        let a = sample_quasi_uniform(1.0, 1.0, 700, 1).unwrap();
        let b = sample_quasi_uniform(1.0, 2.0, 1400, 2).unwrap();
        let corr: Vec<(usize, usize)> = a.corners().unwrap().into_iter().zip(b.corners().unwrap()).collect();
        let r = register(&a, &b, &corr, &RegisterOptions::default()).unwrap();
        for z in r.planar.mu.values() {
            assert!((z.norm() - 1.0 / 3.0).abs() <= 0.03, "{z}");
        }
    }

    #[test]
    fn bump_landmarks_are_matched() {
        let a = bump_surface(BumpFamily::Single, 700, 1).unwrap();
        let b = bump_surface(BumpFamily::Double, 700, 2).unwrap();
        let corr = correspondences(&a, &b).unwrap();
        let g1 = conformal_parameterize(&a, &ConformalOptions::default()).unwrap();
        let g2 = conformal_parameterize(&b, &ConformalOptions::default()).unwrap();
        let r = register_parameterized(&g1, &g2, &b, &corr, &TeichOptions::default()).unwrap();
        for &(i, j) in &corr {
            assert_eq!(r.planar.mapping.uv[i], g2.mapping.uv[j]);
        }
        assert!(register_parameterized(&g1, &g2, &b, &[], &TeichOptions::default()).is_err());
    }
}
