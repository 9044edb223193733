use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{KdTree, Neighborhood, PointCloud};

/// Ratio `h / q` above which a cloud is flagged as not quasi-uniform.
pub const QUASI_UNIFORM_THRESHOLD: f64 = 3.0;

/// Upper bound on the number of probe points used for the fill distance.
const MAX_PROBES: f64 = 4.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    /// Fill distance `h`: largest distance from a probe inside the hull to the cloud.
    pub fill_distance: f64,
    /// Separation distance `q`: half the smallest pairwise distance.
    pub separation: f64,
    pub ratio: f64,
    pub threshold: f64,
    /// Set when `ratio > threshold`. Reported only; never an error.
    pub exceeds: bool,
}

/// Fill and separation distances of a cloud.
///
/// `h` is the maximum, over a regular probe grid of spacing at most `q` clipped
/// to the convex hull, of the distance to the nearest sample. Non-planar clouds
/// are projected onto their global best-fit plane first, so the value is only an
/// estimate for strongly curved surfaces.
pub fn uniformity_report(cloud: &PointCloud, nbrs: &Neighborhood) -> UniformityReport {
    let pts2 = project_global(cloud);
    let tree = KdTree::from_planar(&pts2);
    let min_nn = if nbrs.k() >= 2 {
        (0..nbrs.len())
            .map(|i| nbrs.distances(i)[1])
            .fold(f64::INFINITY, f64::min)
    } else {
        pts2.iter()
            .map(|p| tree.nearest(&[p[0], p[1], 0.0], 2)[1].1)
            .fold(f64::INFINITY, f64::min)
    };
    let q = 0.5 * min_nn;

    let hull = convex_hull(&pts2);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts2 {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let area = ((hi[0] - lo[0]) * (hi[1] - lo[1])).max(0.0);
    let mut step = q;
    if area / (step * step) > MAX_PROBES {
        step = (area / MAX_PROBES).sqrt();
    }
    let nx = ((hi[0] - lo[0]) / step).floor() as usize + 1;
    let ny = ((hi[1] - lo[1]) / step).floor() as usize + 1;
    let tol = 1e-12 * (hi[0] - lo[0] + hi[1] - lo[1]);
    let mut h: f64 = 0.0;
    for iy in 0..ny {
        for ix in 0..nx {
            let p = [lo[0] + ix as f64 * step, lo[1] + iy as f64 * step];
            if !inside_hull(&hull, &p, tol) {
                continue;
            }
            h = h.max(tree.nearest(&[p[0], p[1], 0.0], 1)[0].1);
        }
    }
    // Probes never undercut the samples themselves.
    let h = h.max(q);
    let ratio = h / q;
    UniformityReport {
        fill_distance: h,
        separation: q,
        ratio,
        threshold: QUASI_UNIFORM_THRESHOLD,
        exceeds: ratio > QUASI_UNIFORM_THRESHOLD,
    }
}

fn project_global(cloud: &PointCloud) -> Vec<[f64; 2]> {
    if cloud.is_planar() {
        return cloud.xy();
    }
    let pts = cloud.points();
    let n = pts.len() as f64;
    let mut c = [0.0; 3];
    for p in pts {
        for d in 0..3 {
            c[d] += p[d] / n;
        }
    }
    let mut cov = Matrix3::<f64>::zeros();
    for p in pts {
        for a in 0..3 {
            for b in 0..3 {
                cov[(a, b)] += (p[a] - c[a]) * (p[b] - c[b]);
            }
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let t1 = eig.eigenvectors.column(order[0]).into_owned();
    let t2 = eig.eigenvectors.column(order[1]).into_owned();
    pts.iter()
        .map(|p| {
            let v = nalgebra::Vector3::<f64>::new(p[0] - c[0], p[1] - c[1], p[2] - c[2]);
            [v.dot(&t1), v.dot(&t2)]
        })
        .collect()
}

fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull (monotone chain).
fn convex_hull(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = pts.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for q in iter {
            while hull.len() >= start + 2
                && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], q) <= 0.0
            {
                hull.pop();
            }
            hull.push(*q);
        }
        hull.pop();
    }
    hull
}

fn inside_hull(hull: &[[f64; 2]], p: &[f64; 2], tol: f64) -> bool {
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| cross(&hull[i], &hull[(i + 1) % hull.len()], p) >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::build_knn;

    #[test]
    fn integer_grid_fill_distance() {
        let pts: Vec<[f64; 2]> = (0..16).map(|i| [(i % 4) as f64, (i / 4) as f64]).collect();
        let c = PointCloud::planar(&pts).unwrap();
        let nb = build_knn(&c, 6).unwrap();
        let r = uniformity_report(&c, &nb);
        assert_eq!(r.separation, 0.5);
        assert!((r.fill_distance - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(r.ratio >= 1.0 && !r.exceeds);
    }

    #[test]
    fn two_points() {
        let c = PointCloud::planar(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let nb = build_knn(&c, 1).unwrap();
        let r = uniformity_report(&c, &nb);
        assert_eq!(r.separation, 0.5);
        assert!(r.fill_distance >= r.separation);
    }

    #[test]
    fn clustered_cloud_is_flagged() {
        let mut pts: Vec<[f64; 2]> = (0..25).map(|i| [(i % 5) as f64, (i / 5) as f64]).collect();
        pts.push([0.01, 0.0]);
        let c = PointCloud::planar(&pts).unwrap();
        let nb = build_knn(&c, 6).unwrap();
        let r = uniformity_report(&c, &nb);
        assert!(r.exceeds);
        assert!(r.ratio > 3.0);
    }

    #[test]
    fn hull_of_square() {
        let h = convex_hull(&[[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(h.len(), 4);
        assert!(inside_hull(&h, &[0.5, 0.5], 0.0));
        assert!(!inside_hull(&h, &[1.5, 0.5], 0.0));
    }
}
