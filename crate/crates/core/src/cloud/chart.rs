use std::collections::VecDeque;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use super::{Neighborhood, PointCloud};
use crate::error::{Error, Result};

/// Tangent-plane frame at one point, from PCA of its neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChart {
    pub center: usize,
    pub origin: [f64; 3],
    pub tangent: [[f64; 3]; 2],
    pub normal: [f64; 3],
    /// Projected coordinates of the neighbors, in neighborhood order,
    /// relative to the chart center.
    pub coords: Vec<[f64; 2]>,
}

impl LocalChart {
    pub fn project(&self, p: &[f64; 3]) -> [f64; 2] {
        let d = [
            p[0] - self.origin[0],
            p[1] - self.origin[1],
            p[2] - self.origin[2],
        ];
        [dot(&d, &self.tangent[0]), dot(&d, &self.tangent[1])]
    }

    /// Reverses orientation: flips the normal and the second tangent.
    pub fn flip(&mut self) {
        self.normal = self.normal.map(|x| -x);
        self.tangent[1] = self.tangent[1].map(|x| -x);
        for c in &mut self.coords {
            c[1] = -c[1];
        }
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// PCA chart of point `i`. The first tangent is the global x axis projected
/// into the fitted plane (y axis if x is near-normal), the second completes a
/// right-handed frame with the normal. The normal points to `+z` when it is not
/// horizontal.
pub fn pca_chart(cloud: &PointCloud, nbrs: &Neighborhood, i: usize) -> Result<LocalChart> {
    let ids = nbrs.neighbors(i);
    let pts = cloud.points();
    let m = ids.len() as f64;
    let mut centroid = Vector3::zeros();
    for &j in ids {
        centroid += Vector3::from(pts[j]);
    }
    centroid /= m;
    let mut cov = Matrix3::zeros();
    for &j in ids {
        let d = Vector3::from(pts[j]) - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let (l0, l1) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    if !(l0 > 0.0) || l1 <= 1e-12 * l0 {
        return Err(Error::DegenerateNeighborhood(i));
    }
    let mut n: Vector3<f64> = eig.eigenvectors.column(order[2]).into_owned();
    n.normalize_mut();
    if n.z < 0.0 || (n.z == 0.0 && (n.y < 0.0 || (n.y == 0.0 && n.x < 0.0))) {
        n = -n;
    }
    // Planar clouds get an exact unit normal so that frames are exact.
    if cloud.is_planar() {
        n = Vector3::z();
    }
    let mut t1 = Vector3::x() - n * n.x;
    if t1.norm() < 1e-3 {
        t1 = Vector3::y() - n * n.y;
    }
    t1.normalize_mut();
    let t2 = n.cross(&t1);
    let origin = pts[i];
    let mut chart = LocalChart {
        center: i,
        origin,
        tangent: [[t1.x, t1.y, t1.z], [t2.x, t2.y, t2.z]],
        normal: [n.x, n.y, n.z],
        coords: Vec::with_capacity(ids.len()),
    };
    chart.coords = ids.iter().map(|&j| chart.project(&pts[j])).collect();
    Ok(chart)
}

/// Charts for every point, with normals made consistent by breadth-first
/// propagation over the neighbor graph. Components are seeded in index order.
pub fn build_charts(cloud: &PointCloud, nbrs: &Neighborhood) -> Result<Vec<LocalChart>> {
    let mut charts: Vec<LocalChart> = (0..cloud.len())
        .into_par_iter()
        .map(|i| pca_chart(cloud, nbrs, i))
        .collect::<Result<_>>()?;
    let n = charts.len();
    let mut visited = vec![false; n];
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            let ni = charts[i].normal;
            for &j in nbrs.neighbors(i) {
                if visited[j] {
                    continue;
                }
                visited[j] = true;
                if dot(&ni, &charts[j].normal) < 0.0 {
                    charts[j].flip();
                }
                queue.push_back(j);
            }
        }
    }
    Ok(charts)
}
