//! Point-cloud data model, neighbor search, local charts and sampling diagnostics.

mod boundary;
mod chart;
mod io;
mod knn;
mod uniformity;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use boundary::{detect_boundary, BOUNDARY_GAP};
pub use chart::{build_charts, pca_chart, LocalChart};
pub use io::{
    load_cloud, load_index_list, load_landmarks, save_cloud, save_index_list, save_landmarks,
    CloudFormat,
};
pub use knn::{build_knn, KdTree, Neighborhood};
pub use uniformity::{uniformity_report, UniformityReport, QUASI_UNIFORM_THRESHOLD};

/// Default neighborhood size for surfaces embedded in 3D.
pub const DEFAULT_K_3D: usize = 16;
/// Default neighborhood size for planar clouds.
pub const DEFAULT_K_PLANAR: usize = 12;

/// What a landmark is pinned to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LandmarkTarget {
    /// A prescribed planar position.
    Position([f64; 2]),
    /// A corresponding point index in another cloud.
    Partner(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub index: usize,
    pub target: LandmarkTarget,
}

/// A 3D (or planar, `z = 0`) point set with optional boundary, corner and
/// landmark annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    planar: bool,
    boundary: Option<Vec<usize>>,
    corners: Option<[usize; 4]>,
    landmarks: Vec<Landmark>,
}

impl PointCloud {
    /// Builds a cloud from 3D coordinates. Exactly coincident points are rejected.
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        check_points(&points)?;
        Ok(Self {
            points,
            planar: false,
            boundary: None,
            corners: None,
            landmarks: Vec::new(),
        })
    }

    /// Builds a planar cloud; points are stored with `z = 0`.
    pub fn planar(points: &[[f64; 2]]) -> Result<Self> {
        let mut cloud = Self::new(points.iter().map(|p| [p[0], p[1], 0.0]).collect())?;
        cloud.planar = true;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_planar(&self) -> bool {
        self.planar
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn point(&self, i: usize) -> [f64; 3] {
        self.points[i]
    }

    /// `(x, y)` coordinates; only meaningful for planar clouds.
    pub fn xy(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p[0], p[1]]).collect()
    }

    pub fn boundary(&self) -> Option<&[usize]> {
        self.boundary.as_deref()
    }

    pub fn corners(&self) -> Option<[usize; 4]> {
        self.corners
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn with_boundary(mut self, boundary: Vec<usize>) -> Result<Self> {
        self.check_indices(&boundary, "boundary")?;
        if boundary.len() < 3 {
            return Err(Error::InvalidCloud(
                "boundary cycle needs at least 3 points".into(),
            ));
        }
        self.boundary = Some(boundary);
        if let Some(c) = self.corners {
            self.check_corners(&c)?;
        }
        Ok(self)
    }

    /// Attaches four corner indices. They must lie on the boundary in cyclic order.
    pub fn with_corners(mut self, corners: [usize; 4]) -> Result<Self> {
        self.check_corners(&corners)?;
        self.corners = Some(corners);
        Ok(self)
    }

    pub fn with_landmarks(mut self, landmarks: Vec<Landmark>) -> Result<Self> {
        let idx: Vec<usize> = landmarks.iter().map(|l| l.index).collect();
        self.check_indices(&idx, "landmarks")?;
        self.landmarks = landmarks;
        Ok(self)
    }

    /// Replaces the coordinates while keeping every annotation.
    pub fn with_points(&self, points: Vec<[f64; 3]>) -> Result<Self> {
        if points.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                expected: self.points.len(),
                found: points.len(),
            });
        }
        check_points(&points)?;
        let planar = self.planar && points.iter().all(|p| p[2] == 0.0);
        Ok(Self {
            points,
            planar,
            ..self.clone()
        })
    }

    /// Axis-aligned bounding box diagonal length.
    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (0..3).map(|d| (hi[d] - lo[d]).powi(2)).sum::<f64>().sqrt()
    }

    fn check_indices(&self, idx: &[usize], what: &str) -> Result<()> {
        let n = self.points.len();
        let mut seen = vec![false; n];
        for &i in idx {
            if i >= n {
                return Err(Error::InvalidCloud(format!(
                    "{what}: index {i} out of range for {n} points"
                )));
            }
            if seen[i] {
                return Err(Error::InvalidCloud(format!("{what}: index {i} repeated")));
            }
            seen[i] = true;
        }
        Ok(())
    }

    fn check_corners(&self, corners: &[usize; 4]) -> Result<()> {
        self.check_indices(corners, "corners")?;
        let Some(boundary) = &self.boundary else {
            // Validated again once a boundary is attached.
            return Ok(());
        };
        let pos: Vec<usize> = corners
            .iter()
            .map(|c| {
                boundary.iter().position(|b| b == c).ok_or_else(|| {
                    Error::InvalidCloud(format!("corner {c} is not on the boundary"))
                })
            })
            .collect::<Result<_>>()?;
        let m = boundary.len();
        let rel: Vec<usize> = pos.iter().map(|p| (p + m - pos[0]) % m).collect();
        if !rel.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidCloud(
                "corners are not in cyclic boundary order".into(),
            ));
        }
        Ok(())
    }
}

fn check_points(points: &[[f64; 3]]) -> Result<()> {
    let mut seen: HashMap<[u64; 3], usize> = HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCloud(format!("point {i} is not finite")));
        }
        // +0.0 and -0.0 compare equal; normalise before hashing.
        let key = [p[0] + 0.0, p[1] + 0.0, p[2] + 0.0].map(f64::to_bits);
        if let Some(&first) = seen.get(&key) {
            return Err(Error::DuplicatePoint { first, second: i });
        }
        seen.insert(key, i);
    }
    Ok(())
}

pub(crate) fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
