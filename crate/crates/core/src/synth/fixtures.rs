use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sample_quasi_uniform;
use crate::cloud::{KdTree, Landmark, LandmarkTarget, PointCloud};
use crate::error::{Error, Result};

/// Median distance from a point to its nearest other point.
pub fn median_spacing(cloud: &PointCloud) -> f64 {
    let tree = KdTree::new(cloud.points());
    let mut d: Vec<f64> = cloud
        .points()
        .iter()
        .map(|p| tree.nearest(p, 2).get(1).map_or(0.0, |x| x.1))
        .collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Uniform per-coordinate perturbation in `[-a, a]` with
/// `a = amplitude * median_spacing(cloud)`. Planar clouds stay planar.
pub fn add_noise(cloud: &PointCloud, amplitude: f64, seed: u64) -> Result<PointCloud> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise amplitude {amplitude}")));
    }
    if amplitude == 0.0 {
        return Ok(cloud.clone());
    }
    let a = amplitude * median_spacing(cloud);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = if cloud.is_planar() { 2 } else { 3 };
    let pts = cloud
        .points()
        .iter()
        .map(|p| {
            let mut q = *p;
            for c in q.iter_mut().take(dims) {
                *c += rng.gen_range(-a..=a);
            }
            q
        })
        .collect();
    cloud.with_points(pts)
}

/// Synthetic surface families used for registration and classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BumpFamily {
    /// One central bump; landmarks on a ring around it.
    Single,
    /// Two bumps side by side; landmarks on the peaks and a skewed frame.
    Double,
    /// Face-like relief: nose, eye sockets and a mouth ridge.
    Face,
}

struct Bump {
    center: [f64; 2],
    height: f64,
    width: f64,
}

impl BumpFamily {
    fn bumps(self) -> Vec<Bump> {
        let b = |cx, cy, height, width| Bump {
            center: [cx, cy],
            height,
            width,
        };
        match self {
            BumpFamily::Single => vec![b(0.5, 0.5, 0.3, 0.15)],
            BumpFamily::Double => vec![b(0.3, 0.5, 0.25, 0.1), b(0.7, 0.5, 0.25, 0.1)],
            BumpFamily::Face => vec![
                b(0.5, 0.5, 0.22, 0.08),
                b(0.33, 0.68, -0.07, 0.07),
                b(0.67, 0.68, -0.07, 0.07),
                b(0.5, 0.27, 0.05, 0.06),
                b(0.5, 0.45, 0.08, 0.2),
            ],
        }
    }

    /// Feature positions in the generating unit square, in a fixed order.
    pub fn features(self) -> [[f64; 2]; 6] {
        match self {
            BumpFamily::Single => [
                [0.5, 0.5],
                [0.3, 0.3],
                [0.7, 0.3],
                [0.7, 0.7],
                [0.3, 0.7],
                [0.5, 0.2],
            ],
            BumpFamily::Double => [
                [0.3, 0.5],
                [0.25, 0.25],
                [0.8, 0.3],
                [0.7, 0.5],
                [0.2, 0.75],
                [0.55, 0.15],
            ],
            BumpFamily::Face => [
                [0.5, 0.5],
                [0.33, 0.68],
                [0.67, 0.68],
                [0.4, 0.27],
                [0.6, 0.27],
                [0.5, 0.15],
            ],
        }
    }

    pub fn height(self, p: [f64; 2]) -> f64 {
        self.bumps()
            .iter()
            .map(|b| {
                let d2 = (p[0] - b.center[0]).powi(2) + (p[1] - b.center[1]).powi(2);
                b.height * (-d2 / (2.0 * b.width * b.width)).exp()
            })
            .sum()
    }
}

fn nearest_index(pts: &[[f64; 2]], q: [f64; 2], taken: &[usize]) -> usize {
    (0..pts.len())
        .filter(|i| !taken.contains(i))
        .min_by(|&a, &b| {
            let da = (pts[a][0] - q[0]).powi(2) + (pts[a][1] - q[1]).powi(2);
            let db = (pts[b][0] - q[0]).powi(2) + (pts[b][1] - q[1]).powi(2);
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .expect("cloud has free points")
}

/// A bump surface over the unit square, sampled with about `n` points.
///
/// The cloud carries the square's boundary and corners and six landmarks at
/// the samples nearest to the family's features, in feature order; each
/// landmark's target is the feature position in the generating square.
pub fn bump_surface(family: BumpFamily, n: usize, seed: u64) -> Result<PointCloud> {
    let base = sample_quasi_uniform(1.0, 1.0, n, seed)?;
    let xy = base.xy();
    let mut taken = Vec::new();
    let mut landmarks = Vec::new();
    for f in family.features() {
        let i = nearest_index(&xy, f, &taken);
        taken.push(i);
        landmarks.push(Landmark {
            index: i,
            target: LandmarkTarget::Position(f),
        });
    }
    let pts = xy.iter().map(|p| [p[0], p[1], family.height(*p)]).collect();
    base.with_points(pts)?.with_landmarks(landmarks)
}

/// Point correspondences between two clouds whose landmark lists are in the
/// same feature order.
pub fn correspondences(a: &PointCloud, b: &PointCloud) -> Result<Vec<(usize, usize)>> {
    if a.landmarks().len() != b.landmarks().len() {
        return Err(Error::DimensionMismatch {
            expected: a.landmarks().len(),
            found: b.landmarks().len(),
        });
    }
    Ok(a.landmarks()
        .iter()
        .zip(b.landmarks())
        .map(|(x, y)| (x.index, y.index))
        .collect())
}

/// Unit square with four landmarks near `(0.3, 0.3)`, `(0.7, 0.3)`,
/// `(0.7, 0.7)`, `(0.3, 0.7)`, each pushed `shift` further from the center.
pub fn square_landmark_fixture(n: usize, shift: f64, seed: u64) -> Result<PointCloud> {
    let base = sample_quasi_uniform(1.0, 1.0, n, seed)?;
    let xy = base.xy();
    let mut taken = Vec::new();
    let mut landmarks = Vec::new();
    for f in [[0.3, 0.3], [0.7, 0.3], [0.7, 0.7], [0.3, 0.7]] {
        let i = nearest_index(&xy, f, &taken);
        taken.push(i);
        let p = xy[i];
        let d = [p[0] - 0.5, p[1] - 0.5];
        let len = d[0].hypot(d[1]);
        landmarks.push(Landmark {
            index: i,
            target: LandmarkTarget::Position([p[0] + shift * d[0] / len, p[1] + shift * d[1] / len]),
        });
    }
    base.with_landmarks(landmarks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_bounds_and_determinism() {
        let c = sample_quasi_uniform(1.0, 1.0, 400, 1).unwrap();
        assert_eq!(add_noise(&c, 0.0, 3).unwrap(), c);
        let a = median_spacing(&c) * 0.05;
        let n1 = add_noise(&c, 0.05, 3).unwrap();
        for (p, q) in c.points().iter().zip(n1.points()) {
            assert!((0..3).all(|k| (p[k] - q[k]).abs() <= a));
        }
        assert!(n1.is_planar());
        assert_eq!(add_noise(&c, 0.05, 3).unwrap(), n1);
        assert_ne!(add_noise(&c, 0.05, 4).unwrap(), n1);
    }

    #[test]
    fn bump_landmarks_follow_features() {
        let c = bump_surface(BumpFamily::Double, 800, 2).unwrap();
        assert_eq!(c.landmarks().len(), 6);
        assert!(!c.is_planar());
        for (l, f) in c.landmarks().iter().zip(BumpFamily::Double.features()) {
            let p = c.point(l.index);
            assert!((p[0] - f[0]).hypot(p[1] - f[1]) < 0.06);
        }
        let d = bump_surface(BumpFamily::Double, 800, 9).unwrap();
        assert_eq!(correspondences(&c, &d).unwrap().len(), 6);
    }

    #[test]
    fn square_fixture_targets_move_outward() {
        let c = square_landmark_fixture(500, 0.05, 4).unwrap();
        for l in c.landmarks() {
            let p = c.point(l.index);
            let LandmarkTarget::Position(t) = l.target else { panic!() };
            let r0 = (p[0] - 0.5).hypot(p[1] - 0.5);
            let r1 = (t[0] - 0.5).hypot(t[1] - 0.5);
            assert!((r1 - r0 - 0.05).abs() < 1e-12);
        }
    }
}
