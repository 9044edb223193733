use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::register::register_parameterized;
use super::RegisterOptions;
use crate::beltrami::teich_distance;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::param::{conformal_parameterize, Status};

/// Asymmetry `|d_ij - d_ji|` above which a warning is logged.
pub const ASYMMETRY_WARN: f64 = 0.05;

/// Pairwise Teichmüller distances, symmetrized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    /// `(D + D^T) / 2` with a zero diagonal.
    pub d: Vec<Vec<f64>>,
    /// Directed distances before symmetrization.
    pub raw: Vec<Vec<f64>>,
    pub max_asymmetry: f64,
}

impl DistanceMatrix {
    /// Symmetrizes directed distances. The diagonal is set to 0.
    pub fn from_raw(raw: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let m = raw.len();
        if labels.len() != m || raw.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: labels.len(),
            });
        }
        let mut d = vec![vec![0.0; m]; m];
        let mut max_asymmetry = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    d[i][j] = 0.5 * (raw[i][j] + raw[j][i]);
                    max_asymmetry = max_asymmetry.max((raw[i][j] - raw[j][i]).abs());
                }
            }
        }
        if max_asymmetry > ASYMMETRY_WARN {
            log::warn!("distance matrix asymmetry {max_asymmetry:.3} before symmetrization");
        }
        Ok(Self {
            labels,
            d,
            raw,
            max_asymmetry,
        })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Triples `(i, j, k)` with `d_ik > d_ij + d_jk + tol`.
    pub fn triangle_violations(&self, tol: f64) -> Vec<(usize, usize, usize)> {
        let m = self.len();
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if i != k && self.d[i][k] > self.d[i][j] + self.d[j][k] + tol {
                        out.push((i, j, k));
                    }
                }
            }
        }
        out
    }

    /// Square csv with a `label` column and one column per cloud.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = format!("label,{}\n", self.labels.join(","));
        for (l, row) in self.labels.iter().zip(&self.d) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            s.push_str(&format!("{l},{}\n", cells.join(",")));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(s.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// Teichmüller distance matrix of a set of clouds. `correspondences(i, j)`
/// gives the landmark pairs from cloud `i` to cloud `j`. Every cloud is
/// flattened once; the `M (M - 1)` directed registrations run in parallel.
/// Any failed pair makes the whole matrix an error listing the missing pairs.
pub fn distance_matrix<F>(
    clouds: &[PointCloud],
    labels: Vec<String>,
    correspondences: F,
    opts: &RegisterOptions,
) -> Result<DistanceMatrix>
where
    F: Fn(usize, usize) -> Result<Vec<(usize, usize)>> + Sync,
{
    let m = clouds.len();
    if labels.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: labels.len(),
        });
    }
    let params = clouds
        .par_iter()
        .map(|c| conformal_parameterize(c, &opts.conformal))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let results: Vec<((usize, usize), Option<f64>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = correspondences(i, j)
                .and_then(|c| register_parameterized(&params[i], &params[j], &clouds[j], &c, &opts.teich))
                .and_then(|r| {
                    if r.planar.status == Status::Diverged {
                        return Err(Error::InvalidArgument(r.planar.failure.unwrap_or_default()));
                    }
                    if r.planar.status == Status::MaxIterations {
                        log::warn!("pair ({i}, {j}) did not converge; using the best iterate");
                    }
                    teich_distance(r.k)
                });
            match d {
                Ok(v) => ((i, j), Some(v)),
                Err(e) => {
                    log::warn!("pair ({i}, {j}) failed: {e}");
                    ((i, j), None)
                }
            }
        })
        .collect();
    let mut raw = vec![vec![0.0; m]; m];
    let mut missing = Vec::new();
    for ((i, j), d) in results {
        match d {
            Some(v) => raw[i][j] = v,
            None => missing.push((i, j)),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingEntries(missing));
    }
    DistanceMatrix::from_raw(raw, labels)
}

/// Classical MDS: top `dims` eigenpairs of `-1/2 J D^2 J`. Axes with a
/// non-positive eigenvalue are left at zero. Each axis is signed so that its
/// first nonzero coordinate is positive.
pub fn classical_mds(d: &[Vec<f64>], dims: usize) -> Result<Vec<Vec<f64>>> {
    let m = d.len();
    if d.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument("distance matrix is not square".into()));
    }
    for i in 0..m {
        if d[i][i] != 0.0 {
            return Err(Error::InvalidArgument(format!("nonzero diagonal entry at {i}")));
        }
        for j in 0..i {
            if d[i][j] != d[j][i] {
                return Err(Error::InvalidArgument(format!("asymmetric entry ({i}, {j})")));
            }
        }
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let d2 = DMatrix::from_fn(m, m, |i, j| d[i][j] * d[i][j]);
    let j = DMatrix::identity(m, m) - DMatrix::from_element(m, m, 1.0 / m as f64);
    let b = -0.5 * &j * d2 * &j;
    let scale = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    if scale > 0.0 && eig.eigenvalues[order[0]] <= tol {
        return Err(Error::NegativeSpectrum);
    }
    let mut out = vec![vec![0.0; dims]; m];
    for (axis, &e) in order.iter().take(dims).enumerate() {
        let lambda = eig.eigenvalues[e];
        if lambda <= tol {
            continue;
        }
        let v = eig.eigenvectors.column(e);
        let first = v.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        let sign = if first < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            out[i][axis] = sign * v[i] * lambda.sqrt();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub index: usize,
    pub label: String,
    pub predicted: String,
    pub nearest: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub predictions: Vec<Prediction>,
    pub accuracy: f64,
}

/// Leave-one-out nearest-neighbor classification under `d`. Ties go to the
/// lower index.
pub fn loocv_nn(d: &[Vec<f64>], labels: &[String]) -> Result<ClassificationReport> {
    let m = d.len();
    if labels.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: labels.len(),
        });
    }
    let mut classes: Vec<&String> = labels.iter().collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidArgument("at least two classes are required".into()));
    }
    if let Some(c) = classes.iter().find(|c| labels.iter().filter(|l| l == *c).count() < 2) {
        return Err(Error::InvalidArgument(format!("class '{c}' has fewer than two members")));
    }
    let predictions: Vec<Prediction> = (0..m)
        .map(|i| {
            let nearest = (0..m)
                .filter(|&j| j != i)
                .min_by(|&a, &b| d[i][a].total_cmp(&d[i][b]).then(a.cmp(&b)))
                .expect("at least two clouds");
            Prediction {
                index: i,
                label: labels[i].clone(),
                predicted: labels[nearest].clone(),
                nearest,
                distance: d[i][nearest],
            }
        })
        .collect();
    let correct = predictions.iter().filter(|p| p.label == p.predicted).count();
    Ok(ClassificationReport {
        accuracy: correct as f64 / m as f64,
        predictions,
    })
}

/// `index,label,x1,..` rows of an embedding.
pub fn write_embedding_csv(path: &Path, labels: &[String], coords: &[Vec<f64>]) -> Result<()> {
    let dims = coords.first().map_or(0, |c| c.len());
    let axes: Vec<String> = (1..=dims).map(|a| format!("x{a}")).collect();
    let mut s = format!("index,label,{}\n", axes.join(","));
    for (i, (l, c)) in labels.iter().zip(coords).enumerate() {
        let cells: Vec<String> = c.iter().map(|v| format!("{v:.17e}")).collect();
        s.push_str(&format!("{i},{l},{}\n", cells.join(",")));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(s.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn dist(p: &[[f64; 2]]) -> Vec<Vec<f64>> {
        p.iter().map(|a| p.iter().map(|b| (a[0] - b[0]).hypot(a[1] - b[1])).collect()).collect()
    }

    #[test]
    fn mds_recovers_planar_configuration() {
        let p = [[0.0, 0.0], [1.0, 0.0], [1.0, 2.0], [-0.5, 1.0]];
        let x = classical_mds(&dist(&p), 2).unwrap();
        // Procrustes: compare pairwise distances, which a rigid motion preserves.
        let q: Vec<[f64; 2]> = x.iter().map(|r| [r[0], r[1]]).collect();
        let (a, b) = (dist(&p), dist(&q));
        for i in 0..4 {
            for j in 0..4 {
                assert!((a[i][j] - b[i][j]).abs() < 1e-8);
            }
        }
        for axis in 0..2 {
            let first = x.iter().map(|r| r[axis]).find(|v| v.abs() > 1e-12).unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn mds_separates_clusters() {
        let m = 6;
        let d: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 0.0 } else if i / 3 == j / 3 { 0.1 } else { 1.0 }).collect())
            .collect();
        let x = classical_mds(&d, 2).unwrap();
        let c0 = (x[0][0] + x[1][0] + x[2][0]) / 3.0;
        let c1 = (x[3][0] + x[4][0] + x[5][0]) / 3.0;
        let spread = (0..m)
            .map(|i| (x[i][0] - if i < 3 { c0 } else { c1 }).hypot(x[i][1]))
            .fold(0.0, f64::max);
        assert!((c0 - c1).abs() > 5.0 * spread);
    }

    #[test]
    fn mds_degenerate_and_invalid() {
        let z = vec![vec![0.0; 3]; 3];
        assert!(classical_mds(&z, 2).unwrap().iter().all(|r| r == &vec![0.0, 0.0]));
        let bad = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(classical_mds(&bad, 2).is_err());
    }

    #[test]
    fn symmetrization() {
        let raw = vec![vec![0.0, 0.3, 0.1], vec![0.5, 0.0, 0.2], vec![0.1, 0.2, 0.0]];
        let d = DistanceMatrix::from_raw(raw, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(d.d[0][1], d.d[1][0]);
        assert_eq!(d.d[0][1], 0.4);
        assert!((d.max_asymmetry - 0.2).abs() < 1e-15);
        assert_eq!(d.triangle_violations(0.0), vec![(0, 2, 1), (1, 2, 0)]);
        let k = 1.0 / 3.0;
        let e = teich_distance(k).unwrap();
        assert!((e - 0.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn loocv_on_blocks_and_shuffles() {
        let m = 10;
        let d: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 0.0 } else if i / 5 == j / 5 { 0.1 } else { 1.0 }).collect())
            .collect();
        let labels: Vec<String> = (0..m).map(|i| if i < 5 { "a" } else { "b" }.to_string()).collect();
        assert_eq!(loocv_nn(&d, &labels).unwrap().accuracy, 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut total = 0.0;
        for _ in 0..100 {
            let mut l = labels.clone();
            l.shuffle(&mut rng);
            total += loocv_nn(&d, &l).unwrap().accuracy;
        }
        assert!(total / 100.0 < 0.6, "{}", total / 100.0);
        assert!(loocv_nn(&d, &vec!["a".to_string(); m]).is_err());
    }
}
