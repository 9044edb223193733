use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{log_arcsin_inverse_mu, map_log_arcsin, map_stereographic, sample_quasi_uniform};
use crate::beltrami::ComplexField;
use crate::cloud::{build_charts, build_knn, uniformity_report, PointCloud};
use crate::error::{Error, Result};
use crate::mls::WeightKind;
use crate::qc::{assemble_m3, solve_constrained, Domain, M3Scheme};

/// Neighbors per point for surface and planar benchmark clouds.
const K_SURFACE: usize = 16;
const K_PLANAR: usize = 12;

/// Analytic map used to build a benchmark cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMap {
    /// Conformal map of `[-1, 1]²` onto a patch of the unit sphere.
    Stereographic,
    /// Quasi-conformal planar map of `[0, 1]²`.
    LogArcsin,
}

/// Operator discretization being compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BenchScheme {
    LocalMesh,
    MlsSpecial,
    Combined,
}

impl BenchScheme {
    pub const ALL: [BenchScheme; 3] = [BenchScheme::LocalMesh, BenchScheme::MlsSpecial, BenchScheme::Combined];

    fn setup(self) -> (WeightKind, M3Scheme) {
        match self {
            BenchScheme::LocalMesh => (WeightKind::Gaussian, M3Scheme::LocalMeshOnly),
            BenchScheme::MlsSpecial => (WeightKind::Special, M3Scheme::MlsOnly),
            BenchScheme::Combined => (WeightKind::Gaussian, M3Scheme::Combined),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BenchScheme::LocalMesh => "local-mesh",
            BenchScheme::MlsSpecial => "mls-special",
            BenchScheme::Combined => "combined",
        }
    }
}

/// Recovery errors of one scheme on one cloud. Failed solves carry infinite
/// errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub map: BenchMap,
    pub scheme: BenchScheme,
    pub max_position_error: f64,
    /// Mean of `|dx| + |dy|`.
    pub average_1norm_error: f64,
    /// Mean of `dx² + dy²`.
    pub average_2norm_error: f64,
    pub n: usize,
    /// Fill distance of the planar sample.
    pub h: f64,
    pub seed: u64,
}

impl BenchRecord {
    pub const CSV_HEADER: &'static str =
        "map,scheme,max_position_error,average_1norm_error,average_2norm_error,n,h,seed";

    pub fn csv_row(&self) -> String {
        let map = match self.map {
            BenchMap::Stereographic => "stereographic",
            BenchMap::LogArcsin => "log-arcsin",
        };
        format!(
            "{map},{},{:e},{:e},{:e},{},{:e},{}",
            self.scheme.name(),
            self.max_position_error,
            self.average_1norm_error,
            self.average_2norm_error,
            self.n,
            self.h,
            self.seed
        )
    }

    pub fn failed(&self) -> bool {
        !self.max_position_error.is_finite()
    }
}

pub fn write_bench_csv(path: &Path, records: &[BenchRecord]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut s = String::from(BenchRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Error metrics `(max, mean 1-norm, mean squared 2-norm)` of `got` against
/// `truth`.
pub fn position_errors(got: &[[f64; 2]], truth: &[[f64; 2]]) -> (f64, f64, f64) {
    let n = truth.len().max(1) as f64;
    let mut max = 0.0f64;
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for (g, t) in got.iter().zip(truth) {
        let (dx, dy) = (g[0] - t[0], g[1] - t[1]);
        max = max.max(dx.hypot(dy));
        l1 += dx.abs() + dy.abs();
        l2 += dx * dx + dy * dy;
    }
    (max, l1 / n, l2 / n)
}

/// The sampled source square for a benchmark map.
pub fn bench_source(map: BenchMap, n: usize, seed: u64) -> Result<PointCloud> {
    match map {
        BenchMap::Stereographic => {
            let c = sample_quasi_uniform(2.0, 2.0, n, seed)?;
            let pts = c.points().iter().map(|p| [p[0] - 1.0, p[1] - 1.0, 0.0]).collect();
            c.with_points(pts)
        }
        BenchMap::LogArcsin => sample_quasi_uniform(1.0, 1.0, n, seed),
    }
}

fn recover(map: BenchMap, image: &PointCloud, src: &PointCloud, scheme: BenchScheme) -> Result<Vec<[f64; 2]>> {
    let boundary = image.boundary().ok_or(Error::MissingBoundary)?.to_vec();
    let (weight, m3_scheme) = scheme.setup();
    let (domain, mu) = match map {
        BenchMap::Stereographic => {
            let nbrs = build_knn(image, K_SURFACE)?;
            let charts = build_charts(image, &nbrs)?;
            let d = Domain::from_charts(&charts, nbrs, boundary.clone(), weight)?;
            let mu = ComplexField::constant(image.len(), Complex64::new(0.0, 0.0));
            (d, mu)
        }
        BenchMap::LogArcsin => {
            let d = Domain::planar(&image.xy(), boundary.clone(), K_PLANAR, weight)?;
            let mu = src
                .xy()
                .iter()
                .map(|p| log_arcsin_inverse_mu(*p))
                .collect::<Result<Vec<_>>>()?;
            (d, ComplexField::new(mu))
        }
    };
    let m3 = assemble_m3(&domain, &mu, m3_scheme)?;
    let truth = src.xy();
    let (lo, hi) = match map {
        BenchMap::Stereographic => (-1.0, 1.0),
        BenchMap::LogArcsin => (0.0, 1.0),
    };
    let zero = vec![0.0; image.len()];
    let mut out = vec![[0.0; 2]; image.len()];
    for c in 0..2 {
        let cons = edge_constraints(&truth, &boundary, c, lo, hi);
        let s = solve_constrained(&m3, &zero, &cons)?;
        for (o, v) in out.iter_mut().zip(&s.x) {
            o[c] = *v;
        }
    }
    Ok(out)
}

/// Boundary constraints for coordinate `c` of a map onto `[lo, hi]²`: points on
/// an edge normal to axis `c` keep their coordinate, the other one slides.
fn edge_constraints(truth: &[[f64; 2]], boundary: &[usize], c: usize, lo: f64, hi: f64) -> Vec<(usize, f64)> {
    let tol = 1e-9 * (hi - lo);
    boundary
        .iter()
        .filter_map(|&b| {
            let v = truth[b][c];
            ((v - lo).abs() <= tol || (v - hi).abs() <= tol).then_some((b, v))
        })
        .collect()
}

/// Samples a square, pushes it through `map`, and maps it back with each
/// scheme by solving the (generalized) Laplace equation onto the square. Each
/// boundary point keeps its true coordinate normal to its edge and slides
/// along it; corners are fixed. One record per scheme, in the order given.
pub fn bench_operators(map: BenchMap, n: usize, seed: u64, schemes: &[BenchScheme]) -> Result<Vec<BenchRecord>> {
    let src = bench_source(map, n, seed)?;
    let image = match map {
        BenchMap::Stereographic => map_stereographic(&src)?,
        BenchMap::LogArcsin => map_log_arcsin(&src)?,
    };
    let h = uniformity_report(&src, &build_knn(&src, K_PLANAR)?).fill_distance;
    let truth = src.xy();
    Ok(schemes
        .iter()
        .map(|&scheme| {
            let (max, l1, l2) = match recover(map, &image, &src, scheme) {
                Ok(got) => position_errors(&got, &truth),
                Err(e) => {
                    log::warn!("{} failed: {e}", scheme.name());
                    (f64::INFINITY, f64::INFINITY, f64::INFINITY)
                }
            };
            BenchRecord {
                map,
                scheme,
                max_position_error: max,
                average_1norm_error: l1,
                average_2norm_error: l2,
                n: src.len(),
                h,
                seed,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_metrics() {
        let (m, a, b) = position_errors(&[[3.0, 4.0], [0.0, 0.0]], &[[0.0, 0.0], [0.0, 0.0]]);
        assert_eq!((m, a, b), (5.0, 3.5, 12.5));
    }

    #[test]
    fn bench_is_deterministic_and_accurate() {
        let a = bench_operators(BenchMap::LogArcsin, 400, 3, &BenchScheme::ALL).unwrap();
        let b = bench_operators(BenchMap::LogArcsin, 400, 3, &BenchScheme::ALL).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let comb = &a[2];
        assert!(comb.max_position_error < 0.1, "{comb:?}");
        assert!(a.iter().all(|r| r.average_2norm_error <= r.max_position_error.powi(2)));
    }

    #[test]
    fn stereographic_combined_recovers_square() {
        let r = bench_operators(BenchMap::Stereographic, 500, 1, &[BenchScheme::Combined]).unwrap();
        assert!(r[0].max_position_error < 0.2, "{:?}", r[0]);
        assert!(r[0].csv_row().starts_with("stereographic,combined,"));
    }
}
