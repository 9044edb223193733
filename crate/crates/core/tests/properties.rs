use proptest::prelude::*;

use teichmap::beltrami::{alpha_coeffs, diffuse_pcbc, teich_distance, ComplexField};
use teichmap::cloud::{build_knn, load_cloud, save_cloud, CloudFormat, PointCloud};
use teichmap::mls::{StencilSet, WeightKind};
use teichmap::param::spectral_norm_diff;
use teichmap::shape::{classical_mds, loocv_nn, DistanceMatrix};
use teichmap::synth::sample_quasi_uniform;
use teichmap::Complex64;

fn grid_stencils() -> (Vec<[f64; 2]>, StencilSet) {
    let c = sample_quasi_uniform(1.0, 1.0, 300, 1).unwrap();
    let xy = c.xy();
    let s = StencilSet::planar(&xy, &build_knn(&c, 12).unwrap(), WeightKind::Gaussian).unwrap();
    (xy, s)
}

fn euclid(p: &[[f64; 3]]) -> Vec<Vec<f64>> {
    p.iter()
        .map(|a| {
            p.iter()
                .map(|b| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt())
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affine_maps_have_their_constant_coefficient(ar in 0.5f64..2.0, ai in -1.0f64..1.0, r in 0.0f64..0.9, t in 0.0f64..std::f64::consts::TAU) {
        let (xy, s) = grid_stencils();
        let a = Complex64::new(ar, ai);
        let b = a * Complex64::from_polar(r, t);
        let f: Vec<Complex64> = xy.iter().map(|p| { let z = Complex64::new(p[0], p[1]); a * z + b * z.conj() }).collect();
        let mu = diffuse_pcbc(&s, &f).unwrap();
        for m in mu.values() {
            prop_assert!((m - b / a).norm() < 1e-8);
        }
    }

    #[test]
    fn coefficient_matrix_is_positive_definite_with_unit_determinant(r in 0.0f64..0.99, t in 0.0f64..std::f64::consts::TAU) {
        let [a1, a2, a3] = alpha_coeffs(Complex64::from_polar(r, t)).unwrap();
        prop_assert!(a1 > 0.0 && a3 > 0.0);
        prop_assert!((a1 * a3 - a2 * a2 - 1.0).abs() < 1e-9 * a1.max(a3).powi(2));
    }

    #[test]
    fn distance_is_monotone_and_nonnegative(a in 0.0f64..0.99, b in 0.0f64..0.99) {
        let (da, db) = (teich_distance(a).unwrap(), teich_distance(b).unwrap());
        prop_assert!(da >= 0.0);
        prop_assert_eq!(a < b, da < db);
    }

    #[test]
    fn clamping_bounds_every_norm(v in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..50), max in 0.1f64..1.0) {
        let f = ComplexField::new(v.iter().map(|&(x, y)| Complex64::new(x, y)).collect());
        let (c, n) = f.clamped(max);
        prop_assert!(c.max_abs() <= max * (1.0 + 1e-12));
        prop_assert_eq!(n, f.values().iter().filter(|z| z.norm() > max).count());
        let total: f64 = f.histogram(10).iter().map(|b| b.fraction).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_is_a_norm(v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40), s in -3.0f64..3.0) {
        let a: Vec<[f64; 2]> = v.iter().map(|&(x, y)| [x, y]).collect();
        let z = vec![[0.0, 0.0]; a.len()];
        let sa: Vec<[f64; 2]> = a.iter().map(|p| [s * p[0], s * p[1]]).collect();
        let n = spectral_norm_diff(&a, &z);
        prop_assert!((spectral_norm_diff(&sa, &z) - s.abs() * n).abs() < 1e-9);
        let fro = a.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>().sqrt();
        prop_assert!(n <= fro + 1e-12 && n >= fro / 2f64.sqrt() - 1e-12);
    }

    #[test]
    fn mds_preserves_euclidean_distances(p in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 4..9)) {
        let pts: Vec<[f64; 3]> = p.iter().map(|&(x, y, z)| [x, y, z]).collect();
        let d = euclid(&pts);
        let x = classical_mds(&d, 3).unwrap();
        let q: Vec<[f64; 3]> = x.iter().map(|r| [r[0], r[1], r[2]]).collect();
        let e = euclid(&q);
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                prop_assert!((d[i][j] - e[i][j]).abs() < 1e-6 * (1.0 + d[i][j]));
            }
        }
    }

    #[test]
    fn symmetrized_matrix_is_symmetric(v in prop::collection::vec(0.0f64..2.0, 25)) {
        let raw: Vec<Vec<f64>> = (0..5).map(|i| (0..5).map(|j| if i == j { 0.0 } else { v[5 * i + j] }).collect()).collect();
        let labels: Vec<String> = (0..5).map(|i| i.to_string()).collect();
        let dm = DistanceMatrix::from_raw(raw, labels).unwrap();
        for i in 0..5 {
            prop_assert_eq!(dm.d[i][i], 0.0);
            for j in 0..5 {
                prop_assert_eq!(dm.d[i][j], dm.d[j][i]);
            }
        }
    }

    #[test]
    fn loocv_is_a_fraction(v in prop::collection::vec(0.01f64..2.0, 36)) {
        let raw: Vec<Vec<f64>> = (0..6).map(|i| (0..6).map(|j| if i == j { 0.0 } else { v[6 * i + j] }).collect()).collect();
        let labels: Vec<String> = (0..6).map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string()).collect();
        let dm = DistanceMatrix::from_raw(raw, labels.clone()).unwrap();
        let r = loocv_nn(&dm.d, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.accuracy));
        prop_assert_eq!(r.predictions.len(), 6);
    }

    #[test]
    fn clouds_round_trip_through_every_format(p in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3), 3..30)) {
        let mut pts: Vec<[f64; 3]> = p.iter().map(|&(x, y, z)| [x, y, z]).collect();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
        pts.dedup();
        let cloud = PointCloud::new(pts).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [("c.xyz", CloudFormat::Xyz), ("c.ply", CloudFormat::PlyAscii), ("c.csv", CloudFormat::Csv)] {
            let path = dir.path().join(name);
            save_cloud(&cloud, &path, fmt).unwrap();
            let back = load_cloud(&path, fmt).unwrap();
            prop_assert_eq!(back.points(), cloud.points());
        }
    }
}
