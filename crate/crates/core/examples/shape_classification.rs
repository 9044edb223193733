//! Teichmüller distance matrix of six noisy bump surfaces from two families,
//! with a 2D classical MDS embedding and leave-one-out classification.
//!
//! `cargo run --release --example shape_classification -- [n]`

use teichmap::shape::{classical_mds, distance_matrix, loocv_nn, RegisterOptions};
use teichmap::synth::{add_noise, bump_surface, correspondences, BumpFamily};

fn main() -> teichmap::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1500);
    let mut clouds = Vec::new();
    let mut labels = Vec::new();
    for (f, family) in [BumpFamily::Single, BumpFamily::Double].into_iter().enumerate() {
        for copy in 0..3 {
            let seed = 10 * f as u64 + copy;
            clouds.push(add_noise(&bump_surface(family, n, seed)?, 0.01, 100 + seed)?);
            labels.push(format!("{family:?}"));
        }
    }
    let dm = distance_matrix(
        &clouds,
        labels.clone(),
        |i, j| correspondences(&clouds[i], &clouds[j]),
        &RegisterOptions::default(),
    )?;
    for (l, row) in dm.labels.iter().zip(&dm.d) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
        println!("{l:<7} {}", cells.join(" "));
    }
    println!("max asymmetry before symmetrizing: {:.3}", dm.max_asymmetry);

    let x = classical_mds(&dm.d, 2)?;
    for (l, p) in labels.iter().zip(&x) {
        println!("{l:<7} ({:+.4}, {:+.4})", p[0], p[1]);
    }
    let report = loocv_nn(&dm.d, &labels)?;
    println!("leave-one-out accuracy: {:.0}%", 100.0 * report.accuracy);
    Ok(())
}
