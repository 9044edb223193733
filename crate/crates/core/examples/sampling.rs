//! Quasi-uniform samples of a rectangle and a disk, with their uniformity
//! diagnostics and detected boundary.
//!
//! `cargo run --release --example sampling -- [n]`

use teichmap::cloud::{build_knn, detect_boundary, uniformity_report};
use teichmap::synth::{sample_disk, sample_quasi_uniform};

fn main() -> teichmap::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    for (name, cloud) in [("rectangle 1x2", sample_quasi_uniform(1.0, 2.0, n, 1)?), ("disk r=1", sample_disk(1.0, n, 1)?)] {
        let nbrs = build_knn(&cloud, 12)?;
        let u = uniformity_report(&cloud, &nbrs);
        // Drop the annotation so the boundary is found from the points alone.
        let bare = teichmap::PointCloud::planar(&cloud.xy())?;
        let found = detect_boundary(&bare, &build_knn(&bare, 12)?)?;
        println!("{name}: {} points, {} on the sampled boundary, {} detected", cloud.len(), cloud.boundary().map_or(0, |b| b.len()), found.len());
        println!("  {u:?}");
    }
    Ok(())
}
