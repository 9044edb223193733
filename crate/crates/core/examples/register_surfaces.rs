//! Registers one bump surface onto another through six corresponding
//! landmarks and reports how far each landmark lands from its partner.
//!
//! `cargo run --release --example register_surfaces -- [n]`

use teichmap::shape::{register, RegisterOptions};
use teichmap::synth::{bump_surface, correspondences, BumpFamily};

fn main() -> teichmap::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let src = bump_surface(BumpFamily::Single, n, 1)?;
    let dst = bump_surface(BumpFamily::Double, n, 2)?;
    let corr = correspondences(&src, &dst)?;
    let r = register(&src, &dst, &corr, &RegisterOptions::default())?;

    println!("{:?} after {} iterations, k = {:.4}", r.planar.status, r.planar.iterations, r.k);
    for &(i, j) in &corr {
        let (a, b) = (r.mapped[i], dst.point(j));
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        println!("landmark {i:>5} -> {j:>5}  miss {d:.2e}");
    }
    println!("points outside the target image: {}", r.hull_misses);
    Ok(())
}
