//! Estimates the Beltrami coefficient of an analytic quasi-conformal map from
//! samples alone and compares it with the exact value.
//!
//! `cargo run --release --example beltrami_coefficient -- [n]`

use teichmap::beltrami::diffuse_pcbc;
use teichmap::cloud::build_knn;
use teichmap::mls::{StencilSet, WeightKind};
use teichmap::synth::{log_arcsin, log_arcsin_mu, sample_quasi_uniform};
use teichmap::Complex64;

fn main() -> teichmap::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4000);
    let cloud = sample_quasi_uniform(1.0, 1.0, n, 1)?;
    let xy = cloud.xy();
    let stencils = StencilSet::planar(&xy, &build_knn(&cloud, 12)?, WeightKind::Gaussian)?;
    let f = xy
        .iter()
        .map(|p| log_arcsin(*p).map(|w| Complex64::new(w[0], w[1])))
        .collect::<teichmap::Result<Vec<_>>>()?;
    let mu = diffuse_pcbc(&stencils, &f)?;

    let mut worst = 0.0f64;
    for (p, m) in xy.iter().zip(mu.values()) {
        worst = worst.max((m - log_arcsin_mu(*p)?).norm());
    }
    println!("points        {}", cloud.len());
    println!("mean |mu|     {:.5}", mu.mean_abs());
    println!("max |mu|      {:.5}", mu.max_abs());
    println!("max error     {worst:.3e}");
    for b in mu.histogram(10) {
        println!("[{:.1}, {:.1})  {:>6}", b.lo, b.hi, b.count);
    }
    Ok(())
}
