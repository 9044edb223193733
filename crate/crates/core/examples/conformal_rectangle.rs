//! Flattens a curved disk-type surface onto a rectangle and reports its
//! conformal module.
//!
//! `cargo run --release --example conformal_rectangle -- [n] [out.csv]`

use teichmap::param::{conformal_parameterize, ConformalOptions};
use teichmap::synth::{bump_surface, BumpFamily};

fn main() -> teichmap::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3000);
    let cloud = bump_surface(BumpFamily::Face, n, 1)?;
    let r = conformal_parameterize(&cloud, &ConformalOptions::default())?;

    println!("points        {}", cloud.len());
    println!("height h      {:.5}", r.rect.height);
    println!("energy        {:.3e}", r.energy);
    println!("mean |mu|     {:.4}  (surface to rectangle)", r.pcbc.mean_abs());
    println!("clamped       {}", r.clamped);
    if let Some(path) = args.next() {
        r.mapping.write_csv(path.as_ref())?;
        println!("wrote {path}");
    }
    Ok(())
}
