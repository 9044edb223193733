//! Landmark-matching Teichmüller map of the unit square: four interior points
//! are pushed outward and the iteration finds the map with the most uniform
//! distortion that honors them.
//!
//! `cargo run --release --example teichmuller_landmarks -- [n] [shift]`

use teichmap::beltrami::teich_distance;
use teichmap::param::{teichmuller_parameterize, RectDomain, TeichOptions};
use teichmap::synth::square_landmark_fixture;
use teichmap::LandmarkTarget;

fn main() -> teichmap::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4000);
    let shift: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let cloud = square_landmark_fixture(n, shift, 3)?;
    let landmarks: Vec<(usize, [f64; 2])> = cloud
        .landmarks()
        .iter()
        .filter_map(|l| match l.target {
            LandmarkTarget::Position(t) => Some((l.index, t)),
            LandmarkTarget::Partner(_) => None,
        })
        .collect();
    let boundary = cloud.boundary().expect("fixture has a boundary");
    let r = teichmuller_parameterize(
        &cloud.xy(),
        boundary,
        RectDomain::unit(),
        RectDomain::unit(),
        &landmarks,
        &TeichOptions::default(),
    )?;

    println!("iter  k        var|mu|    step");
    for d in r.mapping.diagnostics.iter().step_by(10) {
        println!("{:>4}  {:.5}  {:.3e}  {:.2e}", d.iteration, d.k, d.var_abs, d.step_norm);
    }
    println!("{:?} after {} iterations", r.status, r.iterations);
    println!("k = {:.5}, distance = {:.5}", r.k, teich_distance(r.k)?);
    let c = &r.certificate;
    println!("cv {:.3}, real fraction {:.3}, sigma gap {:.3}", c.cv, c.real_fraction, c.sigma_gap);
    Ok(())
}
