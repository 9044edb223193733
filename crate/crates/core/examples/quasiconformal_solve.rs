//! Reconstructs a quasi-conformal map from its Beltrami coefficient by
//! solving the hybrid system for several weights `gamma`.
//!
//! `cargo run --release --example quasiconformal_solve -- [n]`

use teichmap::qc::{assemble_hybrid, assemble_m1, assemble_m3, solve_constrained, Domain, Gamma, M3Scheme};
use teichmap::mls::WeightKind;
use teichmap::synth::{log_arcsin_inverse_mu, map_log_arcsin, sample_quasi_uniform};
use teichmap::ComplexField;

fn main() -> teichmap::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    // The image of a square under the analytic map; the goal is to map it back.
    let square = sample_quasi_uniform(1.0, 1.0, n, 3)?;
    let image = map_log_arcsin(&square)?;
    let (p, truth) = (image.xy(), square.xy());
    let m = p.len();
    let boundary = image.boundary().expect("sampled clouds carry a boundary").to_vec();
    let domain = Domain::planar(&p, boundary.clone(), 12, WeightKind::Gaussian)?;
    let mu = ComplexField::new(truth.iter().map(|q| log_arcsin_inverse_mu(*q)).collect::<teichmap::Result<_>>()?);

    let m1 = assemble_m1(&domain, &mu)?;
    let m3 = assemble_m3(&domain, &mu, M3Scheme::Combined)?;
    let fixed: Vec<(usize, f64)> = boundary
        .iter()
        .flat_map(|&i| [(i, truth[i][0]), (i + m, truth[i][1])])
        .collect();
    println!("gamma,method,max_error");
    for gamma in [Gamma::Finite(0.5), Gamma::Finite(1.0), Gamma::Finite(50.0), Gamma::Infinite] {
        let op = assemble_hybrid(&m1, &m3, gamma)?;
        let s = solve_constrained(&op, &vec![0.0; 2 * m], &fixed)?;
        let err = (0..m)
            .map(|i| (s.x[i] - truth[i][0]).hypot(s.x[i + m] - truth[i][1]))
            .fold(0.0, f64::max);
        println!("{gamma},{:?},{err:.3e}", s.method);
    }
    Ok(())
}
