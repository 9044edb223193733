//! Synthetic clouds, analytic test maps, noise and the operator benchmark.

mod bench;
mod fixtures;
mod maps;
mod sample;

pub use bench::{
    bench_operators, bench_source, position_errors, write_bench_csv, BenchMap, BenchRecord, BenchScheme,
};
pub use fixtures::{
    add_noise, bump_surface, correspondences, median_spacing, square_landmark_fixture, BumpFamily,
};
pub use maps::{
    log_arcsin, log_arcsin_inverse_mu, log_arcsin_jacobian, log_arcsin_mu, map_log_arcsin, map_stereographic,
    stereographic,
};
pub use sample::{sample_disk, sample_quasi_uniform};
