//! Compares the three operator discretizations on both analytic maps.
//!
//! `cargo run --release --example operator_bench -- [n] [seeds]`

use teichmap::synth::{bench_operators, BenchMap, BenchRecord, BenchScheme};

fn main() -> teichmap::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4000);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    println!("{}", BenchRecord::CSV_HEADER);
    for map in [BenchMap::Stereographic, BenchMap::LogArcsin] {
        for seed in 0..seeds {
            for r in bench_operators(map, n, seed, &BenchScheme::ALL)? {
                println!("{}", r.csv_row());
            }
        }
    }
    Ok(())
}
