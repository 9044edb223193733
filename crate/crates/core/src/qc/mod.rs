//! Discrete quasi-conformal operators: the first-order Beltrami system, the
//! generalized Laplacian, their hybrid, and constrained sparse solves.

mod assemble;
mod domain;
mod ring;
mod solve;
mod sparse;

pub use assemble::{assemble_hybrid, assemble_m1, assemble_m3, Gamma, M3Scheme};
pub use domain::Domain;
pub use ring::{build_ring, ring_row, LocalRing};
pub use solve::{solve_constrained, Factorization, Solution, SolveMethod};
pub use sparse::SparseOperator;
