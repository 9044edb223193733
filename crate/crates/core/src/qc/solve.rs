use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use serde::Serialize;

use super::SparseOperator;
use crate::error::{Error, Result};

/// Relative residual above which a direct solve is considered failed.
const DIRECT_TOL: f64 = 1e-8;
/// Ridge added to the normal equations of the fallback path, relative to the
/// largest diagonal entry.
const RIDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Every unknown was constrained.
    Eliminated,
    /// Sparse LU of the reduced square system.
    Direct,
    /// Regularized normal equations after the direct solve failed.
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub x: Vec<f64>,
    pub method: SolveMethod,
    /// Relative residual of the reduced system, `|Ax - b|_inf / scale`.
    pub residual: f64,
}

/// Solves `op x = rhs` with the listed unknowns fixed.
///
/// Constrained unknowns are eliminated: their rows are dropped and their
/// columns moved to the right-hand side. The remaining square system is
/// factored by sparse LU; if that fails or leaves a large residual, the
/// regularized normal equations are solved instead and the method is reported.
pub fn solve_constrained(op: &SparseOperator, rhs: &[f64], constraints: &[(usize, f64)]) -> Result<Solution> {
    let n = op.ncols();
    if op.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: op.nrows(),
        });
    }
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &(d, v) in constraints {
        if d >= n {
            return Err(Error::InvalidArgument(format!("constraint on dof {d} of {n}")));
        }
        if fixed[d].is_some() {
            return Err(Error::InvalidArgument(format!("dof {d} constrained twice")));
        }
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite constraint on dof {d}")));
        }
        fixed[d] = Some(v);
    }
    let mut map = vec![usize::MAX; n];
    let mut free = Vec::new();
    for d in 0..n {
        if fixed[d].is_none() {
            map[d] = free.len();
            free.push(d);
        }
    }
    let mut x: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    if free.is_empty() {
        return Ok(Solution {
            x,
            method: SolveMethod::Eliminated,
            residual: 0.0,
        });
    }

    let m = free.len();
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(op.nnz());
    let mut b = vec![0.0; m];
    for (r, &d) in free.iter().enumerate() {
        b[r] = rhs[d];
        let (cols, vals) = op.row(d);
        for (&c, &v) in cols.iter().zip(vals) {
            match fixed[c] {
                Some(fv) => b[r] -= v * fv,
                None => trip.push((r, map[c], v)),
            }
        }
    }
    let reduced = SparseOperator::from_triplets(m, m, trip)?;
    let (y, method, residual) = solve_square(&reduced, &b)?;
    for (r, &d) in free.iter().enumerate() {
        x[d] = y[r];
    }
    Ok(Solution { x, method, residual })
}

/// Sparse LU of a square operator, factored once and reused.
pub struct Factorization {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl Factorization {
    pub fn new(op: &SparseOperator) -> Result<Self> {
        if op.nrows() != op.ncols() {
            return Err(Error::DimensionMismatch {
                expected: op.ncols(),
                found: op.nrows(),
            });
        }
        let lu = to_faer(op)?
            .sp_lu()
            .map_err(|_| Error::SingularSystem { condition: f64::INFINITY })?;
        Ok(Self { lu, n: op.nrows() })
    }

    /// Solves for several right-hand sides at once.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if let Some(b) = rhs.iter().find(|b| b.len() != self.n) {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let mut m = Mat::from_fn(self.n, rhs.len(), |i, j| rhs[j][i]);
        self.lu.solve_in_place(m.as_mut());
        Ok((0..rhs.len()).map(|j| (0..self.n).map(|i| m[(i, j)]).collect()).collect())
    }
}

fn relative_residual(a: &SparseOperator, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let res = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let bn = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let an = (0..a.nrows()).map(|r| a.row_l1(r)).fold(0.0, f64::max);
    let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let scale = bn.max(an * xn);
    if scale > 0.0 {
        res / scale
    } else {
        res
    }
}

fn to_faer(a: &SparseOperator) -> Result<SparseColMat<usize, f64>> {
    let t: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .into_iter()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    SparseColMat::try_new_from_triplets(a.nrows(), a.ncols(), &t)
        .map_err(|e| Error::InvalidArgument(format!("sparse matrix construction failed: {e:?}")))
}

fn solve_square(a: &SparseOperator, b: &[f64]) -> Result<(Vec<f64>, SolveMethod, f64)> {
    let m = b.len();
    let fa = to_faer(a)?;
    if let Ok(lu) = fa.sp_lu() {
        let mut rhs = Mat::from_fn(m, 1, |i, _| b[i]);
        lu.solve_in_place(rhs.as_mut());
        let y: Vec<f64> = (0..m).map(|i| rhs[(i, 0)]).collect();
        if y.iter().all(|v| v.is_finite()) {
            let res = relative_residual(a, &y, b);
            if res <= DIRECT_TOL {
                return Ok((y, SolveMethod::Direct, res));
            }
            log::debug!("direct solve residual {res:.3e}; falling back to least squares");
        }
    }
    least_squares(a, b)
}

fn least_squares(a: &SparseOperator, b: &[f64]) -> Result<(Vec<f64>, SolveMethod, f64)> {
    let m = b.len();
    let mut t: Vec<(usize, usize, f64)> = Vec::new();
    let mut atb = vec![0.0; m];
    for r in 0..a.nrows() {
        let (cols, vals) = a.row(r);
        for (k1, (&c1, &v1)) in cols.iter().zip(vals).enumerate() {
            atb[c1] += v1 * b[r];
            for (&c2, &v2) in cols[k1..].iter().zip(&vals[k1..]) {
                // Lower triangle only.
                let (hi, lo) = if c1 >= c2 { (c1, c2) } else { (c2, c1) };
                t.push((hi, lo, v1 * v2));
            }
        }
    }
    let ata = SparseOperator::from_triplets(m, m, t)?;
    let dmax = (0..m).map(|i| ata.get(i, i)).fold(0.0, f64::max);
    let ridge = RIDGE * dmax.max(f64::MIN_POSITIVE);
    let reg = ata.add_scaled(&SparseOperator::identity(m), ridge)?;
    let dmin = (0..m).map(|i| reg.get(i, i)).fold(f64::INFINITY, f64::min);
    let condition = dmax / dmin;
    let llt = to_faer(&reg)?
        .sp_cholesky(Side::Lower)
        .map_err(|_| Error::SingularSystem { condition })?;
    let mut rhs = Mat::from_fn(m, 1, |i, _| atb[i]);
    llt.solve_in_place(rhs.as_mut());
    let y: Vec<f64> = (0..m).map(|i| rhs[(i, 0)]).collect();
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularSystem { condition });
    }
    let res = relative_residual(a, &y, b);
    log::debug!("least-squares solve, relative residual {res:.3e}");
    Ok((y, SolveMethod::LeastSquares, res))
}
