//! Dense absorbing-chain solves: `(I - Q) X = B` where `Q` is the kernel
//! restricted to the non-absorbed ("free") states.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::chain::Chain;
use crate::error::{Error, Result};

/// Relative residual accepted for every linear solve.
pub const SOLVE_RTOL: f64 = 1e-9;

pub(crate) struct KilledSystem {
    free: Vec<usize>,
    /// Position of each state among the free states, `usize::MAX` if absorbed.
    pos: Vec<usize>,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl KilledSystem {
    /// Factorizes `I - P` on the states where `absorbed` is false
    /// (transposed when `transpose` is set).
    pub fn new(chain: &Chain, absorbed: &[bool], transpose: bool) -> Result<Self> {
        let free: Vec<usize> = (0..chain.n()).filter(|&x| !absorbed[x]).collect();
        let mut pos = vec![usize::MAX; chain.n()];
        for (i, &x) in free.iter().enumerate() {
            pos[x] = i;
        }
        let m = free.len();
        let p = chain.kernel();
        let matrix = DMatrix::from_fn(m, m, |i, j| {
            let (a, b) = if transpose {
                (free[j], free[i])
            } else {
                (free[i], free[j])
            };
            let id = if i == j { 1.0 } else { 0.0 };
            id - p[(a, b)]
        });
        let lu = matrix.clone().lu();
        Ok(Self {
            free,
            pos,
            matrix,
            lu,
        })
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// Index of `x` among the free states.
    pub fn position(&self, x: usize) -> Option<usize> {
        let p = self.pos[x];
        (p != usize::MAX).then_some(p)
    }

    pub fn size(&self) -> usize {
        self.free.len()
    }

    pub fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if self.free.is_empty() {
            return Ok(DMatrix::zeros(0, rhs.ncols()));
        }
        let x = self.lu.solve(rhs).ok_or_else(|| {
            Error::Numerical(format!(
                "singular absorbed system of size {} (some free state cannot reach the absorbing set)",
                self.free.len()
            ))
        })?;
        check_residual(&self.matrix, &x, rhs)?;
        Ok(x)
    }

    pub fn solve_vec(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let b = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
        let x = self.solve(&b)?;
        Ok(DVector::from_column_slice(x.as_slice()))
    }
}

/// Solves `a x = b` by LU and checks the relative residual.
pub(crate) fn solve_checked(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical(format!("singular system of size {}", a.nrows())))?;
    check_residual(a, &x, b)?;
    Ok(x)
}

fn check_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    let r = a * x - b;
    let rnorm = r.amax();
    let scale = inf_norm(a) * x.amax() + b.amax();
    if !(rnorm <= SOLVE_RTOL * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Numerical(format!(
            "linear solve residual {rnorm:e} exceeds {SOLVE_RTOL:e} relative to scale {scale:e}"
        )));
    }
    Ok(())
}

fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense `P^t` by repeated squaring.
pub fn matrix_power(p: &DMatrix<f64>, mut t: u64) -> DMatrix<f64> {
    let n = p.nrows();
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut base = p.clone();
    while t > 0 {
        if t & 1 == 1 {
            result = &result * &base;
        }
        t >>= 1;
        if t > 0 {
            base = &base * &base;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_matches_repeated_product() {
        let p = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.3, 0.7]);
        let mut direct = DMatrix::identity(2, 2);
        for _ in 0..13 {
            direct = &direct * &p;
        }
        let fast = matrix_power(&p, 13);
        assert!((fast - direct).amax() < 1e-14);
        assert_eq!(matrix_power(&p, 0), DMatrix::identity(2, 2));
    }
}
