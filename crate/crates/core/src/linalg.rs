//! Small linear solvers: factored Thomas elimination for tridiagonal systems,
//! Sherman-Morrison for the cyclic (periodic) variant, and a dense LU with
//! partial pivoting for Newton corrections on one period.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// A zero (or numerically zero) pivot was met during elimination.
    SingularPivot { row: usize },
    /// Diagonals or right-hand side have inconsistent lengths.
    Shape,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::SingularPivot { row } => write!(f, "singular pivot at row {row}"),
            LinalgError::Shape => write!(f, "inconsistent system dimensions"),
        }
    }
}

impl core::error::Error for LinalgError {}

/// Thomas factorization of a tridiagonal matrix, reusable across right-hand
/// sides. `lower[i]` multiplies `x[i-1]` in row `i` (so `lower[0]` is
/// ignored), `upper[i]` multiplies `x[i+1]` (so the last entry is ignored).
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper_mod: Vec<f64>,
}

impl TridiagonalLu {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self, LinalgError> {
        let n = diag.len();
        if lower.len() != n || upper.len() != n || n == 0 {
            return Err(LinalgError::Shape);
        }
        let mut inv_pivot = vec![0.0; n];
        let mut upper_mod = vec![0.0; n];
        let mut pivot = diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = diag[i] - lower[i] * upper_mod[i - 1];
            }
            if pivot.abs() < 1e-300 {
                return Err(LinalgError::SingularPivot { row: i });
            }
            inv_pivot[i] = 1.0 / pivot;
            upper_mod[i] = if i + 1 < n { upper[i] * inv_pivot[i] } else { 0.0 };
        }
        Ok(Self { lower: lower.to_vec(), inv_pivot, upper_mod })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_mod[i] * rhs[i + 1];
        }
    }
}

/// Factored solver for a cyclic tridiagonal matrix: tridiagonal plus the two
/// corner entries `A[0][n-1] = lower[0]` and `A[n-1][0] = upper[n-1]`.
///
/// Uses the Sherman-Morrison rank-one correction; intended for the strictly
/// diagonally dominant matrices produced by implicit diffusion and shifted
/// inverse iteration.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonalLu {
    inner: TridiagonalLu,
    z: Vec<f64>,
    v_last: f64,
    denom: f64,
}

impl CyclicTridiagonalLu {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self, LinalgError> {
        let n = diag.len();
        if lower.len() != n || upper.len() != n || n < 3 {
            return Err(LinalgError::Shape);
        }
        let alpha = lower[0]; // A[0][n-1]
        let beta = upper[n - 1]; // A[n-1][0]
        let gamma = -diag[0];
        let mut d = diag.to_vec();
        d[0] -= gamma;
        d[n - 1] -= alpha * beta / gamma;
        let inner = TridiagonalLu::new(lower, &d, upper)?;
        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = beta;
        inner.solve_in_place(&mut z);
        let v_last = alpha / gamma;
        let denom = 1.0 + z[0] + v_last * z[n - 1];
        if denom.abs() < 1e-300 {
            return Err(LinalgError::SingularPivot { row: n - 1 });
        }
        Ok(Self { inner, z, v_last, denom })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.z.len();
        self.inner.solve_in_place(rhs);
        let factor = (rhs[0] + self.v_last * rhs[n - 1]) / self.denom;
        for (r, z) in rhs.iter_mut().zip(&self.z) {
            *r -= factor * z;
        }
    }
}

/// Solves the dense row-major system `a x = b` in place (`b` becomes `x`).
pub fn dense_solve(a: &mut [f64], b: &mut [f64]) -> Result<(), LinalgError> {
    let n = b.len();
    if a.len() != n * n {
        return Err(LinalgError::Shape);
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best <= 1e-14 * scale {
            return Err(LinalgError::SingularPivot { row: col });
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let inv = 1.0 / a[col * n + col];
        for row in col + 1..n {
            let m = a[row * n + col] * inv;
            if m == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= m * a[col * n + k];
            }
            b[row] -= m * b[col];
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * b[k];
        }
        b[row] = s / a[row * n + row];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic_matvec(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                lower[i] * x[(i + n - 1) % n] + diag[i] * x[i] + upper[i] * x[(i + 1) % n]
            })
            .collect()
    }

    #[test]
    fn thomas_matches_direct_product() {
        let n = 7;
        let lower: Vec<f64> = (0..n).map(|i| -1.0 - 0.1 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.5 + 0.05 * i as f64).collect();
        let diag = vec![4.0; n];
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        TridiagonalLu::new(&lower, &diag, &upper).unwrap().solve_in_place(&mut b);
        for (got, want) in b.iter().zip(&x) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn cyclic_matches_dense() {
        let n = 9;
        let lower: Vec<f64> = (0..n).map(|i| -1.0 - 0.07 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -1.2 + 0.03 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + 0.2 * i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| 1.0 + (0.7 * i as f64).cos()).collect();
        let b = cyclic_matvec(&lower, &diag, &upper, &x);

        let mut cyc = b.clone();
        CyclicTridiagonalLu::new(&lower, &diag, &upper).unwrap().solve_in_place(&mut cyc);

        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            dense[i * n + i] += diag[i];
            dense[i * n + (i + n - 1) % n] += lower[i];
            dense[i * n + (i + 1) % n] += upper[i];
        }
        let mut lu = b;
        dense_solve(&mut dense, &mut lu).unwrap();
        for i in 0..n {
            assert!((cyc[i] - x[i]).abs() < 1e-12);
            assert!((lu[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_rejects_singular() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 1.0];
        assert!(matches!(dense_solve(&mut a, &mut b), Err(LinalgError::SingularPivot { .. })));
    }
}
