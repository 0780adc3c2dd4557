//! Thomas elimination for complex tridiagonal systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

const PIVOT_FLOOR: f64 = 1e-300;

/// Factorization of a tridiagonal matrix with sub-diagonal `lower`, diagonal
/// `diag` and super-diagonal `upper` (`lower[0]` and `upper[n-1]` unused).
/// No pivoting; fails on a vanishing pivot.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<Complex64>,
    // forward-eliminated super-diagonal and inverse pivots
    upper_mod: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl Tridiagonal {
    pub fn factor(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        assert!(lower.len() == n && upper.len() == n, "band lengths differ");
        let mut upper_mod = vec![Complex64::default(); n];
        let mut inv_pivot = vec![Complex64::default(); n];
        let mut prev_upper = Complex64::default();
        for i in 0..n {
            let pivot = if i == 0 { diag[0] } else { diag[i] - lower[i] * prev_upper };
            if !(pivot.norm() > PIVOT_FLOOR) || !pivot.re.is_finite() || !pivot.im.is_finite() {
                return Err(Error::SingularSystem { row: i, pivot: pivot.norm() });
            }
            inv_pivot[i] = pivot.inv();
            upper_mod[i] = upper[i] * inv_pivot[i];
            prev_upper = upper_mod[i];
        }
        Ok(Self { lower: lower.to_vec(), upper_mod, inv_pivot })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Solves in place: `rhs` becomes the solution.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] -= self.upper_mod[i] * next;
        }
    }
}

/// One-shot solve of `A x = rhs`.
pub fn solve(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64], rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let t = Tridiagonal::factor(lower, diag, upper)?;
    let mut x = rhs.to_vec();
    t.solve_in_place(&mut x);
    Ok(x)
}
