//! Quantum potential of a two-particle state on a square product grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::stencil::{log_derivatives, stencil_mask};
use crate::units::PhysicalUnits;

/// Field on `grid x grid`, row-major: entry `i1 * n + i2` is at `(x(i1), x(i2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductField {
    pub n: usize,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl ProductField {
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.n + i2]
    }

    /// Largest mixed difference `|V(i,j) - V(i,j0) - V(i0,j) + V(i0,j0)|` over
    /// valid points, anchored at the valid point `(i0, j0)` nearest the centre.
    /// Zero exactly when `V` splits as `f(x1) + g(x2)`.
    pub fn separability_defect(&self) -> f64 {
        let n = self.n;
        let ok = |i: usize, j: usize| self.valid[i * n + j];
        let c = n / 2;
        let Some((i0, j0)) = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| ok(i, j))
            .min_by_key(|&(i, j)| i.abs_diff(c) + j.abs_diff(c))
        else {
            return 0.0;
        };
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if ok(i, j) && ok(i, j0) && ok(i0, j) {
                    let d = self.at(i, j) - self.at(i, j0) - self.at(i0, j) + self.at(i0, j0);
                    worst = worst.max(d.abs());
                }
            }
        }
        worst
    }
}

/// `V_qu(x1, x2) = -(hbar^2 / 2m) (d^2R/dx1^2 + d^2R/dx2^2) / R` for equal masses.
///
/// Each axis uses the one-dimensional log-derivative stencils; a point is
/// valid when both of its stencils clear `node_epsilon * max R`.
pub fn compute_quantum_potential_2particle(
    psi2: &[Complex64],
    grid: &Grid1D,
    units: &PhysicalUnits,
    node_epsilon: f64,
) -> Result<ProductField> {
    let n = grid.len();
    if psi2.len() != n * n {
        return Err(Error::Precondition(format!("expected {} samples, got {}", n * n, psi2.len())));
    }
    let dx = grid.dx();
    let modulus: Vec<f64> = psi2.iter().map(|z| z.norm()).collect();
    let threshold = node_epsilon * modulus.iter().copied().fold(0.0, f64::max);
    let mut lap = vec![0.0; n * n];
    let mut valid = vec![true; n * n];

    // axis 2: contiguous rows
    for i1 in 0..n {
        let row = i1 * n..(i1 + 1) * n;
        let (g, h) = log_derivatives(&psi2[row.clone()], dx);
        let mask = stencil_mask(&modulus[row.clone()], threshold);
        for i2 in 0..n {
            lap[i1 * n + i2] += h[i2].re + g[i2].re * g[i2].re;
            valid[i1 * n + i2] &= mask[i2];
        }
    }
    // axis 1: strided columns
    for i2 in 0..n {
        let col: Vec<Complex64> = (0..n).map(|i1| psi2[i1 * n + i2]).collect();
        let cm: Vec<f64> = (0..n).map(|i1| modulus[i1 * n + i2]).collect();
        let (g, h) = log_derivatives(&col, dx);
        let mask = stencil_mask(&cm, threshold);
        for i1 in 0..n {
            lap[i1 * n + i2] += h[i1].re + g[i1].re * g[i1].re;
            valid[i1 * n + i2] &= mask[i1];
        }
    }
    let scale = -units.hbar * units.hbar / (2.0 * units.mass);
    let values = lap.iter().zip(&valid).map(|(l, &v)| if v { scale * l } else { 0.0 }).collect();
    Ok(ProductField { n, values, valid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::compute_quantum_potential;
    use crate::wavefunction::WavefunctionFrame;

    const U: PhysicalUnits = PhysicalUnits { hbar: 1.0, mass: 1.0 };

    fn grid() -> Grid1D {
        Grid1D::new(-6.0, 6.0, 64).unwrap()
    }

    fn build(g: &Grid1D, f: impl Fn(f64, f64) -> Complex64) -> Vec<Complex64> {
        let xs = g.points();
        xs.iter().flat_map(|&a| xs.iter().map(move |&b| (a, b))).map(|(a, b)| f(a, b)).collect()
    }

    fn gauss(x: f64, c: f64, s: f64, k: f64) -> Complex64 {
        Complex64::new(-(x - c) * (x - c) / (4.0 * s * s), k * x).exp()
    }

    #[test]
    fn product_state_separates() {
        let g = grid();
        let a = |x: f64| gauss(x, 0.5, 1.0, 1.0);
        let b = |x: f64| gauss(x, -0.3, 0.8, 0.0) * x.cosh().recip();
        let psi = build(&g, |x1, x2| a(x1) * b(x2));
        let v = compute_quantum_potential_2particle(&psi, &g, &U, 1e-10).unwrap();
        let one = |f: &dyn Fn(f64) -> Complex64| {
            let frame = WavefunctionFrame::new(g, 0.0, g.points().iter().map(|&x| f(x)).collect()).unwrap();
            compute_quantum_potential(&frame, &U, 1e-10).0
        };
        let (va, vb) = (one(&a), one(&b));
        for i in 0..g.len() {
            for j in 0..g.len() {
                if v.valid[i * g.len() + j] {
                    assert!((v.at(i, j) - va[i] - vb[j]).abs() < 1e-8, "{i} {j}");
                }
            }
        }
        assert!(v.separability_defect() < 1e-8);
    }

    #[test]
    fn exchange_symmetric_pair() {
        let g = grid();
        let psi = build(&g, |x1, x2| {
            Complex64::from((-(x1 - x2).powi(2) / 2.0 - (x1 + x2).powi(2) / 8.0).exp())
        });
        let v = compute_quantum_potential_2particle(&psi, &g, &U, 1e-10).unwrap();
        let n = g.len();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(v.valid[i * n + j], v.valid[j * n + i]);
                assert!((v.at(i, j) - v.at(j, i)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn entangled_superposition_is_not_separable() {
        let g = grid();
        let psi = build(&g, |x1, x2| gauss(x1, 1.5, 0.7, 0.0) * gauss(x2, -1.5, 0.7, 0.0) + gauss(x1, -1.5, 0.7, 0.0) * gauss(x2, 1.5, 0.7, 0.0));
        let v = compute_quantum_potential_2particle(&psi, &g, &U, 1e-10).unwrap();
        assert!(v.separability_defect() > 10.0 * 1e-8, "{}", v.separability_defect());
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(compute_quantum_potential_2particle(&[Complex64::from(1.0); 10], &grid(), &U, 1e-10).is_err());
    }
}
