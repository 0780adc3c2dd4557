//! Finite-difference stencils on a uniform grid.
//!
//! Fourth-order central differences in the interior, second-order central
//! differences one point in from each edge, second-order one-sided at the
//! edges themselves.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Inclusive index range `[lo, hi]` read by the stencils at point `i`.
pub fn span(i: usize, n: usize) -> (usize, usize) {
    debug_assert!(n >= 5);
    match i {
        0 => (0, 3),
        1 => (0, 2),
        _ if i == n - 2 => (n - 3, n - 1),
        _ if i == n - 1 => (n - 4, n - 1),
        _ => (i - 2, i + 2),
    }
}

/// Offsets and weights of the first-derivative stencil at `i` (weights in units of `1/dx`).
fn d1_weights(i: usize, n: usize) -> &'static [(isize, f64)] {
    const INTERIOR: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
    const CENTRAL: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
    const LEFT: [(isize, f64); 3] = [(0, -1.5), (1, 2.0), (2, -0.5)];
    const RIGHT: [(isize, f64); 3] = [(0, 1.5), (-1, -2.0), (-2, 0.5)];
    match i {
        0 => &LEFT,
        1 => &CENTRAL,
        _ if i == n - 1 => &RIGHT,
        _ if i == n - 2 => &CENTRAL,
        _ => &INTERIOR,
    }
}

/// Offsets and weights of the second-derivative stencil at `i` (weights in units of `1/dx^2`).
fn d2_weights(i: usize, n: usize) -> &'static [(isize, f64)] {
    const INTERIOR: [(isize, f64); 5] = [
        (-2, -1.0 / 12.0),
        (-1, 16.0 / 12.0),
        (0, -30.0 / 12.0),
        (1, 16.0 / 12.0),
        (2, -1.0 / 12.0),
    ];
    const CENTRAL: [(isize, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
    const LEFT: [(isize, f64); 4] = [(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)];
    const RIGHT: [(isize, f64); 4] = [(0, 2.0), (-1, -5.0), (-2, 4.0), (-3, -1.0)];
    match i {
        0 => &LEFT,
        1 => &CENTRAL,
        _ if i == n - 1 => &RIGHT,
        _ if i == n - 2 => &CENTRAL,
        _ => &INTERIOR,
    }
}

#[inline]
fn at(i: usize, off: isize) -> usize {
    (i as isize + off) as usize
}

fn apply<T>(f: &[T], scale: f64, weights: fn(usize, usize) -> &'static [(isize, f64)]) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Default,
{
    let n = f.len();
    assert!(n >= 5, "stencils need at least 5 points");
    (0..n)
        .map(|i| {
            weights(i, n)
                .iter()
                .fold(T::default(), |acc, &(o, w)| acc + f[at(i, o)] * (w * scale))
        })
        .collect()
}

/// First derivative of real or complex samples.
pub fn d1<T>(f: &[T], dx: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Default,
{
    apply(f, 1.0 / dx, d1_weights)
}

/// Second derivative of real or complex samples.
pub fn d2<T>(f: &[T], dx: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Default,
{
    apply(f, 1.0 / (dx * dx), d2_weights)
}

/// First and second derivatives of `ln f`, from principal logarithms of the
/// ratios `f[j] / f[i]` inside each stencil.
///
/// Uses the same weights as [`d1`] and [`d2`] applied to `ln f`, so a factor
/// with real positive ratios (such as `x` away from its zero) separates
/// exactly: `ln(g f) = ln g + ln f` holds term by term. Requires the phase of
/// `f` to change by less than pi across a stencil. Values are meaningless where
/// any stencil sample vanishes; callers mask those points.
pub fn log_derivatives(f: &[Complex64], dx: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = f.len();
    assert!(n >= 5, "stencils need at least 5 points");
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n {
        let fi = f[i];
        let (lo, hi) = span(i, n);
        // ln(f[j] / f[i]) for each stencil point, indexed by offset + 3
        let mut lr = [Complex64::new(0.0, 0.0); 7];
        for j in lo..=hi {
            if j != i {
                let z = f[j] / fi;
                lr[j + 3 - i] = Complex64::new(0.5 * z.norm_sqr().ln(), z.im.atan2(z.re));
            }
        }
        let sum = |w: &[(isize, f64)]| -> Complex64 { w.iter().map(|&(o, w)| lr[(o + 3) as usize] * w).sum() };
        first.push(sum(d1_weights(i, n)) / dx);
        second.push(sum(d2_weights(i, n)) / (dx * dx));
    }
    (first, second)
}

/// Real-valued counterpart of [`log_derivatives`] for positive samples.
pub fn log_derivatives_real(f: &[f64], dx: f64) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    assert!(n >= 5, "stencils need at least 5 points");
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n {
        let lr = |o: isize| if o == 0 { 0.0 } else { (f[at(i, o)] / f[i]).ln() };
        first.push(d1_weights(i, n).iter().map(|&(o, w)| lr(o) * w).sum::<f64>() / dx);
        second.push(d2_weights(i, n).iter().map(|&(o, w)| lr(o) * w).sum::<f64>() / (dx * dx));
    }
    (first, second)
}

/// `true` where every stencil sample has modulus above `threshold`.
pub fn stencil_mask(modulus: &[f64], threshold: f64) -> Vec<bool> {
    let n = modulus.len();
    let above: Vec<bool> = modulus.iter().map(|&r| r > threshold).collect();
    (0..n)
        .map(|i| {
            let (lo, hi) = span(i, n);
            above[lo..=hi].iter().all(|&b| b)
        })
        .collect()
}
