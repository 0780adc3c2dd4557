//! FFT derivative, used for the linear momentum operator `-i hbar d/dx`.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Spectral first derivative of samples treated as one period of length `n dx`.
/// Accurate for packets that vanish at both ends of the grid.
pub fn derivative(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf = values.to_vec();
    fwd.process(&mut buf);
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * dx);
    for (j, z) in buf.iter_mut().enumerate() {
        let k = if 2 * j < n {
            j as f64
        } else if 2 * j == n {
            0.0
        } else {
            j as f64 - n as f64
        } * dk;
        *z *= Complex64::new(0.0, k / n as f64);
    }
    inv.process(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_derivative() {
        let n = 512;
        let dx = 30.0 / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| -15.0 + i as f64 * dx).collect();
        let f: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(-x * x / 2.0, 3.0 * x).exp()).collect();
        let d = derivative(&f, dx);
        for (i, &x) in xs.iter().enumerate() {
            let expect = f[i] * Complex64::new(-x, 3.0);
            assert!((d[i] - expect).norm() < 1e-10, "{x}");
        }
    }
}
