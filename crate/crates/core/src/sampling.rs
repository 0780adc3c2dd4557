//! Equilibrium sampling of particle positions and the Kolmogorov-Smirnov distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{cumulative_trapezoid, Grid1D};
use crate::wavefunction::WavefunctionFrame;

/// Normalized CDF of a density that is linear on each grid cell, so the CDF
/// is the running trapezoid integral and piecewise quadratic.
#[derive(Debug, Clone)]
pub struct DensityCdf {
    grid: Grid1D,
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DensityCdf {
    pub fn new(grid: &Grid1D, density: &[f64]) -> Result<Self> {
        if density.len() != grid.len() || density.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Precondition("density must be finite, non-negative and match the grid".into()));
        }
        let mut cumulative = cumulative_trapezoid(density, grid.dx());
        let total = *cumulative.last().unwrap();
        if total <= 0.0 {
            return Err(Error::Precondition("density has zero mass".into()));
        }
        cumulative.iter_mut().for_each(|c| *c /= total);
        let density = density.iter().map(|p| p / total).collect();
        Ok(Self { grid: *grid, density, cumulative })
    }

    pub fn from_frame(frame: &WavefunctionFrame) -> Result<Self> {
        Self::new(&frame.grid, &frame.density())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.grid.x_min() {
            return 0.0;
        }
        if x >= self.grid.x_max() {
            return 1.0;
        }
        let j = self.grid.cell_of(x);
        let s = x - self.grid.x(j);
        let (p0, p1) = (self.density[j], self.density[j + 1]);
        self.cumulative[j] + p0 * s + (p1 - p0) * s * s / (2.0 * self.grid.dx())
    }

    /// Position with `cdf(x) = u`, for `u` in `[0, 1]`.
    pub fn inverse(&self, u: f64) -> f64 {
        let n = self.cumulative.len();
        // first cell whose upper cumulative reaches u and carries mass
        let mut j = self.cumulative.partition_point(|&c| c < u).clamp(1, n - 1) - 1;
        while j + 2 < n && self.cumulative[j + 1] <= self.cumulative[j] {
            j += 1;
        }
        let dx = self.grid.dx();
        let r = (u - self.cumulative[j]).max(0.0);
        let (p0, p1) = (self.density[j], self.density[j + 1]);
        // root of p0 s + (p1 - p0) s^2 / 2dx = r, rationalized for stability
        let disc = (p0 * p0 + 2.0 * (p1 - p0) * r / dx).max(0.0);
        let denom = p0 + disc.sqrt();
        let s = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        self.grid.x(j) + s.clamp(0.0, dx)
    }
}

/// Draws `n` positions from `|psi|^2` by inverse-CDF sampling with a seeded ChaCha stream.
pub fn sample_initial_positions(frame: &WavefunctionFrame, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Precondition("number of samples must be positive".into()));
    }
    let cdf = DensityCdf::from_frame(frame)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| cdf.inverse(rng.gen::<f64>())).collect())
}

/// Two-sided KS distance between the empirical distribution of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: &DensityCdf) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
