use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest grid accepted by [`Grid1D::new`].
pub const MIN_POINTS: usize = 16;

/// Uniform one-dimensional grid, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    dx: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl TryFrom<GridSpec> for Grid1D {
    type Error = Error;

    fn try_from(s: GridSpec) -> Result<Self> {
        Grid1D::new(s.x_min, s.x_max, s.n_points)
    }
}

impl From<Grid1D> for GridSpec {
    fn from(g: Grid1D) -> Self {
        GridSpec { x_min: g.x_min, x_max: g.x_max, n_points: g.n_points }
    }
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_max <= x_min {
            return Err(Error::InvalidGrid(format!("x_max ({x_max}) must exceed x_min ({x_min})")));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} is below the minimum of {MIN_POINTS}"
            )));
        }
        let dx = (x_max - x_min) / (n_points - 1) as f64;
        Ok(Self { x_min, x_max, n_points, dx })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Coordinate of grid point `i`.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Trapezoid-rule integral of samples taken on this grid.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_points);
        trapezoid(f, self.dx)
    }

    /// Index of the cell `[x(i), x(i+1)]` containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let s = ((x - self.x_min) / self.dx).floor();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.n_points - 2)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }
}

pub(crate) fn trapezoid(f: &[f64], dx: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        n => dx * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1])),
    }
}

/// Running trapezoid integral; `out[0] = 0`, `out[n-1]` is the full integral.
pub(crate) fn cumulative_trapezoid(f: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in f.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        out.push(acc);
    }
    out
}
