use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::potential::PotentialSpec;
use crate::units::PhysicalUnits;

/// Ratio `max(|psi(edges)|) / max|psi|` above which a packet counts as touching the boundary.
pub const CONFINEMENT_THRESHOLD: f64 = 1e-6;

/// Complex wavefunction sampled on a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionFrame {
    pub grid: Grid1D,
    pub time: f64,
    pub values: Vec<Complex64>,
}

impl WavefunctionFrame {
    pub fn new(grid: Grid1D, time: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidFrames(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, time, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// Trapezoid L2 norm.
    pub fn norm(&self) -> f64 {
        self.grid.integrate(&self.density()).sqrt()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max(|psi(x_min)|, |psi(x_max)|) / max|psi|`.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.max_modulus();
        if peak == 0.0 {
            return 0.0;
        }
        let n = self.values.len();
        self.values[0].norm().max(self.values[n - 1].norm()) / peak
    }

    pub fn is_confined(&self) -> bool {
        self.boundary_ratio() < CONFINEMENT_THRESHOLD
    }

    /// Probability mass at `x > x0`, trapezoid with linear interpolation at the cut.
    pub fn mass_right_of(&self, x0: f64) -> f64 {
        let p = self.density();
        let g = &self.grid;
        if x0 <= g.x_min() {
            return g.integrate(&p);
        }
        if x0 >= g.x_max() {
            return 0.0;
        }
        let c = g.cell_of(x0);
        let t = (x0 - g.x(c)) / g.dx();
        let p_cut = p[c] + t * (p[c + 1] - p[c]);
        let mut acc = 0.5 * (1.0 - t) * g.dx() * (p_cut + p[c + 1]);
        for i in c + 1..p.len() - 1 {
            acc += 0.5 * g.dx() * (p[i] + p[i + 1]);
        }
        acc
    }

    pub(crate) fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInitialState(format!("state has norm {n}")));
        }
        let s = 1.0 / n;
        self.values.iter_mut().for_each(|z| *z *= s);
        Ok(())
    }
}

/// Initial condition for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateSpec {
    /// `exp(-(x-x0)^2 / 4 sigma0^2 + i k0 x)`, so `|psi|^2` has standard deviation `sigma0`.
    Gaussian { x0: f64, sigma0: f64, k0: f64 },
    PlaneWave { k0: f64 },
    HarmonicEigenstate { n: u32 },
    Tabulated {
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
}

/// Builds and normalizes the initial state at `t = 0`.
pub fn init_wavefunction(
    spec: &InitialStateSpec,
    grid: &Grid1D,
    units: &PhysicalUnits,
    potential: &PotentialSpec,
) -> Result<WavefunctionFrame> {
    units.validate()?;
    let xs = grid.points();
    let values: Vec<Complex64> = match *spec {
        InitialStateSpec::Gaussian { x0, sigma0, k0 } => {
            if !(sigma0.is_finite() && sigma0 > 0.0) {
                return Err(Error::InvalidInitialState(format!("sigma0 must be positive, got {sigma0}")));
            }
            if sigma0 < 3.0 * grid.dx() {
                return Err(Error::InvalidInitialState(format!(
                    "sigma0 = {sigma0} is under-resolved (needs at least 3 dx = {})",
                    3.0 * grid.dx()
                )));
            }
            xs.iter()
                .map(|&x| {
                    let d = x - x0;
                    Complex64::new(-d * d / (4.0 * sigma0 * sigma0), k0 * x).exp()
                })
                .collect()
        }
        InitialStateSpec::PlaneWave { k0 } => xs.iter().map(|&x| Complex64::from_polar(1.0, k0 * x)).collect(),
        InitialStateSpec::HarmonicEigenstate { n } => {
            let PotentialSpec::Harmonic { omega } = *potential else {
                return Err(Error::InvalidInitialState(
                    "harmonic_eigenstate requires a harmonic potential".into(),
                ));
            };
            let scale = (units.mass * omega / units.hbar).sqrt();
            xs.iter()
                .map(|&x| Complex64::new(hermite_function(n, scale * x) * scale.sqrt(), 0.0))
                .collect()
        }
        InitialStateSpec::Tabulated { ref re, ref im } => {
            if re.len() != grid.len() || !(im.is_empty() || im.len() == grid.len()) {
                return Err(Error::InvalidInitialState(format!(
                    "tabulated state needs {} values (re: {}, im: {})",
                    grid.len(),
                    re.len(),
                    im.len()
                )));
            }
            re.iter()
                .enumerate()
                .map(|(i, &r)| Complex64::new(r, im.get(i).copied().unwrap_or(0.0)))
                .collect()
        }
    };
    if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidInitialState("non-finite amplitude".into()));
    }
    let mut frame = WavefunctionFrame::new(*grid, 0.0, values)?;
    frame.normalize()?;
    if !matches!(spec, InitialStateSpec::PlaneWave { .. }) && !frame.is_confined() {
        return Err(Error::InvalidInitialState(format!(
            "packet touches the boundary: edge/peak ratio {:.3e} exceeds {CONFINEMENT_THRESHOLD:.0e}",
            frame.boundary_ratio()
        )));
    }
    Ok(frame)
}

/// Normalized Hermite function `phi_n(xi)` (unit L2 norm in `xi`), by stable recurrence.
pub fn hermite_function(n: u32, xi: f64) -> f64 {
    let g = (-0.5 * xi * xi).exp();
    let mut prev = std::f64::consts::PI.powf(-0.25) * g;
    if n == 0 {
        return prev;
    }
    let mut cur = std::f64::consts::SQRT_2 * xi * prev;
    for k in 1..n {
        let k = k as f64;
        let next = (2.0 / (k + 1.0)).sqrt() * xi * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}
