use num_complex::Complex64;

use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::potential::evaluate_potential;
use crate::tridiag::Tridiagonal;
use crate::units::PhysicalUnits;
use crate::wavefunction::{init_wavefunction, WavefunctionFrame, CONFINEMENT_THRESHOLD};

/// Crank-Nicolson stepper for `i hbar dpsi/dt = (-hbar^2/2m d2/dx2 + V) psi`
/// with a second-order Laplacian and zero Dirichlet data just outside the grid.
///
/// `(1 + i dt H / 2 hbar) psi(t + dt) = (1 - i dt H / 2 hbar) psi(t)`. The
/// implicit matrix is factored once; each step is O(n).
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    dt: f64,
    // explicit half: diagonal and (constant) off-diagonal of 1 - i dt H / 2 hbar
    rhs_diag: Vec<Complex64>,
    rhs_off: Complex64,
    lhs: Tridiagonal,
}

impl CrankNicolson {
    pub fn new(grid: &Grid1D, potential: &[f64], dt: f64, units: &PhysicalUnits) -> Result<Self> {
        let n = grid.len();
        if potential.len() != n {
            return Err(Error::InvalidPotential(format!("{} potential values for {n} grid points", potential.len())));
        }
        let kin = units.hbar * units.hbar / (2.0 * units.mass * grid.dx() * grid.dx());
        // i dt / 2 hbar
        let a = Complex64::new(0.0, dt / (2.0 * units.hbar));
        let h_off = -kin;
        let lhs_off = a * h_off;
        let lhs_diag: Vec<Complex64> = potential.iter().map(|&v| 1.0 + a * (2.0 * kin + v)).collect();
        let rhs_diag: Vec<Complex64> = potential.iter().map(|&v| 1.0 - a * (2.0 * kin + v)).collect();
        let off = vec![lhs_off; n];
        let lhs = Tridiagonal::factor(&off, &lhs_diag, &off)?;
        Ok(Self { dt, rhs_diag, rhs_off: -lhs_off, lhs })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `values` by one step in place; `scratch` must have the same length.
    pub fn step_in_place(&self, values: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = values.len();
        for i in 0..n {
            let mut s = self.rhs_diag[i] * values[i];
            if i > 0 {
                s += self.rhs_off * values[i - 1];
            }
            if i + 1 < n {
                s += self.rhs_off * values[i + 1];
            }
            scratch[i] = s;
        }
        self.lhs.solve_in_place(scratch);
        values.copy_from_slice(scratch);
    }

    pub fn step(&self, frame: &WavefunctionFrame) -> WavefunctionFrame {
        let mut values = frame.values.clone();
        let mut scratch = vec![Complex64::default(); values.len()];
        self.step_in_place(&mut values, &mut scratch);
        WavefunctionFrame { grid: frame.grid, time: frame.time + self.dt, values }
    }
}

/// Single Crank-Nicolson step. A negative `dt` runs the scheme backwards.
pub fn step_crank_nicolson(
    frame: &WavefunctionFrame,
    potential: &[f64],
    dt: f64,
    units: &PhysicalUnits,
) -> Result<WavefunctionFrame> {
    Ok(CrankNicolson::new(&frame.grid, potential, dt, units)?.step(frame))
}

/// Output of [`propagate`].
#[derive(Debug, Clone)]
pub struct Propagation {
    /// Every `frame_stride`-th step, plus the initial and final states.
    pub frames: Vec<WavefunctionFrame>,
    pub potential: Vec<f64>,
    /// `max_t | ||psi(t)|| - 1 |` over stored frames.
    pub norm_drift: f64,
    /// Whether `dt` exceeded the advisory bound `dx^2 m / hbar`.
    pub dt_above_advisory: bool,
}

/// What [`propagate_each`] reports after the last frame.
#[derive(Debug, Clone)]
pub struct PropagationSummary {
    pub potential: Vec<f64>,
    pub norm_drift: f64,
    pub dt_above_advisory: bool,
    pub n_frames: usize,
}

/// Runs a whole configuration and keeps the stored frames.
///
/// Confined initial states are monitored at every step; reaching the boundary
/// is an error carrying the offending time. Unconfined states (plane waves)
/// are not monitored.
pub fn propagate(config: &SimulationConfig) -> Result<Propagation> {
    let mut frames = Vec::with_capacity(config.n_steps / config.frame_stride.max(1) + 2);
    let summary = propagate_each(config, |f| {
        frames.push(f.clone());
        Ok(())
    })?;
    Ok(Propagation {
        frames,
        potential: summary.potential,
        norm_drift: summary.norm_drift,
        dt_above_advisory: summary.dt_above_advisory,
    })
}

/// Like [`propagate`], but hands each stored frame to `visit` instead of keeping it.
pub fn propagate_each(
    config: &SimulationConfig,
    mut visit: impl FnMut(&WavefunctionFrame) -> Result<()>,
) -> Result<PropagationSummary> {
    config.validate()?;
    let potential = evaluate_potential(&config.potential, &config.grid, &config.units)?;
    let mut frame = init_wavefunction(&config.initial_state, &config.grid, &config.units, &config.potential)?;
    let monitor = frame.is_confined();
    let stepper = CrankNicolson::new(&config.grid, &potential, config.dt, &config.units)?;

    let mut scratch = vec![Complex64::default(); frame.len()];
    let mut norm_drift = (frame.norm() - 1.0).abs();
    let mut n_frames = 1;
    visit(&frame)?;
    for step in 1..=config.n_steps {
        stepper.step_in_place(&mut frame.values, &mut scratch);
        frame.time = step as f64 * config.dt;
        if monitor {
            let ratio = frame.boundary_ratio();
            if ratio >= CONFINEMENT_THRESHOLD {
                return Err(Error::Confinement { time: frame.time, ratio });
            }
        }
        if step % config.frame_stride == 0 || step == config.n_steps {
            norm_drift = norm_drift.max((frame.norm() - 1.0).abs());
            n_frames += 1;
            visit(&frame)?;
        }
    }
    Ok(PropagationSummary {
        potential,
        norm_drift,
        dt_above_advisory: config.dt > config.dt_advisory_limit(),
        n_frames,
    })
}

/// Frames at `t - dt`, `t`, `t + dt` around `frame`, for centered time differences.
pub fn time_triple(
    frame: &WavefunctionFrame,
    potential: &[f64],
    dt: f64,
    units: &PhysicalUnits,
) -> Result<[WavefunctionFrame; 3]> {
    let back = step_crank_nicolson(frame, potential, -dt, units)?;
    let fwd = step_crank_nicolson(frame, potential, dt, units)?;
    Ok([back, frame.clone(), fwd])
}
