//! Bohmian worldlines along the guiding velocity field, and the barrier
//! tunneling experiment built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{SimulationConfig, TrajectorySpec};
use crate::error::{Error, Result};
use crate::fields::BohmFieldSet;
use crate::grid::Grid1D;
use crate::propagator::propagate_each;
use crate::sampling::sample_initial_positions;
use crate::units::PhysicalUnits;
use crate::wavefunction::{init_wavefunction, WavefunctionFrame};

/// Largest probability mass allowed right of the barrier's left edge at `t = 0`.
pub const TUNNEL_INITIAL_MASS_LIMIT: f64 = 1e-6;

/// Ordering ties closer than this are not violations.
pub const ORDERING_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFlag {
    /// Final position beyond the right barrier edge.
    Transmitted,
    /// Final position before the left barrier edge.
    Reflected,
    /// Anything else, including every trajectory of a run without a barrier.
    Interior,
    /// Stopped on entering a masked node region; later positions are frozen.
    Halted,
    /// Left the grid; clamped to the boundary and stopped.
    Exited,
}

impl TrajectoryFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Transmitted => "transmitted",
            Self::Reflected => "reflected",
            Self::Interior => "interior",
            Self::Halted => "halted",
            Self::Exited => "exited",
        }
    }
}

/// Worldlines sampled at the stored frame times. Weights are uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    /// `positions[i][k]` is trajectory `i` at `times[k]`.
    pub positions: Vec<Vec<f64>>,
    pub flags: Vec<TrajectoryFlag>,
    /// Time at which a halted or exited trajectory stopped.
    pub stop_times: Vec<Option<f64>>,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions_at(&self, k: usize) -> Vec<f64> {
        self.positions.iter().map(|p| p[k]).collect()
    }

    pub fn final_positions(&self) -> Vec<f64> {
        self.positions.iter().map(|p| *p.last().unwrap()).collect()
    }

    /// Relabels trajectories that ran to completion by their final position
    /// relative to `[a, b]`.
    pub fn classify(&mut self, a: f64, b: f64) {
        for (flag, p) in self.flags.iter_mut().zip(&self.positions) {
            if matches!(flag, TrajectoryFlag::Halted | TrajectoryFlag::Exited) {
                continue;
            }
            let x = *p.last().unwrap();
            *flag = if x > b {
                TrajectoryFlag::Transmitted
            } else if x < a {
                TrajectoryFlag::Reflected
            } else {
                TrajectoryFlag::Interior
            };
        }
    }

    /// Number of (time, adjacent pair) events where trajectories, ordered by
    /// their initial positions, are out of order by more than [`ORDERING_TIE`].
    pub fn ordering_violations(&self) -> usize {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| self.positions[i][0].total_cmp(&self.positions[j][0]));
        (0..self.times.len())
            .map(|k| {
                order
                    .windows(2)
                    .filter(|w| self.positions[w[1]][k] < self.positions[w[0]][k] - ORDERING_TIE)
                    .count()
            })
            .sum()
    }

    /// Time trajectory `i` spends inside `[a, b]`, with positions linear between stored times.
    pub fn dwell_time(&self, i: usize, a: f64, b: f64) -> f64 {
        let p = &self.positions[i];
        (1..self.times.len())
            .map(|k| (self.times[k] - self.times[k - 1]) * fraction_inside(p[k - 1], p[k], a, b))
            .sum()
    }
}

/// Fraction of the segment from `x0` to `x1` lying in `[a, b]`.
fn fraction_inside(x0: f64, x1: f64, a: f64, b: f64) -> f64 {
    let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
    if hi == lo {
        return if lo >= a && lo <= b { 1.0 } else { 0.0 };
    }
    ((hi.min(b) - lo.max(a)) / (hi - lo)).max(0.0)
}

/// Guiding velocity of one frame.
struct VelocityFrame {
    time: f64,
    v: Vec<f64>,
    valid: Vec<bool>,
}

impl VelocityFrame {
    fn of(frame: &WavefunctionFrame, units: &PhysicalUnits, node_epsilon: f64) -> Self {
        let b = BohmFieldSet::compute(frame, units, node_epsilon);
        Self { time: frame.time, v: b.v_r, valid: b.valid }
    }

    /// Four-point Lagrange interpolation on unmasked points.
    fn probe(&self, grid: &Grid1D, x: f64) -> Probe {
        if !grid.contains(x) {
            return Probe::Outside;
        }
        let n = grid.len();
        let start = grid.cell_of(x).saturating_sub(1).min(n - 4);
        if !self.valid[start..start + 4].iter().all(|&b| b) {
            return Probe::Masked;
        }
        let s = (x - grid.x(start)) / grid.dx();
        let w = [
            -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
            s * (s - 2.0) * (s - 3.0) / 2.0,
            -s * (s - 1.0) * (s - 3.0) / 2.0,
            s * (s - 1.0) * (s - 2.0) / 6.0,
        ];
        Probe::Velocity((0..4).map(|j| w[j] * self.v[start + j]).sum())
    }
}

enum Probe {
    Velocity(f64),
    Masked,
    Outside,
}

/// One RK4 step of length `b.time - a.time`, velocity linear in time between the frames.
fn rk4(grid: &Grid1D, a: &VelocityFrame, b: &VelocityFrame, x: f64) -> std::result::Result<f64, TrajectoryFlag> {
    let h = b.time - a.time;
    let at = |theta: f64, x: f64| {
        let lo = a.probe(grid, x);
        let out = if theta == 0.0 {
            lo
        } else {
            match (lo, b.probe(grid, x)) {
                (Probe::Velocity(u), Probe::Velocity(w)) => Probe::Velocity(u + theta * (w - u)),
                (Probe::Outside, _) | (_, Probe::Outside) => Probe::Outside,
                _ => Probe::Masked,
            }
        };
        match out {
            Probe::Velocity(v) => Ok(v),
            Probe::Masked => Err(TrajectoryFlag::Halted),
            Probe::Outside => Err(TrajectoryFlag::Exited),
        }
    };
    let k1 = at(0.0, x)?;
    let k2 = at(0.5, x + 0.5 * h * k1)?;
    let k3 = at(0.5, x + 0.5 * h * k2)?;
    let k4 = at(1.0, x + h * k3)?;
    let next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if grid.contains(next) {
        Ok(next)
    } else {
        Err(TrajectoryFlag::Exited)
    }
}

#[derive(Debug, Clone, Copy)]
struct Walker {
    x: f64,
    stop: Option<(TrajectoryFlag, f64)>,
}

/// Streaming integrator: frames are pushed in time order and only the latest
/// velocity field is kept, so long runs need not hold every frame.
///
/// Each push advances every live trajectory by one RK4 step spanning the
/// frame interval. Velocities are cubic in space on unmasked points and
/// linear in time between frames. A trajectory whose stencil touches a masked
/// point halts; one leaving the grid is clamped to the boundary and stops.
/// Results do not depend on the thread count.
pub struct TrajectoryIntegrator {
    grid: Grid1D,
    units: PhysicalUnits,
    node_epsilon: f64,
    record_stride: usize,
    last: Option<VelocityFrame>,
    pushed: usize,
    last_recorded: usize,
    walkers: Vec<Walker>,
    times: Vec<f64>,
    positions: Vec<Vec<f64>>,
}

impl TrajectoryIntegrator {
    pub fn new(grid: &Grid1D, initial: &[f64], units: &PhysicalUnits, node_epsilon: f64, record_stride: usize) -> Result<Self> {
        if record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be at least 1".into()));
        }
        if let Some(x) = initial.iter().find(|x| !grid.contains(**x)) {
            return Err(Error::Precondition(format!("initial position {x} is outside the grid")));
        }
        Ok(Self {
            grid: *grid,
            units: *units,
            node_epsilon,
            record_stride,
            last: None,
            pushed: 0,
            last_recorded: 0,
            walkers: initial.iter().map(|&x| Walker { x, stop: None }).collect(),
            times: Vec::new(),
            positions: initial.iter().map(|_| Vec::new()).collect(),
        })
    }

    fn record(&mut self, time: f64) {
        self.times.push(time);
        for (p, w) in self.positions.iter_mut().zip(&self.walkers) {
            p.push(w.x);
        }
        self.last_recorded = self.pushed;
    }

    pub fn push_frame(&mut self, frame: &WavefunctionFrame) -> Result<()> {
        if frame.grid != self.grid {
            return Err(Error::InvalidFrames("frame lives on a different grid".into()));
        }
        let next = VelocityFrame::of(frame, &self.units, self.node_epsilon);
        if let Some(prev) = &self.last {
            if next.time <= prev.time {
                return Err(Error::InvalidFrames("frame times must increase".into()));
            }
            let grid = &self.grid;
            self.walkers.par_iter_mut().filter(|w| w.stop.is_none()).for_each(|w| match rk4(grid, prev, &next, w.x) {
                Ok(x) => w.x = x,
                Err(flag) => {
                    w.x = w.x.clamp(grid.x_min(), grid.x_max());
                    w.stop = Some((flag, prev.time));
                }
            });
        }
        self.pushed += 1;
        self.last = Some(next);
        if (self.pushed - 1).is_multiple_of(self.record_stride) {
            self.record(frame.time);
        }
        Ok(())
    }

    /// Records the final positions if the last frame fell between records.
    pub fn finish(mut self) -> Result<TrajectoryEnsemble> {
        if self.pushed < 2 {
            return Err(Error::InvalidFrames("at least two frames are needed".into()));
        }
        if self.last_recorded != self.pushed {
            let t = self.last.as_ref().map(|f| f.time).unwrap();
            self.record(t);
        }
        Ok(TrajectoryEnsemble {
            times: self.times,
            positions: self.positions,
            flags: self.walkers.iter().map(|w| w.stop.map_or(TrajectoryFlag::Interior, |s| s.0)).collect(),
            stop_times: self.walkers.iter().map(|w| w.stop.map(|s| s.1)).collect(),
        })
    }
}

/// Integrates worldlines from `initial` through stored `frames`, recording every frame.
pub fn integrate_trajectories(
    frames: &[WavefunctionFrame],
    initial: &[f64],
    units: &PhysicalUnits,
    node_epsilon: f64,
) -> Result<TrajectoryEnsemble> {
    let grid = frames.first().map(|f| f.grid).ok_or_else(|| Error::InvalidFrames("no frames".into()))?;
    let mut it = TrajectoryIntegrator::new(&grid, initial, units, node_epsilon, 1)?;
    for f in frames {
        it.push_frame(f)?;
    }
    it.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges, one more than `counts`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let hi = values.iter().copied().fold(0.0, f64::max);
        let width = if hi > 0.0 { hi / bins as f64 } else { 1.0 };
        let mut counts = vec![0; bins];
        for &v in values {
            counts[((v / width) as usize).min(bins - 1)] += 1;
        }
        Self { edges: (0..=bins).map(|i| i as f64 * width).collect(), counts }
    }
}

/// Outcome of the barrier experiment. Dwell time is the time a transmitted
/// trajectory spends inside `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelReport {
    pub transmission_fraction: f64,
    pub wave_transmission: f64,
    pub dwell_time_mean: Option<f64>,
    pub dwell_time_distribution: Histogram,
    pub n_trajectories: usize,
    pub n_transmitted: usize,
    pub n_reflected: usize,
    pub n_halted: usize,
    pub n_exited: usize,
    pub barrier_height: f64,
    pub barrier_left: f64,
    pub barrier_right: f64,
    pub final_time: f64,
    pub seed: u64,
}

pub const DWELL_BINS: usize = 20;

/// Propagates a packet onto a rectangular barrier and compares trajectory
/// and wave transmission at the final time.
pub fn run_tunneling_experiment(
    config: &SimulationConfig,
    spec: &TrajectorySpec,
    seed: u64,
) -> Result<(TunnelReport, TrajectoryEnsemble)> {
    config.validate()?;
    spec.validate()?;
    let (v0, a, b) = config
        .potential
        .barrier()
        .ok_or_else(|| Error::InvalidConfig("tunneling needs a rectangular_barrier potential".into()))?;
    let psi0 = init_wavefunction(&config.initial_state, &config.grid, &config.units, &config.potential)?;
    let right = psi0.mass_right_of(a);
    if right >= TUNNEL_INITIAL_MASS_LIMIT {
        return Err(Error::Precondition(format!(
            "initial packet has mass {right:.3e} right of the barrier edge x = {a}; limit {TUNNEL_INITIAL_MASS_LIMIT:e}"
        )));
    }
    let n_traj = spec.n_traj;
    let initial = sample_initial_positions(&psi0, n_traj, seed)?;
    let mut integrator = TrajectoryIntegrator::new(&config.grid, &initial, &config.units, config.node_epsilon, spec.record_stride)?;
    let mut last = psi0.clone();
    propagate_each(config, |f| {
        integrator.push_frame(f)?;
        last.time = f.time;
        last.values.copy_from_slice(&f.values);
        Ok(())
    })?;
    let mut ensemble = integrator.finish()?;
    ensemble.classify(a, b);
    let finals = ensemble.final_positions();
    let beyond = finals.iter().filter(|&&x| x > b).count();
    let count = |f: TrajectoryFlag| ensemble.flags.iter().filter(|&&g| g == f).count();
    let dwell: Vec<f64> = (0..ensemble.len())
        .filter(|&i| ensemble.flags[i] == TrajectoryFlag::Transmitted)
        .map(|i| ensemble.dwell_time(i, a, b))
        .collect();
    let report = TunnelReport {
        transmission_fraction: beyond as f64 / n_traj as f64,
        wave_transmission: last.mass_right_of(b).clamp(0.0, 1.0),
        dwell_time_mean: (!dwell.is_empty()).then(|| dwell.iter().sum::<f64>() / dwell.len() as f64),
        dwell_time_distribution: Histogram::new(&dwell, DWELL_BINS),
        n_trajectories: n_traj,
        n_transmitted: dwell.len(),
        n_reflected: count(TrajectoryFlag::Reflected),
        n_halted: count(TrajectoryFlag::Halted),
        n_exited: count(TrajectoryFlag::Exited),
        barrier_height: v0,
        barrier_left: a,
        barrier_right: b,
        final_time: last.time,
        seed,
    };
    Ok((report, ensemble))
}
