use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::negf::NegfSpec;
use crate::potential::PotentialSpec;
use crate::units::PhysicalUnits;
use crate::wavefunction::InitialStateSpec;

pub const DEFAULT_NODE_EPSILON: f64 = 1e-10;

fn default_node_epsilon() -> f64 {
    DEFAULT_NODE_EPSILON
}

fn default_stride() -> usize {
    1
}

/// Everything needed to run one propagation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub grid: Grid1D,
    #[serde(default)]
    pub units: PhysicalUnits,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub initial_state: InitialStateSpec,
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default = "default_stride")]
    pub frame_stride: usize,
    #[serde(default = "default_node_epsilon")]
    pub node_epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.units.validate()?;
        self.potential.validate(&self.grid)?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.frame_stride == 0 {
            return Err(Error::InvalidConfig("frame_stride must be at least 1".into()));
        }
        if !(self.node_epsilon > 0.0 && self.node_epsilon < 1e-3) {
            return Err(Error::InvalidConfig(format!(
                "node_epsilon must lie in (0, 1e-3), got {}",
                self.node_epsilon
            )));
        }
        Ok(())
    }

    /// Advisory accuracy bound `dt <= dx^2 m / hbar`.
    pub fn dt_advisory_limit(&self) -> f64 {
        self.grid.dx().powi(2) * self.units.mass / self.units.hbar
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.n_steps as f64
    }
}

fn default_n_traj() -> usize {
    1000
}

/// Trajectory settings: ensemble size and how often positions are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    /// Positions are kept at every `record_stride`-th stored frame (first and
    /// last always); integration still steps through every frame.
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self { n_traj: default_n_traj(), record_stride: 1 }
    }
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 || self.record_stride == 0 {
            return Err(Error::InvalidConfig("trajectories.n_traj and record_stride must be positive".into()));
        }
        Ok(())
    }
}

/// Contents of a configuration file: a simulation plus optional trajectory
/// settings and tight-binding model.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub simulation: SimulationConfig,
    pub trajectories: TrajectorySpec,
    pub negf: Option<NegfSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfigFile {
    grid: Grid1D,
    #[serde(default)]
    units: PhysicalUnits,
    #[serde(default)]
    potential: PotentialSpec,
    initial_state: InitialStateSpec,
    dt: f64,
    n_steps: usize,
    #[serde(default = "default_stride")]
    frame_stride: usize,
    #[serde(default = "default_node_epsilon")]
    node_epsilon: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    trajectories: TrajectorySpec,
    #[serde(default)]
    negf: Option<NegfSpec>,
}

/// Parses TOML text. Parse errors carry the line and column from the TOML reader.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let raw: RawConfigFile = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let simulation = SimulationConfig {
        grid: raw.grid,
        units: raw.units,
        potential: raw.potential,
        initial_state: raw.initial_state,
        dt: raw.dt,
        n_steps: raw.n_steps,
        frame_stride: raw.frame_stride,
        node_epsilon: raw.node_epsilon,
        seed: raw.seed,
    };
    simulation.validate()?;
    raw.trajectories.validate()?;
    if let Some(n) = &raw.negf {
        n.validate()?;
    }
    Ok(ConfigFile { simulation, trajectories: raw.trajectories, negf: raw.negf })
}
