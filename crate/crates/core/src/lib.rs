//! One-dimensional wave-packet simulation with a Bohmian-mechanics layer.
//!
//! * [`propagator`]: Crank-Nicolson time stepping of the Schrödinger equation.
//! * [`fields`]: polar decomposition and the nonlinear momentum fields
//!   `p_R`, `p_I`, guiding velocity, quantum potential and current.
//! * [`diagnostics`]: numerical checks of the operator identities, continuity
//!   and quantum Hamilton-Jacobi residuals, and the energy partition.
//! * [`trajectories`]: equilibrium sampling, trajectory integration and the
//!   barrier tunneling experiment.
//! * [`negf`]: retarded Green's function of a tight-binding chain.
//! * [`two_particle`]: quantum potential of a static two-particle state.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod negf;
pub mod potential;
pub mod propagator;
pub mod sampling;
pub mod spectral;
pub mod stencil;
pub mod trajectories;
pub mod tridiag;
pub mod two_particle;
pub mod units;
pub mod wavefunction;

pub use config::{parse_config, ConfigFile, SimulationConfig, TrajectorySpec};
pub use diagnostics::{diagnose_frames, verify_reports, Check, DiagnosticsReport, Tolerances, Verification};
pub use error::{Error, Result};
pub use fields::{polar_decompose, BohmFieldSet, PolarFields};
pub use grid::Grid1D;
pub use negf::{GreensRow, NegfModel, NegfSpec};
pub use potential::{evaluate_potential, PotentialSpec};
pub use propagator::{propagate, propagate_each, step_crank_nicolson, time_triple, CrankNicolson, Propagation, PropagationSummary};
pub use sampling::{ks_distance, sample_initial_positions, DensityCdf};
pub use trajectories::{integrate_trajectories, run_tunneling_experiment, TrajectoryEnsemble, TrajectoryFlag, TunnelReport};
pub use two_particle::{compute_quantum_potential_2particle, ProductField};
pub use units::PhysicalUnits;
pub use wavefunction::{init_wavefunction, InitialStateSpec, WavefunctionFrame};

pub use num_complex::Complex64;
