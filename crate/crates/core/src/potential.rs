use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::units::PhysicalUnits;

/// External potential V(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum PotentialSpec {
    #[default]
    Free,
    /// `V = m omega^2 x^2 / 2`.
    Harmonic { omega: f64 },
    /// `V = v0` on `[a, b]`, zero elsewhere.
    RectangularBarrier { v0: f64, a: f64, b: f64 },
    /// One value per grid point.
    Tabulated { values: Vec<f64> },
}


impl PotentialSpec {
    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        match self {
            PotentialSpec::Free => Ok(()),
            PotentialSpec::Harmonic { omega } => {
                if omega.is_finite() && *omega > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidPotential(format!("omega must be positive, got {omega}")))
                }
            }
            PotentialSpec::RectangularBarrier { v0, a, b } => {
                if !v0.is_finite() {
                    return Err(Error::InvalidPotential("v0 must be finite".into()));
                }
                if !(a < b) {
                    return Err(Error::InvalidPotential(format!("barrier needs a < b, got a={a}, b={b}")));
                }
                if !(*a > grid.x_min() && *b < grid.x_max()) {
                    return Err(Error::InvalidPotential(format!(
                        "barrier [{a}, {b}] must lie strictly inside ({}, {})",
                        grid.x_min(),
                        grid.x_max()
                    )));
                }
                Ok(())
            }
            PotentialSpec::Tabulated { values } => {
                if values.len() != grid.len() {
                    return Err(Error::InvalidPotential(format!(
                        "tabulated potential has {} values, grid has {} points",
                        values.len(),
                        grid.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidPotential("tabulated values must be finite".into()));
                }
                Ok(())
            }
        }
    }

    /// Value at a single position. `Tabulated` has no meaning off-grid and
    /// returns `None`.
    pub fn value_at(&self, x: f64, units: &PhysicalUnits) -> Option<f64> {
        match *self {
            PotentialSpec::Free => Some(0.0),
            PotentialSpec::Harmonic { omega } => Some(0.5 * units.mass * omega * omega * x * x),
            PotentialSpec::RectangularBarrier { v0, a, b } => Some(if x >= a && x <= b { v0 } else { 0.0 }),
            PotentialSpec::Tabulated { .. } => None,
        }
    }

    pub fn barrier(&self) -> Option<(f64, f64, f64)> {
        match *self {
            PotentialSpec::RectangularBarrier { v0, a, b } => Some((v0, a, b)),
            _ => None,
        }
    }
}

/// Samples the potential on every grid point.
pub fn evaluate_potential(spec: &PotentialSpec, grid: &Grid1D, units: &PhysicalUnits) -> Result<Vec<f64>> {
    spec.validate(grid)?;
    if let PotentialSpec::Tabulated { values } = spec {
        return Ok(values.clone());
    }
    Ok((0..grid.len())
        .map(|i| spec.value_at(grid.x(i), units).expect("analytic potential"))
        .collect())
}
