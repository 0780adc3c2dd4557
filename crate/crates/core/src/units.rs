use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant and particle mass. Natural units by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalUnits {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysicalUnits {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

impl PhysicalUnits {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let u = Self { hbar, mass };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::InvalidUnits(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::InvalidUnits(format!("mass must be positive, got {}", self.mass)));
        }
        Ok(())
    }
}
