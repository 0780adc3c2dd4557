//! Retarded Green's function of a nearest-neighbour tight-binding chain
//! attached to two semi-infinite leads.
//!
//! Device sites `0..n` with on-site energies `eps_j` and hopping `-t`
//! (band `E = eps_lead - 2 t cos(k a)`). Each lead enters through the
//! analytic surface self-energy `Sigma = -t z`, where `z = exp(i k a)` is the
//! outgoing root of `t z^2 + (E - eps_lead) z + t = 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::Tridiagonal;
use crate::units::PhysicalUnits;

/// Sites whose `|G|` falls below this fraction of the row maximum are masked.
pub const MAGNITUDE_MASK: f64 = 1e-12;

/// Rectangular barrier over a site range, for configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteBarrier {
    pub height: f64,
    pub first: usize,
    pub last: usize,
}

/// `[negf]` table of a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegfSpec {
    pub n_sites: usize,
    pub hopping: f64,
    #[serde(default = "one")]
    pub lattice_constant: f64,
    #[serde(default)]
    pub lead_energy: f64,
    #[serde(default)]
    pub broadening: f64,
    #[serde(default)]
    pub site_energies: Option<Vec<f64>>,
    #[serde(default)]
    pub barrier: Option<SiteBarrier>,
    pub source_site: usize,
    #[serde(default = "one")]
    pub injection_rate: f64,
    pub energies: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl NegfSpec {
    pub fn validate(&self) -> Result<()> {
        self.model(&PhysicalUnits::default()).map(|_| ())?;
        if self.source_site >= self.n_sites {
            return Err(Error::InvalidConfig(format!(
                "source_site {} outside chain of {} sites",
                self.source_site, self.n_sites
            )));
        }
        if self.energies.is_empty() {
            return Err(Error::InvalidConfig("negf.energies is empty".into()));
        }
        Ok(())
    }

    pub fn model(&self, units: &PhysicalUnits) -> Result<NegfModel> {
        let mut eps = match &self.site_energies {
            Some(v) if v.len() != self.n_sites => {
                return Err(Error::InvalidConfig(format!(
                    "site_energies has {} entries for {} sites",
                    v.len(),
                    self.n_sites
                )))
            }
            Some(v) => v.clone(),
            None => vec![self.lead_energy; self.n_sites],
        };
        if let Some(b) = &self.barrier {
            if b.first > b.last || b.last >= self.n_sites {
                return Err(Error::InvalidConfig(format!("barrier sites {}..={} invalid", b.first, b.last)));
            }
            eps[b.first..=b.last].iter_mut().for_each(|e| *e += b.height);
        }
        NegfModel::new(eps, self.hopping, self.lead_energy, self.lattice_constant, self.broadening, *units)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegfModel {
    site_energies: Vec<f64>,
    hopping: f64,
    lead_energy: f64,
    lattice_constant: f64,
    broadening: f64,
    units: PhysicalUnits,
}

impl NegfModel {
    pub fn new(
        site_energies: Vec<f64>,
        hopping: f64,
        lead_energy: f64,
        lattice_constant: f64,
        broadening: f64,
        units: PhysicalUnits,
    ) -> Result<Self> {
        if site_energies.len() < 2 {
            return Err(Error::InvalidConfig("chain needs at least 2 sites".into()));
        }
        if !(hopping.is_finite() && hopping != 0.0) {
            return Err(Error::InvalidConfig(format!("hopping must be finite and non-zero, got {hopping}")));
        }
        if !(lattice_constant.is_finite() && lattice_constant > 0.0) {
            return Err(Error::InvalidConfig(format!("lattice_constant must be positive, got {lattice_constant}")));
        }
        if !(broadening.is_finite() && broadening >= 0.0) {
            return Err(Error::InvalidConfig(format!("broadening must be non-negative, got {broadening}")));
        }
        units.validate()?;
        Ok(Self { site_energies, hopping, lead_energy, lattice_constant, broadening, units })
    }

    /// Uniform chain with every site at the lead energy.
    pub fn uniform(n_sites: usize, hopping: f64) -> Result<Self> {
        Self::new(vec![0.0; n_sites], hopping, 0.0, 1.0, 0.0, PhysicalUnits::default())
    }

    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    pub fn site_energies(&self) -> &[f64] {
        &self.site_energies
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn lattice_constant(&self) -> f64 {
        self.lattice_constant
    }

    pub fn units(&self) -> &PhysicalUnits {
        &self.units
    }

    /// Effective mass of the discretized band, `hbar^2 / (2 t a^2)`.
    pub fn effective_mass(&self) -> f64 {
        self.units.hbar.powi(2) / (2.0 * self.hopping.abs() * self.lattice_constant.powi(2))
    }

    pub fn band(&self) -> (f64, f64) {
        let w = 2.0 * self.hopping.abs();
        (self.lead_energy - w, self.lead_energy + w)
    }

    /// Lead wavenumber `k` with `E = eps_lead - 2 t cos(k a)`, for energies inside the band.
    pub fn wavenumber(&self, energy: f64) -> Result<f64> {
        self.check_band(energy)?;
        let c = -(energy - self.lead_energy) / (2.0 * self.hopping);
        Ok(c.acos() / self.lattice_constant)
    }

    fn check_band(&self, energy: f64) -> Result<()> {
        let (lower, upper) = self.band();
        if self.broadening == 0.0 && !(energy > lower && energy < upper) {
            return Err(Error::OutsideBand { energy, lower, upper });
        }
        Ok(())
    }

    /// Outgoing lead root `z = exp(i k a)`.
    fn lead_root(&self, energy: f64) -> Result<Complex64> {
        self.check_band(energy)?;
        let t = self.hopping;
        let e = Complex64::new(energy - self.lead_energy, self.broadening);
        let disc = (e * e - 4.0 * t * t).sqrt();
        let z1 = (-e + disc) / (2.0 * t);
        let z2 = (-e - disc) / (2.0 * t);
        let z = if self.broadening > 0.0 {
            if z1.norm() < z2.norm() { z1 } else { z2 }
        } else if t * z1.im > 0.0 {
            z1
        } else {
            z2
        };
        Ok(z)
    }

    /// Retarded surface self-energy of either lead.
    pub fn lead_self_energy(&self, energy: f64) -> Result<Complex64> {
        Ok(-self.hopping * self.lead_root(energy)?)
    }

    /// Column `source` of `G_R(E)`; by symmetry of the chain it is also the row.
    pub fn green_column(&self, source: usize, energy: f64) -> Result<Vec<Complex64>> {
        let n = self.n_sites();
        if source >= n {
            return Err(Error::Precondition(format!("source site {source} outside chain of {n} sites")));
        }
        let sigma = self.lead_self_energy(energy)?;
        let e = Complex64::new(energy, self.broadening);
        let mut diag: Vec<Complex64> = self.site_energies.iter().map(|&eps| e - eps).collect();
        diag[0] -= sigma;
        diag[n - 1] -= sigma;
        let off = vec![Complex64::new(self.hopping, 0.0); n];
        let lu = Tridiagonal::factor(&off, &diag, &off)?;
        let mut g = vec![Complex64::default(); n];
        g[source] = Complex64::new(1.0, 0.0);
        lu.solve_in_place(&mut g);
        Ok(g)
    }

    /// Fisher-Lee transmission `Gamma_L Gamma_R |G(0, n-1)|^2`.
    pub fn transmission(&self, energy: f64) -> Result<f64> {
        let g = self.green_column(0, energy)?;
        let gamma = -2.0 * self.lead_self_energy(energy)?.im;
        Ok(gamma * gamma * g[self.n_sites() - 1].norm_sqr())
    }
}

/// One column of `G_R` split as `|G| exp(i theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreensRow {
    pub source_site: usize,
    pub energy: f64,
    pub values: Vec<Complex64>,
    pub magnitude: Vec<f64>,
    /// Phase unwrapped along the chain, zero at the source site.
    pub theta: Vec<f64>,
    pub valid: Vec<bool>,
}

pub fn compute_green_row(model: &NegfModel, source_site: usize, energy: f64) -> Result<GreensRow> {
    let values = model.green_column(source_site, energy)?;
    let magnitude: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    let peak = magnitude.iter().copied().fold(0.0, f64::max);
    let valid: Vec<bool> = magnitude.iter().map(|&m| m > MAGNITUDE_MASK * peak).collect();
    let mut theta = vec![0.0; values.len()];
    // unwrap outward from the source so that theta(source) = 0
    let mut last = source_site;
    for j in source_site + 1..values.len() {
        if valid[j] {
            theta[j] = theta[last] + (values[j] / values[last]).arg();
            last = j;
        }
    }
    last = source_site;
    for j in (0..source_site).rev() {
        if valid[j] {
            theta[j] = theta[last] + (values[j] / values[last]).arg();
            last = j;
        }
    }
    Ok(GreensRow { source_site, energy, values, magnitude, theta, valid })
}

/// `hbar * dtheta/dx / m_eff` per site (central differences, one-sided at the
/// ends); `None` on masked sites.
pub fn phase_velocity(row: &GreensRow, model: &NegfModel) -> Vec<Option<f64>> {
    let n = row.theta.len();
    let a = model.lattice_constant();
    let scale = model.units().hbar / model.effective_mass();
    (0..n)
        .map(|j| {
            let (lo, hi) = match j {
                0 => (0, 1),
                _ if j == n - 1 => (n - 2, n - 1),
                _ => (j - 1, j + 1),
            };
            if !(row.valid[lo] && row.valid[hi] && row.valid[j]) {
                return None;
            }
            Some(scale * (row.theta[hi] - row.theta[lo]) / ((hi - lo) as f64 * a))
        })
        .collect()
}

/// Coherent current on each bond `j -> j+1` for a single source site with a
/// constant injection rate: `rate * (hbar/m_eff) |G_j| |G_{j+1}| sin(dtheta) / a`,
/// the lattice form of `rate * (hbar grad theta / m_eff) |G|^2`. Conserved on
/// every bond not adjacent to the source.
pub fn coherent_current_density(model: &NegfModel, source_site: usize, energy: f64, injection_rate: f64) -> Result<Vec<f64>> {
    let g = model.green_column(source_site, energy)?;
    let scale = injection_rate * model.units().hbar / (model.effective_mass() * model.lattice_constant());
    Ok(g.windows(2).map(|w| scale * (w[0].conj() * w[1]).im).collect())
}

/// Per-energy result of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct NegfSample {
    pub row: GreensRow,
    pub velocity: Vec<Option<f64>>,
    pub bond_current: Vec<f64>,
}

/// Evaluates every energy independently; output order follows `energies`.
pub fn sweep(model: &NegfModel, source_site: usize, energies: &[f64], injection_rate: f64) -> Result<Vec<NegfSample>> {
    energies
        .par_iter()
        .map(|&e| {
            let row = compute_green_row(model, source_site, e)?;
            let velocity = phase_velocity(&row, model);
            let bond_current = coherent_current_density(model, source_site, e, injection_rate)?;
            Ok(NegfSample { row, velocity, bond_current })
        })
        .collect()
}
