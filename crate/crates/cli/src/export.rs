//! File formats: NDJSON fields, CSV trajectories and sweeps, JSON reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use bohmflow_core::negf::NegfSample;
use bohmflow_core::{BohmFieldSet, Error, PhysicalUnits, TrajectoryEnsemble, WavefunctionFrame};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FIELDS_SCHEMA: &str = "bohmflow.fields";
pub const FIELDS_SCHEMA_VERSION: u32 = 1;

/// First line of a fields file. `created_unix` is the only run-dependent value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldsHeader {
    pub schema: String,
    pub version: u32,
    pub created_unix: u64,
    pub n_frames: usize,
    pub hbar: f64,
    pub mass: f64,
    pub node_epsilon: f64,
}

/// One frame; `mask[i]` is true where the point is masked near a node.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub re_psi: Vec<f64>,
    pub im_psi: Vec<f64>,
    pub P: Vec<f64>,
    pub p_R: Vec<f64>,
    pub p_I: Vec<f64>,
    pub v_r: Vec<f64>,
    pub V_qu: Vec<f64>,
    pub J: Vec<f64>,
    pub mask: Vec<bool>,
}

impl FieldRecord {
    fn new(frame: &WavefunctionFrame, f: &BohmFieldSet) -> Self {
        Self {
            t: frame.time,
            x: frame.grid.points(),
            re_psi: frame.values.iter().map(|z| z.re).collect(),
            im_psi: frame.values.iter().map(|z| z.im).collect(),
            P: f.p.clone(),
            p_R: f.p_r.clone(),
            p_I: f.p_i.clone(),
            v_r: f.v_r.clone(),
            V_qu: f.v_qu.clone(),
            J: f.j.clone(),
            mask: f.valid.iter().map(|v| !v).collect(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::write(path, e))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn export_fields(
    path: &Path,
    frames: &[WavefunctionFrame],
    fields: &[BohmFieldSet],
    units: &PhysicalUnits,
    node_epsilon: f64,
) -> Result<(), CliError> {
    if frames.len() != fields.len() || frames.iter().zip(fields).any(|(a, b)| a.len() != b.p.len()) {
        return Err(Error::Precondition("frames and field sets do not line up".into()).into());
    }
    let mut w = create(path)?;
    let header = FieldsHeader {
        schema: FIELDS_SCHEMA.into(),
        version: FIELDS_SCHEMA_VERSION,
        created_unix: unix_now(),
        n_frames: frames.len(),
        hbar: units.hbar,
        mass: units.mass,
        node_epsilon,
    };
    json_line(&mut w, path, &header)?;
    for (frame, f) in frames.iter().zip(fields) {
        json_line(&mut w, path, &FieldRecord::new(frame, f))?;
    }
    w.flush().map_err(|e| CliError::write(path, e))
}

fn json_line<T: Serialize>(w: &mut impl Write, path: &Path, value: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *w, value).map_err(|e| CliError::write(path, e))?;
    w.write_all(b"\n").map_err(|e| CliError::write(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::write(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| CliError::write(path, e))
}

/// One row per (trajectory, recorded time): `traj_id,t,x,flag`.
pub fn write_trajectories(path: &Path, e: &TrajectoryEnsemble) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = |e: csv::Error| CliError::write(path, e);
    w.write_record(["traj_id", "t", "x", "flag"]).map_err(err)?;
    for (id, (p, flag)) in e.positions.iter().zip(&e.flags).enumerate() {
        for (t, x) in e.times.iter().zip(p) {
            w.write_record([id.to_string(), t.to_string(), x.to_string(), flag.as_str().to_string()]).map_err(err)?;
        }
    }
    w.flush().map_err(|e| CliError::write(path, e))
}

/// One row per (energy, site): `energy,site,abs_g,theta,v,j`. `v` is empty
/// at masked sites; `j` is the current on the bond to the next site and empty
/// on the last site.
pub fn write_negf(path: &Path, samples: &[NegfSample]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = |e: csv::Error| CliError::write(path, e);
    w.write_record(["energy", "site", "abs_g", "theta", "v", "j"]).map_err(err)?;
    for s in samples {
        for site in 0..s.row.magnitude.len() {
            w.write_record([
                s.row.energy.to_string(),
                site.to_string(),
                s.row.magnitude[site].to_string(),
                s.row.theta[site].to_string(),
                s.velocity[site].map(|v| v.to_string()).unwrap_or_default(),
                s.bond_current.get(site).map(|j| j.to_string()).unwrap_or_default(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| CliError::write(path, e))
}

#[cfg(test)]
pub fn read_fields(path: &Path) -> (FieldsHeader, Vec<FieldRecord>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = serde_json::from_str(lines.next().unwrap()).unwrap();
    (header, lines.map(|l| serde_json::from_str(l).unwrap()).collect())
}
