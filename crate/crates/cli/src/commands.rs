use std::fs;
use std::path::Path;

use bohmflow_core::config::TrajectorySpec;
use bohmflow_core::negf::sweep;
use bohmflow_core::trajectories::TrajectoryIntegrator;
use bohmflow_core::{
    diagnose_frames, init_wavefunction, parse_config, propagate, propagate_each, run_tunneling_experiment,
    sample_initial_positions, verify_reports, BohmFieldSet, ConfigFile, Error, Tolerances, TrajectoryFlag,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::export::{export_fields, write_json, write_negf, write_trajectories};
use crate::{Common, Profile};

fn load(args: &Common) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(&args.config).map_err(|source| CliError::ReadConfig { path: args.config.clone(), source })?;
    let mut file = parse_config(&text).map_err(|source| CliError::Config { path: args.config.clone(), source })?;
    if let Some(seed) = args.seed {
        file.simulation.seed = seed;
    }
    if let Some(n) = args.n_traj {
        file.trajectories.n_traj = n;
    }
    file.trajectories.validate()?;
    Ok(file)
}

fn out_dir(args: &Common) -> Result<&Path, CliError> {
    fs::create_dir_all(&args.out).map_err(|e| CliError::write(&args.out, e))?;
    Ok(&args.out)
}

fn tolerances(p: Profile) -> Tolerances {
    match p {
        Profile::Default => Tolerances::default(),
        Profile::Strict => Tolerances::strict(),
    }
}

#[derive(Serialize)]
struct RunSummary {
    n_frames: usize,
    final_time: f64,
    norm_drift: f64,
    dt_above_advisory: bool,
}

pub fn simulate(args: &Common) -> Result<(), CliError> {
    let cfg = load(args)?.simulation;
    let out = out_dir(args)?;
    let run = propagate(&cfg)?;
    let fields: Vec<BohmFieldSet> = run
        .frames
        .par_iter()
        .map(|f| BohmFieldSet::compute(f, &cfg.units, cfg.node_epsilon))
        .collect();
    export_fields(&out.join("fields.ndjson"), &run.frames, &fields, &cfg.units, cfg.node_epsilon)?;
    let summary = RunSummary {
        n_frames: run.frames.len(),
        final_time: run.frames.last().map_or(0.0, |f| f.time),
        norm_drift: run.norm_drift,
        dt_above_advisory: run.dt_above_advisory,
    };
    write_json(&out.join("run.json"), &summary)?;
    println!("{} frames, norm drift {:.3e}", summary.n_frames, summary.norm_drift);
    if summary.dt_above_advisory {
        eprintln!("warning: dt exceeds the accuracy guidance dx^2 m / hbar");
    }
    Ok(())
}

pub fn diagnose(args: &Common) -> Result<(), CliError> {
    let cfg = load(args)?.simulation;
    let out = out_dir(args)?;
    let run = propagate(&cfg)?;
    let tol = tolerances(args.tolerance_profile);
    let reports = diagnose_frames(&run.frames, &run.potential, &cfg.units, cfg.node_epsilon, cfg.dt, &tol)?;
    write_json(&out.join("diagnostics.json"), &reports)?;
    println!("{} reports written", reports.len());
    Ok(())
}

pub fn verify(args: &Common) -> Result<(), CliError> {
    let cfg = load(args)?.simulation;
    let out = out_dir(args)?;
    let run = propagate(&cfg)?;
    let tol = tolerances(args.tolerance_profile);
    let reports = diagnose_frames(&run.frames, &run.potential, &cfg.units, cfg.node_epsilon, cfg.dt, &tol)?;
    let v = verify_reports(&reports, &cfg.units, &tol);
    write_json(&out.join("diagnostics.json"), &reports)?;
    write_json(&out.join("verify.json"), &v)?;
    let failed: Vec<_> = v.checks.iter().filter(|c| !c.passed).collect();
    for c in &failed {
        println!("FAIL t={} {}: {:.3e} > {:.3e}", c.time, c.name, c.value, c.limit);
    }
    println!("{} of {} checks passed", v.checks.len() - failed.len(), v.checks.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Tolerance { failed: failed.len(), total: v.checks.len() })
    }
}

#[derive(Serialize)]
struct EnsembleSummary {
    n_trajectories: usize,
    recorded_times: usize,
    seed: u64,
    ordering_violations: usize,
    interior: usize,
    transmitted: usize,
    reflected: usize,
    halted: usize,
    exited: usize,
}

impl EnsembleSummary {
    fn new(e: &bohmflow_core::TrajectoryEnsemble, seed: u64) -> Self {
        let count = |f: TrajectoryFlag| e.flags.iter().filter(|&&g| g == f).count();
        Self {
            n_trajectories: e.len(),
            recorded_times: e.times.len(),
            seed,
            ordering_violations: e.ordering_violations(),
            interior: count(TrajectoryFlag::Interior),
            transmitted: count(TrajectoryFlag::Transmitted),
            reflected: count(TrajectoryFlag::Reflected),
            halted: count(TrajectoryFlag::Halted),
            exited: count(TrajectoryFlag::Exited),
        }
    }
}

pub fn trajectories(args: &Common) -> Result<(), CliError> {
    let file = load(args)?;
    let cfg = &file.simulation;
    let spec: TrajectorySpec = file.trajectories;
    let out = out_dir(args)?;
    let psi0 = init_wavefunction(&cfg.initial_state, &cfg.grid, &cfg.units, &cfg.potential)?;
    let initial = sample_initial_positions(&psi0, spec.n_traj, cfg.seed)?;
    let mut integrator = TrajectoryIntegrator::new(&cfg.grid, &initial, &cfg.units, cfg.node_epsilon, spec.record_stride)?;
    propagate_each(cfg, |f| integrator.push_frame(f))?;
    let mut ensemble = integrator.finish()?;
    if let Some((_, a, b)) = cfg.potential.barrier() {
        ensemble.classify(a, b);
    }
    write_trajectories(&out.join("trajectories.csv"), &ensemble)?;
    let summary = EnsembleSummary::new(&ensemble, cfg.seed);
    write_json(&out.join("trajectories.json"), &summary)?;
    println!("{} trajectories, {} ordering violations", summary.n_trajectories, summary.ordering_violations);
    Ok(())
}

pub fn tunnel(args: &Common) -> Result<(), CliError> {
    let file = load(args)?;
    let cfg = &file.simulation;
    let out = out_dir(args)?;
    let (report, ensemble) = run_tunneling_experiment(cfg, &file.trajectories, cfg.seed)?;
    write_json(&out.join("tunnel.json"), &report)?;
    write_trajectories(&out.join("trajectories.csv"), &ensemble)?;
    write_json(&out.join("trajectories.json"), &EnsembleSummary::new(&ensemble, cfg.seed))?;
    println!(
        "transmission: trajectories {:.4}, wave {:.4}",
        report.transmission_fraction, report.wave_transmission
    );
    Ok(())
}

#[derive(Serialize)]
struct NegfPoint {
    energy: f64,
    wavenumber: f64,
    transmission: f64,
}

pub fn negf(args: &Common) -> Result<(), CliError> {
    let file = load(args)?;
    let spec = file
        .negf
        .ok_or_else(|| CliError::Config { path: args.config.clone(), source: Error::InvalidConfig("missing [negf] table".into()) })?;
    let out = out_dir(args)?;
    let model = spec.model(&file.simulation.units)?;
    let samples = sweep(&model, spec.source_site, &spec.energies, spec.injection_rate)?;
    write_negf(&out.join("negf.csv"), &samples)?;
    let points = spec
        .energies
        .iter()
        .map(|&e| {
            Ok(NegfPoint { energy: e, wavenumber: model.wavenumber(e)?, transmission: model.transmission(e)? })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write_json(&out.join("negf.json"), &points)?;
    println!("{} energies x {} sites", samples.len(), model.n_sites());
    Ok(())
}

