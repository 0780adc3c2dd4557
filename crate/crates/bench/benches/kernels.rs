use std::hint::black_box;

use bohmflow_core::trajectories::TrajectoryIntegrator;
use bohmflow_core::*;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn packet(n: usize) -> (WavefunctionFrame, Vec<f64>, PhysicalUnits) {
    let grid = Grid1D::new(-20.0, 20.0, n).unwrap();
    let units = PhysicalUnits::default();
    let pot = PotentialSpec::Harmonic { omega: 1.0 };
    let psi = init_wavefunction(&InitialStateSpec::Gaussian { x0: -1.0, sigma0: 1.0, k0: 1.5 }, &grid, &units, &pot).unwrap();
    let v = evaluate_potential(&pot, &grid, &units).unwrap();
    (psi, v, units)
}

fn crank_nicolson(c: &mut Criterion) {
    let mut g = c.benchmark_group("crank_nicolson_step");
    for n in [1024, 4096, 16384] {
        let (psi, v, units) = packet(n);
        let cn = CrankNicolson::new(&psi.grid, &v, 1e-3, &units).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            let mut values = psi.values.clone();
            let mut scratch = values.clone();
            b.iter(|| cn.step_in_place(black_box(&mut values), &mut scratch))
        });
    }
    g.finish();
}

fn fields(c: &mut Criterion) {
    let mut g = c.benchmark_group("bohm_fields");
    for n in [1024, 4096, 16384] {
        let (psi, _, units) = packet(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| BohmFieldSet::compute(black_box(&psi), &units, 1e-10))
        });
    }
    g.finish();
}

fn diagnostics(c: &mut Criterion) {
    let (psi, v, units) = packet(2048);
    let triple = time_triple(&psi, &v, 1e-3, &units).unwrap();
    let tol = Tolerances::default();
    c.bench_function("diagnostics_report_2048", |b| {
        b.iter(|| DiagnosticsReport::compute(black_box(&triple), &v, &units, 1e-10, &tol).unwrap())
    });
}

fn trajectories(c: &mut Criterion) {
    let (psi, v, units) = packet(2048);
    let cn = CrankNicolson::new(&psi.grid, &v, 1e-3, &units).unwrap();
    let mut frames = vec![psi.clone()];
    for _ in 0..20 {
        let next = cn.step(frames.last().unwrap());
        frames.push(next);
    }
    let mut g = c.benchmark_group("trajectories_20_frames");
    g.sample_size(20);
    for n_traj in [1000, 10000] {
        let x0 = sample_initial_positions(&psi, n_traj, 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n_traj), &n_traj, |b, _| {
            b.iter(|| {
                let mut it = TrajectoryIntegrator::new(&psi.grid, &x0, &units, 1e-10, 1).unwrap();
                for f in &frames {
                    it.push_frame(f).unwrap();
                }
                it.finish().unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, crank_nicolson, fields, diagnostics, trajectories);
criterion_main!(benches);
