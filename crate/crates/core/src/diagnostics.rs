//! Numerical verification of the operator identities.
//!
//! Pointwise checks run over a *window*: points whose surrounding samples
//! (four on each side) all have `R > window * max R`. Relative errors are
//! `max |a - b| / scale` over the window, with `scale` the larger of the two
//! fields' maxima and the kinetic energy scale `hbar^2 / (2 m sigma^2)` of the
//! packet (or `hbar / sigma` for momenta), so that fields vanishing
//! identically do not divide by zero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{momentum_rule, BohmFieldSet};
use crate::propagator::time_triple;
use crate::spectral;
use crate::stencil;
use crate::units::PhysicalUnits;
use crate::wavefunction::WavefunctionFrame;

/// Thresholds used by the checks; every report carries the values it was judged against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub norm: f64,
    /// `|<p_R> - <p_Q>| <= expectation * (hbar/sigma + |<p_Q>|)`.
    pub expectation: f64,
    /// `|<p_I>| <= p_i * hbar / sigma`.
    pub p_i: f64,
    pub p_q_imag: f64,
    pub commutator: f64,
    pub identity: f64,
    /// Relative closure of the energy partition.
    pub partition: f64,
    pub masked_mass: f64,
    /// Relative amplitude threshold of the pointwise window.
    pub window: f64,
    /// Relative change of `<e_R>` allowed across the frames of one closed run.
    pub energy_drift: f64,
    /// Bound on the continuity and quantum Hamilton-Jacobi residual maxima;
    /// `None` leaves them ungated (they are discretization errors).
    pub residual: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: 1e-10,
            expectation: 1e-8,
            p_i: 1e-8,
            p_q_imag: 1e-10,
            commutator: 1e-10,
            identity: 1e-6,
            partition: 1e-6,
            masked_mass: 1e-6,
            window: 1e-4,
            energy_drift: 1e-8,
            residual: None,
        }
    }
}

impl Tolerances {
    /// Default thresholds plus a gate on the discretization residuals.
    pub fn strict() -> Self {
        Self { residual: Some(1e-3), ..Self::default() }
    }
}

/// Points whose samples within four cells all exceed `threshold * max R`.
pub fn window_mask(modulus: &[f64], threshold: f64) -> Vec<bool> {
    let peak = modulus.iter().copied().fold(0.0, f64::max);
    let above: Vec<bool> = modulus.iter().map(|&r| r > threshold * peak).collect();
    let n = modulus.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(4);
            let hi = (i + 4).min(n - 1);
            i >= 4 && i + 4 < n && above[lo..=hi].iter().all(|&b| b)
        })
        .collect()
}

/// Position spread `sqrt(<x^2> - <x>^2)` of a frame.
pub fn position_spread(frame: &WavefunctionFrame) -> f64 {
    let p = frame.density();
    let g = &frame.grid;
    let norm = g.integrate(&p);
    let xs = g.points();
    let m1 = g.integrate(&p.iter().zip(&xs).map(|(p, x)| p * x).collect::<Vec<_>>()) / norm;
    let m2 = g.integrate(&p.iter().zip(&xs).map(|(p, x)| p * x * x).collect::<Vec<_>>()) / norm;
    (m2 - m1 * m1).max(0.0).sqrt()
}

fn energy_scale(frame: &WavefunctionFrame, units: &PhysicalUnits) -> f64 {
    let s = position_spread(frame);
    units.hbar * units.hbar / (2.0 * units.mass * s * s)
}

fn max_abs_over(f: &[f64], mask: &[bool]) -> f64 {
    f.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v.abs()).fold(0.0, f64::max)
}

/// Relative sup-norm discrepancy of two fields over `mask`.
fn relative_discrepancy(a: &[f64], b: &[f64], mask: &[bool], floor: f64) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((x, y), _)| (x - y).abs())
        .fold(0.0, f64::max);
    diff / max_abs_over(a, mask).max(max_abs_over(b, mask)).max(floor)
}

fn masked_mass(frame: &WavefunctionFrame, valid: &[bool]) -> f64 {
    let p: Vec<f64> = frame.density().iter().zip(valid).map(|(&p, &v)| if v { 0.0 } else { p }).collect();
    frame.grid.integrate(&p)
}

fn weighted_integral(frame: &WavefunctionFrame, f: &[f64], valid: &[bool]) -> f64 {
    let w: Vec<f64> = frame
        .density()
        .iter()
        .zip(f)
        .zip(valid)
        .map(|((p, f), &v)| if v { p * f } else { 0.0 })
        .collect();
    frame.grid.integrate(&w)
}

/// `<p_Q>`, `<p_R>`, `<p_I>` of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumExpectations {
    /// Real part of `int psi* (-i hbar) psi' dx`; spectral derivative for
    /// confined frames, fourth-order differences otherwise (plane waves).
    pub p_q: f64,
    pub p_q_imag: f64,
    pub p_r: f64,
    pub p_i: f64,
    pub masked_mass: f64,
}

pub fn expectation_momentum(
    frame: &WavefunctionFrame,
    units: &PhysicalUnits,
    node_epsilon: f64,
    tol: &Tolerances,
) -> Result<MomentumExpectations> {
    let fields = BohmFieldSet::compute(frame, units, node_epsilon);
    let mass = masked_mass(frame, &fields.valid);
    if mass > tol.masked_mass {
        return Err(Error::MaskedMass { mass, limit: tol.masked_mass });
    }
    let d = if frame.is_confined() {
        spectral::derivative(&frame.values, frame.grid.dx())
    } else {
        stencil::d1(&frame.values, frame.grid.dx())
    };
    let minus_i_hbar = Complex64::new(0.0, -units.hbar);
    let integrand: Vec<Complex64> = frame.values.iter().zip(&d).map(|(z, dz)| z.conj() * minus_i_hbar * dz).collect();
    let re: Vec<f64> = integrand.iter().map(|z| z.re).collect();
    let im: Vec<f64> = integrand.iter().map(|z| z.im).collect();
    Ok(MomentumExpectations {
        p_q: frame.grid.integrate(&re),
        p_q_imag: frame.grid.integrate(&im),
        p_r: weighted_integral(frame, &fields.p_r, &fields.valid),
        p_i: weighted_integral(frame, &fields.p_i, &fields.valid),
        masked_mass: mass,
    })
}

/// Largest relative deviation between `p_R` applied to `x psi` and `x` times
/// `p_R` applied to `psi`.
///
/// Compared where both fields are unmasked and the derivative stencil does not
/// straddle `x = 0` (the node of the multiplier).
pub fn check_commutator(frame: &WavefunctionFrame, units: &PhysicalUnits, node_epsilon: f64) -> f64 {
    let g = &frame.grid;
    let n = frame.len();
    let xs = g.points();
    let x_psi: Vec<Complex64> = frame.values.iter().zip(&xs).map(|(z, &x)| z * x).collect();
    let on_psi = momentum_rule(&frame.values, g.dx(), units, node_epsilon);
    let on_x_psi = momentum_rule(&x_psi, g.dx(), units, node_epsilon);
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        let (lo, hi) = stencil::span(i, n);
        if !(on_psi.valid[i] && on_x_psi.valid[i] && xs[lo] * xs[hi] > 0.0) {
            continue;
        }
        // (p_R x) psi = p_R[x psi] (x psi)   vs   (x p_R) psi = x p_R[psi] psi
        let lhs = x_psi[i] * on_x_psi.p_r[i];
        let rhs = x_psi[i] * on_psi.p_r[i];
        diff = diff.max((lhs - rhs).norm());
        scale = scale.max(rhs.norm());
    }
    let floor = units.hbar / (g.x_max() - g.x_min()) * x_psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    diff / scale.max(floor)
}

/// One operator-product identity evaluated two ways.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    /// Right-hand side of the identity from derivatives of `R` and `S`.
    pub field: Vec<f64>,
    /// Same quantity from applying `-i hbar d/dx` to `p_R psi` or `i p_I psi`.
    pub construction: Vec<f64>,
    pub max_relative_error: f64,
}

/// The four products `p_R p_R / 2m`, `-p_I p_I / 2m`, `p_R p_I / 2m`, `p_I p_R / 2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorProducts {
    pub rr: DualField,
    pub ii: DualField,
    pub ri: DualField,
    pub ir: DualField,
    pub window: Vec<bool>,
}

pub fn operator_product_fields(
    frame: &WavefunctionFrame,
    units: &PhysicalUnits,
    node_epsilon: f64,
    window: f64,
) -> OperatorProducts {
    let f = BohmFieldSet::compute(frame, units, node_epsilon);
    operator_products_from(frame, &f, units, window)
}

fn operator_products_from(frame: &WavefunctionFrame, f: &BohmFieldSet, units: &PhysicalUnits, window: f64) -> OperatorProducts {
    let hbar = units.hbar;
    let two_m = 2.0 * units.mass;
    let n = frame.len();
    let win = window_mask(&frame.modulus(), window);
    let floor = energy_scale(frame, units);

    // R'/R = -p_I/hbar, S' = p_R, R''/R = -2m V_qu / hbar^2, S'' = lap_s
    let mut rr = vec![0.0; n];
    let mut ii = vec![0.0; n];
    let mut ri = vec![0.0; n];
    let mut ir = vec![0.0; n];
    for i in 0..n {
        if !f.valid[i] {
            continue;
        }
        let r1 = -f.p_i[i] / hbar;
        let s1 = f.p_r[i];
        rr[i] = s1 * s1 / two_m;
        ii[i] = f.v_qu[i];
        ri[i] = -hbar / two_m * r1 * s1;
        ir[i] = ri[i] - hbar / two_m * f.lap_s[i];
    }

    let psi = &frame.values;
    let dx = frame.grid.dx();
    let minus_i_hbar = Complex64::new(0.0, -hbar);
    let pr_psi: Vec<Complex64> = psi.iter().zip(&f.p_r).map(|(z, &p)| z * p).collect();
    let ipi_psi: Vec<Complex64> = psi.iter().zip(&f.p_i).map(|(z, &p)| z * Complex64::new(0.0, p)).collect();
    let d_pr = stencil::d1(&pr_psi, dx);
    let d_ipi = stencil::d1(&ipi_psi, dx);
    let mut c_rr = vec![0.0; n];
    let mut c_ii = vec![0.0; n];
    let mut c_ri = vec![0.0; n];
    let mut c_ir = vec![0.0; n];
    for i in 0..n {
        if !win[i] {
            continue;
        }
        // (p_R p_R + i p_I p_R) psi = p_Q (p_R psi)
        let a = minus_i_hbar * d_pr[i] / psi[i];
        // (i p_I i p_I + i p_R p_I) psi = p_Q (i p_I psi)
        let b = minus_i_hbar * d_ipi[i] / psi[i];
        c_rr[i] = a.re / two_m;
        c_ir[i] = a.im / two_m;
        c_ii[i] = b.re / two_m;
        c_ri[i] = b.im / two_m;
    }
    let dual = |field: Vec<f64>, construction: Vec<f64>| {
        let e = relative_discrepancy(&field, &construction, &win, floor);
        DualField { field, construction, max_relative_error: e }
    };
    OperatorProducts {
        rr: dual(rr, c_rr),
        ii: dual(ii, c_ii),
        ri: dual(ri, c_ri),
        ir: dual(ir, c_ir),
        window: win,
    }
}

/// Time-derivative rules `e_R`, `e_I` at the middle of three frames.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRules {
    /// `Re{i hbar (psi+ - psi-) / (2 dt psi)}`.
    pub e_r: Vec<f64>,
    pub e_i: Vec<f64>,
    /// `-dS/dt = -hbar arg(psi+ / psi-) / 2dt`.
    pub minus_ds_dt: Vec<f64>,
    /// `(hbar/R) dR/dt = hbar ln(|psi+| / |psi-|) / 2dt`.
    pub hbar_dlnr_dt: Vec<f64>,
    pub dt: f64,
}

fn check_triple(frames: &[WavefunctionFrame; 3]) -> Result<f64> {
    let d1 = frames[1].time - frames[0].time;
    let d2 = frames[2].time - frames[1].time;
    if !(d1 != 0.0 && (d1 - d2).abs() <= 1e-9 * d1.abs().max(d2.abs())) {
        return Err(Error::InvalidFrames(format!("time spacing {d1} vs {d2} is not uniform")));
    }
    if frames.iter().any(|f| f.grid != frames[0].grid) {
        return Err(Error::InvalidFrames("frames live on different grids".into()));
    }
    Ok(0.5 * (d1 + d2))
}

pub fn energy_rules(frames: &[WavefunctionFrame; 3], units: &PhysicalUnits) -> Result<EnergyRules> {
    let dt = check_triple(frames)?;
    let hbar = units.hbar;
    let n = frames[1].len();
    let mut out = EnergyRules {
        e_r: vec![0.0; n],
        e_i: vec![0.0; n],
        minus_ds_dt: vec![0.0; n],
        hbar_dlnr_dt: vec![0.0; n],
        dt,
    };
    for i in 0..n {
        let (m, c, p) = (frames[0].values[i], frames[1].values[i], frames[2].values[i]);
        if c.norm() == 0.0 || m.norm() == 0.0 {
            continue;
        }
        let q = Complex64::new(0.0, hbar) * (p - m) / (2.0 * dt * c);
        out.e_r[i] = q.re;
        out.e_i[i] = q.im;
        out.minus_ds_dt[i] = -hbar * (p / m).arg() / (2.0 * dt);
        out.hbar_dlnr_dt[i] = hbar * (p.norm() / m.norm()).ln() / (2.0 * dt);
    }
    Ok(out)
}

/// Continuity residuals at the middle frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityResidual {
    /// `dP/dt + d(P v_r)/dx`, centered in time and space.
    pub pointwise: Vec<f64>,
    pub max: f64,
    /// `e_I - (p_R p_I + p_I p_R) / 2m` over the window.
    pub operator_form: Vec<f64>,
    pub operator_max: f64,
    /// `int |psi|^2 [dP/dt + d(P v_r)/dx] dx`.
    pub weighted: f64,
}

pub fn continuity_residual(frames: &[WavefunctionFrame; 3], units: &PhysicalUnits, node_epsilon: f64, window: f64) -> Result<ContinuityResidual> {
    let rules = energy_rules(frames, units)?;
    let mid = &frames[1];
    let f = BohmFieldSet::compute(mid, units, node_epsilon);
    let products = operator_products_from(mid, &f, units, window);
    Ok(continuity_from(frames, &rules, &f, &products))
}

fn continuity_from(frames: &[WavefunctionFrame; 3], rules: &EnergyRules, f: &BohmFieldSet, products: &OperatorProducts) -> ContinuityResidual {
    let mid = &frames[1];
    let dt = rules.dt;
    let dj = stencil::d1(&f.j, mid.grid.dx());
    let pointwise: Vec<f64> = (0..mid.len())
        .map(|i| (frames[2].values[i].norm_sqr() - frames[0].values[i].norm_sqr()) / (2.0 * dt) + dj[i])
        .collect();
    let max = pointwise.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let operator_form: Vec<f64> = (0..mid.len())
        .map(|i| if products.window[i] { rules.e_i[i] - (products.ri.field[i] + products.ir.field[i]) } else { 0.0 })
        .collect();
    let operator_max = max_abs_over(&operator_form, &products.window);
    let all = vec![true; mid.len()];
    ContinuityResidual { weighted: weighted_integral(mid, &pointwise, &all), pointwise, max, operator_form, operator_max }
}

/// Quantum Hamilton-Jacobi residual at the middle frame.
#[derive(Debug, Clone, PartialEq)]
pub struct QhjResidual {
    /// `e_R - [(S')^2/2m + V + V_qu]` over the window.
    pub pointwise: Vec<f64>,
    pub max: f64,
    /// `int |psi|^2 [-dS/dt - (S')^2/2m - V - V_qu] dx` over unmasked points.
    pub weighted: f64,
}

pub fn qhj_residual(
    frames: &[WavefunctionFrame; 3],
    potential: &[f64],
    units: &PhysicalUnits,
    node_epsilon: f64,
    window: f64,
) -> Result<QhjResidual> {
    let rules = energy_rules(frames, units)?;
    let f = BohmFieldSet::compute(&frames[1], units, node_epsilon);
    let win = window_mask(&frames[1].modulus(), window);
    Ok(qhj_from(&frames[1], potential, units, &rules, &f, &win))
}

fn qhj_from(mid: &WavefunctionFrame, potential: &[f64], units: &PhysicalUnits, rules: &EnergyRules, f: &BohmFieldSet, win: &[bool]) -> QhjResidual {
    let two_m = 2.0 * units.mass;
    let full: Vec<f64> = (0..mid.len())
        .map(|i| rules.e_r[i] - (f.p_r[i] * f.p_r[i] / two_m + potential[i] + f.v_qu[i]))
        .collect();
    let weighted = weighted_integral(mid, &full, &f.valid);
    let pointwise: Vec<f64> = full.iter().zip(win).map(|(&r, &w)| if w { r } else { 0.0 }).collect();
    let max = max_abs_over(&pointwise, win);
    QhjResidual { pointwise, max, weighted }
}

/// Ensemble energy and its split into kinetic, potential and quantum-potential parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPartition {
    pub exp_e_r: f64,
    pub kinetic_r: f64,
    pub potential_v: f64,
    pub quantum_pot_term: f64,
}

impl EnergyPartition {
    pub fn defect(&self) -> f64 {
        self.exp_e_r - (self.kinetic_r + self.potential_v + self.quantum_pot_term)
    }
}

pub fn energy_partition(
    frames: &[WavefunctionFrame; 3],
    potential: &[f64],
    units: &PhysicalUnits,
    node_epsilon: f64,
    tol: &Tolerances,
) -> Result<EnergyPartition> {
    let rules = energy_rules(frames, units)?;
    let f = BohmFieldSet::compute(&frames[1], units, node_epsilon);
    partition_from(&frames[1], potential, units, &rules, &f, tol)
}

fn partition_from(
    mid: &WavefunctionFrame,
    potential: &[f64],
    units: &PhysicalUnits,
    rules: &EnergyRules,
    f: &BohmFieldSet,
    tol: &Tolerances,
) -> Result<EnergyPartition> {
    let mass = masked_mass(mid, &f.valid);
    if mass > tol.masked_mass {
        return Err(Error::MaskedMass { mass, limit: tol.masked_mass });
    }
    let kinetic: Vec<f64> = f.p_r.iter().map(|p| p * p / (2.0 * units.mass)).collect();
    Ok(EnergyPartition {
        exp_e_r: weighted_integral(mid, &rules.e_r, &f.valid),
        kinetic_r: weighted_integral(mid, &kinetic, &f.valid),
        potential_v: weighted_integral(mid, potential, &f.valid),
        quantum_pot_term: weighted_integral(mid, &f.v_qu, &f.valid),
    })
}

/// Flat summary of every check on one time triple; field names are part of the output format.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub time: f64,
    pub dt: f64,
    pub norm: f64,
    pub position_spread: f64,
    pub exp_pQ: f64,
    pub exp_pQ_imag: f64,
    pub exp_pR: f64,
    pub exp_pI: f64,
    pub exp_eR: f64,
    pub kinetic_R: f64,
    pub potential_V: f64,
    pub quantum_pot_term: f64,
    pub partition_defect: f64,
    pub masked_mass: f64,
    pub continuity_residual_max: f64,
    pub continuity_operator_residual_max: f64,
    pub continuity_weighted: f64,
    pub qhj_residual_max: f64,
    pub qhj_weighted: f64,
    pub commutator_max: f64,
    pub identity_pRpR: f64,
    pub identity_pIpI: f64,
    pub identity_pRpI: f64,
    pub identity_pIpR: f64,
    pub identity_eR: f64,
    pub identity_eI: f64,
    pub node_epsilon: f64,
    pub tol_norm: f64,
    pub tol_expectation: f64,
    pub tol_p_I: f64,
    pub tol_pQ_imag: f64,
    pub tol_commutator: f64,
    pub tol_identity: f64,
    pub tol_partition: f64,
    pub tol_masked_mass: f64,
    pub tol_residual: Option<f64>,
    pub window: f64,
}

impl DiagnosticsReport {
    /// Runs every check on `frames = [psi(t - dt), psi(t), psi(t + dt)]`.
    pub fn compute(
        frames: &[WavefunctionFrame; 3],
        potential: &[f64],
        units: &PhysicalUnits,
        node_epsilon: f64,
        tol: &Tolerances,
    ) -> Result<Self> {
        let mid = &frames[1];
        let rules = energy_rules(frames, units)?;
        let f = BohmFieldSet::compute(mid, units, node_epsilon);
        let products = operator_products_from(mid, &f, units, tol.window);
        let momentum = expectation_momentum(mid, units, node_epsilon, tol)?;
        let partition = partition_from(mid, potential, units, &rules, &f, tol)?;
        let continuity = continuity_from(frames, &rules, &f, &products);
        let qhj = qhj_from(mid, potential, units, &rules, &f, &products.window);
        let floor = energy_scale(mid, units);
        Ok(Self {
            time: mid.time,
            dt: rules.dt,
            norm: mid.norm(),
            position_spread: position_spread(mid),
            exp_pQ: momentum.p_q,
            exp_pQ_imag: momentum.p_q_imag,
            exp_pR: momentum.p_r,
            exp_pI: momentum.p_i,
            exp_eR: partition.exp_e_r,
            kinetic_R: partition.kinetic_r,
            potential_V: partition.potential_v,
            quantum_pot_term: partition.quantum_pot_term,
            partition_defect: partition.defect(),
            masked_mass: momentum.masked_mass,
            continuity_residual_max: continuity.max,
            continuity_operator_residual_max: continuity.operator_max,
            continuity_weighted: continuity.weighted,
            qhj_residual_max: qhj.max,
            qhj_weighted: qhj.weighted,
            commutator_max: check_commutator(mid, units, node_epsilon),
            identity_pRpR: products.rr.max_relative_error,
            identity_pIpI: products.ii.max_relative_error,
            identity_pRpI: products.ri.max_relative_error,
            identity_pIpR: products.ir.max_relative_error,
            identity_eR: relative_discrepancy(&rules.e_r, &rules.minus_ds_dt, &products.window, floor),
            identity_eI: relative_discrepancy(&rules.e_i, &rules.hbar_dlnr_dt, &products.window, floor),
            node_epsilon,
            tol_norm: tol.norm,
            tol_expectation: tol.expectation,
            tol_p_I: tol.p_i,
            tol_pQ_imag: tol.p_q_imag,
            tol_commutator: tol.commutator,
            tol_identity: tol.identity,
            tol_partition: tol.partition,
            tol_masked_mass: tol.masked_mass,
            tol_residual: tol.residual,
            window: tol.window,
        })
    }

    /// Every gated check of this report, passing or not.
    pub fn checks(&self, units: &PhysicalUnits) -> Vec<Check> {
        let momentum_unit = units.hbar / self.position_spread;
        let energy_unit = units.hbar * units.hbar / (2.0 * units.mass * self.position_spread.powi(2));
        let mut out = Vec::new();
        let mut check = |name: &str, value: f64, limit: f64| out.push(Check::new(self.time, name, value, limit));
        check("norm", (self.norm - 1.0).abs(), self.tol_norm);
        check("expectation_pR_vs_pQ", (self.exp_pR - self.exp_pQ).abs(), self.tol_expectation * (momentum_unit + self.exp_pQ.abs()));
        check("exp_pI", self.exp_pI.abs(), self.tol_p_I * momentum_unit);
        check("exp_pQ_imag", self.exp_pQ_imag.abs(), self.tol_pQ_imag * momentum_unit);
        check("commutator", self.commutator_max, self.tol_commutator);
        for (name, v) in [
            ("identity_pRpR", self.identity_pRpR),
            ("identity_pIpI", self.identity_pIpI),
            ("identity_pRpI", self.identity_pRpI),
            ("identity_pIpR", self.identity_pIpR),
            ("identity_eR", self.identity_eR),
            ("identity_eI", self.identity_eI),
        ] {
            check(name, v, self.tol_identity);
        }
        check("partition", self.partition_defect.abs(), self.tol_partition * self.exp_eR.abs().max(energy_unit));
        check("masked_mass", self.masked_mass, self.tol_masked_mass);
        if let Some(r) = self.tol_residual {
            check("continuity_residual_max", self.continuity_residual_max, r);
            check("qhj_residual_max", self.qhj_residual_max, r);
        }
        out
    }

    pub fn failures(&self, units: &PhysicalUnits) -> Vec<Check> {
        self.checks(units).into_iter().filter(|c| !c.passed).collect()
    }
}

/// One gated comparison. Non-finite values fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub time: f64,
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(time: f64, name: &str, value: f64, limit: f64) -> Self {
        Self { time, name: name.to_string(), value, limit, passed: value.is_finite() && value <= limit }
    }
}

/// Reports for each frame, each built from a Crank-Nicolson triple `t - dt, t, t + dt`.
pub fn diagnose_frames(
    frames: &[WavefunctionFrame],
    potential: &[f64],
    units: &PhysicalUnits,
    node_epsilon: f64,
    dt: f64,
    tol: &Tolerances,
) -> Result<Vec<DiagnosticsReport>> {
    frames
        .par_iter()
        .map(|f| {
            let triple = time_triple(f, potential, dt, units)?;
            DiagnosticsReport::compute(&triple, potential, units, node_epsilon, tol)
        })
        .collect()
}

/// Outcome of the whole identity suite over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub checks: Vec<Check>,
    /// `max_t |<e_R>(t) - <e_R>(0)| / |<e_R>(0)|`.
    pub energy_drift: f64,
    pub passed: bool,
}

pub fn verify_reports(reports: &[DiagnosticsReport], units: &PhysicalUnits, tol: &Tolerances) -> Verification {
    let mut checks: Vec<Check> = reports.iter().flat_map(|r| r.checks(units)).collect();
    let e0 = reports.first().map_or(0.0, |r| r.exp_eR);
    let energy_drift = reports.iter().map(|r| (r.exp_eR - e0).abs()).fold(0.0, f64::max) / e0.abs().max(f64::MIN_POSITIVE);
    if reports.len() > 1 {
        let t = reports.last().unwrap().time;
        checks.push(Check::new(t, "exp_eR_drift", energy_drift, tol.energy_drift));
    }
    let passed = checks.iter().all(|c| c.passed);
    Verification { checks, energy_drift, passed }
}
