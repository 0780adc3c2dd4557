//! Polar decomposition and the nonlinear momentum fields of a single frame.
//!
//! Every derivative of `ln psi` is taken with [`stencil::log_derivatives`]:
//! `p_R + i p_I = (hbar / i) d/dx ln psi`, so `p_R = hbar Im(d ln psi)` and
//! `p_I = -hbar Re(d ln psi) = -hbar R'/R`. Points whose stencil touches a
//! sample with `R <= node_epsilon * max R` are masked; masked entries hold
//! zero and carry no meaning.

use num_complex::Complex64;

use crate::stencil::{self, log_derivatives, stencil_mask};
use crate::units::PhysicalUnits;
use crate::wavefunction::WavefunctionFrame;

/// `psi = R exp(i S / hbar)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFields {
    pub r: Vec<f64>,
    /// Unwrapped action; zero at the maximum of `R`.
    pub s: Vec<f64>,
    /// `R > node_epsilon * max R` at this point.
    pub valid: Vec<bool>,
    pub anchor: usize,
    /// Phase of `psi` at the anchor, removed by the gauge choice.
    pub anchor_phase: f64,
}

impl PolarFields {
    /// `R exp(i (S / hbar + anchor_phase))`, equal to `psi` on valid points.
    pub fn reconstruct(&self, units: &PhysicalUnits) -> Vec<Complex64> {
        self.r
            .iter()
            .zip(&self.s)
            .map(|(&r, &s)| Complex64::from_polar(r, s / units.hbar + self.anchor_phase))
            .collect()
    }
}

/// Splits a frame into amplitude and unwrapped action.
///
/// The phase is accumulated left to right as `arg(psi[j] / psi[prev])` over
/// points above the node threshold, skipping nodes, then shifted so that
/// `S = 0` at the maximum of `R`. Masked points get `S = 0`.
pub fn polar_decompose(frame: &WavefunctionFrame, units: &PhysicalUnits, node_epsilon: f64) -> PolarFields {
    let r = frame.modulus();
    let (anchor, peak) = r
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let threshold = node_epsilon * peak;
    let valid: Vec<bool> = r.iter().map(|&v| v > threshold).collect();

    let mut phase = vec![0.0; r.len()];
    let mut prev: Option<usize> = None;
    for i in 0..r.len() {
        if !valid[i] {
            continue;
        }
        phase[i] = match prev {
            None => frame.values[i].arg(),
            Some(p) => phase[p] + (frame.values[i] / frame.values[p]).arg(),
        };
        prev = Some(i);
    }
    let offset = phase[anchor];
    let s = phase
        .iter()
        .zip(&valid)
        .map(|(&ph, &ok)| if ok { units.hbar * (ph - offset) } else { 0.0 })
        .collect();
    PolarFields { r, s, valid, anchor, anchor_phase: offset }
}

/// Real and imaginary parts of the momentum rule applied to an arbitrary
/// complex field: `p_R = Re{(hbar/i) f'/f}`, `p_I = Im{(hbar/i) f'/f}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumRule {
    pub p_r: Vec<f64>,
    pub p_i: Vec<f64>,
    pub valid: Vec<bool>,
}

pub fn momentum_rule(field: &[Complex64], dx: f64, units: &PhysicalUnits, node_epsilon: f64) -> MomentumRule {
    let modulus: Vec<f64> = field.iter().map(|z| z.norm()).collect();
    let peak = modulus.iter().copied().fold(0.0, f64::max);
    let valid = stencil_mask(&modulus, node_epsilon * peak);
    let (dlog, _) = log_derivatives(field, dx);
    let pick = |f: &dyn Fn(Complex64) -> f64| -> Vec<f64> {
        dlog.iter().zip(&valid).map(|(&z, &ok)| if ok { f(z) } else { 0.0 }).collect()
    };
    MomentumRule {
        p_r: pick(&|z| units.hbar * z.im),
        p_i: pick(&|z| -units.hbar * z.re),
        valid,
    }
}

/// All single-particle Bohmian fields of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BohmFieldSet {
    pub p_r: Vec<f64>,
    pub p_i: Vec<f64>,
    pub v_r: Vec<f64>,
    pub v_qu: Vec<f64>,
    pub j: Vec<f64>,
    pub p: Vec<f64>,
    /// `S''`, needed by the operator-product identities.
    pub lap_s: Vec<f64>,
    pub valid: Vec<bool>,
}

impl BohmFieldSet {
    pub fn compute(frame: &WavefunctionFrame, units: &PhysicalUnits, node_epsilon: f64) -> Self {
        let psi = &frame.values;
        let dx = frame.grid.dx();
        let hbar = units.hbar;
        let m = units.mass;
        let p: Vec<f64> = frame.density();
        let modulus: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
        let peak = modulus.iter().copied().fold(0.0, f64::max);
        let valid = stencil_mask(&modulus, node_epsilon * peak);
        let (dlog, d2log) = log_derivatives(psi, dx);
        // plain central differences for the current at masked points
        let dpsi = stencil::d1(psi, dx);

        let n = psi.len();
        let mut out = Self {
            p_r: vec![0.0; n],
            p_i: vec![0.0; n],
            v_r: vec![0.0; n],
            v_qu: vec![0.0; n],
            j: vec![0.0; n],
            p,
            lap_s: vec![0.0; n],
            valid,
        };
        for i in 0..n {
            if out.valid[i] {
                let g = dlog[i];
                out.p_r[i] = hbar * g.im;
                out.p_i[i] = -hbar * g.re;
                out.v_r[i] = out.p_r[i] / m;
                // R''/R = (ln R)'' + ((ln R)')^2
                out.v_qu[i] = -hbar * hbar / (2.0 * m) * (d2log[i].re + g.re * g.re);
                out.lap_s[i] = hbar * d2log[i].im;
                out.j[i] = out.p[i] * out.v_r[i];
            } else {
                out.j[i] = hbar / m * (psi[i].conj() * dpsi[i]).im;
            }
        }
        out
    }
}

/// `p_R` with its node mask.
pub fn compute_p_r(frame: &WavefunctionFrame, units: &PhysicalUnits, node_epsilon: f64) -> (Vec<f64>, Vec<bool>) {
    let r = momentum_rule(&frame.values, frame.grid.dx(), units, node_epsilon);
    (r.p_r, r.valid)
}

/// `p_I` with its node mask.
pub fn compute_p_i(frame: &WavefunctionFrame, units: &PhysicalUnits, node_epsilon: f64) -> (Vec<f64>, Vec<bool>) {
    let r = momentum_rule(&frame.values, frame.grid.dx(), units, node_epsilon);
    (r.p_i, r.valid)
}

/// `V_qu = -(hbar^2 / 2m) R''/R` with its node mask.
pub fn compute_quantum_potential(frame: &WavefunctionFrame, units: &PhysicalUnits, node_epsilon: f64) -> (Vec<f64>, Vec<bool>) {
    let f = BohmFieldSet::compute(frame, units, node_epsilon);
    (f.v_qu, f.valid)
}

/// Guiding velocity `v_r = p_R / m` and probability current `J`.
pub fn compute_velocity_and_current(
    frame: &WavefunctionFrame,
    units: &PhysicalUnits,
    node_epsilon: f64,
) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let f = BohmFieldSet::compute(frame, units, node_epsilon);
    (f.v_r, f.j, f.valid)
}

/// Cross-check forms built from plain central differences of `psi` and `R`.
pub mod direct {
    use super::*;

    /// `hbar Im(psi* psi') / |psi|^2`.
    pub fn p_r_current_form(frame: &WavefunctionFrame, units: &PhysicalUnits) -> Vec<f64> {
        let d = stencil::d1(&frame.values, frame.grid.dx());
        frame
            .values
            .iter()
            .zip(&d)
            .map(|(z, dz)| units.hbar * (z.conj() * dz).im / z.norm_sqr())
            .collect()
    }

    /// `Re{(hbar/i) psi'/psi}` with the same `psi'`.
    pub fn p_r_ratio_form(frame: &WavefunctionFrame, units: &PhysicalUnits) -> Vec<f64> {
        let d = stencil::d1(&frame.values, frame.grid.dx());
        frame
            .values
            .iter()
            .zip(&d)
            .map(|(z, dz)| (Complex64::new(0.0, -units.hbar) * dz / z).re)
            .collect()
    }

    /// `-hbar R'/R`.
    pub fn p_i_amplitude_form(frame: &WavefunctionFrame, units: &PhysicalUnits) -> Vec<f64> {
        let r = frame.modulus();
        let d = stencil::d1(&r, frame.grid.dx());
        r.iter().zip(&d).map(|(r, dr)| -units.hbar * dr / r).collect()
    }

    /// `(hbar/m) Im(psi* psi')`.
    pub fn current(frame: &WavefunctionFrame, units: &PhysicalUnits) -> Vec<f64> {
        let d = stencil::d1(&frame.values, frame.grid.dx());
        frame
            .values
            .iter()
            .zip(&d)
            .map(|(z, dz)| units.hbar / units.mass * (z.conj() * dz).im)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::potential::PotentialSpec;
    use crate::wavefunction::{init_wavefunction, InitialStateSpec};

    fn frame(spec: InitialStateSpec, pot: PotentialSpec) -> WavefunctionFrame {
        let g = Grid1D::new(-10.0, 10.0, 2001).unwrap();
        init_wavefunction(&spec, &g, &PhysicalUnits::default(), &pot).unwrap()
    }

    fn ground() -> WavefunctionFrame {
        frame(InitialStateSpec::HarmonicEigenstate { n: 0 }, PotentialSpec::Harmonic { omega: 1.0 })
    }

    const U: PhysicalUnits = PhysicalUnits { hbar: 1.0, mass: 1.0 };

    #[test]
    fn real_positive_state_has_zero_action() {
        let p = polar_decompose(&ground(), &U, 1e-10);
        assert!(p.s.iter().all(|&s| s == 0.0));
        assert_eq!(p.anchor, 1000);
    }

    #[test]
    fn plane_wave_action_is_linear_from_anchor() {
        let f = frame(InitialStateSpec::PlaneWave { k0: 2.0 }, PotentialSpec::Free);
        let p = polar_decompose(&f, &U, 1e-10);
        let xa = f.grid.x(p.anchor);
        for i in 0..f.len() {
            assert!((p.s[i] - 2.0 * (f.grid.x(i) - xa)).abs() < 1e-10);
        }
    }

    #[test]
    fn polar_reconstruction_and_continuity() {
        let f = frame(InitialStateSpec::Gaussian { x0: 0.5, sigma0: 1.2, k0: 4.0 }, PotentialSpec::Free);
        let p = polar_decompose(&f, &U, 1e-10);
        let rebuilt = p.reconstruct(&U);
        for i in 0..f.len() {
            assert_eq!(p.r[i], f.values[i].norm());
            if p.valid[i] {
                let z = rebuilt[i];
                assert!((z - f.values[i]).norm() <= 1e-12 * p.r[i].max(1e-300) + 1e-15 * p.r[p.anchor]);
                if i > 0 && p.valid[i - 1] {
                    assert!((p.s[i] - p.s[i - 1]).abs() < std::f64::consts::PI);
                }
            }
        }
    }

    #[test]
    fn plane_wave_fields() {
        let f = frame(InitialStateSpec::PlaneWave { k0: 2.0 }, PotentialSpec::Free);
        let b = BohmFieldSet::compute(&f, &U, 1e-10);
        assert!(b.valid.iter().all(|&v| v));
        for i in 0..f.len() {
            assert!((b.p_r[i] - 2.0).abs() < 1e-10);
            assert!(b.p_i[i].abs() < 1e-10);
            assert!((b.v_r[i] - 2.0).abs() < 1e-10);
            assert!(b.v_qu[i].abs() < 1e-8);
        }
    }

    #[test]
    fn ground_state_fields_match_closed_form() {
        let f = ground();
        let b = BohmFieldSet::compute(&f, &U, 1e-10);
        for i in 0..f.len() {
            if !b.valid[i] {
                continue;
            }
            let x = f.grid.x(i);
            assert_eq!(b.p_r[i], 0.0);
            assert_eq!(b.j[i], 0.0);
            // R ~ exp(-x^2/2): -R'/R = x, V_qu = 1/2 - x^2/2
            assert!((b.p_i[i] - x).abs() < 1e-9, "p_I at {x}");
            assert!((b.v_qu[i] - (0.5 - 0.5 * x * x)).abs() < 1e-6, "V_qu at {x}");
        }
    }

    #[test]
    fn gaussian_p_i_and_quantum_potential() {
        let s0: f64 = 0.8;
        let f = frame(InitialStateSpec::Gaussian { x0: 0.0, sigma0: s0, k0: 1.5 }, PotentialSpec::Free);
        let b = BohmFieldSet::compute(&f, &U, 1e-10);
        for i in 0..f.len() {
            if !b.valid[i] {
                continue;
            }
            let x = f.grid.x(i);
            assert!((b.p_i[i] - x / (2.0 * s0 * s0)).abs() < 1e-9);
            let vq = 1.0 / (4.0 * s0 * s0) * (1.0 - x * x / (2.0 * s0 * s0));
            assert!((b.v_qu[i] - vq).abs() < 1e-6 * (1.0 + vq.abs()));
            assert!((b.p_r[i] - 1.5).abs() < 1e-10);
        }
    }

    #[test]
    fn node_is_masked() {
        let f = frame(InitialStateSpec::HarmonicEigenstate { n: 1 }, PotentialSpec::Harmonic { omega: 1.0 });
        // 2001 points on [-10, 10] put a sample exactly on the node
        assert_eq!(f.values[1000].norm(), 0.0);
        let b = BohmFieldSet::compute(&f, &U, 1e-10);
        for i in 998..=1002 {
            assert!(!b.valid[i]);
        }
        assert!(b.valid[997] && b.valid[1003]);
        let peak = f.max_modulus();
        for i in 0..f.len() {
            if b.valid[i] {
                assert!(f.values[i].norm() > 1e-10 * peak);
            }
        }
    }

    #[test]
    fn direct_forms_agree_with_log_form() {
        let f = frame(InitialStateSpec::Gaussian { x0: -1.0, sigma0: 1.0, k0: 2.0 }, PotentialSpec::Free);
        let b = BohmFieldSet::compute(&f, &U, 1e-10);
        let a1 = direct::p_r_current_form(&f, &U);
        let a2 = direct::p_r_ratio_form(&f, &U);
        let pi = direct::p_i_amplitude_form(&f, &U);
        let j = direct::current(&f, &U);
        let peak = f.max_modulus();
        let jmax = j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..f.len() {
            if f.values[i].norm() < 1e-4 * peak {
                continue;
            }
            assert!((a1[i] - a2[i]).abs() < 1e-12);
            assert!((a1[i] - b.p_r[i]).abs() < 1e-6);
            assert!((pi[i] - b.p_i[i]).abs() < 1e-5 * (1.0 + b.p_i[i].abs()));
            assert!((j[i] - b.j[i]).abs() < 1e-6 * jmax);
        }
    }
}
