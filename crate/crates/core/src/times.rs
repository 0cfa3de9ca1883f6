//! Dwell time and its decomposition into transmission, reflection and
//! interference contributions.
//!
//! In units of `τ₀ = L/v`, with `v = ħk/m`,
//!
//! ```text
//! τ_d/τ₀ = (1/L) ∫₀ᴸ |ψ|² dx
//!        = T + (T θ̇ + R φ̇)/L + √R sin φ/(kL)
//! ```
//!
//! where `θ = arg t`, `φ = arg r` and dots are derivatives with respect to `k`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialProfile;
use crate::quad::{integrate, QuadOptions};
use crate::scatter::{amplitudes_at, edge_states, psi_in_slice, solution_at_k};

/// Dimensionless terms of the decomposition; they sum to `τ_d/τ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellComponents {
    /// `T`
    pub transmission: f64,
    /// `T θ̇ / L`
    pub transmission_time: f64,
    /// `R φ̇ / L`
    pub reflection_time: f64,
    /// `√R sin φ / (kL)`
    pub interference: f64,
}

impl DwellComponents {
    pub fn sum(&self) -> f64 {
        self.transmission + self.transmission_time + self.reflection_time + self.interference
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellReport {
    /// eV
    pub energy: f64,
    /// fs
    pub tau_d: f64,
    /// `L/v`, fs
    pub tau_0: f64,
    /// `τ_d/τ₀`
    pub ratio: f64,
    /// Present for the decomposed form.
    pub components: Option<DwellComponents>,
}

fn free_time(profile: &PotentialProfile, k: f64) -> f64 {
    profile.length() / profile.params().velocity(k)
}

/// `τ_d = (1/v) ∫₀ᴸ |ψ|² dx` by adaptive quadrature slice by slice.
pub fn dwell_time(profile: &PotentialProfile, e: f64) -> Result<DwellReport> {
    dwell_time_with(profile, e, QuadOptions::default())
}

pub fn dwell_time_with(profile: &PotentialProfile, e: f64, opts: QuadOptions) -> Result<DwellReport> {
    let k = wavenumber(profile, e)?;
    let (t, _) = amplitudes_at(profile, Complex64::new(k, 0.0));
    let right = edge_states(profile, k, t);
    // tighter per-slice tolerance keeps the summed error within opts.rel_tol
    let slice_opts = QuadOptions {
        rel_tol: opts.rel_tol * 1e-2,
        ..opts
    };
    let integral: f64 = profile
        .slices()
        .par_iter()
        .enumerate()
        .map(|(j, s)| {
            let f = |x: f64| Complex64::new(psi_in_slice(profile, k, right[j + 1], j, x).norm_sqr(), 0.0);
            integrate(f, 0.0, s.width, slice_opts).map(|v| v.re)
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    let tau_0 = free_time(profile, k);
    let ratio = integral / profile.length();
    Ok(DwellReport {
        energy: e,
        tau_d: ratio * tau_0,
        tau_0,
        ratio,
        components: None,
    })
}

fn wavenumber(profile: &PotentialProfile, e: f64) -> Result<f64> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::domain(format!("dwell time needs E > 0, got {e}")));
    }
    profile.params().k_of_e(e)
}

/// `(Im(t* t'), Im(r* r'))`, i.e. `(T θ̇, R φ̇)`, by central differences with
/// one Richardson step. `rel_step` is relative to `k`.
pub fn phase_derivatives(profile: &PotentialProfile, k: f64, rel_step: f64) -> (f64, f64) {
    let (t0, r0) = amplitudes_at(profile, Complex64::new(k, 0.0));
    let central = |h: f64| {
        let (tp, rp) = amplitudes_at(profile, Complex64::new(k + h, 0.0));
        let (tm, rm) = amplitudes_at(profile, Complex64::new(k - h, 0.0));
        ((tp - tm) / (2.0 * h), (rp - rm) / (2.0 * h))
    };
    let h = rel_step * k;
    let (dt1, dr1) = central(h);
    let (dt2, dr2) = central(0.5 * h);
    let dt = (4.0 * dt2 - dt1) / 3.0;
    let dr = (4.0 * dr2 - dr1) / 3.0;
    ((t0.conj() * dt).im, (r0.conj() * dr).im)
}

/// Default relative k-step of the phase derivatives.
pub const DEFAULT_REL_STEP: f64 = 1e-6;

/// Decomposed form of the dwell time, from `t`, `r` and their k-derivatives.
pub fn dwell_decomposition(profile: &PotentialProfile, e: f64) -> Result<DwellReport> {
    dwell_decomposition_with(profile, e, DEFAULT_REL_STEP)
}

pub fn dwell_decomposition_with(profile: &PotentialProfile, e: f64, rel_step: f64) -> Result<DwellReport> {
    let k = wavenumber(profile, e)?;
    if !(rel_step > 0.0 && rel_step < 0.5) {
        return Err(Error::validation(format!("finite-difference step {rel_step} outside (0, 0.5)")));
    }
    let l = profile.length();
    let sol = solution_at_k(profile, k, e);
    let (t_theta, r_phi) = phase_derivatives(profile, k, rel_step);
    let components = DwellComponents {
        transmission: sol.transmission,
        transmission_time: t_theta / l,
        reflection_time: r_phi / l,
        interference: sol.r.im / (k * l),
    };
    if !components.sum().is_finite() {
        return Err(Error::NoConvergence(format!(
            "phase derivatives not finite at E = {e} eV"
        )));
    }
    let tau_0 = free_time(profile, k);
    let ratio = components.sum();
    Ok(DwellReport {
        energy: e,
        tau_d: ratio * tau_0,
        tau_0,
        ratio,
        components: Some(components),
    })
}

/// Both forms over an energy grid: `(integral, decomposition)` per energy.
pub fn dwell_curve(profile: &PotentialProfile, energies: &[f64]) -> Result<Vec<(DwellReport, DwellReport)>> {
    energies
        .par_iter()
        .map(|&e| Ok((dwell_time(profile, e)?, dwell_decomposition(profile, e)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{build_rect, Preset};
    use crate::units::PhysicalParams;
    use approx::assert_relative_eq;

    fn gaas() -> PhysicalParams {
        PhysicalParams::gaas()
    }

    #[test]
    fn free_limit_exact() {
        let p = Preset::Free.build(gaas()).unwrap();
        for e in [1e-4, 0.06, 1.0] {
            let d = dwell_time(&p, e).unwrap();
            assert_relative_eq!(d.ratio, 1.0, epsilon = 1e-13);
            let c = dwell_decomposition(&p, e).unwrap().components.unwrap();
            assert_relative_eq!(c.transmission, 1.0, epsilon = 1e-14);
            assert!(c.transmission_time.abs() < 1e-8);
            assert!(c.reflection_time.abs() < 1e-12 && c.interference.abs() < 1e-12);
        }
    }

    #[test]
    fn tau_0_is_length_over_velocity() {
        let p = Preset::Free.build(gaas()).unwrap();
        let d = dwell_time(&p, 0.06).unwrap();
        let k = gaas().k_of_e(0.06).unwrap();
        // v = ħk/m = 2(ħ²/2m)k/ħ
        let v = 2.0 * 0.0380998 / 0.067 * k / 0.6582119569;
        assert_relative_eq!(d.tau_0, p.length() / v, max_relative = 1e-6);
    }

    #[test]
    fn identity_single_barrier_closed_form() {
        // ∫|ψ|² for a rectangular barrier against an independent closed form
        let p = build_rect(&[(1.5, 0.2)], gaas()).unwrap();
        let c = gaas().kinetic_coeff();
        let e: f64 = 0.05;
        let k = (e / c).sqrt();
        let kap = ((0.2 - e) / c).sqrt();
        let l = 1.5;
        // ψ = t e^{ikL} [cosh κ(x-L) + (ik/κ) sinh κ(x-L)] inside the barrier
        let (t, _) = amplitudes_at(&p, Complex64::new(k, 0.0));
        let n = 20000;
        let mut acc = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) * l / n as f64;
            let u = kap * (x - l);
            let psi = t * Complex64::new(u.cosh(), k / kap * u.sinh());
            acc += psi.norm_sqr() * l / n as f64;
        }
        let d = dwell_time(&p, e).unwrap();
        assert_relative_eq!(d.ratio, acc / l, max_relative = 1e-7);
        let dec = dwell_decomposition(&p, e).unwrap();
        assert_relative_eq!(dec.ratio, d.ratio, max_relative = 1e-7);
    }

    #[test]
    fn identity_on_presets() {
        for preset in [Preset::TwoBwb, Preset::TwoBsb, Preset::Fig1Wide] {
            let p = preset.build(gaas()).unwrap();
            for e in [0.003, 0.06, 0.25] {
                let a = dwell_time(&p, e).unwrap();
                let b = dwell_decomposition(&p, e).unwrap();
                assert!((a.ratio - b.ratio).abs() < 1e-6, "{preset:?} E={e}: {} vs {}", a.ratio, b.ratio);
                assert_relative_eq!(b.components.unwrap().sum(), b.ratio);
            }
        }
    }

    #[test]
    fn step_robustness() {
        let p = Preset::TwoBwb.build(gaas()).unwrap();
        let k = gaas().k_of_e(0.06).unwrap();
        let (a, _) = phase_derivatives(&p, k, 1e-5);
        let (b, _) = phase_derivatives(&p, k, 1e-6);
        assert!((a - b).abs() < 1e-4 * b.abs());
    }

    #[test]
    fn rejects_bad_input() {
        let p = Preset::TwoBwb.build(gaas()).unwrap();
        assert!(dwell_time(&p, 0.0).is_err());
        assert!(dwell_decomposition(&p, -1.0).is_err());
        assert!(dwell_decomposition_with(&p, 0.1, 0.0).is_err());
    }
}
