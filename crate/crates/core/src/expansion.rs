//! Resonance expansion of the transmission amplitude and closed-form models.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poles::{Pole, PoleKind, PoleSet};
use crate::units::PhysicalParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Single imaginary-axis pole model, `t ≈ 1/(1 - iγ_q/k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnePoleModel {
    /// Signed `Im k` of the pole, nm⁻¹.
    pub gamma_q: f64,
    /// `(ħ²/2m) γ_q²`, eV.
    pub e_q: f64,
}

impl OnePoleModel {
    pub fn new(gamma_q: f64, params: &PhysicalParams) -> Self {
        Self {
            gamma_q,
            e_q: params.kinetic_coeff() * gamma_q * gamma_q,
        }
    }

    pub fn from_pole(pole: &Pole, params: &PhysicalParams) -> Result<Self> {
        Ok(Self::new(imaginary_gamma(pole)?, params))
    }
}

fn imaginary_gamma(pole: &Pole) -> Result<f64> {
    match pole.kind {
        PoleKind::Bound | PoleKind::Antibound => Ok(pole.k.im),
        PoleKind::Resonant => Err(Error::domain(format!(
            "pole at {} is not on the imaginary axis",
            pole.k
        ))),
    }
}

/// `E_q = (ħ²/2m) γ_q²` of an imaginary-axis pole, eV.
pub fn e_q_of_pole(pole: &Pole, params: &PhysicalParams) -> Result<f64> {
    let g = imaginary_gamma(pole)?;
    Ok(params.kinetic_coeff() * g * g)
}

/// How the partial pole sum is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionForm {
    /// `2ik Σ ρ_n/(k - k_n)` with `ρ_n = r_n e^{-ik_nL}`; truncation error falls as 1/N.
    Plain,
    /// `2ik [g₀ + k Σ ρ_n/(k_n (k - k_n))]`, using `Σ ρ_n/k_n = -g₀` with
    /// `g₀ = t/(2ik)` at `k = 0`. Same infinite sum; error falls at least as 1/N².
    Subtracted,
}

/// Partial resonance sum `t = 2ik Σ r_n e^{-ik_nL}/(k - k_n)` over the first `n`
/// stored poles and their `-k*` partners.
///
/// Uses [`ExpansionForm::Subtracted`] when the set carries the zero-energy
/// value and [`ExpansionForm::Plain`] otherwise.
pub fn t_expansion(set: &PoleSet, k: f64, n: usize) -> Result<Complex64> {
    let form = if set.zero_energy_value.is_some() {
        ExpansionForm::Subtracted
    } else {
        ExpansionForm::Plain
    };
    t_expansion_with(set, k, n, form)
}

/// [`t_expansion`] with an explicit summation form.
///
/// Fails when fewer than `n` poles are stored, `k ≤ 0`, or the subtracted
/// form is requested without a zero-energy value.
pub fn t_expansion_with(set: &PoleSet, k: f64, n: usize, form: ExpansionForm) -> Result<Complex64> {
    if !(k > 0.0) {
        return Err(Error::domain(format!("expansion needs k > 0, got {k}")));
    }
    if set.poles.len() < n {
        return Err(Error::validation(format!(
            "expansion requested {n} poles but the set holds {}",
            set.poles.len()
        )));
    }
    let l = set.length;
    let kc = Complex64::new(k, 0.0);
    let term = |p: &Pole| -> Complex64 {
        let rho = p.residue * (-I * p.k * l).exp();
        match form {
            ExpansionForm::Plain => rho / (kc - p.k),
            ExpansionForm::Subtracted => rho / (p.k * (kc - p.k)),
        }
    };
    let mut sum = Complex64::new(0.0, 0.0);
    for p in &set.poles[..n] {
        sum += term(p);
        if p.kind == PoleKind::Resonant {
            sum += term(&p.mirrored());
        }
    }
    let inner = match form {
        ExpansionForm::Plain => sum,
        ExpansionForm::Subtracted => {
            let g0 = set.zero_energy_value.ok_or_else(|| {
                Error::domain("subtracted expansion needs t/(2ik) at k = 0, which diverges here")
            })?;
            g0 + kc * sum
        }
    };
    Ok(2.0 * I * kc * inner)
}

/// [`t_expansion`] over an energy grid (eV), returning `|t|²`.
pub fn transmission_expansion(set: &PoleSet, params: &PhysicalParams, energies: &[f64], n: usize) -> Result<Vec<f64>> {
    energies
        .par_iter()
        .map(|&e| {
            let k = params.k_of_e(e)?;
            Ok(t_expansion(set, k, n)?.norm_sqr())
        })
        .collect()
}

/// [`transmission_expansion`] with an explicit summation form.
pub fn transmission_expansion_with(
    set: &PoleSet,
    params: &PhysicalParams,
    energies: &[f64],
    n: usize,
    form: ExpansionForm,
) -> Result<Vec<f64>> {
    energies
        .par_iter()
        .map(|&e| {
            let k = params.k_of_e(e)?;
            Ok(t_expansion_with(set, k, n, form)?.norm_sqr())
        })
        .collect()
}

/// One-pole amplitude `1/(1 - iγ_q/k)`. At `k = 0` the limit is 0 unless `γ_q = 0`.
pub fn t_single_pole(model: &OnePoleModel, k: f64) -> Complex64 {
    if k == 0.0 {
        return if model.gamma_q == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    1.0 / (1.0 - I * model.gamma_q / k)
}

/// Small-angle phase of the one-pole amplitude, `θ ≈ γ_q/k`.
pub fn theta_single_pole(model: &OnePoleModel, k: f64) -> f64 {
    model.gamma_q / k
}

/// `T = 1/(1 + E_q/E)`.
pub fn transmission_single_pole(e: f64, e_q: f64) -> Result<f64> {
    if !(e > 0.0) || !(e_q >= 0.0) {
        return Err(Error::domain(format!(
            "single-pole transmission needs E > 0 and E_q ≥ 0, got E = {e}, E_q = {e_q}"
        )));
    }
    Ok(1.0 / (1.0 + e_q / e))
}

/// `|t|²` of an untruncated Pöschl–Teller term `strength / cosh²(x/d)`:
///
/// `sinh²(πkd) / (sinh²(πkd) + |cos((π/2)√(1 - η))|²)`, `η = 4 strength d² / (ħ²/2m)`.
///
/// For a well `η < 0`; for a strong barrier `1 - η < 0` and the cosine becomes a cosh.
pub fn t_pt_analytic(strength: f64, d: f64, params: &PhysicalParams, k: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("Pöschl–Teller width must be > 0, got {d}")));
    }
    let eta = pt_eta(strength, d, params);
    let root = Complex64::new(1.0 - eta, 0.0).sqrt();
    let c = (root * (std::f64::consts::FRAC_PI_2)).cos().norm_sqr();
    let s = (std::f64::consts::PI * k * d).sinh().powi(2);
    if s.is_infinite() {
        return Ok(1.0);
    }
    if s + c == 0.0 {
        return Ok(0.0);
    }
    Ok(s / (s + c))
}

/// `η = 8m strength d²/ħ² = 4 strength d² / (ħ²/2m)`.
pub fn pt_eta(strength: f64, d: f64, params: &PhysicalParams) -> f64 {
    4.0 * strength * d * d / params.kinetic_coeff()
}

/// Well strength (negative, eV) that makes `1 + |η| = (2n + 1)²`, i.e. reflectionless.
pub fn pt_reflectionless_strength(n: usize, d: f64, params: &PhysicalParams) -> f64 {
    let m = (2 * n + 1) as f64;
    -(m * m - 1.0) * params.kinetic_coeff() / (4.0 * d * d)
}
