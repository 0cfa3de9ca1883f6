//! Physical constants and the eV / nm / fs unit system.
//!
//! The effective mass only ever enters through `ħ²/2m = hbar2_over_2me / mass_ratio`,
//! so no SI masses appear anywhere in the crate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ħ²/2mₑ in eV·nm².
pub const HBAR2_OVER_2ME: f64 = 0.0380998;

/// ħ in eV·fs.
pub const HBAR_EV_FS: f64 = 0.6582119569;

/// GaAs conduction-band effective mass, m/mₑ.
pub const GAAS_MASS_RATIO: f64 = 0.067;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Effective mass in units of the free-electron mass.
    pub mass_ratio: f64,
    /// ħ²/2mₑ, eV·nm².
    pub hbar2_over_2me: f64,
    /// ħ, eV·fs.
    pub hbar: f64,
}

impl PhysicalParams {
    pub fn new(mass_ratio: f64) -> Result<Self> {
        if !(mass_ratio > 0.0) || !mass_ratio.is_finite() {
            return Err(Error::validation(format!(
                "mass_ratio must be positive and finite, got {mass_ratio}"
            )));
        }
        Ok(Self {
            mass_ratio,
            hbar2_over_2me: HBAR2_OVER_2ME,
            hbar: HBAR_EV_FS,
        })
    }

    pub fn gaas() -> Self {
        Self::new(GAAS_MASS_RATIO).expect("positive constant")
    }

    /// ħ²/2m for the effective mass, eV·nm².
    #[inline]
    pub fn kinetic_coeff(&self) -> f64 {
        self.hbar2_over_2me / self.mass_ratio
    }

    /// Wavenumber (nm⁻¹) of a free particle with energy `e` (eV).
    pub fn k_of_e(&self, e: f64) -> Result<f64> {
        if !(e >= 0.0) {
            return Err(Error::domain(format!("energy must be >= 0, got {e}")));
        }
        Ok((e / self.kinetic_coeff()).sqrt())
    }

    #[inline]
    pub fn e_of_k(&self, k: f64) -> f64 {
        self.kinetic_coeff() * k * k
    }

    /// E(k) continued to complex wavenumbers.
    #[inline]
    pub fn e_of_k_complex(&self, k: Complex64) -> Complex64 {
        k * k * self.kinetic_coeff()
    }

    /// Group velocity ħk/m in nm/fs.
    #[inline]
    pub fn velocity(&self, k: f64) -> f64 {
        2.0 * self.kinetic_coeff() * k / self.hbar
    }

    /// ħ/2m in nm²/fs, the coefficient of k² in the free dispersion ω(k).
    #[inline]
    pub fn dispersion_coeff(&self) -> f64 {
        self.kinetic_coeff() / self.hbar
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::gaas()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn threshold_maps_to_zero() {
        assert_eq!(PhysicalParams::gaas().k_of_e(0.0).unwrap(), 0.0);
    }

    #[test]
    fn unit_wavenumber_in_gaas() {
        // ħ²/2m = 0.0380998 / 0.067 = 0.568654 eV nm²
        let k = PhysicalParams::gaas().k_of_e(0.568654).unwrap();
        assert_relative_eq!(k, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn round_trip() {
        let p = PhysicalParams::gaas();
        for e in [1e-8, 0.06, 0.24] {
            assert_relative_eq!(p.e_of_k(p.k_of_e(e).unwrap()), e, max_relative = 1e-12);
        }
    }

    #[test]
    fn negative_energy_rejected() {
        assert!(matches!(
            PhysicalParams::gaas().k_of_e(-1e-3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bad_mass_rejected() {
        assert!(PhysicalParams::new(0.0).is_err());
        assert!(PhysicalParams::new(-0.1).is_err());
        assert!(PhysicalParams::new(f64::NAN).is_err());
    }

    #[test]
    fn constants_pinned() {
        let p = PhysicalParams::gaas();
        assert!((p.hbar2_over_2me - 0.0380998).abs() <= 1e-6);
        assert_eq!(p.hbar, 0.6582119569);
    }
}
