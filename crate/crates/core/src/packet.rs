//! Gaussian wave packets through a profile, evaluated spectrally on the
//! transmitted side:
//!
//! ```text
//! ψ(x, t) = (2π)^{-1/2} ∫ φ(k) t(k) e^{i(kx - E(k) t/ħ)} dk,   x ≥ L
//! ```
//!
//! with `φ` the momentum profile of `ψ(x, 0) = A e^{-(x-x₀)²/4σ²} e^{ik₀x}`.
//! The free packet uses `t ≡ 1`.
//!
//! For a packet that starts entirely left of the structure this is exact over
//! the whole real k-line with `t(-k) = t(k)*`: the `k < 0` components are the
//! right-incident scattering states, and their reflected parts cancel against
//! the left-incident ones by unitarity (`t r* + t* r' = 0`). Truncating at
//! `k = 0` is available as an option.
//!
//! Scattering states are incomplete when the profile binds. Each bound state
//! `k_b = iγ` adds `c_b u_b(x) e^{-iE_b t/ħ}`, which for `x ≥ L` reduces to
//! `√(2π) φ(iγ) 2iγ r_b e^{-γ(x-L)} e^{iαγ²t}` because `u_b(0) u_b(L) = 2iγ r_b`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialProfile;
use crate::quad::composite_gauss;
use crate::scatter::amplitudes_at;
use crate::units::PhysicalParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Initial Gaussian packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    /// nm
    pub sigma: f64,
    /// Initial centre, nm, left of the structure.
    pub x0: f64,
    /// Centre energy, eV.
    pub e0: f64,
}

impl GaussianSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::validation(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.x0 < 0.0) {
            return Err(Error::validation(format!("x0 must be < 0, got {}", self.x0)));
        }
        if !(self.x0.abs() / (2.0 * self.sigma) > 1.0) {
            return Err(Error::validation(format!(
                "|x0|/(2 sigma) = {} must exceed 1",
                self.x0.abs() / (2.0 * self.sigma)
            )));
        }
        if !(self.e0 > 0.0) || !self.e0.is_finite() {
            return Err(Error::validation(format!("E0 must be > 0, got {}", self.e0)));
        }
        Ok(())
    }
}

/// `φ(k) = (2σ²/π)^{1/4} e^{-σ²(k-k₀)²} e^{-i(k-k₀)x₀}`, normalized to `∫|φ|² dk = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumProfile {
    /// nm⁻¹
    pub k0: f64,
    /// nm
    pub sigma: f64,
    /// nm
    pub x0: f64,
}

impl MomentumProfile {
    pub fn eval(&self, k: f64) -> Complex64 {
        let norm = (2.0 * self.sigma * self.sigma / PI).powf(0.25);
        let u = k - self.k0;
        norm * (-self.sigma * self.sigma * u * u).exp() * Complex64::from_polar(1.0, -u * self.x0)
    }

    /// Analytic continuation of [`Self::eval`] to complex `k`.
    pub fn eval_complex(&self, k: Complex64) -> Complex64 {
        let norm = (2.0 * self.sigma * self.sigma / PI).powf(0.25);
        let u = k - self.k0;
        norm * (-self.sigma * self.sigma * u * u - I * u * self.x0).exp()
    }

    /// Standard deviation of `|φ|²`, `1/(2σ)`.
    pub fn width(&self) -> f64 {
        0.5 / self.sigma
    }

    /// `∫_{-∞}^{0} |φ|² dk`.
    pub fn negative_k_fraction(&self) -> f64 {
        0.5 * libm::erfc(std::f64::consts::SQRT_2 * self.sigma * self.k0)
    }
}

pub fn momentum_profile(g: &GaussianSpec, params: &PhysicalParams) -> Result<MomentumProfile> {
    g.validate()?;
    Ok(MomentumProfile {
        k0: params.k_of_e(g.e0)?,
        sigma: g.sigma,
        x0: g.x0,
    })
}

/// Closed-form free evolution of the full (untruncated) Gaussian.
pub fn free_closed_form(g: &GaussianSpec, params: &PhysicalParams, x: f64, t: f64) -> Result<Complex64> {
    let phi = momentum_profile(g, params)?;
    let alpha = params.dispersion_coeff();
    let (k0, s) = (phi.k0, g.sigma);
    let a = Complex64::new(s * s, alpha * t);
    let v0 = 2.0 * alpha * k0;
    let norm = (2.0 * s * s / PI).powf(0.25) / (2.0 * PI).sqrt();
    let shift = x - g.x0 - v0 * t;
    Ok(norm * (PI / a).sqrt() * (-(shift * shift) / (4.0 * a)).exp() * (I * (k0 * x - alpha * k0 * k0 * t)).exp())
}

/// Transmitted and free packets at a fixed point as functions of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketTrace {
    /// nm
    pub x: f64,
    /// `(x - x₀)/v₀`, fs
    pub t0: f64,
    /// fs
    pub t_grid: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub psi_free: Vec<Complex64>,
    /// `Re(ψ_f* ψ)`
    pub xi: Vec<f64>,
    /// `|ψ_f|²`
    pub rho_free: Vec<f64>,
    /// Weight of `|φ|²` at `k < 0`.
    pub negative_k_fraction: f64,
    /// Whether the `k < 0` part was dropped.
    pub truncated: bool,
    /// Bound states whose contribution is included in `psi`.
    pub bound_states: usize,
    /// Gauss–Legendre panels used after self-convergence.
    pub panels: usize,
    pub warnings: Vec<String>,
}

impl PacketTrace {
    pub fn t_over_t0(&self) -> Vec<f64> {
        self.t_grid.iter().map(|t| t / self.t0).collect()
    }

    pub fn abs_psi_sq(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p.norm_sqr()).collect()
    }
}

/// Options for [`evolve_transmitted`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketOptions {
    /// Half-width of the k-window in units of `1/(2σ)`.
    pub k_half_width: f64,
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Self-convergence tolerance relative to `max |ψ_f|`.
    pub rel_tol: f64,
    pub max_doublings: usize,
    /// Integrate `k ≥ 0` only.
    pub truncate_negative_k: bool,
    /// Add the bound-state part of the evolved packet.
    pub include_bound_states: bool,
    /// Dropped negative-k weight above which a warning is attached.
    pub leak_warn: f64,
}

impl Default for PacketOptions {
    fn default() -> Self {
        Self {
            k_half_width: 8.0,
            order: 16,
            rel_tol: 1e-9,
            max_doublings: 6,
            truncate_negative_k: false,
            include_bound_states: true,
            leak_warn: 1e-8,
        }
    }
}

/// Time grid `t = s · t₀` for `s` evenly spaced in `[s_lo, s_hi]`.
pub fn time_grid_t0(g: &GaussianSpec, params: &PhysicalParams, x: f64, s_lo: f64, s_hi: f64, n: usize) -> Result<Vec<f64>> {
    let t0 = arrival_time(g, params, x)?;
    Ok(crate::scatter::linear_grid(s_lo, s_hi, n).iter().map(|s| s * t0).collect())
}

/// `t₀ = (x - x₀)/v₀`, fs.
pub fn arrival_time(g: &GaussianSpec, params: &PhysicalParams, x: f64) -> Result<f64> {
    let phi = momentum_profile(g, params)?;
    Ok((x - g.x0) / params.velocity(phi.k0))
}

pub fn evolve_transmitted(profile: &PotentialProfile, g: &GaussianSpec, x: f64, t_grid: &[f64]) -> Result<PacketTrace> {
    evolve_transmitted_with(profile, g, x, t_grid, PacketOptions::default())
}

pub fn evolve_transmitted_with(
    profile: &PotentialProfile,
    g: &GaussianSpec,
    x: f64,
    t_grid: &[f64],
    opts: PacketOptions,
) -> Result<PacketTrace> {
    let params = profile.params();
    let phi = momentum_profile(g, params)?;
    if x < profile.length() {
        return Err(Error::domain(format!(
            "observation point x = {x} nm lies inside the structure (L = {} nm)",
            profile.length()
        )));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::validation("time grid must be nonempty with t ≥ 0"));
    }
    let alpha = params.dispersion_coeff();
    let half = opts.k_half_width * phi.width();
    let k_lo = if opts.truncate_negative_k {
        (phi.k0 - half).max(0.0)
    } else {
        phi.k0 - half
    };
    let k_hi = phi.k0 + half;

    let mut warnings = Vec::new();
    let leak = phi.negative_k_fraction();
    let truncated = opts.truncate_negative_k && phi.k0 - half < 0.0;
    if truncated && leak > opts.leak_warn {
        let msg = format!("momentum profile has {leak:.3e} of its weight at k < 0; that part is dropped");
        log::warn!("{msg}");
        warnings.push(msg);
    }

    // phase excursion of e^{i(kx - αk²t)} over the window sets the start;
    // doubling below confirms convergence
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let k_abs = k_hi.max(k_lo.abs());
    let excursion = (k_hi - k_lo) * (x.abs() + 2.0 * alpha * k_abs * t_max + g.x0.abs());
    let mut panels = ((excursion / (8.0 * PI)).ceil() as usize).max(8);

    let eval = |panels: usize| {
        let (nodes, weights) = composite_gauss(k_lo, k_hi, panels, opts.order);
        let weighted: Vec<(f64, Complex64, Complex64)> = nodes
            .par_iter()
            .zip(&weights)
            .map(|(&k, &w)| {
                // e^{ikx} folded into the weights since x is fixed
                let f = phi.eval(k) * w / (2.0 * PI).sqrt() * Complex64::from_polar(1.0, k * x);
                let (t, _) = amplitudes_at(profile, Complex64::new(k, 0.0));
                (k, f * t, f)
            })
            .collect();
        t_grid
            .par_iter()
            .map(|&time| {
                let mut psi = Complex64::new(0.0, 0.0);
                let mut free = Complex64::new(0.0, 0.0);
                for &(k, a, a0) in &weighted {
                    let ph = Complex64::from_polar(1.0, -alpha * k * k * time);
                    psi += a * ph;
                    free += a0 * ph;
                }
                (psi, free)
            })
            .collect::<Vec<_>>()
    };

    let l1_norm = {
        let (nodes, weights) = composite_gauss(k_lo, k_hi, 64, opts.order);
        nodes.iter().zip(&weights).map(|(&k, &w)| w * phi.eval(k).norm()).sum::<f64>() / (2.0 * PI).sqrt()
    };
    let mut current = eval(panels);
    let mut converged = false;
    for _ in 0..opts.max_doublings {
        let next = eval(2 * panels);
        panels *= 2;
        // floor at a fraction of the integrand's L1 norm so that a packet far
        // from x on the whole grid does not demand sub-roundoff accuracy
        let scale = next
            .iter()
            .map(|(_, f)| f.norm())
            .fold(0.0, f64::max)
            .max(1e-6 * l1_norm);
        let diff = current
            .iter()
            .zip(&next)
            .map(|(a, b)| (a.0 - b.0).norm().max((a.1 - b.1).norm()))
            .fold(0.0, f64::max);
        current = next;
        if diff <= opts.rel_tol * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "packet quadrature not converged with {panels} panels"
        )));
    }

    let (mut psi, psi_free): (Vec<_>, Vec<_>) = current.into_iter().unzip();
    let bound = if opts.include_bound_states {
        crate::poles::bound_states(profile)?
    } else {
        Vec::new()
    };
    let l = profile.length();
    for b in &bound {
        let gamma = b.k.im;
        let amp = (2.0 * PI).sqrt() * phi.eval_complex(b.k) * 2.0 * I * gamma * b.residue * (-gamma * (x - l)).exp();
        for (p, &time) in psi.iter_mut().zip(t_grid) {
            *p += amp * Complex64::from_polar(1.0, alpha * gamma * gamma * time);
        }
    }
    let xi = psi.iter().zip(&psi_free).map(|(p, f)| (f.conj() * p).re).collect();
    let rho_free = psi_free.iter().map(|f| f.norm_sqr()).collect();
    Ok(PacketTrace {
        x,
        t0: (x - g.x0) / params.velocity(phi.k0),
        t_grid: t_grid.to_vec(),
        psi,
        psi_free,
        xi,
        rho_free,
        negative_k_fraction: leak,
        truncated,
        bound_states: bound.len(),
        panels,
        warnings,
    })
}

/// `max_t |ξ - ρ_f| / max_t ρ_f`.
pub fn invisibility_score(trace: &PacketTrace) -> Result<f64> {
    let peak = trace.rho_free.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::domain("free density vanishes on the whole time grid"));
    }
    let dev = trace
        .xi
        .iter()
        .zip(&trace.rho_free)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(dev / peak)
}
