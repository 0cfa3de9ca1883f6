//! Coherent scattering by 2×2 transfer matrices.
//!
//! Inside a slice of height `V` the pair `(ψ, ψ')` is propagated by
//!
//! ```text
//! [  cos(qw)      sin(qw)/q ]
//! [ -q sin(qw)    cos(qw)   ]      q² = k² - V/(ħ²/2m)
//! ```
//!
//! whose entries are entire functions of `q²`, so the product over all slices is
//! an entire function of `k` with no branch choice anywhere. With
//! `ψ = e^{ikx} + r e^{-ikx}` for `x ≤ 0` and `ψ = t e^{ikx}` for `x ≥ L`,
//! matching at both ends gives
//!
//! ```text
//! t = 2ik e^{-ikL} / D(k),   D(k) = ik(a + d) + k² b - c
//! r = (c + k² b + ik(d - a)) / D(k)
//! ```
//!
//! for the product `[[a, b], [c, d]]`. `D` is entire and its zeros away from
//! `k = 0` are exactly the poles of `t`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialProfile;

/// A point of the complex wavenumber plane, nm⁻¹.
pub type ComplexK = Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Bounds outside which the running product is rescaled.
const RESCALE_HI: f64 = 1e64;
const RESCALE_LO: f64 = 1e-64;

type Mat2 = [[Complex64; 2]; 2];

#[inline]
fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
fn max_abs(m: &Mat2) -> f64 {
    m.iter()
        .flatten()
        .map(|z| z.re.abs().max(z.im.abs()))
        .fold(0.0, f64::max)
}

/// `(cos √ζ, sin √ζ / √ζ)`, both even in `√ζ` and therefore entire in `ζ`.
pub(crate) fn cos_sinc(zeta: Complex64) -> (Complex64, Complex64) {
    if zeta.norm() < 1.0 {
        // Taylor series; 12 terms leave a remainder below 1/24! for |ζ| < 1
        let mut c = ONE;
        let mut s = ONE;
        let mut term_c = ONE;
        let mut term_s = ONE;
        for n in 1..12 {
            let nf = n as f64;
            term_c = -term_c * zeta / ((2.0 * nf - 1.0) * (2.0 * nf));
            term_s = -term_s * zeta / ((2.0 * nf) * (2.0 * nf + 1.0));
            c += term_c;
            s += term_s;
        }
        (c, s)
    } else {
        let z = zeta.sqrt();
        (z.cos(), z.sin() / z)
    }
}

/// `(ψ, ψ')` propagator over a width `w` with local `q²`.
#[inline]
fn slice_matrix(q2: Complex64, w: f64) -> Mat2 {
    let (c, s) = cos_sinc(q2 * (w * w));
    [[c, s * w], [-q2 * s * w, c]]
}

/// Inverse of [`slice_matrix`]: propagation over `-w`.
#[inline]
fn slice_matrix_inv(q2: Complex64, w: f64) -> Mat2 {
    let (c, s) = cos_sinc(q2 * (w * w));
    [[c, -s * w], [q2 * s * w, c]]
}

/// Product of all slice propagators for `(ψ, ψ')`, from `x = 0` to `x = L`.
///
/// The true matrix is `exp(log_scale) · m`.
#[derive(Debug, Clone, Copy)]
pub struct Propagator {
    pub m: [[Complex64; 2]; 2],
    pub log_scale: f64,
}

impl Propagator {
    pub fn new(profile: &PotentialProfile, k: ComplexK) -> Self {
        let coeff = profile.params().kinetic_coeff();
        let k2 = k * k;
        let mut m = [[ONE, ZERO], [ZERO, ONE]];
        let mut log_scale = 0.0;
        for s in profile.slices() {
            let q2 = k2 - s.height / coeff;
            m = mul(&slice_matrix(q2, s.width), &m);
            let n = max_abs(&m);
            if n > RESCALE_HI || (n < RESCALE_LO && n > 0.0) {
                let inv = 1.0 / n;
                m.iter_mut().flatten().for_each(|z| *z *= inv);
                log_scale += n.ln();
            }
        }
        Self { m, log_scale }
    }

    /// Unscaled matrix; may overflow when `log_scale` is large.
    pub fn matrix(&self) -> Mat2 {
        let f = self.log_scale.exp();
        let m = self.m;
        [[m[0][0] * f, m[0][1] * f], [m[1][0] * f, m[1][1] * f]]
    }

    pub fn det(&self) -> Complex64 {
        let m = self.m;
        (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * (2.0 * self.log_scale).exp()
    }
}

/// A complex value stored as `exp(log_scale) · value`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled {
    pub value: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn get(&self) -> Complex64 {
        self.value * self.log_scale.exp()
    }

    /// `self / other`, computed without forming either magnitude.
    pub fn ratio(&self, other: &Scaled) -> Complex64 {
        self.value / other.value * (self.log_scale - other.log_scale).exp()
    }
}

/// Below this `|k| L` the `(ψ, ψ')` product is used; above it the plane-wave
/// product, which avoids cancellation between growing waves when `Im k < 0`.
const PLANE_WAVE_MIN_KL: f64 = 1.0;

/// Slice matrix in the basis of `e^{±ikx}` waves referred to the slice's left edge.
///
/// For `V = 0` it is exactly `diag(e^{ikw}, e^{-ikw})`; the corrections are
/// written as products so that no two exponentially large terms are subtracted.
fn plane_wave_slice(k: Complex64, v: f64, w: f64) -> Mat2 {
    let kw = k * w;
    let (c, s) = if v.abs() <= 0.5 * k.norm_sqr() {
        let mut q = (k * k - v).sqrt();
        if (q * k.conj()).re < 0.0 {
            q = -q;
        }
        let qmk = -v / (q + k);
        let p = (q + k) * (0.5 * w);
        let m = qmk * (0.5 * w);
        let sm = m.sin();
        let dc = -2.0 * p.sin() * sm;
        let ds = 2.0 * p.cos() * sm / q + kw.sin() * v / ((q + k) * q * k);
        (kw.cos() + dc, kw.sin() / k + ds)
    } else {
        let (c, s) = cos_sinc((k * k - v) * (w * w));
        (c, s * w)
    };
    let sigma = s * v / (2.0 * k);
    // C ± ikS equals e^{±ikw} plus an O(V) remainder
    let (ep, em) = if v.abs() <= 0.5 * k.norm_sqr() {
        let (c0, s0) = (kw.cos(), kw.sin() / k);
        ((I * kw).exp() + (c - c0) + I * k * (s - s0), (-I * kw).exp() + (c - c0) - I * k * (s - s0))
    } else {
        (c + I * k * s, c - I * k * s)
    };
    [[ep - I * sigma, -I * sigma], [I * sigma, em + I * sigma]]
}

/// Product of [`plane_wave_slice`] matrices over the profile, scaled like [`Propagator`].
fn plane_wave_product(profile: &PotentialProfile, k: Complex64) -> (Mat2, f64) {
    let coeff = profile.params().kinetic_coeff();
    let mut m = [[ONE, ZERO], [ZERO, ONE]];
    let mut log_scale = 0.0;
    for s in profile.slices() {
        m = mul(&plane_wave_slice(k, s.height / coeff, s.width), &m);
        let n = max_abs(&m);
        if n > RESCALE_HI || (n < RESCALE_LO && n > 0.0) {
            let inv = 1.0 / n;
            m.iter_mut().flatten().for_each(|z| *z *= inv);
            log_scale += n.ln();
        }
    }
    (m, log_scale)
}

fn use_plane_waves(profile: &PotentialProfile, k: Complex64) -> bool {
    k.norm() * profile.length() >= PLANE_WAVE_MIN_KL
}

/// The entire function `D(k) = 2ik e^{-ikL} / t(k)` whose zeros (k ≠ 0) are the poles of `t`.
pub fn pole_function(profile: &PotentialProfile, k: ComplexK) -> Scaled {
    if use_plane_waves(profile, k) {
        let (m, log_scale) = plane_wave_product(profile, k);
        return Scaled {
            value: 2.0 * I * k * m[1][1],
            log_scale,
        };
    }
    let p = Propagator::new(profile, k);
    Scaled {
        value: denominator(&p.m, k),
        log_scale: p.log_scale,
    }
}

#[inline]
fn denominator(m: &Mat2, k: Complex64) -> Complex64 {
    let [[a, b], [c, d]] = *m;
    I * k * (a + d) + k * k * b - c
}

/// Plane-wave transfer matrix: maps `(A, B)` of `A e^{ikx} + B e^{-ikx}` at
/// `x = 0⁻` to the same coefficients at `x = L⁺`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl TransferMatrix {
    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// `t = 1/m22`.
    pub fn transmission(&self) -> Complex64 {
        1.0 / self.m22
    }

    /// `r = -m21/m22`.
    pub fn reflection(&self) -> Complex64 {
        -self.m21 / self.m22
    }
}

/// Plane-wave transfer matrix at a nonzero complex `k`.
///
/// The plane-wave basis degenerates at `k = 0`; use [`amplitudes_at`] there,
/// which takes the limit through the `(ψ, ψ')` propagator.
pub fn transfer_matrix(profile: &PotentialProfile, k: ComplexK) -> Result<TransferMatrix> {
    if k == ZERO {
        return Err(Error::domain("plane-wave transfer matrix is singular at k = 0"));
    }
    let l = profile.length();
    if use_plane_waves(profile, k) {
        let (n, log_scale) = plane_wave_product(profile, k);
        let f = log_scale.exp();
        let (em, ep) = ((-I * k * l).exp() * f, (I * k * l).exp() * f);
        return Ok(TransferMatrix {
            m11: em * n[0][0],
            m12: em * n[0][1],
            m21: ep * n[1][0],
            m22: ep * n[1][1],
        });
    }
    let p = Propagator::new(profile, k);
    let m = p.matrix();
    let e_pl = (I * k * l).exp();
    let e_ml = (-I * k * l).exp();
    let w0 = [[ONE, ONE], [I * k, -I * k]];
    let wl_inv = [
        [e_ml * 0.5, e_ml / (2.0 * I * k)],
        [e_pl * 0.5, -e_pl / (2.0 * I * k)],
    ];
    let t = mul(&wl_inv, &mul(&m, &w0));
    Ok(TransferMatrix {
        m11: t[0][0],
        m12: t[0][1],
        m21: t[1][0],
        m22: t[1][1],
    })
}

/// `(t, r)` at any complex `k`, including the `k → 0` limit.
pub fn amplitudes_at(profile: &PotentialProfile, k: ComplexK) -> (Complex64, Complex64) {
    if profile.is_free() {
        return (ONE, ZERO);
    }
    if k != ZERO && use_plane_waves(profile, k) {
        let (m, log_scale) = plane_wave_product(profile, k);
        let l = profile.length();
        let t = (-I * k * l - log_scale).exp() / m[1][1];
        return (t, -m[1][0] / m[1][1]);
    }
    let p = Propagator::new(profile, k);
    let [[a, b], [c, d]] = p.m;
    if k == ZERO {
        // D(0) = -c(0). Unless it vanishes, t(0) = 0 and r(0) = -1; otherwise
        // both follow from D'(0) = i(a + d).
        let scale = a.norm().max(d.norm()).max(b.norm()).max(1.0);
        if c.norm() > 1e-14 * scale {
            return (ZERO, -ONE);
        }
        let tr = a + d;
        return (2.0 * p.log_scale.exp().recip() / tr, (d - a) / tr);
    }
    let den = denominator(&p.m, k);
    let l = profile.length();
    let t = 2.0 * I * k * (-I * k * l - p.log_scale).exp() / den;
    let r = (c + k * k * b + I * k * (d - a)) / den;
    (t, r)
}

/// Amplitudes and derived quantities at one real wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSolution {
    /// nm⁻¹
    pub k: ComplexK,
    /// eV
    pub energy: f64,
    pub t: Complex64,
    pub r: Complex64,
    /// |t|²
    pub transmission: f64,
    /// |r|²
    pub reflection: f64,
    /// arg t, rad
    pub theta: f64,
    /// arg r, rad
    pub phi: f64,
}

/// Scattering solution at energy `e` (eV) for a particle incident from the left.
pub fn amplitudes(profile: &PotentialProfile, e: f64) -> Result<ScatteringSolution> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::domain(format!("energy must be > 0, got {e}")));
    }
    let k = profile.params().k_of_e(e)?;
    Ok(solution_at_k(profile, k, e))
}

pub(crate) fn solution_at_k(profile: &PotentialProfile, k: f64, e: f64) -> ScatteringSolution {
    let (t, r) = amplitudes_at(profile, Complex64::new(k, 0.0));
    ScatteringSolution {
        k: Complex64::new(k, 0.0),
        energy: e,
        t,
        r,
        transmission: t.norm_sqr(),
        reflection: r.norm_sqr(),
        theta: t.arg(),
        phi: r.arg(),
    }
}

/// `ψ(x)` for unit-amplitude incidence from the left, at arbitrary points.
///
/// The interior solution is integrated backwards from `x = L`, where
/// `ψ = t e^{ikL}`, which is the stable direction inside barriers.
pub fn wavefunction(profile: &PotentialProfile, e: f64, xs: &[f64]) -> Result<Vec<Complex64>> {
    let sol = amplitudes(profile, e)?;
    let k = sol.k.re;
    let l = profile.length();
    let coeff = profile.params().kinetic_coeff();
    let k2 = Complex64::new(k * k, 0.0);
    let right = edge_states(profile, k, sol.t);
    let edges = profile.edges();
    let slices = profile.slices();

    Ok(xs
        .iter()
        .map(|&x| {
            if x <= 0.0 {
                (I * k * x).exp() + sol.r * (-I * k * x).exp()
            } else if x >= l {
                sol.t * (I * k * x).exp()
            } else {
                let j = profile.slice_index(x).expect("inside support");
                let q2 = k2 - slices[j].height / coeff;
                let m = slice_matrix_inv(q2, edges[j + 1] - x);
                let [psi, dpsi] = right[j + 1];
                m[0][0] * psi + m[0][1] * dpsi
            }
        })
        .collect())
}

/// `(ψ, ψ')` at every slice edge, integrated backwards from `x = L`.
pub(crate) fn edge_states(profile: &PotentialProfile, k: f64, t: Complex64) -> Vec<[Complex64; 2]> {
    let coeff = profile.params().kinetic_coeff();
    let k2 = Complex64::new(k * k, 0.0);
    let l = profile.length();
    let slices = profile.slices();
    let mut states = vec![[ZERO, ZERO]; slices.len() + 1];
    let psi_l = t * (I * k * l).exp();
    states[slices.len()] = [psi_l, I * k * psi_l];
    for j in (0..slices.len()).rev() {
        let q2 = k2 - slices[j].height / coeff;
        let m = slice_matrix_inv(q2, slices[j].width);
        let [psi, dpsi] = states[j + 1];
        states[j] = [m[0][0] * psi + m[0][1] * dpsi, m[1][0] * psi + m[1][1] * dpsi];
    }
    states
}

/// `ψ` inside slice `j` at a distance `s` to the left of its right edge.
pub(crate) fn psi_in_slice(
    profile: &PotentialProfile,
    k: f64,
    right_state: [Complex64; 2],
    j: usize,
    s: f64,
) -> Complex64 {
    let coeff = profile.params().kinetic_coeff();
    let q2 = Complex64::new(k * k, 0.0) - profile.slices()[j].height / coeff;
    let m = slice_matrix_inv(q2, s);
    m[0][0] * right_state[0] + m[0][1] * right_state[1]
}

/// Removes 2π jumps between consecutive entries in place.
pub fn unwrap_phases(phases: &mut [f64]) {
    use std::f64::consts::PI;
    let mut offset = 0.0;
    for i in 1..phases.len() {
        let raw_prev = phases[i - 1] - offset;
        let raw = phases[i];
        let mut step = raw - raw_prev;
        while step > PI {
            step -= 2.0 * PI;
            offset -= 2.0 * PI;
        }
        while step < -PI {
            step += 2.0 * PI;
            offset += 2.0 * PI;
        }
        phases[i] = raw + offset;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// eV
    pub energy: f64,
    pub transmission: f64,
    /// Unwrapped transmission phase, rad.
    pub theta: f64,
}

/// Exact `T(E)` and unwrapped `θ(E)` over an energy grid. Phase unwrapping
/// follows grid order, so the result depends on grid resolution near fast
/// phase changes.
pub fn transmission_curve(profile: &PotentialProfile, e_grid: &[f64]) -> Result<Vec<CurvePoint>> {
    if let Some(bad) = e_grid.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::domain(format!("energy grid contains non-positive value {bad}")));
    }
    let sols: Vec<ScatteringSolution> = e_grid
        .par_iter()
        .map(|&e| amplitudes(profile, e))
        .collect::<Result<_>>()?;
    let mut theta: Vec<f64> = sols.iter().map(|s| s.theta).collect();
    unwrap_phases(&mut theta);
    Ok(sols
        .iter()
        .zip(theta)
        .map(|(s, th)| CurvePoint {
            energy: s.energy,
            transmission: s.transmission,
            theta: th,
        })
        .collect())
}

/// `n` log-spaced points over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut g: Vec<f64> = (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect();
            g[0] = lo;
            g[n - 1] = hi;
            g
        }
    }
}

/// `n` evenly spaced points over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
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
    fn series_matches_closed_form_near_switch() {
        for z in [
            Complex64::new(0.99, 0.0),
            Complex64::new(-0.7, 0.6),
            Complex64::new(0.0, 0.98),
        ] {
            let (c, s) = cos_sinc(z);
            let r = z.sqrt();
            assert!((c - r.cos()).norm() < 1e-15);
            assert!((s - r.sin() / r).norm() < 1e-15);
        }
        let (c, s) = cos_sinc(ZERO);
        assert_eq!((c, s), (ONE, ONE));
    }

    #[test]
    fn free_profile_is_transparent() {
        let p = Preset::Free.build(gaas()).unwrap();
        let s = amplitudes(&p, 0.07).unwrap();
        assert!((s.t - ONE).norm() < 1e-13);
        assert!(s.r.norm() < 1e-13);
        assert!(s.theta.abs() < 1e-13);
        let tm = transfer_matrix(&p, Complex64::new(0.3, -0.2)).unwrap();
        assert!((tm.m11 - ONE).norm() < 1e-12 && (tm.m22 - ONE).norm() < 1e-12);
        assert!(tm.m12.norm() < 1e-12 && tm.m21.norm() < 1e-12);
    }

    #[test]
    fn single_barrier_closed_form() {
        // T = [1 + V0² sinh²(κb) / (4E(V0 - E))]⁻¹
        let (v0, b, e) = (0.12, 0.4, 0.06);
        let p = build_rect(&[(b, v0)], gaas()).unwrap();
        let c = gaas().kinetic_coeff();
        let kappa = ((v0 - e) / c).sqrt();
        let expected = 1.0 / (1.0 + v0 * v0 * (kappa * b).sinh().powi(2) / (4.0 * e * (v0 - e)));
        let s = amplitudes(&p, e).unwrap();
        assert_relative_eq!(s.transmission, expected, max_relative = 1e-12);
    }

    #[test]
    fn energy_at_slice_height_uses_series_limit() {
        let p = build_rect(&[(0.4, 0.12)], gaas()).unwrap();
        let s = amplitudes(&p, 0.12).unwrap();
        // T = [1 + m V0 b² / (2ħ²)]⁻¹ at E = V0, i.e. [1 + V0 b²/(4c)]⁻¹
        let c = gaas().kinetic_coeff();
        let expected = 1.0 / (1.0 + 0.12 * 0.16 / (4.0 * c));
        assert_relative_eq!(s.transmission, expected, max_relative = 1e-12);
    }

    #[test]
    fn non_positive_energy_rejected() {
        let p = Preset::Bwb.build(gaas()).unwrap();
        assert!(amplitudes(&p, 0.0).is_err());
        assert!(amplitudes(&p, -0.1).is_err());
        assert!(transmission_curve(&p, &[0.1, 0.0]).is_err());
    }

    #[test]
    fn plane_wave_matrix_matches_amplitudes() {
        let p = Preset::TwoBwb.build(gaas()).unwrap();
        let k = Complex64::new(0.4, 0.0);
        let tm = transfer_matrix(&p, k).unwrap();
        let (t, r) = amplitudes_at(&p, k);
        assert!((tm.transmission() - t).norm() < 1e-12);
        assert!((tm.reflection() - r).norm() < 1e-12);
        assert!((tm.det() - ONE).norm() < 1e-12);
    }

    #[test]
    fn zero_k_limits() {
        let p = Preset::TwoBwb.build(gaas()).unwrap();
        let (t, r) = amplitudes_at(&p, ZERO);
        assert_eq!(t, ZERO);
        assert_eq!(r, -ONE);
        let free = Preset::Free.build(gaas()).unwrap();
        let (t, r) = amplitudes_at(&free, ZERO);
        assert!((t - ONE).norm() < 1e-14 && r.norm() < 1e-14);
        assert!(transfer_matrix(&p, ZERO).is_err());
    }

    #[test]
    fn large_imaginary_k_rescaled() {
        // Im(k) L = -60: unscaled entries would reach e^60 per slice product
        let p = Preset::TenBwb.build(gaas()).unwrap();
        let k = Complex64::new(3.0, -60.0 / p.length());
        let prop = Propagator::new(&p, k);
        assert!(prop.m.iter().flatten().all(|z| z.norm().is_finite()));
        let d = pole_function(&p, k);
        assert!(d.value.norm().is_finite() && d.value.norm() > 0.0);
    }

    #[test]
    fn free_wavefunction_unit_density() {
        let p = Preset::Free.build(gaas()).unwrap();
        let xs = linear_grid(0.0, 1.0, 11);
        for psi in wavefunction(&p, 0.05, &xs).unwrap() {
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wavefunction_matches_both_ends() {
        let p = Preset::TwoBwb.build(gaas()).unwrap();
        let s = amplitudes(&p, 0.06).unwrap();
        let l = p.length();
        let k = s.k.re;
        let psi = wavefunction(&p, 0.06, &[0.0, 1e-12, l - 1e-12, l]).unwrap();
        assert!((psi[3] - s.t * (I * k * l).exp()).norm() < 1e-10);
        assert!((psi[2] - psi[3]).norm() < 1e-10);
        // backward integration lands on 1 + r at the left end
        assert!((psi[1] - (ONE + s.r)).norm() < 1e-10);
        assert!((psi[0] - (ONE + s.r)).norm() < 1e-10);
    }

    #[test]
    fn wavefunction_continuous_across_edges() {
        let p = Preset::FiveBwb.build(gaas()).unwrap();
        let h = 1e-7;
        for &x in &p.edges()[1..p.edges().len() - 1] {
            let v = wavefunction(&p, 0.03, &[x - h, x, x + h]).unwrap();
            assert!((v[0] - v[1]).norm() < 1e-5);
            assert!((v[2] - v[1]).norm() < 1e-5);
            // derivative continuity: one-sided slopes agree to O(h)
            let left = (v[1] - v[0]) / h;
            let right = (v[2] - v[1]) / h;
            assert!((left - right).norm() < 1e-4, "{x}: {left} vs {right}");
        }
    }

    #[test]
    fn unwrap_removes_jumps() {
        let mut ph = vec![3.0, -3.1, -2.9, 3.05];
        unwrap_phases(&mut ph);
        for w in ph.windows(2) {
            assert!((w[1] - w[0]).abs() < std::f64::consts::PI);
        }
        assert_relative_eq!(ph[1], -3.1 + 2.0 * std::f64::consts::PI);
    }

    #[test]
    fn free_curve_is_flat() {
        let p = Preset::Free.build(gaas()).unwrap();
        for pt in transmission_curve(&p, &log_grid(1e-6, 1.0, 50)).unwrap() {
            assert!((pt.transmission - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fig1_wide_resonances_below_barrier() {
        let p = Preset::Fig1Wide.build(gaas()).unwrap();
        let grid = linear_grid(1e-4, 0.2 - 1e-4, 20000);
        let curve = transmission_curve(&p, &grid).unwrap();
        let peaks: Vec<f64> = curve
            .windows(3)
            .filter(|w| w[1].transmission > w[0].transmission && w[1].transmission > w[2].transmission)
            .filter(|w| w[1].transmission > 0.9)
            .map(|w| w[1].energy)
            .collect();
        assert_eq!(peaks.len(), 2, "{peaks:?}");
    }

    #[test]
    fn fig1_thin_has_no_unit_peak_below_barrier() {
        let p = Preset::Fig1Thin.build(gaas()).unwrap();
        let grid = linear_grid(1e-4, 0.2 - 1e-4, 4000);
        let curve = transmission_curve(&p, &grid).unwrap();
        let max = curve.iter().map(|c| c.transmission).fold(0.0, f64::max);
        // monotone rise with no resonance peak
        assert!(curve.windows(2).all(|w| w[1].transmission >= w[0].transmission));
        assert!(max < 0.99);
    }

    #[test]
    fn two_bwb_crosses_half_near_threshold_energy() {
        let p = Preset::TwoBwb.build(gaas()).unwrap();
        let curve = transmission_curve(&p, &log_grid(1e-8, 0.24, 400)).unwrap();
        let i = curve.iter().position(|c| c.transmission >= 0.5).unwrap();
        let e = curve[i].energy;
        assert!(e > 8.68e-6 * 0.9 && e < 8.68e-6 * 1.1, "{e}");
    }

    #[test]
    fn two_bsb_not_transparent_in_band() {
        let p = Preset::TwoBsb.build(gaas()).unwrap();
        let s = amplitudes(&p, 0.06).unwrap();
        assert!(s.transmission < 0.9, "{}", s.transmission);
    }
}
