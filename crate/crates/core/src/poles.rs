//! Poles of the transmission amplitude in the complex k-plane.
//!
//! Poles are the zeros (k ≠ 0) of the entire function
//! `D(k) = 2ik e^{-ikL} / t(k)` from [`crate::scatter::pole_function`]. With
//! `t = 2ik e^{-ikL} / D`, the residue of `t` at a simple zero `k_n` is
//! `2ik_n e^{-ik_nL} / D'(k_n)`, so the expansion coefficient of
//! `t(k) = 2ik Σ r_n e^{-ik_nL} / (k - k_n)` is simply `r_n = 1 / D'(k_n)`.
//!
//! For a real potential `D(-k*) = D(k)*`, so poles come in pairs
//! `k_{-n} = -k_n*` and only fourth-quadrant and imaginary-axis members are stored.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialProfile;
use crate::scatter::{pole_function, ComplexK, Scaled};
use crate::units::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoleKind {
    /// Positive imaginary axis.
    Bound,
    /// Negative imaginary axis.
    Antibound,
    /// Lower half-plane, off the imaginary axis.
    Resonant,
}

impl PoleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoleKind::Bound => "bound",
            PoleKind::Antibound => "antibound",
            PoleKind::Resonant => "resonant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    /// nm⁻¹
    pub k: ComplexK,
    pub kind: PoleKind,
    /// Expansion coefficient `r_n = 1/D'(k_n)`.
    pub residue: Complex64,
    /// `E(k_n) = (ħ²/2m) k_n²`, eV.
    pub energy: Complex64,
    /// `Im k` for imaginary-axis poles, nm⁻¹.
    pub gamma: Option<f64>,
    pub iterations: usize,
}

impl Pole {
    pub fn on_axis(&self) -> bool {
        self.kind != PoleKind::Resonant
    }

    /// Partner `-k*` with its residue `-r*`.
    pub fn mirrored(&self) -> Pole {
        Pole {
            k: -self.k.conj(),
            residue: -self.residue.conj(),
            energy: self.energy.conj(),
            ..*self
        }
    }

    /// Relative deviation of the residue from `1/(2i)`, the value expected for
    /// an isolated threshold pole.
    pub fn deviation_from_half_i(&self) -> f64 {
        let half_i = Complex64::new(0.0, -0.5);
        (self.residue - half_i).norm() / 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Converged when `|Δk|` falls below this, nm⁻¹.
    pub step_tol: f64,
    /// Converged when `|1/t(k)|` falls below this.
    pub f_tol: f64,
    /// Central-difference step relative to `max(|k|, 1/L)`.
    pub fd_rel_step: f64,
    /// Largest Newton step, in units of π/L.
    pub max_step: f64,
    /// Results closer than this to `k = 0` are rejected, nm⁻¹.
    pub zero_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            step_tol: 1e-12,
            f_tol: 1e-13,
            fd_rel_step: 1e-6,
            max_step: 2.0,
            zero_tol: 1e-10,
        }
    }
}

fn eval(profile: &PotentialProfile, k: Complex64) -> Scaled {
    pole_function(profile, k)
}

/// `|1/t(k)| = |D| |e^{ikL}| / (2|k|)`.
fn inverse_t_norm(profile: &PotentialProfile, k: Complex64, d: &Scaled) -> f64 {
    let l = profile.length();
    (d.value.norm().ln() + d.log_scale - k.im * l - (2.0 * k.norm()).ln()).exp()
}

/// `D'(k) / D(k)` by central differences.
fn log_derivative(profile: &PotentialProfile, k: Complex64, d0: &Scaled, h: f64) -> Complex64 {
    let dp = eval(profile, k + h);
    let dm = eval(profile, k - h);
    (dp.ratio(d0) - dm.ratio(d0)) / (2.0 * h)
}

/// Raw Newton iteration on D. Returns the root and the iteration count.
fn newton(
    profile: &PotentialProfile,
    seed: Complex64,
    opts: &NewtonOptions,
    axis_only: bool,
) -> Result<(Complex64, usize)> {
    let l = profile.length();
    let max_step = opts.max_step * PI / l;
    let mut k = seed;
    for it in 1..=opts.max_iter {
        let d = eval(profile, k);
        if d.value == Complex64::new(0.0, 0.0) {
            return Ok((k, it));
        }
        let h = opts.fd_rel_step * k.norm().max(1.0 / l);
        let ld = log_derivative(profile, k, &d, h);
        let mut step = -1.0 / ld;
        if !step.re.is_finite() || !step.im.is_finite() {
            return Err(Error::NoConvergence(format!(
                "Newton step not finite at k = {k}"
            )));
        }
        if axis_only {
            step.re = 0.0;
        }
        let n = step.norm();
        if n > max_step {
            step *= max_step / n;
        }
        k += step;
        if axis_only {
            k.re = 0.0;
        }
        if n < opts.step_tol {
            return Ok((k, it));
        }
        if n < 1e-6 * max_step {
            let d = eval(profile, k);
            if inverse_t_norm(profile, k, &d) < opts.f_tol {
                return Ok((k, it));
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "Newton iteration from {seed} did not converge in {} steps (last k = {k})",
        opts.max_iter
    )))
}

/// `D'(k)` from the Cauchy integral on a circle; exact up to rounding for entire `D`.
pub fn pole_function_derivative(profile: &PotentialProfile, k: ComplexK) -> Complex64 {
    const M: usize = 32;
    let l = profile.length();
    let rho = 0.05 * PI / l;
    let centre = eval(profile, k);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..M {
        let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / M as f64);
        let dz = eval(profile, k + w * rho);
        // factor exp(log_scale_centre) restored below
        acc += dz.value * (dz.log_scale - centre.log_scale).exp() / w;
    }
    acc / (M as f64 * rho) * centre.log_scale.exp()
}

/// Residue `r_n = 1/D'(k_n)`.
pub fn residue(profile: &PotentialProfile, k: ComplexK) -> Complex64 {
    1.0 / pole_function_derivative(profile, k)
}

fn classify(k: Complex64) -> Result<(Complex64, PoleKind)> {
    let on_axis = k.re.abs() <= 1e-8 * k.norm() + 1e-14;
    if on_axis {
        let k = Complex64::new(0.0, k.im);
        let kind = if k.im > 0.0 {
            PoleKind::Bound
        } else {
            PoleKind::Antibound
        };
        Ok((k, kind))
    } else if k.im < 0.0 {
        Ok((k, PoleKind::Resonant))
    } else {
        Err(Error::domain(format!(
            "root {k} lies off the imaginary axis in the upper half-plane"
        )))
    }
}

fn make_pole(profile: &PotentialProfile, k: Complex64, kind: PoleKind, iterations: usize) -> Pole {
    let params = profile.params();
    Pole {
        k,
        kind,
        residue: residue(profile, k),
        energy: params.e_of_k_complex(k),
        gamma: (kind != PoleKind::Resonant).then_some(k.im),
        iterations,
    }
}

/// Newton–Raphson refinement of a pole from `seed`.
///
/// Roots found in the third quadrant are reported as their fourth-quadrant
/// partner. Roots that land on the imaginary axis are re-polished along it.
pub fn refine_pole(profile: &PotentialProfile, seed: ComplexK, opts: &NewtonOptions) -> Result<Pole> {
    let (k, it) = newton(profile, seed, opts, false)?;
    if k.norm() < opts.zero_tol {
        return Err(Error::domain("Newton iteration converged to k = 0"));
    }
    let (k, kind) = classify(k)?;
    if kind == PoleKind::Resonant {
        let k = if k.re < 0.0 { -k.conj() } else { k };
        return Ok(make_pole(profile, k, kind, it));
    }
    let (k, it2) = newton(profile, k, opts, true)?;
    if k.norm() < opts.zero_tol {
        return Err(Error::domain("Newton iteration converged to k = 0"));
    }
    Ok(make_pole(profile, k, kind, it + it2))
}

/// Rectangle of the k-plane holding stored (Re k ≥ 0) poles, nm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    /// Default region for about `n` poles: `0 ≤ Re(kL) ≤ (n+2)π`,
    /// `-40 ≤ Im(kL)`, and far enough up the imaginary axis for every bound state.
    pub fn for_count(profile: &PotentialProfile, n: usize) -> Self {
        let l = profile.length();
        let coeff = profile.params().kinetic_coeff();
        let deepest = profile
            .slices()
            .iter()
            .fold(0.0f64, |m, s| m.max(-s.height));
        let gamma_max = (deepest / coeff).sqrt();
        Self {
            re_min: 0.0,
            re_max: (n as f64 + 2.0) * PI / l,
            im_min: -40.0 / l,
            im_max: gamma_max * 1.05 + 0.25 * PI / l,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.re_min >= 0.0 && self.re_max > self.re_min && self.im_max > self.im_min) {
            return Err(Error::validation(format!("invalid pole search region {self:?}")));
        }
        Ok(())
    }

    fn contains(&self, k: Complex64, slack: f64) -> bool {
        k.re >= self.re_min - slack
            && k.re <= self.re_max + slack
            && k.im >= self.im_min - slack
            && k.im <= self.im_max + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub newton: NewtonOptions,
    /// Seeds per π/L along Re k.
    pub seeds_per_spacing: usize,
    /// Seed rows per π/L along Im k.
    pub rows_per_spacing: f64,
    /// Roots closer than `merge_radius · max(1, |k|)` are merged, nm⁻¹.
    pub merge_radius: f64,
    pub check_completeness: bool,
    /// Rounds of localized re-seeding when the winding count disagrees.
    pub repair_rounds: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions {
                max_iter: 60,
                ..Default::default()
            },
            seeds_per_spacing: 6,
            rows_per_spacing: 1.0,
            merge_radius: 1e-9,
            check_completeness: true,
            repair_rounds: 3,
        }
    }
}

/// Argument-principle count on the search contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Completeness {
    /// Zeros of D enclosed by the contour (including k = 0 and mirrored partners).
    pub winding: i64,
    /// Zeros accounted for by the stored poles.
    pub found: i64,
}

impl Completeness {
    pub fn is_complete(&self) -> bool {
        self.winding == self.found
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSet {
    /// Sorted by |Re k|, imaginary-axis poles first by |γ|.
    pub poles: Vec<Pole>,
    /// nm
    pub length: f64,
    pub region: Region,
    pub requested: Option<usize>,
    pub completeness: Option<Completeness>,
    /// `max |r_{-n} + r_n*| / |r_n|` measured by refining mirrored partners directly.
    pub residue_symmetry_error: Option<f64>,
    /// `1/D(0)`, the zero-energy value of `t/(2ik)`; absent when `D(0) = 0`.
    pub zero_energy_value: Option<Complex64>,
    pub warnings: Vec<String>,
}

impl PoleSet {
    pub fn resonant(&self) -> impl Iterator<Item = &Pole> {
        self.poles.iter().filter(|p| p.kind == PoleKind::Resonant)
    }

    pub fn imaginary(&self) -> impl Iterator<Item = &Pole> {
        self.poles.iter().filter(|p| p.on_axis())
    }

    /// Every pole including generated `-k*` partners.
    pub fn with_partners(&self) -> Vec<Pole> {
        let mut v = Vec::with_capacity(2 * self.poles.len());
        for p in &self.poles {
            v.push(*p);
            if p.kind == PoleKind::Resonant {
                v.push(p.mirrored());
            }
        }
        v
    }
}

fn sort_poles(poles: &mut [Pole]) {
    poles.sort_by(|a, b| {
        let ka = (a.k.re.abs(), a.k.im.abs());
        let kb = (b.k.re.abs(), b.k.im.abs());
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
}

fn merge(mut found: Vec<Pole>, radius: f64) -> Vec<Pole> {
    sort_poles(&mut found);
    let mut out: Vec<Pole> = Vec::with_capacity(found.len());
    for p in found {
        let tol = radius * p.k.norm().max(1.0);
        // sorted by |Re k|: duplicates sit near the tail
        let dup = out
            .iter()
            .rev()
            .take_while(|q| (p.k.re.abs() - q.k.re.abs()) <= tol)
            .any(|q| (q.k - p.k).norm() <= tol);
        if !dup {
            out.push(p);
        }
    }
    out
}

fn seed_grid(region: &Region, l: f64, per_re: f64, per_im: f64) -> Vec<Complex64> {
    let dre = PI / (l * per_re);
    let dim = PI / (l * per_im);
    let nre = ((region.re_max - region.re_min) / dre).ceil().max(1.0) as usize;
    let nim = ((region.im_max - region.im_min) / dim).ceil().max(1.0) as usize;
    let mut seeds = Vec::with_capacity(nre * nim);
    for j in 0..nim {
        let im = region.im_max - (j as f64 + 0.5) * (region.im_max - region.im_min) / nim as f64;
        for i in 0..nre {
            let re = region.re_min + (i as f64 + 0.5) * (region.re_max - region.re_min) / nre as f64;
            seeds.push(Complex64::new(re, im));
        }
    }
    seeds
}

fn refine_seeds(profile: &PotentialProfile, seeds: &[Complex64], region: &Region, opts: &SearchOptions) -> Vec<Pole> {
    let slack = 1e-9;
    seeds
        .par_iter()
        .filter_map(|&s| refine_pole(profile, s, &opts.newton).ok())
        .filter(|p| region.contains(p.k, slack))
        .collect()
}

/// Finds the poles inside `region` by grid-seeded Newton refinement and checks
/// the count against the argument principle on the region boundary.
pub fn find_poles(profile: &PotentialProfile, region: Region, opts: &SearchOptions) -> Result<PoleSet> {
    region.validate()?;
    let l = profile.length();
    let seeds = seed_grid(&region, l, opts.seeds_per_spacing as f64, opts.rows_per_spacing);
    let mut poles = merge(refine_seeds(profile, &seeds, &region, opts), opts.merge_radius);
    let mut warnings = Vec::new();
    let mut completeness = None;

    if opts.check_completeness {
        let contour = Contour::for_region(&region, l);
        let zero_at_origin = contour.encloses_origin() && has_zero_at_origin(profile);
        let check = |poles: &[Pole]| -> Result<Completeness> {
            let winding = contour.winding(profile)?;
            Ok(Completeness {
                winding,
                found: contour.expected_count(poles, zero_at_origin),
            })
        };
        let mut c = check(&poles)?;
        let mut round = 0;
        while !c.is_complete() && round < opts.repair_rounds {
            round += 1;
            let extra = repair(profile, &region, &poles, opts, round)?;
            let mut all = poles.clone();
            all.extend(extra);
            poles = merge(all, opts.merge_radius);
            c = check(&poles)?;
        }
        if !c.is_complete() {
            let msg = format!(
                "pole search incomplete: argument principle counts {} zeros, {} accounted for",
                c.winding, c.found
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        completeness = Some(c);
    }

    let residue_symmetry_error = residue_symmetry(profile, &poles, &opts.newton);
    Ok(PoleSet {
        poles,
        length: l,
        region,
        requested: None,
        completeness,
        residue_symmetry_error,
        zero_energy_value: (!has_zero_at_origin(profile))
            .then(|| 1.0 / pole_function(profile, Complex64::new(0.0, 0.0)).get()),
        warnings,
    })
}

/// [`find_poles`] over [`Region::for_count`].
pub fn find_n_poles(profile: &PotentialProfile, n: usize, opts: &SearchOptions) -> Result<PoleSet> {
    let mut set = find_poles(profile, Region::for_count(profile, n), opts)?;
    set.requested = Some(n);
    let available = set.poles.len();
    if available < n {
        set.warnings
            .push(format!("requested {n} poles, found {available} in the default region"));
    }
    Ok(set)
}

/// Re-seeds strips of width π/L whose own winding count exceeds the poles found there.
fn repair(
    profile: &PotentialProfile,
    region: &Region,
    poles: &[Pole],
    opts: &SearchOptions,
    round: usize,
) -> Result<Vec<Pole>> {
    let l = profile.length();
    let width = PI / l;
    let nstrips = ((region.re_max - region.re_min) / width).ceil().max(1.0) as usize;
    let density = 2.0f64.powi(round as i32 + 1);
    let mut extra = Vec::new();
    for s in 0..nstrips {
        let sub = Region {
            re_min: region.re_min + s as f64 * width,
            re_max: (region.re_min + (s + 1) as f64 * width).min(region.re_max),
            ..*region
        };
        let contour = Contour::for_region(&sub, l);
        let zero = contour.encloses_origin() && has_zero_at_origin(profile);
        let winding = contour.winding(profile)?;
        let found = contour.expected_count(poles, zero);
        if winding > found {
            let seeds = seed_grid(
                &sub,
                l,
                opts.seeds_per_spacing as f64 * density,
                opts.rows_per_spacing * density * 2.0,
            );
            extra.extend(refine_seeds(profile, &seeds, &sub, opts));
        }
    }
    Ok(extra)
}

/// Measures the conjugation relation of residues at mirrored poles directly.
fn residue_symmetry(profile: &PotentialProfile, poles: &[Pole], opts: &NewtonOptions) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for p in poles.iter().filter(|p| p.kind == PoleKind::Resonant).take(3) {
        let Ok((km, _)) = newton(profile, -p.k.conj(), opts, false) else {
            continue;
        };
        let rm = residue(profile, km);
        let err = (rm + p.residue.conj()).norm() / p.residue.norm();
        worst = Some(worst.map_or(err, |w: f64| w.max(err)));
    }
    worst
}

fn has_zero_at_origin(profile: &PotentialProfile) -> bool {
    use crate::scatter::Propagator;
    let p = Propagator::new(profile, Complex64::new(0.0, 0.0));
    let [[a, _], [c, d]] = p.m;
    c.norm() <= 1e-10 * (a + d).norm() / profile.length()
}

/// Rectangular contour for the argument principle. The left edge is pushed
/// slightly to negative Re k when the region starts on the imaginary axis.
struct Contour {
    re_lo: f64,
    re_hi: f64,
    im_lo: f64,
    im_hi: f64,
}

impl Contour {
    fn for_region(region: &Region, l: f64) -> Self {
        let shift = if region.re_min == 0.0 { 0.05 * PI / l } else { 0.0 };
        Self {
            re_lo: region.re_min - shift,
            re_hi: region.re_max,
            im_lo: region.im_min,
            im_hi: region.im_max,
        }
    }

    fn encloses_origin(&self) -> bool {
        self.re_lo < 0.0 && self.re_hi > 0.0 && self.im_lo < 0.0 && self.im_hi > 0.0
    }

    fn inside(&self, k: Complex64) -> bool {
        k.re > self.re_lo && k.re < self.re_hi && k.im > self.im_lo && k.im < self.im_hi
    }

    fn expected_count(&self, poles: &[Pole], zero_at_origin: bool) -> i64 {
        let mut n = i64::from(zero_at_origin);
        for p in poles {
            if self.inside(p.k) {
                n += 1;
            }
            if p.kind == PoleKind::Resonant && self.inside(-p.k.conj()) {
                n += 1;
            }
        }
        n
    }

    /// Winding number of D around the contour, counter-clockwise.
    fn winding(&self, profile: &PotentialProfile) -> Result<i64> {
        let l = profile.length();
        let corners = [
            Complex64::new(self.re_lo, self.im_lo),
            Complex64::new(self.re_hi, self.im_lo),
            Complex64::new(self.re_hi, self.im_hi),
            Complex64::new(self.re_lo, self.im_hi),
        ];
        let spacing = PI / (8.0 * l);
        let mut total = 0.0;
        for e in 0..4 {
            let (a, b) = (corners[e], corners[(e + 1) % 4]);
            let n = ((b - a).norm() / spacing).ceil().max(4.0) as usize;
            let pts: Vec<Complex64> = (0..=n).map(|i| a + (b - a) * (i as f64 / n as f64)).collect();
            let vals: Vec<Scaled> = pts.par_iter().map(|&z| eval(profile, z)).collect();
            for i in 0..n {
                total += arg_change(profile, pts[i], pts[i + 1], &vals[i], &vals[i + 1], 0)?;
            }
        }
        let w = total / (2.0 * PI);
        let rounded = w.round();
        if (w - rounded).abs() > 0.1 {
            return Err(Error::NoConvergence(format!(
                "argument principle gave non-integer winding {w:.4}"
            )));
        }
        Ok(rounded as i64)
    }
}

fn arg_change(
    profile: &PotentialProfile,
    a: Complex64,
    b: Complex64,
    fa: &Scaled,
    fb: &Scaled,
    depth: usize,
) -> Result<f64> {
    let step = fb.ratio(fa).arg();
    if step.is_nan() {
        return Err(Error::NoConvergence(format!(
            "D vanishes or overflows on the contour near {a}"
        )));
    }
    if step.abs() < PI / 4.0 {
        return Ok(step);
    }
    if depth > 40 {
        return Err(Error::NoConvergence(format!(
            "zero of D on or next to the contour near {a}"
        )));
    }
    let m = 0.5 * (a + b);
    let fm = eval(profile, m);
    Ok(arg_change(profile, a, m, fa, &fm, depth + 1)? + arg_change(profile, m, b, &fm, fb, depth + 1)?)
}

/// Imaginary-axis pole closest to threshold, located by a sign scan of the
/// real function `D(iγ)` over `1e-12 ≤ |γ| ≤ 10` nm⁻¹, bisection, then Newton.
/// Returns `Ok(None)` when no such pole exists.
pub fn threshold_pole(profile: &PotentialProfile) -> Result<Option<Pole>> {
    threshold_pole_within(profile, 1e-12, 10.0)
}

pub fn threshold_pole_within(profile: &PotentialProfile, gamma_lo: f64, gamma_hi: f64) -> Result<Option<Pole>> {
    const PER_DECADE: f64 = 40.0;
    let n = (((gamma_hi / gamma_lo).log10() * PER_DECADE).ceil() as usize).max(2);
    let g = |gamma: f64| eval(profile, Complex64::new(0.0, gamma)).value.re;
    let mags: Vec<f64> = (0..=n)
        .map(|i| gamma_lo * (gamma_hi / gamma_lo).powf(i as f64 / n as f64))
        .collect();

    let mut best: Option<f64> = None;
    for sign in [1.0, -1.0] {
        let vals: Vec<f64> = mags.par_iter().map(|&m| g(sign * m)).collect();
        for i in 0..n {
            if vals[i] == 0.0 {
                best = Some(pick(best, sign * mags[i]));
                break;
            }
            if vals[i].signum() != vals[i + 1].signum() {
                let root = bisect(&g, sign * mags[i], sign * mags[i + 1], vals[i]);
                best = Some(pick(best, root));
                break;
            }
        }
    }
    let Some(gamma) = best else {
        return Ok(None);
    };
    let opts = NewtonOptions::default();
    let (k, it) = newton(profile, Complex64::new(0.0, gamma), &opts, true)?;
    // Newton must not jump to a different root than the bracketed one
    let k = if (k.im - gamma).abs() <= 1e-6 * gamma.abs() { k } else { Complex64::new(0.0, gamma) };
    let kind = if k.im > 0.0 { PoleKind::Bound } else { PoleKind::Antibound };
    Ok(Some(make_pole(profile, k, kind, it)))
}

/// Every bound state (pole on the positive imaginary axis), ordered by γ.
///
/// `γ` is bracketed by sign changes of the real function `D(iγ)` on a grid
/// that is logarithmic near threshold and spaced `π/(8L)` further out, up to
/// `√(max(-V)/(ħ²/2m))`.
pub fn bound_states(profile: &PotentialProfile) -> Result<Vec<Pole>> {
    let coeff = profile.params().kinetic_coeff();
    let deepest = profile.slices().iter().fold(0.0f64, |m, s| m.max(-s.height));
    if deepest <= 0.0 {
        return Ok(Vec::new());
    }
    let gamma_max = (deepest / coeff).sqrt() * (1.0 + 1e-9);
    let l = profile.length();
    let step = PI / (8.0 * l);
    let lo = 1e-12f64;
    let mut grid: Vec<f64> = Vec::new();
    let decades = (gamma_max / lo).log10();
    let nlog = ((decades * 40.0).ceil() as usize).max(2);
    grid.extend((0..=nlog).map(|i| lo * (gamma_max / lo).powf(i as f64 / nlog as f64)));
    let nlin = (gamma_max / step).ceil() as usize;
    grid.extend((1..=nlin).map(|i| (i as f64 * step).min(gamma_max)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let g = |gamma: f64| eval(profile, Complex64::new(0.0, gamma)).value.re;
    let vals: Vec<f64> = grid.par_iter().map(|&x| g(x)).collect();
    let opts = NewtonOptions::default();
    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        if vals[i] != 0.0 && vals[i].signum() == vals[i + 1].signum() {
            continue;
        }
        let root = if vals[i] == 0.0 {
            grid[i]
        } else {
            bisect(&g, grid[i], grid[i + 1], vals[i])
        };
        let (k, it) = newton(profile, Complex64::new(0.0, root), &opts, true)?;
        let k = if (k.im - root).abs() <= 1e-6 * root { k } else { Complex64::new(0.0, root) };
        out.push(make_pole(profile, k, PoleKind::Bound, it));
    }
    Ok(out)
}

fn pick(best: Option<f64>, cand: f64) -> f64 {
    match best {
        Some(b) if b.abs() <= cand.abs() => b,
        _ => cand,
    }
}

fn bisect<F: Fn(f64) -> f64>(g: &F, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Thin-barrier estimate of the antibound pole, `γ_a ≈ -m V₀ L / ħ² = -V₀ L / (2 ħ²/2m)`.
///
/// Valid for small `V₀ L`. For a Pöschl–Teller barrier pass `L = 2d`.
pub fn thin_barrier_estimate(v0: f64, length: f64, params: &PhysicalParams) -> f64 {
    -v0 * length / (2.0 * params.kinetic_coeff())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{build_rect, Preset};
    use crate::scatter::amplitudes_at;
    use approx::assert_relative_eq;

    fn gaas() -> PhysicalParams {
        PhysicalParams::gaas()
    }

    /// Bound state of a square well (depth u, width w) by bisection on
    /// `(q² - γ²) sin(qw) - 2γq cos(qw) = 0`, `q² = u/c - γ²`.
    fn square_well_bound_state(u: f64, w: f64, c: f64) -> f64 {
        let f = |g: f64| {
            let q = (u / c - g * g).sqrt();
            (q * q - g * g) * (q * w).sin() - 2.0 * g * q * (q * w).cos()
        };
        let (mut a, mut b) = (1e-9, (u / c).sqrt() * (1.0 - 1e-12));
        assert!(f(a).signum() != f(b).signum());
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m).signum() == f(a).signum() {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn square_well_bound_state_matches_transcendental_root() {
        let (u, w) = (0.12, 2.0);
        let p = build_rect(&[(w, -u)], gaas()).unwrap();
        let oracle = square_well_bound_state(u, w, gaas().kinetic_coeff());
        let pole = refine_pole(&p, Complex64::new(0.0, 0.5 * oracle), &NewtonOptions::default()).unwrap();
        assert_eq!(pole.kind, PoleKind::Bound);
        assert_relative_eq!(pole.k.im, oracle, max_relative = 1e-10);
        let thr = threshold_pole(&p).unwrap().unwrap();
        assert_relative_eq!(thr.k.im, oracle, max_relative = 1e-10);
    }

    #[test]
    fn refined_pole_is_a_pole() {
        let p = Preset::Fig1Wide.build(gaas()).unwrap();
        let pole = refine_pole(&p, Complex64::new(0.2, -0.001), &NewtonOptions::default()).unwrap();
        assert_eq!(pole.kind, PoleKind::Resonant);
        let (t, _) = amplitudes_at(&p, pole.k);
        assert!(t.norm() > 1e8, "|t| = {}", t.norm());
    }

    #[test]
    fn refinement_is_idempotent() {
        let p = Preset::TwoBwb.build(gaas()).unwrap();
        let opts = NewtonOptions::default();
        let a = refine_pole(&p, Complex64::new(1.0, -1.5), &opts).unwrap();
        let b = refine_pole(&p, a.k + Complex64::new(1e-4, -1e-4), &opts).unwrap();
        assert!((a.k - b.k).norm() < 1e-11);
    }

    #[test]
    fn third_quadrant_root_is_mirrored() {
        let p = Preset::Fig1Wide.build(gaas()).unwrap();
        let opts = NewtonOptions::default();
        let a = refine_pole(&p, Complex64::new(0.2, -0.001), &opts).unwrap();
        let b = refine_pole(&p, Complex64::new(-0.2, -0.001), &opts).unwrap();
        assert!((a.k - b.k).norm() < 1e-11);
        assert!((a.residue - b.residue).norm() < 1e-8 * a.residue.norm());
    }

    #[test]
    fn residue_conjugation_relation() {
        // r at -k* is -r* at k, measured by refining both poles independently
        let p = Preset::TwoBwb.build(gaas()).unwrap();
        let opts = NewtonOptions::default();
        let pole = refine_pole(&p, Complex64::new(1.0, -1.5), &opts).unwrap();
        let (km, _) = newton(&p, -pole.k.conj(), &opts, false).unwrap();
        let rm = residue(&p, km);
        assert!((rm + pole.residue.conj()).norm() < 1e-9 * pole.residue.norm());
    }

    #[test]
    fn cauchy_derivative_matches_free_case() {
        // D(k) = 2ik e^{-ikL} for V = 0
        let p = Preset::Free.build(gaas()).unwrap();
        let k = Complex64::new(0.7, -0.3);
        let i = Complex64::new(0.0, 1.0);
        let exact = 2.0 * i * (-i * k).exp() * (1.0 - i * k);
        assert!((pole_function_derivative(&p, k) - exact).norm() < 1e-12 * exact.norm());
    }

    #[test]
    fn free_profile_has_no_poles() {
        let p = Preset::Free.build(gaas()).unwrap();
        let set = find_n_poles(&p, 8, &SearchOptions::default()).unwrap();
        assert!(set.poles.is_empty());
        let c = set.completeness.unwrap();
        assert!(c.is_complete(), "{c:?}");
        assert!(threshold_pole(&p).unwrap().is_none());
    }

    #[test]
    fn fig1_wide_has_two_narrow_resonances() {
        let p = Preset::Fig1Wide.build(gaas()).unwrap();
        let l = p.length();
        let set = find_n_poles(&p, 10, &SearchOptions::default()).unwrap();
        assert!(set.completeness.unwrap().is_complete(), "{:?}", set.completeness);
        let narrow: Vec<_> = set
            .resonant()
            .filter(|p| -p.k.im * l < 0.5 && p.energy.re < 0.2)
            .collect();
        assert_eq!(narrow.len(), 2, "{narrow:?}");
    }

    #[test]
    fn two_bwb_poles_far_from_real_axis() {
        let p = Preset::TwoBwb.build(gaas()).unwrap();
        let l = p.length();
        let set = find_n_poles(&p, 12, &SearchOptions::default()).unwrap();
        assert!(set.completeness.unwrap().is_complete(), "{:?}", set.completeness);
        assert!(set.resonant().count() >= 10);
        for pole in set.resonant() {
            assert!(-pole.k.im > PI / l, "{:?}", pole.k);
        }
    }

    #[test]
    fn stored_poles_zero_inverse_transmission() {
        let p = Preset::TwoBwb.build(gaas()).unwrap();
        let set = find_n_poles(&p, 12, &SearchOptions::default()).unwrap();
        for pole in &set.poles {
            let d = pole_function(&p, pole.k);
            let inv_t = inverse_t_norm(&p, pole.k, &d);
            assert!(inv_t < 1e-10, "{:?}: {inv_t}", pole.k);
        }
    }

    #[test]
    fn thin_barrier_checkpoint() {
        let g = thin_barrier_estimate(0.12, 0.012, &gaas());
        assert_relative_eq!(g, -1.266e-3, max_relative = 1e-3);
        let eq = gaas().kinetic_coeff() * g * g;
        assert!(eq > 0.85e-6 && eq < 1e-6, "{eq}");
        assert_eq!(thin_barrier_estimate(0.0, 0.4, &gaas()), 0.0);
    }

    #[test]
    fn mirrored_partner() {
        let p = Pole {
            k: Complex64::new(1.0, -0.5),
            kind: PoleKind::Resonant,
            residue: Complex64::new(0.2, 0.3),
            energy: Complex64::new(0.1, -0.1),
            gamma: None,
            iterations: 0,
        };
        let m = p.mirrored();
        assert_eq!(m.k, Complex64::new(-1.0, -0.5));
        assert_eq!(m.residue, Complex64::new(-0.2, 0.3));
    }

    #[test]
    fn bound_states_of_square_well() {
        // depth and width chosen to hold three bound states
        let (u, w) = (0.3, 6.0);
        let p = build_rect(&[(w, -u)], gaas()).unwrap();
        let c = gaas().kinetic_coeff();
        let states = bound_states(&p).unwrap();
        // count from the well strength: N = ceil(w √(u/c) / π)
        let expected = (w * (u / c).sqrt() / PI).ceil() as usize;
        assert_eq!(states.len(), expected);
        // ground state has q w < π, so it lies between √(u/c - (π/w)²) and √(u/c)
        let f = |g: f64| {
            let q = (u / c - g * g).sqrt();
            (q * q - g * g) * (q * w).sin() - 2.0 * g * q * (q * w).cos()
        };
        let (mut a, mut b) = ((u / c - (PI / w).powi(2)).sqrt(), (u / c).sqrt() * (1.0 - 1e-12));
        assert!(f(a) > 0.0 && f(b) < 0.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let ground = states.last().unwrap();
        assert_relative_eq!(ground.k.im, 0.5 * (a + b), max_relative = 1e-10);
        for s in &states {
            assert!(s.residue.re.abs() < 1e-9 * s.residue.norm());
        }
        assert!(bound_states(&Preset::TwoBsb.build(gaas()).unwrap()).unwrap().is_empty());
    }
}
