//! Randomized invariants: unitarity, unimodular transfer matrices, pole
//! symmetry, Pöschl–Teller limits and the thin-barrier estimate.

use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;

use tunnelscope::expansion::{pt_eta, pt_reflectionless_strength, t_pt_analytic};
use tunnelscope::poles::{find_n_poles, residue, thin_barrier_estimate, threshold_pole, PoleSet, SearchOptions};
use tunnelscope::potential::{build_pt_composite, build_rect, PotentialProfile, Preset, PtTerm};
use tunnelscope::scatter::{amplitudes, pole_function, transfer_matrix};
use tunnelscope::PhysicalParams;

fn gaas() -> PhysicalParams {
    PhysicalParams::gaas()
}

fn presets() -> &'static Vec<PotentialProfile> {
    static P: OnceLock<Vec<PotentialProfile>> = OnceLock::new();
    P.get_or_init(|| Preset::ALL.iter().map(|p| p.build(gaas()).unwrap()).collect())
}

const POLE_PRESETS: [Preset; 5] = [Preset::Bwb, Preset::TwoBwb, Preset::TwoBsb, Preset::FiveBwb, Preset::Fig1Thin];

fn pole_sets() -> &'static Vec<(PotentialProfile, PoleSet)> {
    static S: OnceLock<Vec<(PotentialProfile, PoleSet)>> = OnceLock::new();
    S.get_or_init(|| {
        POLE_PRESETS
            .iter()
            .map(|p| {
                let prof = p.build(gaas()).unwrap();
                let set = find_n_poles(&prof, 8, &SearchOptions::default()).unwrap();
                (prof, set)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn unitarity(idx in 0..Preset::ALL.len(), log_e in -10.0f64..1.0) {
        let p = &presets()[idx];
        let s = amplitudes(p, 10f64.powf(log_e)).unwrap();
        prop_assert!((s.transmission + s.reflection - 1.0).abs() < 1e-10,
            "{} E={}: T+R-1 = {:e}", p.label(), s.energy, s.transmission + s.reflection - 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    /// Random layered profiles and random complex k, `|Re k| ≤ 5 nm⁻¹`, `|Im k| L ≤ 3`.
    #[test]
    fn transfer_matrix_unimodular(
        layers in prop::collection::vec((0.05f64..1.5, -0.3f64..0.3), 1..7),
        re in -5.0f64..5.0,
        im_l in -3.0f64..3.0,
    ) {
        let p = build_rect(&layers, gaas()).unwrap();
        let k = Complex64::new(re, im_l / p.length());
        prop_assume!(k.norm() > 1e-3);
        let det = transfer_matrix(&p, k).unwrap().det();
        prop_assert!((det - 1.0).norm() < 1e-10, "{} k={}: det-1 = {:e}", p.label(), k, (det - 1.0).norm());
    }

    #[test]
    fn preset_transfer_matrix_unimodular(idx in 0..Preset::ALL.len(), re in -5.0f64..5.0, im_l in -3.0f64..3.0) {
        let p = &presets()[idx];
        let k = Complex64::new(re, im_l / p.length());
        prop_assume!(k.norm() > 1e-3);
        let m = transfer_matrix(p, k).unwrap();
        let err = (m.det() - 1.0).norm();
        // entries of size |m| carry a det rounding floor of ~eps |m|²
        let floor = 16.0 * f64::EPSILON * (m.m11 * m.m22).norm();
        if Preset::ALL[idx] == Preset::Fig1Wide {
            prop_assert!(err < 1e-10f64.max(floor), "{} k={k}: det-1 = {err:e}, floor {floor:e}", p.label());
        } else {
            prop_assert!(err < 1e-10, "{} k={k}: det-1 = {err:e}", p.label());
        }
    }

    /// Entries at `-k*` are the conjugates of those at `k`.
    #[test]
    fn transfer_matrix_conjugation(idx in 0..Preset::ALL.len(), re in 0.01f64..5.0, im_l in -3.0f64..3.0) {
        let p = &presets()[idx];
        let k = Complex64::new(re, im_l / p.length());
        let a = transfer_matrix(p, k).unwrap();
        let b = transfer_matrix(p, -k.conj()).unwrap();
        for (x, y) in [(a.m11, b.m11), (a.m12, b.m12), (a.m21, b.m21), (a.m22, b.m22)] {
            prop_assert!((x.conj() - y).norm() <= 1e-12 * x.norm().max(1.0), "{} k={k}: {x} vs {y}", p.label());
        }
    }

    #[test]
    fn pt_analytic_matches_sliced(strength in -0.3f64..0.3, d in 0.05f64..0.5, frac in 0.01f64..3.0) {
        prop_assume!(strength.abs() > 0.01);
        let v0 = strength.abs();
        let prof = build_pt_composite(&[PtTerm::new(0.0, strength, d)], 1e-8, 4000, gaas()).unwrap();
        let e = frac * v0;
        let exact = t_pt_analytic(strength, d, &gaas(), gaas().k_of_e(e).unwrap()).unwrap();
        let sliced = amplitudes(&prof, e).unwrap().transmission;
        prop_assert!((exact - sliced).abs() < 1e-4, "V={strength} d={d} E={e}: {exact} vs {sliced}");
    }

    #[test]
    fn reflectionless_well_is_transparent(d in 0.05f64..2.0, log_e in -8.0f64..1.0) {
        let u = pt_reflectionless_strength(1, d, &gaas());
        prop_assert!((1.0 - pt_eta(u, d, &gaas()) - 9.0).abs() < 1e-12);
        let k = gaas().k_of_e(10f64.powf(log_e)).unwrap();
        let t = t_pt_analytic(u, d, &gaas(), k).unwrap();
        prop_assert!((t - 1.0).abs() < 1e-10, "d={d} k={k}: 1-T = {:e}", 1.0 - t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// V₀ L between 2e-4 and 2e-3 eV·nm.
    #[test]
    fn thin_barrier_estimate_within_ten_percent(v0 in 0.02f64..1.0, vl in 2e-4f64..2e-3) {
        let l = vl / v0;
        let p = build_rect(&[(l, v0)], gaas()).unwrap();
        let exact = threshold_pole(&p).unwrap().expect("antibound pole").k.im;
        let est = thin_barrier_estimate(v0, l, &gaas());
        prop_assert!(exact < 0.0);
        prop_assert!(((est - exact) / exact).abs() < 0.1, "V0={v0} L={l}: {est} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// `-k*` is a zero of `D` with residue `-r*`.
    #[test]
    fn pole_symmetry(set_idx in 0..POLE_PRESETS.len(), pole_idx in 0usize..8) {
        let (prof, set) = &pole_sets()[set_idx];
        let res: Vec<_> = set.resonant().collect();
        let pole = res[pole_idx % res.len()];
        let km = -pole.k.conj();
        let r = residue(prof, km);
        // Newton step D/D' at the mirror point
        let step = (pole_function(prof, km).get() * r).norm();
        prop_assert!(step < 1e-10 * pole.k.norm(), "{}: step {step:e} at {km}", prof.label());
        prop_assert!((r + pole.residue.conj()).norm() < 1e-8 * pole.residue.norm());
        let m = pole.mirrored();
        prop_assert_eq!(m.k, km);
        prop_assert!((m.residue - r).norm() < 1e-8 * r.norm());
    }
}

#[test]
fn thin_barrier_checkpoint() {
    // V0 = 0.12 eV, L = 0.012 nm gives E_q of order 1e-6 eV
    let p = build_rect(&[(0.012, 0.12)], gaas()).unwrap();
    let exact = threshold_pole(&p).unwrap().unwrap().k.im;
    let est = thin_barrier_estimate(0.12, 0.012, &gaas());
    assert!(((est - exact) / exact).abs() < 0.1);
    let e_q = gaas().kinetic_coeff() * exact * exact;
    assert!(e_q > 0.5e-6 && e_q < 2e-6, "{e_q}");
}
