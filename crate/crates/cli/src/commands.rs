//! Table assembly for each subcommand. Output rows follow grid order, so
//! results do not depend on the thread count.

use tunnelscope::config::RunConfig;
use tunnelscope::expansion::{transmission_expansion, transmission_single_pole, OnePoleModel};
use tunnelscope::packet::{evolve_transmitted_with, invisibility_score, time_grid_t0, GaussianSpec, PacketOptions};
use tunnelscope::poles::{find_n_poles, threshold_pole, Pole, SearchOptions};
use tunnelscope::potential::{Family, PotentialProfile, Preset, RECT_V0};
use tunnelscope::scatter::{linear_grid, log_grid, transmission_curve};
use tunnelscope::sweep::{invisibility_window, transmission_contour, SweepAxis, SweepSpec, WindowReport};
use tunnelscope::table::{Cell, Table};
use tunnelscope::times::dwell_curve;
use tunnelscope::units::{PhysicalParams, GAAS_MASS_RATIO};
use tunnelscope::{Error, Result};

fn system(cfg: &RunConfig) -> Result<PotentialProfile> {
    cfg.system()?.ok_or_else(|| {
        Error::Validation("no system given: use --preset or set \"preset\"/\"potential\" in the config".into())
    })
}

/// Energy scale for default grids: the largest |V|, or 1 eV for a free profile.
fn energy_scale(p: &PotentialProfile) -> f64 {
    let v = p.max_abs_height();
    if v > 0.0 {
        v
    } else {
        1.0
    }
}

fn grid(lo: f64, hi: f64, n: usize, log: bool) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Validation(format!("energy range must satisfy 0 < emin < emax, got [{lo}, {hi}]")));
    }
    if n < 2 {
        return Err(Error::Validation(format!("need at least 2 grid points, got {n}")));
    }
    Ok(if log { log_grid(lo, hi, n) } else { linear_grid(lo, hi, n) })
}

fn energy_grid(cfg: &RunConfig, p: &PotentialProfile, defaults: (f64, f64, usize, bool)) -> Result<Vec<f64>> {
    let e = &cfg.energy;
    grid(
        e.emin_ev.unwrap_or(defaults.0),
        e.emax_ev.unwrap_or(defaults.1 * energy_scale(p)),
        e.points.unwrap_or(defaults.2),
        e.log.unwrap_or(defaults.3),
    )
}

fn describe(t: &mut Table, p: &PotentialProfile) {
    t.meta("system", p.label())
        .meta("L_nm", p.length())
        .meta("mass_ratio", p.params().mass_ratio);
}

fn search_options(cfg: &RunConfig) -> SearchOptions {
    let mut o = SearchOptions::default();
    let c = &cfg.poles;
    if let Some(v) = c.max_iter {
        o.newton.max_iter = v;
    }
    if let Some(v) = c.step_tol {
        o.newton.step_tol = v;
    }
    if let Some(v) = c.f_tol {
        o.newton.f_tol = v;
    }
    if let Some(v) = c.merge_radius {
        o.merge_radius = v;
    }
    o
}

fn threshold_model(p: &PotentialProfile) -> Result<(Pole, OnePoleModel)> {
    let pole = threshold_pole(p)?
        .ok_or_else(|| Error::Domain("the system has no imaginary-axis pole near threshold".into()))?;
    Ok((pole, OnePoleModel::from_pole(&pole, p.params())?))
}

pub fn transmit(cfg: &RunConfig) -> Result<Table> {
    let p = system(cfg)?;
    let energies = energy_grid(cfg, &p, (1e-8, 2.0, 400, true))?;
    let curve = transmission_curve(&p, &energies)?;
    let terms = cfg.poles.expansion_terms.clone().unwrap_or_default();
    let single = cfg.poles.single_pole.unwrap_or(false);

    let mut columns = vec!["E_eV".to_string(), "T".into(), "theta_rad".into()];
    let mut extra: Vec<Vec<f64>> = Vec::new();
    let mut table_meta: Vec<(&str, serde_json::Value)> = Vec::new();
    // the cheap one-pole model fails fast before any pole search
    let model = if single { Some(threshold_model(&p)?.1) } else { None };
    if let Some(&n_max) = terms.iter().max() {
        let set = find_n_poles(&p, n_max, &search_options(cfg))?;
        for &n in &terms {
            columns.push(format!("T_expansion_N{n}"));
            extra.push(transmission_expansion(&set, p.params(), &energies, n)?);
        }
        table_meta.push(("completeness", serde_json::to_value(set.completeness).map_err(Error::from)?));
        table_meta.push(("pole_warnings", serde_json::to_value(&set.warnings).map_err(Error::from)?));
    }
    if let Some(model) = model {
        columns.push("T_single_pole".into());
        extra.push(
            energies
                .iter()
                .map(|&e| transmission_single_pole(e, model.e_q))
                .collect::<Result<_>>()?,
        );
        table_meta.push(("E_q_eV", model.e_q.into()));
        table_meta.push(("gamma_q_nm", model.gamma_q.into()));
    }

    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut t = Table::new("transmission", &cols);
    describe(&mut t, &p);
    for (k, v) in table_meta {
        t.meta(k, v);
    }
    for (i, c) in curve.iter().enumerate() {
        let mut row: Vec<Cell> = vec![c.energy.into(), c.transmission.into(), c.theta.into()];
        row.extend(extra.iter().map(|col| Cell::from(col[i])));
        t.push(row)?;
    }
    Ok(t)
}

const POLE_COLUMNS: [&str; 9] = [
    "re_k_nm",
    "im_k_nm",
    "kind",
    "re_residue",
    "im_residue",
    "E_eV",
    "im_E_eV",
    "re_beta",
    "im_beta",
];

fn pole_row(p: &Pole, length: f64) -> Vec<Cell> {
    vec![
        p.k.re.into(),
        p.k.im.into(),
        p.kind.as_str().into(),
        p.residue.re.into(),
        p.residue.im.into(),
        p.energy.re.into(),
        p.energy.im.into(),
        (p.k.re * length).into(),
        (p.k.im * length).into(),
    ]
}

pub fn poles(cfg: &RunConfig) -> Result<Table> {
    let p = system(cfg)?;
    let mut t = Table::new("poles", &POLE_COLUMNS);
    describe(&mut t, &p);
    if cfg.poles.threshold_only.unwrap_or(false) {
        let (pole, model) = threshold_model(&p)?;
        t.meta("gamma_q_nm", model.gamma_q).meta("E_q_eV", model.e_q);
        t.push(pole_row(&pole, p.length()))?;
        return Ok(t);
    }
    let n = cfg.poles.count.unwrap_or(20);
    if n == 0 {
        return Err(Error::Validation("pole count must be >= 1".into()));
    }
    let set = find_n_poles(&p, n, &search_options(cfg))?;
    t.meta("requested", n)
        .meta("completeness", set.completeness)
        .meta("residue_symmetry_error", set.residue_symmetry_error)
        .meta("warnings", &set.warnings);
    for pole in set.with_partners() {
        t.push(pole_row(&pole, p.length()))?;
    }
    Ok(t)
}

pub fn dwell(cfg: &RunConfig) -> Result<Table> {
    let p = system(cfg)?;
    let energies = energy_grid(cfg, &p, (0.01 * energy_scale(&p), 2.0, 200, false))?;
    let mut t = Table::new(
        "dwell",
        &[
            "E_eV",
            "tau_d_fs",
            "tau_0_fs",
            "ratio_integral",
            "ratio",
            "T",
            "transmission_time",
            "reflection_time",
            "interference",
            "identity_error",
        ],
    );
    describe(&mut t, &p);
    for (a, b) in dwell_curve(&p, &energies)? {
        let c = b.components.expect("decomposed form carries components");
        t.push(vec![
            a.energy.into(),
            a.tau_d.into(),
            a.tau_0.into(),
            a.ratio.into(),
            b.ratio.into(),
            c.transmission.into(),
            c.transmission_time.into(),
            c.reflection_time.into(),
            c.interference.into(),
            (b.ratio - a.ratio).abs().into(),
        ])?;
    }
    Ok(t)
}

pub fn packet(cfg: &RunConfig) -> Result<Table> {
    let p = system(cfg)?;
    let c = &cfg.packet;
    let g = GaussianSpec {
        sigma: c.sigma_nm.unwrap_or(0.5),
        x0: c.x0_nm.unwrap_or(-5.0),
        e0: c.e0_ev.unwrap_or(0.06),
    };
    g.validate()?;
    let x = c.x_nm.unwrap_or(100.0);
    if !(x >= p.length()) {
        return Err(Error::Validation(format!(
            "observation point x = {x} nm must lie at or beyond the structure (L = {} nm)",
            p.length()
        )));
    }
    let (s_lo, s_hi, n) = (
        c.t_min_over_t0.unwrap_or(0.0),
        c.t_max_over_t0.unwrap_or(3.0),
        c.points.unwrap_or(301),
    );
    if !(s_hi > s_lo) || n < 2 {
        return Err(Error::Validation(format!(
            "time window [{s_lo}, {s_hi}] t0 with {n} points is empty"
        )));
    }
    let mut opts = PacketOptions::default();
    opts.truncate_negative_k = c.truncate_negative_k.unwrap_or(false);
    opts.include_bound_states = c.include_bound_states.unwrap_or(true);
    if let Some(r) = c.rel_tol {
        opts.rel_tol = r;
    }
    let times = time_grid_t0(&g, p.params(), x, s_lo, s_hi, n)?;
    let trace = evolve_transmitted_with(&p, &g, x, &times, opts)?;
    let score = invisibility_score(&trace)?;

    let mut t = Table::new("packet", &["t_over_t0", "t_fs", "xi", "rho_free", "abs_psi_sq"]);
    describe(&mut t, &p);
    t.meta("sigma_nm", g.sigma)
        .meta("x0_nm", g.x0)
        .meta("e0_eV", g.e0)
        .meta("x_nm", x)
        .meta("t0_fs", trace.t0)
        .meta("invisibility_score", score)
        .meta("negative_k_fraction", trace.negative_k_fraction)
        .meta("truncated", trace.truncated)
        .meta("bound_states", trace.bound_states)
        .meta("panels", trace.panels)
        .meta("warnings", &trace.warnings);
    let s = trace.t_over_t0();
    let a = trace.abs_psi_sq();
    for i in 0..times.len() {
        t.push(vec![
            s[i].into(),
            times[i].into(),
            trace.xi[i].into(),
            trace.rho_free[i].into(),
            a[i].into(),
        ])?;
    }
    Ok(t)
}

pub fn sweep(cfg: &RunConfig) -> Result<(Table, WindowReport)> {
    let c = &cfg.sweep;
    let family = Family::from_name(c.family.as_deref().unwrap_or("2bwb"))?;
    let axis = SweepAxis::from_name(c.axis.as_deref().unwrap_or("v"))?;
    let base_v = c.base_v_ev.unwrap_or(RECT_V0);
    let base_mass = c.base_mass_ratio.or(cfg.mass_ratio).unwrap_or(GAAS_MASS_RATIO);
    PhysicalParams::new(base_mass)?;
    let (lo, hi, log) = match axis {
        SweepAxis::V => (-2.0 * RECT_V0, 2.0 * RECT_V0, false),
        SweepAxis::MassRatio => (0.01, 10.0, true),
        SweepAxis::WidthScale => (0.25, 4.0, false),
    };
    let (lo, hi) = (c.axis_min.unwrap_or(lo), c.axis_max.unwrap_or(hi));
    let n = c.axis_points.unwrap_or(200);
    let axis_log = c.axis_log.unwrap_or(log);
    if !(hi > lo) || n < 2 || (axis_log && !(lo > 0.0)) {
        return Err(Error::Validation(format!(
            "axis range [{lo}, {hi}] with {n} points{} is invalid",
            if axis_log { " (log)" } else { "" }
        )));
    }
    let axis_grid = if axis_log { log_grid(lo, hi, n) } else { linear_grid(lo, hi, n) };
    let scale = base_v.abs().max(f64::MIN_POSITIVE);
    let e_grid = grid(
        c.emin_ev.unwrap_or(1e-8),
        c.emax_ev.unwrap_or(2.0 * scale),
        c.e_points.unwrap_or(200),
        true,
    )?;
    let mut spec = SweepSpec::new(family, axis, axis_grid, e_grid);
    spec.base_v = base_v;
    spec.base_mass_ratio = base_mass;
    spec.t_floor = c.t_floor.unwrap_or(0.5);
    let band = (c.band_lo_ev.unwrap_or(0.05 * scale), c.band_hi_ev.unwrap_or(scale));
    let t_min = c.t_min.unwrap_or(0.99);

    let contour = transmission_contour(&spec)?;
    let report = invisibility_window(&contour, band, t_min)?;
    let mut t = Table::new("contour", &[axis.column(), "E_eV", "T", "above_floor"]);
    t.meta("family", family.name())
        .meta("base_V_eV", base_v)
        .meta("base_mass_ratio", base_mass)
        .meta("t_floor", spec.t_floor)
        .meta("band_eV", band)
        .meta("t_min", t_min)
        .meta("windows", &report.intervals);
    for (a, e, tr) in contour.rows() {
        t.push(vec![a.into(), e.into(), tr.into(), (tr >= spec.t_floor).into()])?;
    }
    Ok((t, report))
}

pub fn presets() -> Result<Table> {
    let mut t = Table::new("presets", &["name", "L_nm", "max_abs_V_eV", "slices", "description"]);
    for p in Preset::ALL {
        let prof = p.build(PhysicalParams::gaas())?;
        t.push(vec![
            p.name().into(),
            prof.length().into(),
            prof.max_abs_height().into(),
            prof.slices().len().into(),
            p.description().into(),
        ])?;
    }
    Ok(t)
}

/// Step outline of `V(x)`: each slice contributes its two end points, with
/// zero-potential leads of `margin · L` on either side.
pub fn profile(cfg: &RunConfig, margin: f64) -> Result<Table> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::Validation(format!("margin must be a non-negative fraction of L, got {margin}")));
    }
    let p = system(cfg)?;
    let lead = margin * p.length();
    let mut t = Table::new("profile", &["x_nm", "V_eV"]);
    describe(&mut t, &p);
    t.meta("slices", p.slices().len());
    if lead > 0.0 {
        t.push(vec![(-lead).into(), 0.0.into()])?;
    }
    t.push(vec![0.0.into(), 0.0.into()])?;
    for (s, w) in p.slices().iter().zip(p.edges().windows(2)) {
        t.push(vec![w[0].into(), s.height.into()])?;
        t.push(vec![w[1].into(), s.height.into()])?;
    }
    t.push(vec![p.length().into(), 0.0.into()])?;
    if lead > 0.0 {
        t.push(vec![(p.length() + lead).into(), 0.0.into()])?;
    }
    Ok(t)
}
