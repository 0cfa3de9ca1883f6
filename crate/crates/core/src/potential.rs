//! Piecewise-constant potential profiles of compact support `[0, L]`.
//!
//! Rectangular systems are stored exactly; continuous shapes such as
//! Pöschl–Teller composites are sliced at the midpoints of uniform cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::PhysicalParams;

/// Default relative cutoff for Pöschl–Teller tails.
pub const DEFAULT_PT_CUTOFF: f64 = 1e-6;

/// Default number of slices for continuous profiles.
pub const DEFAULT_N_SLICES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    /// nm
    pub width: f64,
    /// eV; positive for barriers, negative for wells
    pub height: f64,
}

impl Slice {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialProfile {
    slices: Vec<Slice>,
    /// Left edge of every slice, plus `L` as the final entry.
    edges: Vec<f64>,
    params: PhysicalParams,
    label: String,
}

/// One `strength / cosh²((x - center)/d)` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtTerm {
    /// nm
    pub center: f64,
    /// eV, signed: `V₀ > 0` for a barrier, `-U₀ < 0` for a well
    pub strength: f64,
    /// nm
    pub d: f64,
}

impl PtTerm {
    pub fn new(center: f64, strength: f64, d: f64) -> Self {
        Self { center, strength, d }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let c = ((x - self.center) / self.d).cosh();
        self.strength / (c * c)
    }
}

impl PotentialProfile {
    /// Builds a profile from explicit slices. Every width must be positive and finite.
    pub fn from_slices(
        slices: Vec<Slice>,
        params: PhysicalParams,
        label: impl Into<String>,
    ) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::validation("potential layout is empty"));
        }
        let mut edges = Vec::with_capacity(slices.len() + 1);
        let mut x = 0.0;
        for (i, s) in slices.iter().enumerate() {
            if !(s.width > 0.0) || !s.width.is_finite() {
                return Err(Error::validation(format!(
                    "slice {i} has non-positive width {}",
                    s.width
                )));
            }
            if !s.height.is_finite() {
                return Err(Error::validation(format!("slice {i} has non-finite height")));
            }
            edges.push(x);
            x += s.width;
        }
        edges.push(x);
        Ok(Self {
            slices,
            edges,
            params,
            label: label.into(),
        })
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    /// Slice boundaries `x₀ = 0 < x₁ < ... < x_n = L`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Total length `L` in nm.
    pub fn length(&self) -> f64 {
        *self.edges.last().expect("non-empty")
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_params(&self, params: PhysicalParams) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// True when every slice height is exactly zero.
    pub fn is_free(&self) -> bool {
        self.slices.iter().all(|s| s.height == 0.0)
    }

    pub fn max_abs_height(&self) -> f64 {
        self.slices.iter().fold(0.0, |m, s| m.max(s.height.abs()))
    }

    /// Index of the slice containing `x`, or `None` outside `[0, L]`.
    pub fn slice_index(&self, x: f64) -> Option<usize> {
        if !(x >= 0.0) || x > self.length() {
            return None;
        }
        // edges is sorted; partition_point gives the first edge > x
        let i = self.edges.partition_point(|&e| e <= x);
        Some(i.saturating_sub(1).min(self.slices.len() - 1))
    }

    /// V(x) in eV; zero outside the support.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.slice_index(x).map_or(0.0, |i| self.slices[i].height)
    }

    /// Midpoints of every slice.
    pub fn midpoints(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }
}

fn layout_label(layout: &[(f64, f64)]) -> String {
    let parts: Vec<String> = layout
        .iter()
        .map(|(w, h)| format!("{w}nm@{h}eV"))
        .collect();
    format!("rect[{}]", parts.join(","))
}

/// Profile made of rectangular slices `(width nm, height eV)`.
pub fn build_rect(layout: &[(f64, f64)], params: PhysicalParams) -> Result<PotentialProfile> {
    let slices = layout.iter().map(|&(w, h)| Slice::new(w, h)).collect();
    PotentialProfile::from_slices(slices, params, layout_label(layout))
}

/// Repeats `unit` `count` times with free spacers of width `spacing` in between.
///
/// `well_overrides` holds `(unit index, height eV)` pairs; each replaces the height
/// of the internal well slices of that unit. Internal well slices are the
/// non-boundary slices of the unit with height `<= 0`.
pub fn build_chain(
    unit: &PotentialProfile,
    count: usize,
    spacing: f64,
    well_overrides: &[(usize, f64)],
) -> Result<PotentialProfile> {
    if count == 0 {
        return Err(Error::validation("chain count must be >= 1"));
    }
    if !(spacing >= 0.0) || !spacing.is_finite() {
        return Err(Error::validation(format!(
            "chain spacing must be >= 0, got {spacing}"
        )));
    }
    let n = unit.slices.len();
    let wells: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| unit.slices[i].height <= 0.0)
        .collect();
    let mut depth = vec![None; count];
    for &(idx, h) in well_overrides {
        if idx >= count {
            return Err(Error::validation(format!(
                "well override index {idx} out of range for a chain of {count} units"
            )));
        }
        if wells.is_empty() {
            return Err(Error::validation(
                "well override given but the unit has no internal well",
            ));
        }
        depth[idx] = Some(h);
    }

    let mut slices = Vec::with_capacity(count * (n + 1));
    for (u, d) in depth.iter().enumerate() {
        if u > 0 && spacing > 0.0 {
            slices.push(Slice::new(spacing, 0.0));
        }
        for (i, s) in unit.slices.iter().enumerate() {
            let height = match d {
                Some(h) if wells.contains(&i) => *h,
                _ => s.height,
            };
            slices.push(Slice::new(s.width, height));
        }
    }
    let label = if count == 1 && well_overrides.is_empty() {
        unit.label.clone()
    } else {
        format!("{}x({}) h={spacing}nm", count, unit.label)
    };
    PotentialProfile::from_slices(slices, unit.params, label)
}

/// Samples `v` at the midpoints of `n_slices` uniform cells covering `[x0, x1]`.
/// The returned profile starts at 0.
pub fn slice_continuous<F: Fn(f64) -> f64>(
    v: F,
    x0: f64,
    x1: f64,
    n_slices: usize,
    params: PhysicalParams,
    label: impl Into<String>,
) -> Result<PotentialProfile> {
    if n_slices == 0 {
        return Err(Error::validation("n_slices must be >= 1"));
    }
    if !(x1 > x0) {
        return Err(Error::validation(format!(
            "empty support [{x0}, {x1}]"
        )));
    }
    let w = (x1 - x0) / n_slices as f64;
    let slices = (0..n_slices)
        .map(|i| Slice::new(w, v(x0 + (i as f64 + 0.5) * w)))
        .collect();
    PotentialProfile::from_slices(slices, params, label)
}

/// Support `[x0, x1]` of `Σ terms` truncated where `|V| < cutoff_eps · max|strength|`.
pub fn pt_support(terms: &[PtTerm], cutoff_eps: f64) -> Result<(f64, f64)> {
    if terms.is_empty() {
        return Err(Error::validation("no Pöschl–Teller terms given"));
    }
    if !(cutoff_eps > 0.0 && cutoff_eps < 1.0) {
        return Err(Error::validation(format!(
            "cutoff_eps must lie in (0, 1), got {cutoff_eps}"
        )));
    }
    for t in terms {
        if !(t.d > 0.0) || !t.d.is_finite() {
            return Err(Error::validation(format!("Pöschl–Teller width d must be > 0, got {}", t.d)));
        }
    }
    let vmax = terms.iter().fold(0.0f64, |m, t| m.max(t.strength.abs()));
    if vmax == 0.0 {
        return Err(Error::validation("all Pöschl–Teller strengths are zero"));
    }
    let thr = cutoff_eps * vmax;
    let total = |x: f64| terms.iter().map(|t| t.value(x)).sum::<f64>().abs();

    // Beyond these points every term is below thr / n_terms, hence the sum is below thr.
    let n = terms.len() as f64;
    let reach = |t: &PtTerm| {
        let ratio = (t.strength.abs() * n / thr).max(1.0);
        t.d * ratio.sqrt().acosh() + t.d
    };
    let far_left = terms
        .iter()
        .map(|t| t.center - reach(t))
        .fold(f64::INFINITY, f64::min);
    let far_right = terms
        .iter()
        .map(|t| t.center + reach(t))
        .fold(f64::NEG_INFINITY, f64::max);
    let dmin = terms.iter().fold(f64::INFINITY, |m, t| m.min(t.d));
    let step = dmin / 64.0;

    let bisect = |mut outside: f64, mut inside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (outside + inside);
            if mid == outside || mid == inside {
                break;
            }
            if total(mid) >= thr {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };

    let mut x = far_left;
    let left = loop {
        if x > far_right {
            return Err(Error::validation("cutoff leaves an empty support"));
        }
        let next = x + step;
        if total(next) >= thr {
            break bisect(x, next);
        }
        x = next;
    };
    let mut x = far_right;
    let right = loop {
        let next = x - step;
        if next < left {
            return Err(Error::validation("cutoff leaves an empty support"));
        }
        if total(next) >= thr {
            break bisect(x, next);
        }
        x = next;
    };
    if !(right > left) {
        return Err(Error::validation("cutoff leaves an empty support"));
    }
    Ok((left, right))
}

/// Sum of Pöschl–Teller terms, truncated at `cutoff_eps` and sliced into `n_slices` cells.
pub fn build_pt_composite(
    terms: &[PtTerm],
    cutoff_eps: f64,
    n_slices: usize,
    params: PhysicalParams,
) -> Result<PotentialProfile> {
    let (x0, x1) = pt_support(terms, cutoff_eps)?;
    let owned = terms.to_vec();
    let label = format!("pt[{} terms, eps={cutoff_eps}, n={n_slices}]", terms.len());
    slice_continuous(
        move |x| owned.iter().map(|t| t.value(x)).sum(),
        x0,
        x1,
        n_slices,
        params,
        label,
    )
}

/// Barrier–well–barrier unit with barrier width `b`, well width `w`,
/// barrier height `v0` and well height `well` (negative for a well).
pub fn bwb_unit(b: f64, w: f64, v0: f64, well: f64, params: PhysicalParams) -> Result<PotentialProfile> {
    build_rect(&[(b, v0), (w, well), (b, v0)], params)
}

/// Built-in systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// V ≡ 0 over 1 nm.
    Free,
    /// b = 0.4, w = 0.8, V₀ = |U₀| = 0.12 eV.
    Bwb,
    /// Two BWB units, h = 0.8 nm.
    #[serde(rename = "2bwb")]
    TwoBwb,
    /// 2BWB with zero well depth.
    #[serde(rename = "2bsb")]
    TwoBsb,
    /// 2BWB with the sign of every height flipped.
    #[serde(rename = "2wbw")]
    TwoWbw,
    /// Five BWB units; wells of units 2 and 4 at −0.113 eV.
    #[serde(rename = "5bwb")]
    FiveBwb,
    /// Two 5BWB blocks separated by h = 0.8 nm (L = 23.2 nm).
    #[serde(rename = "10bwb")]
    TenBwb,
    /// Double barrier V₀ = 0.2 eV, U₀ = 0, b = 4.0 nm, w = 2b.
    Fig1Wide,
    /// Double barrier V₀ = 0.2 eV, U₀ = 0, b = 0.4 nm, w = 2b.
    Fig1Thin,
    /// Quadruple-barrier Pöschl–Teller composite.
    PtQuad,
}

/// Barrier width, well width and spacer of the rectangular multibarrier presets (nm).
pub const RECT_B: f64 = 0.4;
pub const RECT_W: f64 = 0.8;
pub const RECT_H: f64 = 0.8;
/// Barrier height and well depth of the rectangular multibarrier presets (eV).
pub const RECT_V0: f64 = 0.12;
/// Depth of the 2nd and 4th wells of the 5BWB system (eV).
pub const FIVE_BWB_INNER_WELL: f64 = -0.113;

/// Pöschl–Teller quadruple-barrier parameters.
pub const PT_D_BARRIER: f64 = 0.0709;
pub const PT_D_WELL: f64 = 0.1399;
/// Center-to-center distance between a P-T barrier and its adjacent well (nm).
/// Chosen so that the threshold pole sits at E_q ≈ 6.19e-10 eV.
pub const PT_BARRIER_WELL_SPACING: f64 = 0.6107;
/// Offset between the two P-T double-barrier blocks, as in the 2BWB layout (nm).
pub const PT_BLOCK_OFFSET: f64 = 2.4;

impl Preset {
    pub const ALL: [Preset; 10] = [
        Preset::Free,
        Preset::Bwb,
        Preset::TwoBwb,
        Preset::TwoBsb,
        Preset::TwoWbw,
        Preset::FiveBwb,
        Preset::TenBwb,
        Preset::Fig1Wide,
        Preset::Fig1Thin,
        Preset::PtQuad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Free => "free",
            Preset::Bwb => "bwb",
            Preset::TwoBwb => "2bwb",
            Preset::TwoBsb => "2bsb",
            Preset::TwoWbw => "2wbw",
            Preset::FiveBwb => "5bwb",
            Preset::TenBwb => "10bwb",
            Preset::Fig1Wide => "fig1-wide",
            Preset::Fig1Thin => "fig1-thin",
            Preset::PtQuad => "pt-quad",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Free => "V = 0 over 1 nm",
            Preset::Bwb => "barrier-well-barrier, b=0.4 w=0.8 nm, V0=|U0|=0.12 eV",
            Preset::TwoBwb => "two BWB units separated by h=0.8 nm (L=4.0 nm)",
            Preset::TwoBsb => "2BWB with zero well depth",
            Preset::TwoWbw => "2BWB with barriers and wells interchanged",
            Preset::FiveBwb => "five BWB units, 2nd and 4th wells at -0.113 eV (L=11.2 nm)",
            Preset::TenBwb => "two 5BWB blocks separated by h=0.8 nm (L=23.2 nm)",
            Preset::Fig1Wide => "double barrier V0=0.2 eV, U0=0, b=4.0 nm, w=8.0 nm",
            Preset::Fig1Thin => "double barrier V0=0.2 eV, U0=0, b=0.4 nm, w=0.8 nm",
            Preset::PtQuad => "quadruple-barrier Poschl-Teller, V0=|U0|=0.12 eV, d_b=0.0709 d_w=0.1399 nm",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == lower)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::validation(format!(
                    "unknown preset '{name}', expected one of {}",
                    names.join(", ")
                ))
            })
    }

    /// Characteristic barrier height V₀ (eV) used for E/V₀ scales.
    pub fn v0(self) -> f64 {
        match self {
            Preset::Fig1Wide | Preset::Fig1Thin => 0.2,
            _ => RECT_V0,
        }
    }

    pub fn build(self, params: PhysicalParams) -> Result<PotentialProfile> {
        let p = params;
        let prof = match self {
            Preset::Free => build_rect(&[(1.0, 0.0)], p)?,
            Preset::Bwb => bwb_unit(RECT_B, RECT_W, RECT_V0, -RECT_V0, p)?,
            Preset::TwoBwb => Family::TwoBwb.build(RECT_V0, p, 1.0)?,
            Preset::TwoBsb => Family::TwoBsb.build(RECT_V0, p, 1.0)?,
            Preset::TwoWbw => Family::TwoBwb.build(-RECT_V0, p, 1.0)?,
            Preset::FiveBwb => Family::FiveBwb.build(RECT_V0, p, 1.0)?,
            Preset::TenBwb => {
                let five = Family::FiveBwb.build(RECT_V0, p, 1.0)?;
                build_chain(&five, 2, RECT_H, &[])?
            }
            Preset::Fig1Wide => bwb_unit(4.0, 8.0, 0.2, 0.0, p)?,
            Preset::Fig1Thin => bwb_unit(0.4, 0.8, 0.2, 0.0, p)?,
            Preset::PtQuad => build_pt_composite(
                &pt_quad_terms(RECT_V0, PT_BARRIER_WELL_SPACING),
                DEFAULT_PT_CUTOFF,
                DEFAULT_N_SLICES,
                p,
            )?,
        };
        Ok(prof.with_label(self.name()))
    }
}

/// Terms of the quadruple-barrier P-T composite: two barrier–well–barrier blocks.
pub fn pt_quad_terms(v0: f64, barrier_well_spacing: f64) -> Vec<PtTerm> {
    let s = barrier_well_spacing;
    [0.0, PT_BLOCK_OFFSET]
        .iter()
        .flat_map(|&o| {
            [
                PtTerm::new(o, v0, PT_D_BARRIER),
                PtTerm::new(o + s, -v0, PT_D_WELL),
                PtTerm::new(o + 2.0 * s, v0, PT_D_BARRIER),
            ]
        })
        .collect()
}

/// Preset families parametrized by a signed strength `V = V₀ = |U|`.
///
/// A negative `V` interchanges barriers and wells (2BWB becomes 2WBW).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Bwb,
    #[serde(rename = "2bwb")]
    TwoBwb,
    /// Wells fixed at zero depth; `V` is the barrier height.
    #[serde(rename = "2bsb")]
    TwoBsb,
    /// Inner wells of units 2 and 4 scaled as `V · 0.113 / 0.12`.
    #[serde(rename = "5bwb")]
    FiveBwb,
    PtQuad,
}

impl Family {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bwb" => Ok(Family::Bwb),
            "2bwb" | "2wbw" => Ok(Family::TwoBwb),
            "2bsb" => Ok(Family::TwoBsb),
            "5bwb" => Ok(Family::FiveBwb),
            "pt-quad" => Ok(Family::PtQuad),
            other => Err(Error::validation(format!(
                "unknown family '{other}', expected bwb, 2bwb, 2bsb, 5bwb or pt-quad"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Bwb => "bwb",
            Family::TwoBwb => "2bwb",
            Family::TwoBsb => "2bsb",
            Family::FiveBwb => "5bwb",
            Family::PtQuad => "pt-quad",
        }
    }

    /// Builds the member with strength `v` (eV); all widths multiplied by `width_scale`.
    pub fn build(self, v: f64, params: PhysicalParams, width_scale: f64) -> Result<PotentialProfile> {
        if !(width_scale > 0.0) {
            return Err(Error::validation(format!(
                "width scale must be positive, got {width_scale}"
            )));
        }
        let (b, w, h) = (RECT_B * width_scale, RECT_W * width_scale, RECT_H * width_scale);
        let prof = match self {
            Family::Bwb => bwb_unit(b, w, v, -v, params)?,
            Family::TwoBwb => build_chain(&bwb_unit(b, w, v, -v, params)?, 2, h, &[])?,
            Family::TwoBsb => build_chain(&bwb_unit(b, w, v, 0.0, params)?, 2, h, &[])?,
            Family::FiveBwb => {
                let inner = FIVE_BWB_INNER_WELL * v / RECT_V0;
                build_chain(
                    &bwb_unit(b, w, v, -v, params)?,
                    5,
                    h,
                    &[(1, inner), (3, inner)],
                )?
            }
            Family::PtQuad => {
                let terms: Vec<PtTerm> = pt_quad_terms(v, PT_BARRIER_WELL_SPACING * width_scale)
                    .into_iter()
                    .map(|t| PtTerm {
                        center: t.center * width_scale,
                        d: t.d * width_scale,
                        ..t
                    })
                    .collect();
                if v == 0.0 {
                    // the cutoff is undefined for an all-zero sum
                    build_rect(&[(PT_BLOCK_OFFSET * width_scale, 0.0)], params)?
                } else {
                    build_pt_composite(&terms, DEFAULT_PT_CUTOFF, DEFAULT_N_SLICES, params)?
                }
            }
        };
        Ok(prof.with_label(format!("{}(V={v})", self.name())))
    }
}
