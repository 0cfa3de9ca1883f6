//! JSON run configuration. Every section rejects unknown keys; keys carry
//! unit suffixes (`_nm`, `_eV`).
//!
//! ```json
//! {
//!   "mass_ratio": 0.067,
//!   "potential": {"builder": "rect", "layers": [{"width_nm": 0.4, "height_eV": 0.12}]},
//!   "energy": {"emin_eV": 1e-8, "emax_eV": 0.24, "points": 400, "log": true},
//!   "output": {"format": "csv"}
//! }
//! ```
//!
//! `"preset": "2bwb"` may replace `"potential"`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{
    build_chain, build_pt_composite, build_rect, PotentialProfile, Preset, PtTerm, DEFAULT_N_SLICES,
    DEFAULT_PT_CUTOFF,
};
use crate::table::Format;
use crate::units::{PhysicalParams, GAAS_MASS_RATIO};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub width_nm: f64,
    #[serde(rename = "height_eV")]
    pub height_ev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellOverride {
    /// Zero-based unit index.
    pub unit: usize,
    #[serde(rename = "height_eV")]
    pub height_ev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PtTermConfig {
    pub center_nm: f64,
    #[serde(rename = "strength_eV")]
    pub strength_ev: f64,
    pub d_nm: f64,
}

fn default_cutoff() -> f64 {
    DEFAULT_PT_CUTOFF
}

fn default_slices() -> usize {
    DEFAULT_N_SLICES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialConfig {
    Rect {
        layers: Vec<Layer>,
    },
    Chain {
        unit: Vec<Layer>,
        count: usize,
        spacing_nm: f64,
        #[serde(default)]
        well_overrides: Vec<WellOverride>,
    },
    Pt {
        terms: Vec<PtTermConfig>,
        #[serde(default = "default_cutoff")]
        cutoff_eps: f64,
        #[serde(default = "default_slices")]
        n_slices: usize,
    },
}

fn layout(layers: &[Layer]) -> Vec<(f64, f64)> {
    layers.iter().map(|l| (l.width_nm, l.height_ev)).collect()
}

impl PotentialConfig {
    pub fn build(&self, params: PhysicalParams) -> Result<PotentialProfile> {
        match self {
            PotentialConfig::Rect { layers } => build_rect(&layout(layers), params),
            PotentialConfig::Chain {
                unit,
                count,
                spacing_nm,
                well_overrides,
            } => {
                let u = build_rect(&layout(unit), params)?;
                let o: Vec<(usize, f64)> = well_overrides.iter().map(|w| (w.unit, w.height_ev)).collect();
                build_chain(&u, *count, *spacing_nm, &o)
            }
            PotentialConfig::Pt {
                terms,
                cutoff_eps,
                n_slices,
            } => {
                let t: Vec<PtTerm> = terms
                    .iter()
                    .map(|t| PtTerm::new(t.center_nm, t.strength_ev, t.d_nm))
                    .collect();
                build_pt_composite(&t, *cutoff_eps, *n_slices, params)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    #[serde(rename = "emin_eV")]
    pub emin_ev: Option<f64>,
    #[serde(rename = "emax_eV")]
    pub emax_ev: Option<f64>,
    pub points: Option<usize>,
    pub log: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolesConfig {
    pub count: Option<usize>,
    pub threshold_only: Option<bool>,
    pub max_iter: Option<usize>,
    pub step_tol: Option<f64>,
    pub f_tol: Option<f64>,
    pub merge_radius: Option<f64>,
    /// Pole counts of the expansion columns in `transmit`.
    pub expansion_terms: Option<Vec<usize>>,
    /// Add the one-pole model column in `transmit`.
    pub single_pole: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub sigma_nm: Option<f64>,
    pub x0_nm: Option<f64>,
    #[serde(rename = "e0_eV")]
    pub e0_ev: Option<f64>,
    pub x_nm: Option<f64>,
    pub t_min_over_t0: Option<f64>,
    pub t_max_over_t0: Option<f64>,
    pub points: Option<usize>,
    pub truncate_negative_k: Option<bool>,
    pub include_bound_states: Option<bool>,
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: Option<String>,
    pub axis: Option<String>,
    pub axis_min: Option<f64>,
    pub axis_max: Option<f64>,
    pub axis_points: Option<usize>,
    pub axis_log: Option<bool>,
    #[serde(rename = "emin_eV")]
    pub emin_ev: Option<f64>,
    #[serde(rename = "emax_eV")]
    pub emax_ev: Option<f64>,
    pub e_points: Option<usize>,
    pub t_floor: Option<f64>,
    pub t_min: Option<f64>,
    #[serde(rename = "band_lo_eV")]
    pub band_lo_ev: Option<f64>,
    #[serde(rename = "band_hi_eV")]
    pub band_hi_ev: Option<f64>,
    #[serde(rename = "base_v_eV")]
    pub base_v_ev: Option<f64>,
    pub base_mass_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mass_ratio: Option<f64>,
    pub preset: Option<String>,
    pub potential: Option<PotentialConfig>,
    #[serde(default)]
    pub energy: EnergyConfig,
    #[serde(default)]
    pub poles: PolesConfig,
    #[serde(default)]
    pub packet: PacketConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text)?;
        c.params()?;
        if c.preset.is_some() && c.potential.is_some() {
            return Err(Error::validation("give either \"preset\" or \"potential\", not both"));
        }
        if let Some(p) = &c.preset {
            Preset::from_name(p)?;
        }
        Ok(c)
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.mass_ratio.unwrap_or(GAAS_MASS_RATIO))
    }

    /// The configured system, or `None` when neither a preset nor a potential is set.
    pub fn system(&self) -> Result<Option<PotentialProfile>> {
        let params = self.params()?;
        match (&self.preset, &self.potential) {
            (Some(_), Some(_)) => Err(Error::validation("give either \"preset\" or \"potential\", not both")),
            (Some(name), None) => Ok(Some(Preset::from_name(name)?.build(params)?)),
            (None, Some(p)) => Ok(Some(p.build(params)?)),
            (None, None) => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_config() {
        let c = RunConfig::from_json(r#"{"preset": "2bwb", "energy": {"emin_eV": 1e-8, "log": true}}"#).unwrap();
        let p = c.system().unwrap().unwrap();
        assert!((p.length() - 4.0).abs() < 1e-12);
        assert_eq!(c.energy.emin_ev, Some(1e-8));
    }

    #[test]
    fn rect_config_matches_builder() {
        let c = RunConfig::from_json(
            r#"{"mass_ratio": 0.1, "potential": {"builder": "rect",
                "layers": [{"width_nm": 0.4, "height_eV": 0.12}, {"width_nm": 0.8, "height_eV": -0.12}]}}"#,
        )
        .unwrap();
        let p = c.system().unwrap().unwrap();
        assert_eq!(p.slices().len(), 2);
        assert_eq!(p.params().mass_ratio, 0.1);
    }

    #[test]
    fn chain_config_reproduces_5bwb() {
        let c = RunConfig::from_json(
            r#"{"potential": {"builder": "chain", "count": 5, "spacing_nm": 0.8,
                "unit": [{"width_nm": 0.4, "height_eV": 0.12}, {"width_nm": 0.8, "height_eV": -0.12},
                         {"width_nm": 0.4, "height_eV": 0.12}],
                "well_overrides": [{"unit": 1, "height_eV": -0.113}, {"unit": 3, "height_eV": -0.113}]}}"#,
        )
        .unwrap();
        let p = c.system().unwrap().unwrap();
        let q = Preset::FiveBwb.build(PhysicalParams::gaas()).unwrap();
        assert_eq!(p.slices(), q.slices());
    }

    #[test]
    fn pt_config_defaults() {
        let c = RunConfig::from_json(
            r#"{"potential": {"builder": "pt", "terms": [{"center_nm": 0.0, "strength_eV": -0.1, "d_nm": 0.5}]}}"#,
        )
        .unwrap();
        let p = c.system().unwrap().unwrap();
        assert_eq!(p.slices().len(), DEFAULT_N_SLICES);
    }

    #[test]
    fn unknown_keys_rejected() {
        for bad in [
            r#"{"preset": "2bwb", "colour": 1}"#,
            r#"{"energy": {"emin": 1e-8}}"#,
            r#"{"potential": {"builder": "rect", "layers": [{"width": 0.4, "height_eV": 0.1}]}}"#,
            r#"{"potential": {"builder": "rect", "layers": [], "extra": 1}}"#,
            r#"{"potential": {"builder": "hex", "layers": []}}"#,
        ] {
            assert!(matches!(RunConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_json(r#"{"mass_ratio": -1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"preset": "3bwb"}"#).is_err());
        let both = r#"{"preset": "2bwb", "potential": {"builder": "rect", "layers": [{"width_nm": 1, "height_eV": 0}]}}"#;
        assert!(RunConfig::from_json(both).is_err());
        let c = RunConfig::from_json(r#"{"potential": {"builder": "rect", "layers": [{"width_nm": -1, "height_eV": 0}]}}"#)
            .unwrap();
        assert!(c.system().is_err());
    }
}
