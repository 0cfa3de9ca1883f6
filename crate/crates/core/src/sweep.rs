//! Transmission contours over (parameter, energy) grids and extraction of
//! invisibility windows along the parameter axis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Family, PotentialProfile, RECT_V0};
use crate::scatter::amplitudes;
use crate::units::{PhysicalParams, GAAS_MASS_RATIO};

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Signed strength `V = V₀ = |U|`, eV. Negative values interchange barriers and wells.
    V,
    /// Effective mass `m/mₑ`.
    MassRatio,
    /// Common factor on every width.
    WidthScale,
}

impl SweepAxis {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "v" => Ok(SweepAxis::V),
            "mass" | "mass_ratio" | "mass-ratio" => Ok(SweepAxis::MassRatio),
            "width" | "width_scale" | "width-scale" => Ok(SweepAxis::WidthScale),
            other => Err(Error::validation(format!(
                "unknown sweep axis '{other}', expected v, mass_ratio or width_scale"
            ))),
        }
    }

    /// Column header with unit suffix.
    pub fn column(self) -> &'static str {
        match self {
            SweepAxis::V => "V_eV",
            SweepAxis::MassRatio => "mass_ratio",
            SweepAxis::WidthScale => "width_scale",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: Family,
    pub axis: SweepAxis,
    pub axis_grid: Vec<f64>,
    /// eV
    pub e_grid: Vec<f64>,
    /// Lower edge of the plotted contour range.
    pub t_floor: f64,
    /// Strength used when the axis is not `V`, eV.
    pub base_v: f64,
    /// Mass ratio used when the axis is not `MassRatio`.
    pub base_mass_ratio: f64,
}

impl SweepSpec {
    pub fn new(family: Family, axis: SweepAxis, axis_grid: Vec<f64>, e_grid: Vec<f64>) -> Self {
        Self {
            family,
            axis,
            axis_grid,
            e_grid,
            t_floor: 0.5,
            base_v: RECT_V0,
            base_mass_ratio: GAAS_MASS_RATIO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid("axis", &self.axis_grid)?;
        check_grid("energy", &self.e_grid)?;
        if let Some(e) = self.e_grid.iter().find(|&&e| !(e > 0.0)) {
            return Err(Error::validation(format!("energy grid contains non-positive value {e}")));
        }
        match self.axis {
            SweepAxis::MassRatio | SweepAxis::WidthScale => {
                if let Some(a) = self.axis_grid.iter().find(|&&a| !(a > 0.0)) {
                    return Err(Error::validation(format!(
                        "{} axis values must be positive, got {a}",
                        self.axis.column()
                    )));
                }
            }
            SweepAxis::V => {}
        }
        if !(0.0..=1.0).contains(&self.t_floor) {
            return Err(Error::validation(format!("T floor {} outside [0, 1]", self.t_floor)));
        }
        Ok(())
    }

    /// The family member at one axis value.
    pub fn profile_at(&self, a: f64) -> Result<PotentialProfile> {
        let (v, m, s) = match self.axis {
            SweepAxis::V => (a, self.base_mass_ratio, 1.0),
            SweepAxis::MassRatio => (self.base_v, a, 1.0),
            SweepAxis::WidthScale => (self.base_v, self.base_mass_ratio, a),
        };
        self.family.build(v, PhysicalParams::new(m)?, s)
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::validation(format!("{name} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation(format!("{name} grid contains a non-finite value")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation(format!("{name} grid is not strictly increasing")));
    }
    Ok(())
}

/// `T` on the product grid, stored axis-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourTable {
    pub axis: SweepAxis,
    pub axis_values: Vec<f64>,
    /// eV
    pub energies: Vec<f64>,
    /// `transmission[i * energies.len() + j]` at `(axis_values[i], energies[j])`.
    pub transmission: Vec<f64>,
    pub t_floor: f64,
}

impl ContourTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.transmission[i * self.energies.len() + j]
    }

    /// `(axis value, E, T)` in axis-major order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.axis_values.iter().enumerate().flat_map(move |(i, &a)| {
            self.energies
                .iter()
                .enumerate()
                .map(move |(j, &e)| (a, e, self.get(i, j)))
        })
    }
}

pub fn transmission_contour(spec: &SweepSpec) -> Result<ContourTable> {
    spec.validate()?;
    let profiles: Vec<PotentialProfile> = spec
        .axis_grid
        .iter()
        .map(|&a| spec.profile_at(a))
        .collect::<Result<_>>()?;
    let ne = spec.e_grid.len();
    let transmission = (0..profiles.len() * ne)
        .into_par_iter()
        .map(|idx| amplitudes(&profiles[idx / ne], spec.e_grid[idx % ne]).map(|s| s.transmission))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ContourTable {
        axis: spec.axis,
        axis_values: spec.axis_grid.clone(),
        energies: spec.e_grid.clone(),
        transmission,
        t_floor: spec.t_floor,
    })
}

/// Closed interval of axis values, bounded by grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisInterval {
    pub lo: f64,
    pub hi: f64,
    /// Number of grid points inside.
    pub points: usize,
}

impl AxisInterval {
    pub fn contains(&self, a: f64) -> bool {
        self.lo <= a && a <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub axis: SweepAxis,
    /// eV
    pub band: (f64, f64),
    pub t_min: f64,
    /// Minimum of `T` over the band for each axis value.
    pub band_minimum: Vec<f64>,
    pub intervals: Vec<AxisInterval>,
}

impl WindowReport {
    pub fn contains(&self, a: f64) -> bool {
        self.intervals.iter().any(|w| w.contains(a))
    }
}

/// Maximal runs of axis values whose minimum `T` over the energy band is at least `t_min`.
pub fn invisibility_window(table: &ContourTable, band: (f64, f64), t_min: f64) -> Result<WindowReport> {
    let (lo, hi) = band;
    let (e_first, e_last) = (table.energies[0], table.energies[table.energies.len() - 1]);
    let slack = 1e-12 * e_last.abs();
    if !(lo <= hi) || lo < e_first - slack || hi > e_last + slack {
        return Err(Error::validation(format!(
            "band [{lo}, {hi}] eV not within the table's energy range [{e_first}, {e_last}]"
        )));
    }
    let cols: Vec<usize> = (0..table.energies.len())
        .filter(|&j| (lo - slack..=hi + slack).contains(&table.energies[j]))
        .collect();
    if cols.is_empty() {
        return Err(Error::validation(format!("no grid energy inside the band [{lo}, {hi}] eV")));
    }
    let band_minimum: Vec<f64> = (0..table.axis_values.len())
        .map(|i| cols.iter().map(|&j| table.get(i, j)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut intervals = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=band_minimum.len() {
        let inside = i < band_minimum.len() && band_minimum[i] >= t_min;
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                intervals.push(AxisInterval {
                    lo: table.axis_values[s],
                    hi: table.axis_values[i - 1],
                    points: i - s,
                });
                start = None;
            }
            _ => {}
        }
    }
    Ok(WindowReport {
        axis: table.axis,
        band,
        t_min,
        band_minimum,
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Preset;
    use crate::scatter::{linear_grid, log_grid};

    fn ones(n_axis: usize, n_e: usize) -> ContourTable {
        ContourTable {
            axis: SweepAxis::V,
            axis_values: linear_grid(-1.0, 1.0, n_axis),
            energies: log_grid(1e-3, 1.0, n_e),
            transmission: vec![1.0; n_axis * n_e],
            t_floor: 0.5,
        }
    }

    #[test]
    fn all_ones_gives_full_range() {
        let w = invisibility_window(&ones(11, 7), (1e-3, 1.0), 0.99).unwrap();
        assert_eq!(
            w.intervals,
            vec![AxisInterval {
                lo: -1.0,
                hi: 1.0,
                points: 11
            }]
        );
    }

    #[test]
    fn intervals_are_maximal_runs() {
        let mut t = ones(6, 3);
        // rows 0 and 3 dip below the threshold
        t.transmission[1] = 0.5;
        t.transmission[3 * 3 + 2] = 0.9;
        let w = invisibility_window(&t, (1e-3, 1.0), 0.99).unwrap();
        let runs: Vec<usize> = w.intervals.iter().map(|i| i.points).collect();
        assert_eq!(runs, vec![2, 2]);
        assert_eq!(w.intervals[0].lo, t.axis_values[1]);
        assert_eq!(w.intervals[1].hi, t.axis_values[5]);
        // a band avoiding the dips keeps every row
        let w = invisibility_window(&t, (1e-3, 2e-3), 0.99).unwrap();
        assert_eq!(w.intervals.len(), 1);
    }

    #[test]
    fn band_outside_table_rejected() {
        assert!(invisibility_window(&ones(3, 3), (1e-4, 0.5), 0.99).is_err());
        assert!(invisibility_window(&ones(3, 3), (0.5, 0.4), 0.99).is_err());
    }

    #[test]
    fn zero_strength_row_is_free() {
        let spec = SweepSpec::new(Family::TwoBwb, SweepAxis::V, vec![0.0], log_grid(1e-6, 1.0, 30));
        let c = transmission_contour(&spec).unwrap();
        assert!(c.transmission.iter().all(|&t| (t - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rows_match_pointwise_evaluation() {
        let e = log_grid(1e-8, 0.24, 25);
        let spec = SweepSpec::new(Family::TwoBwb, SweepAxis::V, vec![-0.12, 0.12], e.clone());
        let c = transmission_contour(&spec).unwrap();
        let p = Preset::TwoBwb.build(PhysicalParams::gaas()).unwrap();
        let q = Preset::TwoWbw.build(PhysicalParams::gaas()).unwrap();
        for (j, &en) in e.iter().enumerate() {
            assert_eq!(c.get(1, j), amplitudes(&p, en).unwrap().transmission);
            assert_eq!(c.get(0, j), amplitudes(&q, en).unwrap().transmission);
        }
        assert_eq!(c.rows().count(), 50);
    }

    #[test]
    fn gaas_mass_inside_window() {
        let e = log_grid(0.05 * RECT_V0, RECT_V0, 60);
        let spec = SweepSpec::new(Family::TwoBwb, SweepAxis::MassRatio, vec![10f64.powf(-1.1739)], e);
        let c = transmission_contour(&spec).unwrap();
        assert!(c.transmission.iter().all(|&t| t > 0.99));
    }

    #[test]
    fn invalid_specs_rejected() {
        let e = log_grid(1e-3, 0.1, 5);
        let bad = [
            SweepSpec::new(Family::TwoBwb, SweepAxis::V, vec![], e.clone()),
            SweepSpec::new(Family::TwoBwb, SweepAxis::V, vec![0.1, 0.0], e.clone()),
            SweepSpec::new(Family::TwoBwb, SweepAxis::MassRatio, vec![-0.1, 0.1], e.clone()),
            SweepSpec::new(Family::TwoBwb, SweepAxis::V, vec![0.1], vec![0.0, 0.1]),
        ];
        for s in bad {
            assert!(transmission_contour(&s).is_err());
        }
    }
}
