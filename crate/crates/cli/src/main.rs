//! `tunnelscope` command-line interface.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or config,
//! 3 numerical non-convergence. Failures print one JSON object on stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tunnelscope::config::RunConfig;
use tunnelscope::table::{Format, Table};
use tunnelscope::Error;

#[derive(Parser, Debug)]
#[command(name = "tunnelscope", version, about = "Exact 1D tunneling: transmission, poles, dwell times, wave packets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Built-in system (see `presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Effective mass m/m_e (default 0.067).
    #[arg(long)]
    mass_ratio: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
struct EnergyArgs {
    /// Lowest energy, eV.
    #[arg(long)]
    emin: Option<f64>,
    /// Highest energy, eV.
    #[arg(long)]
    emax: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Log-spaced grid.
    #[arg(long, conflicts_with = "linear")]
    log: bool,
    /// Evenly spaced grid.
    #[arg(long)]
    linear: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact T(E) and transmission phase, with optional pole-expansion and one-pole columns.
    Transmit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        energy: EnergyArgs,
        /// Add a pole-expansion column with N poles (repeatable).
        #[arg(long, value_name = "N")]
        expansion: Vec<usize>,
        /// Add the one-pole model column 1/(1 + E_q/E).
        #[arg(long)]
        single_pole: bool,
    },
    /// Complex poles of the transmission amplitude.
    Poles {
        #[command(flatten)]
        common: Common,
        /// Number of resonant poles to locate.
        #[arg(long)]
        count: Option<usize>,
        /// Only the imaginary-axis pole closest to k = 0.
        #[arg(long)]
        threshold_only: bool,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Newton step tolerance relative to |k|.
        #[arg(long)]
        step_tol: Option<f64>,
        /// Residual tolerance on |1/t|.
        #[arg(long)]
        f_tol: Option<f64>,
        /// Relative de-duplication radius.
        #[arg(long)]
        merge_radius: Option<f64>,
    },
    /// Dwell time by direct integration and by its decomposition.
    Dwell {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        energy: EnergyArgs,
    },
    /// Transmitted Gaussian packet at a fixed point against the free packet.
    Packet {
        #[command(flatten)]
        common: Common,
        /// Spatial width, nm.
        #[arg(long)]
        sigma: Option<f64>,
        /// Initial centre, nm.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        /// Centre energy, eV.
        #[arg(long)]
        e0: Option<f64>,
        /// Observation point, nm.
        #[arg(long)]
        x: Option<f64>,
        /// Time window start in units of t0.
        #[arg(long)]
        tmin: Option<f64>,
        /// Time window end in units of t0.
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Integrate k >= 0 only.
        #[arg(long)]
        truncate_negative_k: bool,
        /// Leave out bound-state contributions.
        #[arg(long)]
        no_bound_states: bool,
        /// Quadrature self-convergence tolerance.
        #[arg(long)]
        rel_tol: Option<f64>,
    },
    /// Transmission contour over (parameter, E) and invisibility windows.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// bwb, 2bwb, 2bsb, 5bwb or pt-quad.
        #[arg(long)]
        family: Option<String>,
        /// v, mass_ratio or width_scale.
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        axis_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        axis_max: Option<f64>,
        #[arg(long)]
        axis_points: Option<usize>,
        /// Log-spaced axis grid.
        #[arg(long)]
        axis_log: bool,
        #[arg(long)]
        emin: Option<f64>,
        #[arg(long)]
        emax: Option<f64>,
        #[arg(long)]
        e_points: Option<usize>,
        /// Lower edge of the contour range.
        #[arg(long)]
        t_floor: Option<f64>,
        /// Invisibility threshold.
        #[arg(long)]
        t_min: Option<f64>,
        /// Band start, eV.
        #[arg(long)]
        band_lo: Option<f64>,
        /// Band end, eV.
        #[arg(long)]
        band_hi: Option<f64>,
        /// Strength when the axis is not v, eV.
        #[arg(long)]
        base_v: Option<f64>,
        /// Write the window report (JSON) here.
        #[arg(long, value_name = "FILE")]
        window: Option<PathBuf>,
    },
    /// Potential outline V(x) of a system.
    Profile {
        #[command(flatten)]
        common: Common,
        /// Zero-potential lead drawn on each side, as a fraction of L.
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
    },
    /// List built-in systems.
    Presets {
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Core(Error::NoConvergence(_)) => 3,
            CliError::Core(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Core(Error::Domain(_)) => "domain",
            CliError::Core(Error::Validation(_)) => "validation",
            CliError::Core(Error::Config(_)) => "config",
            CliError::Core(Error::NoConvergence(_)) => "no_convergence",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = json!({"error": {"kind": kind, "message": message, "exit_code": code}});
    eprintln!("{body}");
    ExitCode::from(code)
}

fn load_config(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(p) = &common.preset {
        cfg.preset = Some(p.clone());
        cfg.potential = None;
    }
    if let Some(m) = common.mass_ratio {
        cfg.mass_ratio = Some(m);
    }
    if let Some(o) = &common.output {
        cfg.output.path = Some(o.display().to_string());
    }
    if let Some(f) = &common.format {
        cfg.output.format = Some(Format::from_name(f)?);
    }
    cfg.params()?;
    Ok(cfg)
}

fn merge_energy(cfg: &mut RunConfig, e: &EnergyArgs) {
    let c = &mut cfg.energy;
    c.emin_ev = e.emin.or(c.emin_ev);
    c.emax_ev = e.emax.or(c.emax_ev);
    c.points = e.points.or(c.points);
    if e.log {
        c.log = Some(true);
    } else if e.linear {
        c.log = Some(false);
    }
}

fn write_out(path: Option<&str>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {p}: {e}"))),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("cannot write stdout: {e}")))
        }
    }
}

fn emit(cfg: &RunConfig, table: &Table) -> CliResult<()> {
    let text = cfg.output.format.unwrap_or_default().render(table)?;
    write_out(cfg.output.path.as_deref(), &text)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Transmit {
            common,
            energy,
            expansion,
            single_pole,
        } => {
            let mut cfg = load_config(&common)?;
            merge_energy(&mut cfg, &energy);
            if !expansion.is_empty() {
                cfg.poles.expansion_terms = Some(expansion);
            }
            if single_pole {
                cfg.poles.single_pole = Some(true);
            }
            emit(&cfg, &commands::transmit(&cfg)?)
        }
        Command::Poles {
            common,
            count,
            threshold_only,
            max_iter,
            step_tol,
            f_tol,
            merge_radius,
        } => {
            let mut cfg = load_config(&common)?;
            let p = &mut cfg.poles;
            p.count = count.or(p.count);
            if threshold_only {
                p.threshold_only = Some(true);
            }
            p.max_iter = max_iter.or(p.max_iter);
            p.step_tol = step_tol.or(p.step_tol);
            p.f_tol = f_tol.or(p.f_tol);
            p.merge_radius = merge_radius.or(p.merge_radius);
            emit(&cfg, &commands::poles(&cfg)?)
        }
        Command::Dwell { common, energy } => {
            let mut cfg = load_config(&common)?;
            merge_energy(&mut cfg, &energy);
            emit(&cfg, &commands::dwell(&cfg)?)
        }
        Command::Packet {
            common,
            sigma,
            x0,
            e0,
            x,
            tmin,
            tmax,
            points,
            truncate_negative_k,
            no_bound_states,
            rel_tol,
        } => {
            let mut cfg = load_config(&common)?;
            let p = &mut cfg.packet;
            p.sigma_nm = sigma.or(p.sigma_nm);
            p.x0_nm = x0.or(p.x0_nm);
            p.e0_ev = e0.or(p.e0_ev);
            p.x_nm = x.or(p.x_nm);
            p.t_min_over_t0 = tmin.or(p.t_min_over_t0);
            p.t_max_over_t0 = tmax.or(p.t_max_over_t0);
            p.points = points.or(p.points);
            p.rel_tol = rel_tol.or(p.rel_tol);
            if truncate_negative_k {
                p.truncate_negative_k = Some(true);
            }
            if no_bound_states {
                p.include_bound_states = Some(false);
            }
            emit(&cfg, &commands::packet(&cfg)?)
        }
        Command::Sweep {
            common,
            family,
            axis,
            axis_min,
            axis_max,
            axis_points,
            axis_log,
            emin,
            emax,
            e_points,
            t_floor,
            t_min,
            band_lo,
            band_hi,
            base_v,
            window,
        } => {
            let mut cfg = load_config(&common)?;
            let s = &mut cfg.sweep;
            s.family = family.or(s.family.take());
            s.axis = axis.or(s.axis.take());
            s.axis_min = axis_min.or(s.axis_min);
            s.axis_max = axis_max.or(s.axis_max);
            s.axis_points = axis_points.or(s.axis_points);
            if axis_log {
                s.axis_log = Some(true);
            }
            s.emin_ev = emin.or(s.emin_ev);
            s.emax_ev = emax.or(s.emax_ev);
            s.e_points = e_points.or(s.e_points);
            s.t_floor = t_floor.or(s.t_floor);
            s.t_min = t_min.or(s.t_min);
            s.band_lo_ev = band_lo.or(s.band_lo_ev);
            s.band_hi_ev = band_hi.or(s.band_hi_ev);
            s.base_v_ev = base_v.or(s.base_v_ev);
            if let Some(m) = common.mass_ratio {
                s.base_mass_ratio = Some(m);
            }
            let (table, report) = commands::sweep(&cfg)?;
            if let Some(path) = window {
                let mut text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
                text.push('\n');
                write_out(Some(&path.display().to_string()), &text)?;
            }
            emit(&cfg, &table)
        }
        Command::Profile { common, margin } => {
            let cfg = load_config(&common)?;
            emit(&cfg, &commands::profile(&cfg, margin)?)
        }
        Command::Presets { output, format } => {
            let mut cfg = RunConfig::default();
            cfg.output.path = output.map(|p| p.display().to_string());
            if let Some(f) = format {
                cfg.output.format = Some(Format::from_name(&f)?);
            }
            emit(&cfg, &commands::presets()?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.render().to_string();
            return report("usage", msg.trim(), 2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.kind(), &e.message(), e.code()),
    }
}
