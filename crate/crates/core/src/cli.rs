//! `tpro` command line: config loading, flag overrides, subcommand dispatch
//! and output writing.
//!
//! Exit codes: 0 success, 2 usage, 10–15 config errors (see
//! [`ConfigError::exit_code`]), 20 numeric error, 30 sweep finished with
//! failed points, 40 I/O error.

use clap::{Args, Parser, Subcommand};
use std::f64::consts::PI;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::adiabatic::{area_first_max, FIRST_MAX_CORRECTION};
use crate::config::{ConfigError, RunConfig};
use crate::error::Error;
use crate::materials::{find_lsp_resonance, re_alpha_argmin, spectrum};
use crate::pulse::rabi_amplitude_external;
use crate::scenario::Scenario;
use crate::sweeps::{
    area_scan, area_scan_csv, count_maxima, describe_step, first_maximum, sweep_area_distance,
    sweep_area_duration, Axis, AxisName, AxisScale, SweepResult, SweepSpec,
};
use crate::units::{ev_to_rad_per_ps, rad_per_ps_to_ev, rad_per_ps_to_mev};

pub const WORKERS_ENV: &str = "TPRO_WORKERS";

/// Minimum prominence of a population maximum in the printed summaries.
pub const MAXIMA_PROMINENCE: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(
    name = "tpro",
    version,
    about = "Two-photon Rabi oscillations of a quantum dot near a metal nanosphere"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default, Clone)]
pub struct CommonArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Pulse area in units of π.
    #[arg(long, global = true)]
    pub area_pi: Option<f64>,
    /// Pulse width t0 in ps.
    #[arg(long, global = true)]
    pub t0_ps: Option<f64>,
    /// Pulse delay t_d in ps.
    #[arg(long, global = true)]
    pub td_ps: Option<f64>,
    /// Drop the nanoparticle.
    #[arg(long, global = true)]
    pub isolated: bool,
    /// Center distance in nm.
    #[arg(long, global = true)]
    pub d_nm: Option<f64>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Sweep worker threads (overrides TPRO_WORKERS).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand, Clone)]
pub enum Command {
    /// Drude permittivity and dipole polarizability spectrum.
    Materials {
        /// Photon energies lo:hi:n in eV.
        #[arg(long, default_value = "1.8:3.0:601")]
        ev_range: RangeArg,
    },
    /// Enhancement factor and feedback constants of the configured geometry.
    HybridInfo,
    /// Density-matrix time series from the ground state.
    Dynamics,
    /// One-dimensional scan over the pulse area with the adiabatic overlay.
    AreaScan {
        /// Areas lo:hi:n in units of π.
        #[arg(long, default_value = "0:12:601")]
        area_range: RangeArg,
    },
    /// Area × pulse-width grid.
    SweepAreaDuration {
        /// Areas lo:hi:n in units of π.
        #[arg(long, default_value = "0:12:121")]
        area_range: RangeArg,
        /// Widths lo:hi:n in ps; append `:log` for logarithmic spacing.
        #[arg(long, default_value = "0.2:3.3:32")]
        t0_range: RangeArg,
    },
    /// Area × center-distance grid.
    SweepAreaDistance {
        /// Areas lo:hi:n in units of π.
        #[arg(long, default_value = "0:12:121")]
        area_range: RangeArg,
        /// Distances lo:hi:n in nm.
        #[arg(long, default_value = "18:40:23")]
        d_range: RangeArg,
    },
    /// Adiabatic first-maximum area versus pulse width, isolated and hybrid.
    Adiabatic {
        /// Widths lo:hi:n in ps.
        #[arg(long, default_value = "0.2:3.3:32")]
        t0_range: RangeArg,
        /// Multiplier on the adiabatic first-maximum area.
        #[arg(long, default_value_t = FIRST_MAX_CORRECTION)]
        correction: f64,
    },
}

/// `lo:hi:n` with an optional `:log` suffix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeArg {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub scale: AxisScale,
}

impl RangeArg {
    pub fn axis(&self, name: AxisName) -> Axis {
        Axis {
            name,
            lo: self.lo,
            hi: self.hi,
            n: self.n,
            scale: self.scale,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.axis(AxisName::AreaPi).values()
    }
}

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let scale = match parts.get(3).copied() {
            None => AxisScale::Linear,
            Some("log") => AxisScale::Log,
            Some("lin") | Some("linear") => AxisScale::Linear,
            Some(other) => return Err(format!("unknown scale `{other}`")),
        };
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("expected lo:hi:n, got `{s}`"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
        let r = RangeArg {
            lo: num(parts[0])?,
            hi: num(parts[1])?,
            n: parts[2]
                .trim()
                .parse()
                .map_err(|e| format!("`{}`: {e}", parts[2]))?,
            scale,
        };
        r.axis(AxisName::AreaPi).validate().map_err(|e| e.to_string())?;
        Ok(r)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numeric error: {0}")]
    Numeric(#[from] Error),
    #[error("{failed} of {total} sweep points failed")]
    PartialFailure { failed: usize, total: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(e) => e.exit_code(),
            CliError::Numeric(_) => 20,
            CliError::PartialFailure { .. } => 30,
            CliError::Io(_) => 40,
        }
    }
}

/// Load the config file (or defaults) and apply flag overrides.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(a) = common.area_pi {
        cfg.pulse.area_pi = a;
    }
    if let Some(t0) = common.t0_ps {
        cfg.pulse.t0_ps = t0;
    }
    if let Some(td) = common.td_ps {
        cfg.pulse.td_ps = td;
    }
    if common.isolated {
        cfg.isolated = true;
    }
    cfg.normalize();
    if let Some(d) = common.d_nm {
        match cfg.geometry.as_mut() {
            Some(g) => g.distance_nm = d,
            None => {
                return Err(ConfigError::Conflict(
                    "--d-nm cannot be used with an isolated configuration".into(),
                ))
            }
        }
    }
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Worker count from `--workers` or `TPRO_WORKERS`; `None` uses every core.
pub fn worker_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n.max(1)));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(|n| Some(n.max(1)))
            .map_err(|_| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        _ => Ok(None),
    }
}

struct Output {
    dir: PathBuf,
    header: Vec<(String, String)>,
}

impl Output {
    fn new(cfg: &RunConfig, command: &str) -> Result<Self, CliError> {
        let dir = PathBuf::from(&cfg.output.dir);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            header: vec![
                ("config_hash".into(), cfg.hash()),
                ("command".into(), command.into()),
                ("tpro_version".into(), env!("CARGO_PKG_VERSION").into()),
            ],
        })
    }

    fn header_block(&self, extra: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in self.header.iter().chain(extra) {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }

    fn write(&self, name: &str, content: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(path)
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn materials(cfg: &RunConfig, out: &Output, range: &RangeArg) -> Result<(), CliError> {
    let scenario = cfg.scenario();
    let radius = cfg.geometry.as_ref().map_or(12.0, |g| g.radius_nm);
    let lo = ev_to_rad_per_ps(range.lo);
    let hi = ev_to_rad_per_ps(range.hi);
    let resonance = rad_per_ps_to_ev(find_lsp_resonance(&scenario.metal, scenario.eps_b, lo, hi)?);
    let argmin = rad_per_ps_to_ev(re_alpha_argmin(&scenario.metal, scenario.eps_b, lo, hi, 4001)?);
    println!("LSP resonance (Re eps_m = -2 eps_b): {resonance:.6} eV");
    println!("argmin Re alpha:                      {argmin:.6} eV");
    let points = spectrum(
        &scenario.metal,
        scenario.eps_b,
        radius,
        range.lo,
        range.hi,
        range.n,
    )?;
    let mut csv = out.header_block(&[
        kv("radius_nm", radius),
        kv("lsp_resonance_ev", resonance),
        kv("re_alpha_argmin_ev", argmin),
    ]);
    csv.push_str("hbar_omega_eV,re_eps,im_eps,re_alpha_m3,im_alpha_m3\n");
    for p in points {
        let _ = writeln!(
            csv,
            "{},{},{},{:e},{:e}",
            p.hbar_omega_ev, p.eps.re, p.eps.im, p.alpha_m3.re, p.alpha_m3.im
        );
    }
    out.write("materials.csv", &csv)?;
    Ok(())
}

fn hybrid_info(cfg: &RunConfig) -> Result<(), CliError> {
    let scenario = cfg.scenario();
    let fb = scenario.feedback()?;
    let omega0 = scenario.carrier_frequency();
    println!("carrier hbar*omega0   = {:.6} eV", rad_per_ps_to_ev(omega0));
    println!("eps_s'                = {}", fb.eps_s_eff);
    match scenario.geometry {
        None => println!("isolated dot: no enhancement, no feedback"),
        Some(g) => {
            println!(
                "radius / distance     = {} nm / {} nm",
                g.mnp_radius_nm, g.center_distance_nm
            );
            println!(
                "enhancement           = {:.6} {:+.6}i  (|.| = {:.6})",
                fb.enhancement.re,
                fb.enhancement.im,
                fb.enhancement.norm()
            );
            println!("multipole terms       = {}", fb.terms);
            for (name, g) in [("G1", fb.g1), ("G2", fb.g2), ("G3", fb.g3)] {
                println!(
                    "{name} = {:.6e} {:+.6e}i rad/ps   hbar*{name} = {:.6} {:+.6}i meV (|.| = {:.6} meV)",
                    g.re,
                    g.im,
                    rad_per_ps_to_mev(g.re),
                    rad_per_ps_to_mev(g.im),
                    rad_per_ps_to_mev(g.norm())
                );
            }
        }
    }
    Ok(())
}

fn dynamics(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let scenario = cfg.scenario();
    let traj = scenario.run(cfg.sampling())?;
    let p = scenario.pulse;
    let peak = p.peak();
    let mut csv = out.header_block(&[
        kv("integrator", describe_step(&scenario.step)),
        kv("samples", traj.len()),
    ]);
    csv.push_str(
        "t_ps,rho11,rho22,rho33,re_rho21,im_rho21,re_rho32,im_rho32,re_rho31,im_rho31,pulse_envelope_norm\n",
    );
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let envelope = if peak > 0.0 {
            rabi_amplitude_external(&p, *t) / peak
        } else {
            0.0
        };
        let _ = writeln!(
            csv,
            "{t},{},{},{},{},{},{},{},{},{},{envelope}",
            s.rho11, s.rho22, s.rho33, s.rho21.re, s.rho21.im, s.rho32.re, s.rho32.im, s.rho31.re, s.rho31.im
        );
    }
    out.write("dynamics.csv", &csv)?;
    if let Some((t, last)) = traj.last() {
        let max33 = traj.states.iter().map(|s| s.rho33).fold(0.0, f64::max);
        println!(
            "t = {t} ps: rho11 = {:.6}, rho22 = {:.6}, rho33 = {:.6}; max rho33 = {max33:.6}",
            last.rho11, last.rho22, last.rho33
        );
    }
    Ok(())
}

fn run_area_scan(
    cfg: &RunConfig,
    out: &Output,
    range: &RangeArg,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let scenario = cfg.scenario();
    let areas_pi = range.values();
    let areas: Vec<f64> = areas_pi.iter().map(|a| a * PI).collect();
    let records = area_scan(&areas, &scenario, workers)?;
    let failed = records.iter().filter(|r| r.outcome.is_err()).count();
    let readout: Vec<f64> = records
        .iter()
        .map(|r| r.outcome.as_ref().map_or(f64::NAN, |o| o.rho33_readout))
        .collect();
    let maxima = count_maxima(&readout, MAXIMA_PROMINENCE);
    let first = first_maximum(&areas_pi, &readout, MAXIMA_PROMINENCE);
    let csv = area_scan_csv(
        &records,
        &[
            out.header.clone(),
            vec![
                kv("integrator", describe_step(&scenario.step)),
                kv("readout_rule", format!("t_d + {} t0", scenario.readout_widths)),
                kv("points", records.len()),
                kv("failed_points", failed),
            ],
        ]
        .concat(),
    );
    out.write("area_scan.csv", &csv)?;
    println!(
        "rho33 maxima (prominence >= {MAXIMA_PROMINENCE}): {maxima}; first at {} pi",
        first.map_or("n/a".into(), |a| format!("{a:.4}"))
    );
    if failed > 0 {
        return Err(CliError::PartialFailure {
            failed,
            total: records.len(),
        });
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct SweepManifest<'a> {
    command: &'a str,
    csv: String,
    config_hash: String,
    spec_hash: String,
    integrator: String,
    readout_rule: String,
    points: usize,
    failed_points: usize,
    x_axis: Axis,
    y_axis: Axis,
    config: &'a RunConfig,
}

fn write_sweep(
    cfg: &RunConfig,
    out: &Output,
    command: &str,
    spec: &SweepSpec,
    result: &SweepResult,
) -> Result<(), CliError> {
    let stem = command.replace('-', "_");
    let csv_name = format!("{stem}.csv");
    let csv = result.to_csv(&[
        kv("run_config_hash", cfg.hash()),
        kv("command", command),
        kv("tpro_version", env!("CARGO_PKG_VERSION")),
    ]);
    out.write(&csv_name, &csv)?;
    let manifest = SweepManifest {
        command,
        csv: csv_name,
        config_hash: cfg.hash(),
        spec_hash: spec.hash(),
        integrator: result.metadata.integrator.clone(),
        readout_rule: result.metadata.readout_rule.clone(),
        points: result.records.len(),
        failed_points: result.failures(),
        x_axis: spec.x_axis,
        y_axis: spec.y_axis,
        config: cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    out.write(&format!("{stem}_manifest.toml"), &text)?;
    log::info!(
        "{command}: {} points in {:.2?}",
        result.records.len(),
        result.metadata.wall_time
    );

    for (j, y) in result.y_values.iter().enumerate() {
        let col = result.column(j, crate::sweeps::Observable::Rho33Readout);
        let first = first_maximum(&result.x_values, &col, MAXIMA_PROMINENCE);
        println!(
            "{} = {y}: {} maxima, first at {} pi",
            spec.y_axis.name.as_str(),
            count_maxima(&col, MAXIMA_PROMINENCE),
            first.map_or("n/a".into(), |a| format!("{a:.4}"))
        );
    }
    let failed = result.failures();
    if failed > 0 {
        return Err(CliError::PartialFailure {
            failed,
            total: result.records.len(),
        });
    }
    Ok(())
}

fn adiabatic(cfg: &RunConfig, out: &Output, range: &RangeArg, correction: f64) -> Result<(), CliError> {
    let hybrid_cfg = {
        let mut c = cfg.clone();
        c.isolated = false;
        c.normalize();
        c
    };
    let isolated_cfg = {
        let mut c = cfg.clone();
        c.isolated = true;
        c.normalize();
        c
    };
    for (label, c) in [("isolated", isolated_cfg), ("hybrid", hybrid_cfg)] {
        let base: Scenario = c.scenario();
        let mut csv = out.header_block(&[
            kv("setup", label),
            kv("setup_config_hash", c.hash()),
            kv("correction_prefactor", correction),
        ]);
        csv.push_str("t0_ps,area_first_max_rad,area_first_max_pi_units\n");
        let mut warnings = 0;
        for t0 in range.axis(AxisName::T0Ps).values() {
            let mut s = base;
            s.pulse.width = t0;
            let inputs = s.adiabatic_inputs(correction)?;
            let area = area_first_max(&inputs);
            if (crate::adiabatic::AdiabaticInputs { area, ..inputs }).perturbative_warning() {
                warnings += 1;
            }
            let _ = writeln!(csv, "{t0},{area},{}", area / PI);
        }
        if warnings > 0 {
            log::warn!("{label}: {warnings} widths outside the perturbative regime");
        }
        out.write(&format!("adiabatic_{label}.csv"), &csv)?;
    }
    Ok(())
}

/// Execute a parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli.common)?;
    let workers = worker_count(cli.common.workers)?;
    let name = command_name(&cli.command);
    match &cli.command {
        Command::HybridInfo => hybrid_info(&cfg),
        Command::Materials { ev_range } => materials(&cfg, &Output::new(&cfg, name)?, ev_range),
        Command::Dynamics => dynamics(&cfg, &Output::new(&cfg, name)?),
        Command::AreaScan { area_range } => {
            run_area_scan(&cfg, &Output::new(&cfg, name)?, area_range, workers)
        }
        Command::SweepAreaDuration { area_range, t0_range } => {
            let spec = SweepSpec::new(
                area_range.axis(AxisName::AreaPi),
                t0_range.axis(AxisName::T0Ps),
                cfg.scenario(),
            );
            let result = sweep_area_duration(&spec, workers)?;
            write_sweep(&cfg, &Output::new(&cfg, name)?, name, &spec, &result)
        }
        Command::SweepAreaDistance { area_range, d_range } => {
            if cfg.isolated {
                return Err(
                    ConfigError::Conflict("sweep-area-distance needs a hybrid configuration".into()).into(),
                );
            }
            let spec = SweepSpec::new(
                area_range.axis(AxisName::AreaPi),
                d_range.axis(AxisName::DNm),
                cfg.scenario(),
            );
            let result = sweep_area_distance(&spec, workers)?;
            write_sweep(&cfg, &Output::new(&cfg, name)?, name, &spec, &result)
        }
        Command::Adiabatic { t0_range, correction } => {
            adiabatic(&cfg, &Output::new(&cfg, name)?, t0_range, *correction)
        }
    }
}

pub fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Materials { .. } => "materials",
        Command::HybridInfo => "hybrid-info",
        Command::Dynamics => "dynamics",
        Command::AreaScan { .. } => "area-scan",
        Command::SweepAreaDuration { .. } => "sweep-area-duration",
        Command::SweepAreaDistance { .. } => "sweep-area-distance",
        Command::Adiabatic { .. } => "adiabatic",
    }
}

/// Parse `args`, run, report errors on stderr and return the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn output_dir(cfg: &RunConfig) -> &Path {
    Path::new(&cfg.output.dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        let r: RangeArg = "0:12:121".parse().unwrap();
        assert_eq!((r.lo, r.hi, r.n, r.scale), (0.0, 12.0, 121, AxisScale::Linear));
        let l: RangeArg = "0.1:10:3:log".parse().unwrap();
        assert_eq!(l.scale, AxisScale::Log);
        assert!("1:2".parse::<RangeArg>().is_err());
        assert!("1:2:x".parse::<RangeArg>().is_err());
        assert!("1:2:5:cubic".parse::<RangeArg>().is_err());
        assert!("0:1:5:log".parse::<RangeArg>().is_err());
    }

    #[test]
    fn overrides_apply() {
        let common = CommonArgs {
            area_pi: Some(50.0),
            t0_ps: Some(30.0),
            td_ps: Some(100.0),
            d_nm: Some(25.0),
            ..Default::default()
        };
        let cfg = resolve_config(&common).unwrap();
        assert_eq!(cfg.pulse.area_pi, 50.0);
        assert_eq!(cfg.geometry.unwrap().distance_nm, 25.0);

        let iso = CommonArgs {
            isolated: true,
            d_nm: Some(25.0),
            ..Default::default()
        };
        assert!(matches!(resolve_config(&iso), Err(ConfigError::Conflict(_))));

        let bad = CommonArgs {
            t0_ps: Some(-1.0),
            ..Default::default()
        };
        let err = resolve_config(&bad).unwrap_err();
        assert!(err.to_string().contains("pulse.t0_ps"));
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(main_with(["tpro", "frobnicate"]), 2);
        assert_eq!(main_with(["tpro"]), 2);
    }
}
