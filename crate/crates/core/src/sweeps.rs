//! Parallel parameter sweeps over pulse area, pulse width and dot–particle
//! distance, plus helpers to locate Rabi maxima in the resulting scans.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::adiabatic::{biexciton_population_adiabatic, two_photon_area};
use crate::dynamics::{Sampling, StepControl, POSITIVITY_TOL, TRACE_TOL};
use crate::error::{Error, Result};
use crate::scenario::{Observables, Scenario};

/// Roughly one point in this many keeps its full trajectory for an
/// invariant audit.
pub const DIAGNOSTIC_EVERY: u64 = 20;
const DIAGNOSTIC_SEED: u64 = 0x5eed_7a0b_2f1c_9e37;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    AreaPi,
    T0Ps,
    DNm,
}

impl AxisName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AxisName::AreaPi => "area_pi",
            AxisName::T0Ps => "t0_ps",
            AxisName::DNm => "d_nm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: AxisName,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub scale: AxisScale,
}

impl Axis {
    pub fn linear(name: AxisName, lo: f64, hi: f64, n: usize) -> Self {
        Self {
            name,
            lo,
            hi,
            n,
            scale: AxisScale::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Domain(format!(
                "axis {} needs n >= 2, got {}",
                self.name.as_str(),
                self.n
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::Domain(format!(
                "axis {} bounds must be finite",
                self.name.as_str()
            )));
        }
        if self.scale == AxisScale::Log && !(self.lo > 0.0 && self.hi > 0.0) {
            return Err(Error::Domain(format!(
                "log axis {} needs positive bounds",
                self.name.as_str()
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|k| {
                let u = k as f64 / last;
                match self.scale {
                    AxisScale::Linear => self.lo + (self.hi - self.lo) * u,
                    AxisScale::Log => (self.lo.ln() + (self.hi.ln() - self.lo.ln()) * u).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Rho33Readout,
    Rho22Readout,
    Rho33Max,
    Rho22Max,
}

impl Observable {
    pub const ALL: [Observable; 4] = [
        Observable::Rho33Readout,
        Observable::Rho22Readout,
        Observable::Rho33Max,
        Observable::Rho22Max,
    ];

    /// Column name in CSV outputs.
    pub fn as_str(&self) -> &'static str {
        match self {
            Observable::Rho33Readout => "rho33_readout",
            Observable::Rho22Readout => "rho22_readout",
            Observable::Rho33Max => "rho33_max",
            Observable::Rho22Max => "rho22_max",
        }
    }

    pub fn of(&self, o: &Observables) -> f64 {
        match self {
            Observable::Rho33Readout => o.rho33_readout,
            Observable::Rho22Readout => o.rho22_readout,
            Observable::Rho33Max => o.rho33_max,
            Observable::Rho22Max => o.rho22_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub fixed: Scenario,
    pub observables: Vec<Observable>,
}

impl SweepSpec {
    pub fn new(x_axis: Axis, y_axis: Axis, fixed: Scenario) -> Self {
        Self {
            x_axis,
            y_axis,
            fixed,
            observables: Observable::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.x_axis.validate()?;
        self.y_axis.validate()?;
        if self.x_axis.name == self.y_axis.name {
            return Err(Error::Domain("sweep axes must differ".into()));
        }
        let uses_distance = [self.x_axis.name, self.y_axis.name].contains(&AxisName::DNm);
        if uses_distance && self.fixed.geometry.is_none() {
            return Err(Error::Domain("a d_nm axis needs a hybrid configuration".into()));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("sweep spec serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn scenario_at(&self, x: f64, y: f64) -> Scenario {
        let mut s = self.fixed;
        for (name, v) in [(self.x_axis.name, x), (self.y_axis.name, y)] {
            apply_axis(&mut s, name, v);
        }
        s
    }
}

fn apply_axis(s: &mut Scenario, name: AxisName, v: f64) {
    match name {
        AxisName::AreaPi => s.pulse.area = v * PI,
        AxisName::T0Ps => s.pulse.width = v,
        AxisName::DNm => {
            if let Some(g) = s.geometry.as_mut() {
                g.center_distance_nm = v;
            }
        }
    }
}

/// Invariant audit of a retained trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSummary {
    pub samples: usize,
    pub max_trace_deviation: f64,
    pub min_eigenvalue: f64,
}

impl DiagnosticSummary {
    pub fn passed(&self) -> bool {
        self.max_trace_deviation < TRACE_TOL && self.min_eigenvalue > -POSITIVITY_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    /// Observables, or the failure reason.
    pub outcome: std::result::Result<Observables, String>,
    pub diagnostic: Option<DiagnosticSummary>,
}

impl PointRecord {
    pub fn status(&self) -> String {
        match &self.outcome {
            Ok(_) => "ok".into(),
            Err(reason) => format!("failed: {}", reason.replace([',', '\n'], ";")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMetadata {
    pub config_hash: String,
    pub integrator: String,
    pub readout_rule: String,
    pub x_axis: Axis,
    pub y_axis: Axis,
    /// Excluded from file output so reruns are byte-identical.
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    /// Row-major with `j` (y index) fastest.
    pub records: Vec<PointRecord>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn get(&self, i: usize, j: usize) -> &PointRecord {
        &self.records[i * self.y_values.len() + j]
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Observable along x at fixed y index; failed points become NaN.
    pub fn column(&self, j: usize, obs: Observable) -> Vec<f64> {
        (0..self.x_values.len())
            .map(|i| match &self.get(i, j).outcome {
                Ok(o) => obs.of(o),
                Err(_) => f64::NAN,
            })
            .collect()
    }

    pub fn diagnostics(&self) -> impl Iterator<Item = &DiagnosticSummary> {
        self.records.iter().filter_map(|r| r.diagnostic.as_ref())
    }

    /// CSV with a `# key = value` header block.
    pub fn to_csv(&self, extra_metadata: &[(String, String)]) -> String {
        let m = &self.metadata;
        let mut out = String::new();
        let mut meta = vec![
            ("config_hash".to_string(), m.config_hash.clone()),
            ("integrator".into(), m.integrator.clone()),
            ("readout_rule".into(), m.readout_rule.clone()),
            ("x_axis".into(), describe_axis(&m.x_axis)),
            ("y_axis".into(), describe_axis(&m.y_axis)),
            ("points".into(), self.records.len().to_string()),
            ("failed_points".into(), self.failures().to_string()),
        ];
        meta.extend_from_slice(extra_metadata);
        for (k, v) in meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str("x_value,y_value,rho33_readout,rho22_readout,rho33_max,rho22_max,status\n");
        for r in &self.records {
            let o = r.outcome.as_ref().ok();
            let v = |f: fn(&Observables) -> f64| o.map(f).unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.x,
                r.y,
                v(|o| o.rho33_readout),
                v(|o| o.rho22_readout),
                v(|o| o.rho33_max),
                v(|o| o.rho22_max),
                r.status()
            );
        }
        out
    }
}

fn describe_axis(a: &Axis) -> String {
    let scale = match a.scale {
        AxisScale::Linear => "linear",
        AxisScale::Log => "log",
    };
    format!("{} {}..{} n={} {}", a.name.as_str(), a.lo, a.hi, a.n, scale)
}

pub fn describe_step(step: &StepControl) -> String {
    match step {
        StepControl::FixedRk4 { dt } => format!("rk4 dt={dt}"),
        StepControl::Adaptive { rel_tol, abs_tol } => {
            format!("dopri5 rel_tol={rel_tol} abs_tol={abs_tol}")
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn keeps_diagnostic(index: usize) -> bool {
    splitmix64(index as u64 ^ DIAGNOSTIC_SEED).is_multiple_of(DIAGNOSTIC_EVERY)
}

fn audit(scenario: &Scenario) -> std::result::Result<DiagnosticSummary, String> {
    let traj = scenario.run(Sampling::EveryStep(1)).map_err(|e| e.to_string())?;
    let mut summary = DiagnosticSummary {
        samples: traj.len(),
        max_trace_deviation: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    for s in &traj.states {
        summary.max_trace_deviation = summary.max_trace_deviation.max((s.trace() - 1.0).abs());
        summary.min_eigenvalue = summary.min_eigenvalue.min(s.min_eigenvalue());
    }
    Ok(summary)
}

fn evaluate(
    scenario: &Scenario,
    index: usize,
) -> (
    std::result::Result<Observables, String>,
    Option<DiagnosticSummary>,
) {
    let outcome = scenario.observe().map_err(|e| e.to_string());
    let diagnostic = if outcome.is_ok() && keeps_diagnostic(index) {
        match audit(scenario) {
            Ok(d) if d.passed() => Some(d),
            Ok(d) => {
                return (
                    Err(format!(
                        "diagnostic audit failed (trace dev {:.3e}; min eigenvalue {:.3e})",
                        d.max_trace_deviation, d.min_eigenvalue
                    )),
                    Some(d),
                )
            }
            Err(e) => return (Err(e), None),
        }
    } else {
        None
    };
    (outcome, diagnostic)
}

fn with_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Run every grid point of `spec` on `workers` threads (rayon's global pool
/// when `None`). Failed points are recorded, never fatal.
pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let start = Instant::now();
    let xs = spec.x_axis.values();
    let ys = spec.y_axis.values();
    let ny = ys.len();
    let records = with_pool(workers, || {
        (0..xs.len() * ny)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / ny, k % ny);
                let scenario = spec.scenario_at(xs[i], ys[j]);
                let (outcome, diagnostic) = evaluate(&scenario, k);
                PointRecord {
                    i,
                    j,
                    x: xs[i],
                    y: ys[j],
                    outcome,
                    diagnostic,
                }
            })
            .collect::<Vec<_>>()
    })?;
    let metadata = SweepMetadata {
        config_hash: spec.hash(),
        integrator: describe_step(&spec.fixed.step),
        readout_rule: format!("t_d + {} t0", spec.fixed.readout_widths),
        x_axis: spec.x_axis,
        y_axis: spec.y_axis,
        wall_time: start.elapsed(),
    };
    Ok(SweepResult {
        x_values: xs,
        y_values: ys,
        records,
        metadata,
    })
}

/// Grid over pulse area (x, units of π) and pulse width t0 (y, ps).
pub fn sweep_area_duration(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepResult> {
    if spec.x_axis.name != AxisName::AreaPi || spec.y_axis.name != AxisName::T0Ps {
        return Err(Error::Precondition(
            "area-duration sweep needs axes (area_pi, t0_ps)".into(),
        ));
    }
    run_sweep(spec, workers)
}

/// Grid over pulse area (x, units of π) and center distance d (y, nm); the
/// enhancement and feedback are recomputed for every d.
pub fn sweep_area_distance(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepResult> {
    if spec.x_axis.name != AxisName::AreaPi || spec.y_axis.name != AxisName::DNm {
        return Err(Error::Precondition(
            "area-distance sweep needs axes (area_pi, d_nm)".into(),
        ));
    }
    run_sweep(spec, workers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaScanRecord {
    /// Incident area in radians.
    pub area: f64,
    pub outcome: std::result::Result<Observables, String>,
    /// Two-photon area of the perturbative theory (no correction prefactor).
    pub two_photon_area: f64,
    /// sin²(A2 / 2).
    pub rho33_adiabatic: f64,
}

/// One-dimensional scan over incident areas (radians) with the adiabatic
/// overlay evaluated at each point.
pub fn area_scan(areas: &[f64], fixed: &Scenario, workers: Option<usize>) -> Result<Vec<AreaScanRecord>> {
    let base = fixed.adiabatic_inputs(1.0)?;
    with_pool(workers, || {
        areas
            .par_iter()
            .map(|&area| {
                let mut s = *fixed;
                s.pulse.area = area;
                let inputs = crate::adiabatic::AdiabaticInputs { area, ..base };
                let a2 = two_photon_area(&inputs);
                AreaScanRecord {
                    area,
                    outcome: s.observe().map_err(|e| e.to_string()),
                    two_photon_area: a2,
                    rho33_adiabatic: biexciton_population_adiabatic(a2),
                }
            })
            .collect()
    })
}

pub fn area_scan_csv(records: &[AreaScanRecord], metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out.push_str("area_pi,rho33_readout,rho22_readout,rho33_max,rho22_max,a2_rad,rho33_adiabatic,status\n");
    for r in records {
        let o = r.outcome.as_ref().ok();
        let v = |f: fn(&Observables) -> f64| o.map(f).unwrap_or(f64::NAN);
        let status = match &r.outcome {
            Ok(_) => "ok".to_string(),
            Err(e) => format!("failed: {}", e.replace([',', '\n'], ";")),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.area / PI,
            v(|o| o.rho33_readout),
            v(|o| o.rho22_readout),
            v(|o| o.rho33_max),
            v(|o| o.rho22_max),
            r.two_photon_area,
            r.rho33_adiabatic,
            status
        );
    }
    out
}

/// Topographic prominence of every strict local maximum of `ys`, as
/// `(index, prominence)`. NaNs break the scan into independent segments.
pub fn local_maxima(ys: &[f64]) -> Vec<(usize, f64)> {
    let n = ys.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let y = ys[i];
        if !(y > ys[i - 1] || (y == ys[i - 1] && plateau_rises(ys, i))) || !(y > ys[i + 1]) {
            continue;
        }
        let base = |range: &mut dyn Iterator<Item = usize>| {
            let mut lowest = y;
            for k in range {
                if ys[k].is_nan() || ys[k] > y {
                    break;
                }
                lowest = lowest.min(ys[k]);
            }
            lowest
        };
        let left = base(&mut (0..i).rev());
        let right = base(&mut (i + 1..n));
        out.push((i, y - left.max(right)));
    }
    out
}

fn plateau_rises(ys: &[f64], i: usize) -> bool {
    let mut k = i;
    while k > 0 && ys[k - 1] == ys[i] {
        k -= 1;
    }
    k > 0 && ys[k - 1] < ys[i]
}

/// Number of local maxima with prominence at least `min_prominence`.
pub fn count_maxima(ys: &[f64], min_prominence: f64) -> usize {
    local_maxima(ys)
        .into_iter()
        .filter(|&(_, p)| p >= min_prominence)
        .count()
}

/// Abscissa of the first local maximum with prominence at least
/// `min_prominence`, refined by a parabola through its neighbours.
pub fn first_maximum(xs: &[f64], ys: &[f64], min_prominence: f64) -> Option<f64> {
    let (i, _) = local_maxima(ys).into_iter().find(|&(_, p)| p >= min_prominence)?;
    let (a, b, c) = (ys[i - 1], ys[i], ys[i + 1]);
    let curvature = a - 2.0 * b + c;
    let h_left = xs[i] - xs[i - 1];
    let h_right = xs[i + 1] - xs[i];
    if curvature >= 0.0 || (h_left - h_right).abs() > 1e-9 * h_left.abs() {
        return Some(xs[i]);
    }
    Some(xs[i] + 0.5 * h_left * (a - c) / curvature)
}
