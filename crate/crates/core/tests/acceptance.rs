//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` are evaluated and reported like the rest,
//! but their failure does not fail the run. See README.md.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

use tpro::adiabatic::{
    area_first_max, biexciton_population_adiabatic, two_photon_area, FIRST_MAX_CORRECTION,
};
use tpro::dynamics::{
    integrate, rhs, rhs_self_action_form, DensityMatrix, IntegratorControl, Sampling, StepControl,
    Trajectory, POSITIVITY_TOL, TRACE_TOL,
};
use tpro::hybrid::{enhancement_factor, HybridGeometry};
use tpro::materials::{dipole_polarizability, find_lsp_resonance, metal_permittivity};
use tpro::scenario::Scenario;
use tpro::sweeps::{area_scan, count_maxima, first_maximum, sweep_area_distance, Axis, AxisName, SweepSpec};
use tpro::units::{ev_to_rad_per_ps, rad_per_ps_to_ev, rad_per_ps_to_mev};
use tpro::C64;

const KNOWN_RED: &[u32] = &[4, 5];
const PROMINENCE: f64 = 0.05;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Worst invariant values seen across every trajectory the suite retains.
#[derive(Default)]
struct Audit {
    trajectories: usize,
    max_trace_dev: f64,
    min_eig: f64,
    scan_points: usize,
    scan_failures: usize,
}

impl Audit {
    fn new() -> Self {
        Self {
            min_eig: f64::INFINITY,
            ..Default::default()
        }
    }

    fn record(&mut self, traj: &Trajectory) {
        self.trajectories += 1;
        for s in &traj.states {
            self.max_trace_dev = self.max_trace_dev.max((s.trace() - 1.0).abs());
            self.min_eig = self.min_eig.min(s.min_eigenvalue());
        }
    }
}

fn t0_from_db(units: f64) -> f64 {
    units / Scenario::default().sqd.biexciton_binding
}

fn scenario(hybrid: bool, area_pi: f64, td: f64, t0: f64) -> Scenario {
    let mut s = if hybrid {
        Scenario::default()
    } else {
        Scenario::isolated()
    };
    s.pulse.area = area_pi * PI;
    s.pulse.delay = td;
    s.pulse.width = t0;
    s
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// ρ33 at readout over `areas_pi`; failed points become NaN.
fn readout_scan(fixed: &Scenario, areas_pi: &[f64], audit: &mut Audit) -> Vec<f64> {
    let areas: Vec<f64> = areas_pi.iter().map(|a| a * PI).collect();
    let records = area_scan(&areas, fixed, None).expect("area scan");
    audit.scan_points += records.len();
    audit.scan_failures += records.iter().filter(|r| r.outcome.is_err()).count();
    records
        .iter()
        .map(|r| r.outcome.as_ref().map_or(f64::NAN, |o| o.rho33_readout))
        .collect()
}

fn criterion_1() -> Verdict {
    let s = Scenario::default();
    let w = find_lsp_resonance(&s.metal, s.eps_b, ev_to_rad_per_ps(1.5), ev_to_rad_per_ps(3.5));
    match w {
        Ok(w) => {
            let ev = rad_per_ps_to_ev(w);
            verdict(
                (ev - 2.34).abs() <= 0.05,
                format!("hbar*omega_sp = {ev:.4} eV (target 2.34 +- 0.05)"),
            )
        }
        Err(e) => verdict(false, e.to_string()),
    }
}

fn criterion_2() -> Verdict {
    let s = Scenario::default();
    let g = HybridGeometry::new(12.0, 18.0).unwrap();
    let eps = metal_permittivity(&s.metal, s.sqd.omega3() / 2.0).unwrap();
    let alpha = dipole_polarizability(g.mnp_radius_nm, eps, s.eps_b).unwrap();
    let enh = enhancement_factor(&alpha, g.center_distance_nm).unwrap().norm();
    verdict(
        (enh - 2.2).abs() <= 0.2,
        format!("|enhancement| = {enh:.4} (target 2.2 +- 0.2)"),
    )
}

fn criterion_3() -> Verdict {
    let fb = Scenario::default().feedback().unwrap();
    let mags: Vec<f64> = [fb.g1, fb.g2, fb.g3]
        .iter()
        .map(|g| rad_per_ps_to_mev(g.norm()))
        .collect();
    let in_band = mags.iter().all(|m| (0.05..=1.0).contains(m));
    let rel = (fb.g1 * fb.g2 - fb.g3 * fb.g3).norm() / (fb.g3 * fb.g3).norm();
    verdict(
        in_band && rel <= 1e-12,
        format!(
            "hbar|G1..3| = {:.4}, {:.4}, {:.4} meV (band [0.05, 1]); |G1G2 - G3^2|/|G3^2| = {rel:.1e}",
            mags[0], mags[1], mags[2]
        ),
    )
}

fn criterion_4(audit: &mut Audit) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for hybrid in [false, true] {
        for units in [8.0, 12.0, 20.0, 50.0] {
            let fixed = scenario(hybrid, 0.0, 0.0, t0_from_db(units));
            let predicted = area_first_max(&fixed.adiabatic_inputs(FIRST_MAX_CORRECTION).unwrap()) / PI;
            let areas = grid(0.0, 2.5 * predicted, 251);
            let ys = readout_scan(&fixed, &areas, audit);
            let measured = first_maximum(&areas, &ys, PROMINENCE);
            let ok = measured.is_some_and(|m| (m / predicted - 1.0).abs() <= 0.1);
            pass &= ok;
            parts.push(format!(
                "{}{units}/dB: ode {} vs 0.62*A {predicted:.3}pi",
                if hybrid { "hyb " } else { "iso " },
                measured.map_or("none".into(), |m| format!(
                    "{m:.3}pi (ratio {:.3})",
                    m / predicted * FIRST_MAX_CORRECTION
                )),
            ));
        }
    }
    verdict(pass, parts.join("; "))
}

fn criterion_5(audit: &mut Audit) -> Verdict {
    let fixed = scenario(false, 0.0, 0.0, t0_from_db(20.0));
    let inputs = fixed.adiabatic_inputs(1.0).unwrap();
    // A2 = 4π closes the second cycle; A2 grows with A².
    let hi = 2.0 * area_first_max(&inputs) / PI;
    let areas = grid(0.0, hi, 201);
    let ys = readout_scan(&fixed, &areas, audit);
    let (mut worst, mut at) = (0.0_f64, 0.0);
    for (a, y) in areas.iter().zip(&ys) {
        let a2 = two_photon_area(&tpro::adiabatic::AdiabaticInputs {
            area: a * PI,
            ..inputs
        });
        let dev = (y - biexciton_population_adiabatic(a2)).abs();
        if dev.is_nan() || dev > worst {
            worst = dev;
            at = *a;
        }
    }
    verdict(
        worst <= 0.1,
        format!("max |rho33 - sin^2(A2/2)| = {worst:.3} at A = {at:.3}pi over [0, {hi:.3}pi] (bound 0.1)"),
    )
}

fn criterion_6(audit: &mut Audit) -> Verdict {
    let long = scenario(false, 50.0, 100.0, 30.0);
    let short = scenario(false, 9.0, 2.0, 2.0 / 3.0);
    let run = |s: &Scenario| s.run(Sampling::EveryStep(1)).expect("trajectory");
    let (tl, ts) = (run(&long), run(&short));
    audit.record(&tl);
    audit.record(&ts);
    let peak33 = tl.states.iter().map(|s| s.rho33).fold(0.0, f64::max);
    let residual_long = tl.last().unwrap().1.rho22;
    let residual_short = ts.last().unwrap().1.rho22;
    verdict(
        peak33 < 1.0 && residual_long > 0.05 && residual_short < 0.01,
        format!(
            "long: peak rho33 = {peak33:.4}, rho22(td+6t0) = {residual_long:.4} (> 0.05); short: rho22 = {residual_short:.2e} (< 0.01)"
        ),
    )
}

fn criterion_7(audit: &mut Audit) -> Verdict {
    let areas = grid(0.0, 12.0, 601);
    let t0 = t0_from_db(20.0);
    let iso = readout_scan(&scenario(false, 0.0, 0.0, t0), &areas, audit);
    let hyb = readout_scan(&scenario(true, 0.0, 0.0, t0), &areas, audit);
    let (ni, nh) = (count_maxima(&iso, PROMINENCE), count_maxima(&hyb, PROMINENCE));
    verdict(
        ni > 0 && nh >= 2 * ni,
        format!("rho33 maxima over [0, 12pi]: isolated {ni}, hybrid {nh} (need hybrid >= 2x isolated)"),
    )
}

fn criterion_8(audit: &mut Audit) -> Verdict {
    let fixed = scenario(true, 0.0, 0.0, t0_from_db(20.0));
    let spec = SweepSpec::new(
        Axis::linear(AxisName::AreaPi, 0.0, 5.0, 251),
        Axis::linear(AxisName::DNm, 18.0, 40.0, 12),
        fixed,
    );
    let result = sweep_area_distance(&spec, None).expect("sweep");
    audit.scan_points += result.records.len();
    audit.scan_failures += result.failures();
    let firsts: Vec<Option<f64>> = (0..result.y_values.len())
        .map(|j| {
            let col = result.column(j, tpro::sweeps::Observable::Rho33Readout);
            first_maximum(&result.x_values, &col, PROMINENCE)
        })
        .collect();
    let increasing =
        firsts.iter().all(Option::is_some) && firsts.windows(2).all(|w| w[1].unwrap() > w[0].unwrap());
    let shown: Vec<String> = result
        .y_values
        .iter()
        .zip(&firsts)
        .map(|(d, a)| format!("{d:.0}:{}", a.map_or("none".into(), |a| format!("{a:.3}"))))
        .collect();
    verdict(
        increasing,
        format!("first-max area (pi) by d (nm): {}", shown.join(" ")),
    )
}

fn criterion_9(audit: &mut Audit) -> Verdict {
    let mut worst_fixed_vs_adaptive = 0.0_f64;
    for s in [
        scenario(false, 9.0, 2.0, 2.0 / 3.0),
        scenario(true, 9.0, 2.0, 2.0 / 3.0),
        scenario(false, 50.0, 100.0, 30.0),
        scenario(true, 50.0, 100.0, 30.0),
    ] {
        let ctx = s.context().unwrap();
        let span = s.span();
        let sampling = Sampling::Interval(s.pulse.width / 10.0);
        let adaptive = integrate(
            &DensityMatrix::ground(),
            &ctx,
            span,
            &IntegratorControl {
                step: StepControl::default(),
                sampling,
            },
        )
        .expect("adaptive");
        let fixed = integrate(
            &DensityMatrix::ground(),
            &ctx,
            span,
            &IntegratorControl {
                step: StepControl::reference_rk4(&ctx),
                sampling,
            },
        )
        .expect("rk4");
        audit.record(&adaptive);
        audit.record(&fixed);
        for (a, b) in adaptive.states.iter().zip(&fixed.states) {
            worst_fixed_vs_adaptive = worst_fixed_vs_adaptive.max(a.max_abs_diff(b));
        }
    }

    let ctx = scenario(true, 9.0, 2.0, 2.0 / 3.0).context().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_form = 0.0_f64;
    for _ in 0..1000 {
        let m = nalgebra::Matrix3::from_fn(|_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let rho = m * m.adjoint();
        let rho = rho / rho.trace();
        let state = DensityMatrix {
            rho11: rho[(0, 0)].re,
            rho22: rho[(1, 1)].re,
            rho33: rho[(2, 2)].re,
            rho21: rho[(1, 0)],
            rho32: rho[(2, 1)],
            rho31: rho[(2, 0)],
        };
        let t = rng.random_range(-2.0..6.0);
        let a = rhs(&state, t, &ctx);
        let b = rhs_self_action_form(&state, t, &ctx);
        worst_form = worst_form.max(a.max_abs_diff(&b));
    }

    let pass = audit.max_trace_dev < TRACE_TOL
        && audit.min_eig > -POSITIVITY_TOL
        && audit.scan_failures == 0
        && worst_fixed_vs_adaptive < 1e-6
        && worst_form < 1e-12;
    verdict(
        pass,
        format!(
            "{} retained trajectories: max |Tr-1| = {:.1e}, min eig = {:.1e}; {} scan points, {} failed (per-step checks); rk4 vs dopri5 = {:.1e}; expanded vs compact rhs = {:.1e}",
            audit.trajectories,
            audit.max_trace_dev,
            audit.min_eig,
            audit.scan_points,
            audit.scan_failures,
            worst_fixed_vs_adaptive,
            worst_form
        ),
    )
}

fn main() {
    let mut audit = Audit::new();
    let start = Instant::now();
    let results: Vec<(u32, Verdict)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4(&mut audit)),
        (5, criterion_5(&mut audit)),
        (6, criterion_6(&mut audit)),
        (7, criterion_7(&mut audit)),
        (8, criterion_8(&mut audit)),
        (9, criterion_9(&mut audit)),
    ];
    let mut unexpected = 0;
    println!();
    for (n, v) in &results {
        let known = KNOWN_RED.contains(n);
        let tag = match (v.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known red)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {n}: {tag}: {}", v.detail);
    }
    println!("acceptance finished in {:.1?}", start.elapsed());
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
