use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{rhs, total_rabi_amplitudes, validate_state, DensityMatrix, DriveContext};
use crate::error::{Error, Result};

/// Allowed drift of Tr ρ from one.
pub const TRACE_TOL: f64 = 1e-9;
/// Allowed negative excursion of the smallest eigenvalue of ρ.
pub const POSITIVITY_TOL: f64 = 1e-6;

const MAX_STEPS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepControl {
    /// Classical fourth-order Runge–Kutta with step at most `dt` (ps).
    FixedRk4 { dt: f64 },
    /// Dormand–Prince 5(4) with per-component error control.
    Adaptive { rel_tol: f64, abs_tol: f64 },
}

impl StepControl {
    /// Fixed step `min(t0, 2π/|Δ21|) / 1000`.
    pub fn reference_rk4(ctx: &DriveContext) -> Self {
        let period = 2.0 * std::f64::consts::PI / ctx.detunings.delta21.abs();
        StepControl::FixedRk4 {
            dt: ctx.pulse.width.min(period) / 1000.0,
        }
    }
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Adaptive {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sampling {
    /// Record every n-th step (and the final state).
    EveryStep(usize),
    /// Record on a uniform time grid; steps are shortened to land on it.
    Interval(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorControl {
    pub step: StepControl,
    pub sampling: Sampling,
}

impl Default for IntegratorControl {
    fn default() -> Self {
        Self {
            step: StepControl::default(),
            sampling: Sampling::EveryStep(1),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Total (Ω21, Ω32) at each sample.
    pub effective_rabi: Vec<(C64, C64)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &DensityMatrix)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// Integrate from `initial` over `t_span` and return the sampled trajectory.
pub fn integrate(
    initial: &DensityMatrix,
    ctx: &DriveContext,
    t_span: (f64, f64),
    control: &IntegratorControl,
) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    let mut push = |t: f64, s: &DensityMatrix| {
        let (ext21, ext32) = ctx.external_amplitudes(t);
        traj.times.push(t);
        traj.states.push(*s);
        traj.effective_rabi
            .push(total_rabi_amplitudes(s, ext21, ext32, &ctx.feedback));
    };
    let mut counter = 0usize;
    let stride = match control.sampling {
        Sampling::EveryStep(n) => n.max(1),
        Sampling::Interval(_) => 1,
    };
    let grid = matches!(control.sampling, Sampling::Interval(_));
    integrate_observed(initial, ctx, t_span, control, |t, s, on_grid| {
        let record = on_grid || (!grid && counter.is_multiple_of(stride));
        counter += 1;
        if record {
            push(t, s);
        }
    })?;
    Ok(traj)
}

/// Integrate and call `observer(t, state, on_sample_point)` after every
/// accepted step (and once for the initial state). The final state is always
/// reported as a sample point. Returns the final state.
///
/// Trace and positivity are checked on every accepted step; a violation aborts
/// with [`Error::InvariantViolation`].
pub fn integrate_observed<F>(
    initial: &DensityMatrix,
    ctx: &DriveContext,
    t_span: (f64, f64),
    control: &IntegratorControl,
    mut observer: F,
) -> Result<DensityMatrix>
where
    F: FnMut(f64, &DensityMatrix, bool),
{
    let (t_start, t_end) = t_span;
    if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(Error::Precondition(format!(
            "invalid time span [{t_start}, {t_end}]"
        )));
    }
    validate_state(initial, t_start)?;
    let interval = match control.sampling {
        Sampling::Interval(dt) if !(dt > 0.0) => {
            return Err(Error::Precondition(format!(
                "sample interval must be > 0, got {dt}"
            )))
        }
        Sampling::Interval(dt) => Some(dt),
        Sampling::EveryStep(_) => None,
    };
    observer(t_start, initial, true);

    let f = |t: f64, y: &[f64; 9]| rhs(&DensityMatrix::from_array(*y), t, ctx).to_array();
    let mut y = initial.to_array();
    let mut t = t_start;
    let mut sample_index = 1usize;
    let next_sample = |k: usize| match interval {
        Some(dt) => (t_start + dt * k as f64).min(t_end),
        None => t_end,
    };

    match control.step {
        StepControl::FixedRk4 { dt } => {
            if !(dt > 0.0) {
                return Err(Error::Precondition(format!("dt must be > 0, got {dt}")));
            }
            while t < t_end {
                // Uniform sub-steps within each sample segment.
                let target = next_sample(sample_index);
                let n = ((target - t) / dt).ceil().max(1.0) as usize;
                let t_seg = t;
                let h = (target - t_seg) / n as f64;
                for k in 0..n {
                    y = rk4_step(&f, t, &y, h);
                    t = if k + 1 == n {
                        target
                    } else {
                        t_seg + h * (k + 1) as f64
                    };
                    let state = DensityMatrix::from_array(y);
                    check(&state, t)?;
                    observer(t, &state, k + 1 == n);
                }
                sample_index += 1;
            }
        }
        StepControl::Adaptive { rel_tol, abs_tol } => {
            if !(rel_tol > 0.0 && abs_tol > 0.0) {
                return Err(Error::Precondition("adaptive tolerances must be > 0".into()));
            }
            let mut h = 0.01 / ctx.fastest_rate().max(1.0 / (t_end - t_start));
            let mut k1 = f(t, &y);
            let mut steps = 0usize;
            while t < t_end {
                let target = next_sample(sample_index);
                let remaining = target - t;
                let clipped = h >= remaining;
                let h_try = if clipped { remaining } else { h };
                let h_min = 1e-14 * t.abs().max(t_end - t_start);
                if h_try < h_min && !clipped {
                    return Err(Error::StepUnderflow { t, h: h_try, steps });
                }
                steps += 1;
                if steps > MAX_STEPS {
                    return Err(Error::StepUnderflow { t, h: h_try, steps });
                }
                let (y_new, k7, err) = dopri5_step(&f, t, &y, &k1, h_try, rel_tol, abs_tol);
                if err <= 1.0 {
                    t = if clipped { target } else { t + h_try };
                    y = y_new;
                    k1 = k7;
                    let state = DensityMatrix::from_array(y);
                    check(&state, t)?;
                    observer(t, &state, clipped);
                    if clipped {
                        sample_index += 1;
                    }
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A step clipped to a sample point says little about the natural step.
                if !(clipped && err <= 1.0) || factor < 1.0 {
                    h = h_try * factor;
                }
            }
        }
    }
    Ok(DensityMatrix::from_array(y))
}

fn check(state: &DensityMatrix, t: f64) -> Result<()> {
    validate_state(state, t)
}

type Vec9 = [f64; 9];

#[inline]
fn axpy(y: &Vec9, terms: &[(f64, &Vec9)]) -> Vec9 {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..9 {
            out[i] += c * k[i];
        }
    }
    out
}

fn rk4_step(f: &impl Fn(f64, &Vec9) -> Vec9, t: f64, y: &Vec9, h: f64) -> Vec9 {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &[(0.5 * h, &k1)]));
    let k3 = f(t + 0.5 * h, &axpy(y, &[(0.5 * h, &k2)]));
    let k4 = f(t + h, &axpy(y, &[(h, &k3)]));
    axpy(
        y,
        &[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)],
    )
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand–Prince step. Returns the 5th-order solution, the derivative at
/// the new point (first stage of the next step) and the scaled error norm.
fn dopri5_step(
    f: &impl Fn(f64, &Vec9) -> Vec9,
    t: f64,
    y: &Vec9,
    k1: &Vec9,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> (Vec9, Vec9, f64) {
    let k2 = f(t + C2 * h, &axpy(y, &[(h * A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, &[(h * A31, k1), (h * A32, &k2)]));
    let k4 = f(
        t + C4 * h,
        &axpy(y, &[(h * A41, k1), (h * A42, &k2), (h * A43, &k3)]),
    );
    let k5 = f(
        t + C5 * h,
        &axpy(
            y,
            &[(h * A51, k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)],
        ),
    );
    let k6 = f(
        t + h,
        &axpy(
            y,
            &[
                (h * A61, k1),
                (h * A62, &k2),
                (h * A63, &k3),
                (h * A64, &k4),
                (h * A65, &k5),
            ],
        ),
    );
    let y_new = axpy(
        y,
        &[
            (h * B1, k1),
            (h * B3, &k3),
            (h * B4, &k4),
            (h * B5, &k5),
            (h * B6, &k6),
        ],
    );
    let k7 = f(t + h, &y_new);
    let mut err: f64 = 0.0;
    for i in 0..9 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = abs_tol + rel_tol * y[i].abs().max(y_new[i].abs());
        err = err.max((e / scale).abs());
    }
    (y_new, k7, err)
}
