//! Dormand–Prince 5(4) with dense output for autonomous planar fields.

use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, max_steps: 5_000_000, h0: None, h_max: None }
    }
}

impl OdeOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        OdeOptions { rtol, atol, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("step size underflow at t={t} (last state ({}, {}))", last.x, last.y)]
    StepUnderflow { t: f64, last: Point },
    #[error("left the domain at t={t} (last state ({}, {}))", last.x, last.y)]
    Domain { t: f64, last: Point },
    #[error("too many steps ({steps}) at t={t}")]
    MaxSteps { t: f64, steps: usize, last: Point },
    #[error("trajectory came within {radius:e} of the centre at t={t}")]
    NearCenter { t: f64, radius: f64 },
    #[error("{0}")]
    Other(String),
}

impl IntegrationError {
    /// Last valid state before the failure, when known.
    pub fn last_state(&self) -> Option<Point> {
        match self {
            IntegrationError::StepUnderflow { last, .. }
            | IntegrationError::Domain { last, .. }
            | IntegrationError::MaxSteps { last, .. } => Some(*last),
            _ => None,
        }
    }
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t0: f64,
    pub h: f64,
    pub y0: Point,
    pub y1: Point,
    span: f64,
    rcont: [Point; 5],
}

impl Step {
    /// End of the observed part of the step.
    pub fn t1(&self) -> f64 {
        self.t0 + self.span
    }

    /// Length of the observed part; shorter than `h` when the step was cut
    /// at a switching surface.
    pub fn span(&self) -> f64 {
        self.span
    }

    fn truncated(&self, t: f64) -> Step {
        Step { span: t - self.t0, y1: self.eval(t), ..*self }
    }

    fn shifted(&self, dt: f64) -> Step {
        Step { t0: self.t0 + dt, ..*self }
    }

    /// Dense-output state at `t ∈ [t0, t0 + h]`.
    pub fn eval(&self, t: f64) -> Point {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = self.rcont;
        r1 + (r2 + (r3 + (r4 + r5 * th1) * th) * th1) * th
    }
}

/// What the step observer wants next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Trial {
    y1: Point,
    k7: Point,
    err: Point,
    rcont: [Point; 5],
}

/// One Dormand–Prince step; `None` when a stage leaves the domain.
fn dp_step<F: Fn(Point) -> Point, V: Fn(Point) -> bool>(f: &F, valid: &V, y: Point, k1: Point, h: f64) -> Option<Trial> {
    let ok = |p: Point| p.is_finite() && valid(p);
    let y2 = y + k1 * (h * A21);
    if !ok(y2) {
        return None;
    }
    let k2 = f(y2);
    let y3 = y + (k1 * A31 + k2 * A32) * h;
    if !ok(y3) {
        return None;
    }
    let k3 = f(y3);
    let y4 = y + (k1 * A41 + k2 * A42 + k3 * A43) * h;
    if !ok(y4) {
        return None;
    }
    let k4 = f(y4);
    let y5 = y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h;
    if !ok(y5) {
        return None;
    }
    let k5 = f(y5);
    let y6 = y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h;
    if !ok(y6) {
        return None;
    }
    let k6 = f(y6);
    let y1 = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
    if !ok(y1) {
        return None;
    }
    let k7 = f(y1);
    let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
    let ydiff = y1 - y;
    let bspl = k1 * h - ydiff;
    let rcont = [y, ydiff, bspl, ydiff - k7 * h - bspl, (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h];
    Some(Trial { y1, k7, err, rcont })
}

fn scaled_norm(v: Point, a: Point, b: Point, opts: &OdeOptions) -> f64 {
    let sx = opts.atol + opts.rtol * a.x.abs().max(b.x.abs());
    let sy = opts.atol + opts.rtol * a.y.abs().max(b.y.abs());
    (((v.x / sx).powi(2) + (v.y / sy).powi(2)) / 2.0).sqrt()
}

/// Integrates `z' = f(z)` from `z0` over `[0, duration]` (`duration ≥ 0`).
/// `valid` rejects states outside the domain; rejected trial stages shrink
/// the step, a rejected accepted state aborts. `observer` sees every
/// accepted step and may stop early. Returns the final time and state.
pub fn integrate<F, V, O>(
    f: F,
    valid: V,
    z0: Point,
    duration: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(f64, Point), IntegrationError>
where
    F: Fn(Point) -> Point,
    V: Fn(Point) -> bool,
    O: FnMut(&Step) -> Control,
{
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(IntegrationError::Other(format!("invalid duration {duration}")));
    }
    if !z0.is_finite() || !valid(z0) {
        return Err(IntegrationError::Domain { t: 0.0, last: z0 });
    }
    if duration == 0.0 {
        return Ok((0.0, z0));
    }
    let mut t = 0.0;
    let mut y = z0;
    let mut k1 = f(y);
    let mut h = match opts.h0 {
        Some(h) => h,
        None => {
            let d0 = scaled_norm(y, y, y, opts);
            let d1 = scaled_norm(k1, y, y, opts);
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            }
        }
    };
    let h_max = opts.h_max.unwrap_or(duration);
    h = h.min(h_max).min(duration);
    let mut steps = 0;
    let mut last_rejected = false;
    loop {
        if steps >= opts.max_steps {
            return Err(IntegrationError::MaxSteps { t, steps, last: y });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(IntegrationError::StepUnderflow { t, last: y });
        }
        let last_step = t + h >= duration;
        if last_step {
            h = duration - t;
        }
        steps += 1;
        let Some(trial) = dp_step(&f, &valid, y, k1, h) else {
            h *= 0.5;
            last_rejected = true;
            continue;
        };
        let err = scaled_norm(trial.err, y, trial.y1, opts);
        if !err.is_finite() {
            h *= 0.25;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            let step = Step { t0: t, h, y0: y, y1: trial.y1, span: h, rcont: trial.rcont };
            t = if last_step { duration } else { t + h };
            y = trial.y1;
            k1 = trial.k7;
            if observer(&step) == Control::Stop || last_step {
                return Ok((t, y));
            }
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(h_max);
            last_rejected = false;
        } else {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h *= fac;
            last_rejected = true;
        }
    }
}

/// Like [`integrate`], but no step straddles the surface `g = 0`: a step
/// that changes the sign of `g` is cut at the crossing, located by bisection
/// on the dense output, and integration restarts from there. Step times seen
/// by the observer are global.
pub fn integrate_with_surface<F, V, G, O>(
    f: F,
    valid: V,
    g: G,
    z0: Point,
    duration: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(f64, Point), IntegrationError>
where
    F: Fn(Point) -> Point,
    V: Fn(Point) -> bool,
    G: Fn(Point) -> f64,
    O: FnMut(&Step) -> Control,
{
    let mut t = 0.0;
    let mut z = z0;
    let mut segments = 0;
    loop {
        let offset = t;
        let remaining = duration - t;
        let mut side = g(z).signum();
        let on_surface = g(z).abs() <= 1e-13 * z.max_norm().max(1.0);
        let mut cut: Option<(f64, Point)> = None;
        let mut stopped = false;
        let (t_end, z_end) = integrate(&f, &valid, z, remaining.max(0.0), opts, |s| {
            let s = s.shifted(offset);
            if on_surface && s.t0 == offset {
                side = g(s.y1).signum();
            }
            if g(s.y1) * side < 0.0 {
                let (mut lo, mut hi) = (s.t0, s.t1());
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(s.eval(mid)) * side < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let mut part = s.truncated(hi);
                if let Some(tr) = dp_step(&f, &valid, s.y0, f(s.y0), hi - s.t0) {
                    part.y1 = tr.y1;
                }
                cut = Some((hi, part.y1));
                stopped = observer(&part) == Control::Stop;
                return Control::Stop;
            }
            if observer(&s) == Control::Stop {
                stopped = true;
                return Control::Stop;
            }
            Control::Continue
        })?;
        match cut {
            Some((tc, zc)) if !stopped && tc < duration => {
                t = tc;
                z = zc;
                segments += 1;
                if segments > opts.max_steps {
                    return Err(IntegrationError::MaxSteps { t, steps: segments, last: z });
                }
            }
            Some((tc, zc)) => return Ok((tc, zc)),
            None => return Ok((offset + t_end, z_end)),
        }
    }
}

/// Angle of `p` about `c`.
pub fn polar_angle(p: Point, c: Point) -> f64 {
    (p.y - c.y).atan2(p.x - c.x)
}

/// Increment `b − a` wrapped into `(−π, π]`.
pub fn wrap_increment(a: f64, b: f64) -> f64 {
    use std::f64::consts::PI;
    let d = (b - a).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// Substeps per accepted step used for angle unwrapping.
pub const ANGLE_SUBSTEPS: usize = 4;

/// Net angle swept about `c` during `step`, unwrapped through dense
/// substeps. Fails when the trajectory passes within `min_radius` of `c`.
pub fn step_angle(step: &Step, c: Point, min_radius: f64) -> Result<f64, IntegrationError> {
    let mut prev = step.y0;
    let mut total = 0.0;
    for k in 1..=ANGLE_SUBSTEPS {
        let p = if k == ANGLE_SUBSTEPS { step.y1 } else { step.eval(step.t0 + step.span * k as f64 / ANGLE_SUBSTEPS as f64) };
        let r = p.dist(c);
        if r < min_radius {
            return Err(IntegrationError::NearCenter { t: step.t0, radius: r });
        }
        total += wrap_increment(polar_angle(prev, c), polar_angle(p, c));
        prev = p;
    }
    Ok(total)
}
