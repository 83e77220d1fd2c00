use super::ode::{step_angle, Control, IntegrationError, OdeOptions, Step, ANGLE_SUBSTEPS};
use super::{Field, FlowError};
use crate::error::DomainError;
use crate::geometry::Point;
use crate::stretching::PlanarMap;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

/// Closest approach to the centre tolerated while tracking angles.
const CENTER_RADIUS: f64 = 1e-12;

fn center_of(field: &Field) -> Result<Point, FlowError> {
    field.center().ok_or_else(|| FlowError::Invalid(format!("{field:?} has no centre with closed orbits")))
}

/// Unwrapped angle swept about `c` between the start of `step` and `t`.
fn partial_angle(step: &Step, c: Point, t: f64) -> f64 {
    let mut prev = step.y0;
    let mut total = 0.0;
    for k in 1..=ANGLE_SUBSTEPS {
        let tk = step.t0 + step.span() * k as f64 / ANGLE_SUBSTEPS as f64;
        let p = step.eval(tk.min(t));
        total += super::ode::wrap_increment(super::ode::polar_angle(prev, c), super::ode::polar_angle(p, c));
        prev = p;
        if tk >= t {
            break;
        }
    }
    total
}

/// Time for the orbit through `z` to complete one turn about the centre.
pub fn period_through(field: &Field, z: Point, opts: &OdeOptions) -> Result<f64, FlowError> {
    let c = center_of(field)?;
    let orient = field.orientation();
    let t_max = 1e4 * field.linear_period().unwrap_or(1.0);
    let f = *field;
    let mut acc = 0.0;
    let mut result: Option<Result<f64, IntegrationError>> = None;
    f.integrate(z, t_max, false, opts, |s| match step_angle(s, c, CENTER_RADIUS) {
        Err(e) => {
            result = Some(Err(e));
            Control::Stop
        }
        Ok(da) => {
            let da = da * orient;
            if acc + da >= 2.0 * PI {
                let (mut lo, mut hi) = (s.t0, s.t1());
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if acc + orient * partial_angle(s, c, mid) >= 2.0 * PI {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                result = Some(Ok(0.5 * (lo + hi)));
                Control::Stop
            } else {
                acc += da;
                Control::Continue
            }
        }
    })?;
    match result {
        Some(r) => Ok(r?),
        None => Err(FlowError::Invalid(format!("no full turn within t = {t_max}"))),
    }
}

/// Fundamental period `τ(level)` of the closed orbit at the given energy,
/// started on the ray from the centre in the `+x` direction.
pub fn orbit_period(field: &Field, level: f64, opts: &OdeOptions) -> Result<f64, FlowError> {
    let z = level_point(field, level)?;
    period_through(field, z, opts)
}

/// Point of the level line on the ray from the centre in the `+x` direction.
pub fn level_point(field: &Field, level: f64) -> Result<Point, FlowError> {
    let c = center_of(field)?;
    let chi = field.min_energy().unwrap_or(f64::NEG_INFINITY);
    if !(level > chi) {
        return Err(FlowError::Invalid(format!("level {level} not above the minimum energy {chi}")));
    }
    let e = |r: f64| field.energy(Point::new(c.x + r, c.y)).unwrap_or(f64::INFINITY);
    let mut hi = 1e-3 * c.x.abs().max(1.0);
    let mut n = 0;
    while e(hi) < level {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(FlowError::Bracket(format!("level {level} not reached along the ray")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if e(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Point::new(c.x + 0.5 * (lo + hi), c.y))
}

/// Endpoint and net angle about `c` after integrating for `t`.
fn advance_direct(field: &Field, z: Point, t: f64, c: Option<Point>, opts: &OdeOptions) -> Result<(Point, f64), IntegrationError> {
    let f = *field;
    let mut angle = 0.0;
    let mut err = None;
    let (_, end) = f.integrate(z, t, false, opts, |s| {
        if let Some(c) = c {
            match step_angle(s, c, CENTER_RADIUS) {
                Ok(da) => angle += da,
                Err(e) => {
                    err = Some(e);
                    return Control::Stop;
                }
            }
        }
        Control::Continue
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok((end, angle)),
    }
}

/// Normalized angular displacement `(θ(t) − θ(0)) / 2π` about the centre;
/// positive for counterclockwise motion.
pub fn rotation_number(field: &Field, z: Point, t: f64, opts: &OdeOptions) -> Result<f64, FlowError> {
    let c = center_of(field)?;
    if z.dist(c) < CENTER_RADIUS {
        return Err(IntegrationError::NearCenter { t: 0.0, radius: z.dist(c) }.into());
    }
    Ok(advance_direct(field, z, t, Some(c), opts)?.1 / (2.0 * PI))
}

/// Time-`t` map of one autonomous phase together with the net angle swept
/// about the phase's centre. When the phase has closed orbits, whole turns
/// are skipped using the period of the orbit through the point. Results are
/// memoized per input point.
pub struct PhaseFlow {
    field: Field,
    duration: f64,
    opts: OdeOptions,
    reduce: bool,
    cache: Mutex<HashMap<(u64, u64), Result<(Point, f64), IntegrationError>>>,
}

impl std::fmt::Debug for PhaseFlow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhaseFlow")
            .field("field", &self.field)
            .field("duration", &self.duration)
            .field("reduce", &self.reduce)
            .finish()
    }
}

impl PhaseFlow {
    pub fn new(field: Field, duration: f64, opts: OdeOptions) -> Self {
        PhaseFlow { field, duration, opts, reduce: field.center().is_some(), cache: Mutex::new(HashMap::new()) }
    }

    /// Integrates the whole duration step by step.
    pub fn direct(field: Field, duration: f64, opts: OdeOptions) -> Self {
        PhaseFlow { reduce: false, ..PhaseFlow::new(field, duration, opts) }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    fn compute(&self, z: Point) -> Result<(Point, f64), IntegrationError> {
        let c = self.field.center();
        if self.reduce && self.duration > 0.0 {
            let tau = period_through(&self.field, z, &self.opts).map_err(|e| match e {
                FlowError::Integration(ie) => ie,
                other => IntegrationError::Other(other.to_string()),
            })?;
            let turns = (self.duration / tau).floor();
            let rem = (self.duration - turns * tau).max(0.0);
            let (p, da) = advance_direct(&self.field, z, rem, c, &self.opts)?;
            Ok((p, self.field.orientation() * 2.0 * PI * turns + da))
        } else {
            advance_direct(&self.field, z, self.duration, c, &self.opts)
        }
    }

    pub fn advance(&self, z: Point) -> Result<(Point, f64), IntegrationError> {
        let key = (z.x.to_bits(), z.y.to_bits());
        if let Some(r) = self.cache.lock().ok().and_then(|m| m.get(&key).cloned()) {
            return r;
        }
        let r = self.compute(z);
        if let Ok(mut m) = self.cache.lock() {
            m.insert(key, r.clone());
        }
        r
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().map(|m| m.len()).unwrap_or(0)
    }
}

impl PlanarMap for PhaseFlow {
    fn apply(&self, z: Point) -> Result<Point, DomainError> {
        self.advance(z).map(|(p, _)| p).map_err(|e| DomainError::new(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub alpha: f64,
    pub beta: f64,
}

/// `α = (m₁ + 3.5) τ₀(ℓ₁) τ₀(ℓ₂) / (τ₀(ℓ₂) − τ₀(ℓ₁))` and the analogous `β`.
pub fn switching_thresholds(
    m1: u32,
    m2: u32,
    tau0: (f64, f64),
    tau_mu: (f64, f64),
) -> Result<Thresholds, FlowError> {
    if m1 < 1 || m2 < 1 {
        return Err(FlowError::Invalid("m1, m2 must be at least 1".into()));
    }
    let one = |m: u32, (t1, t2): (f64, f64)| -> Result<f64, FlowError> {
        if !(t1 > 0.0 && t2 > t1) {
            return Err(FlowError::Invalid(format!("periods must satisfy 0 < {t1} < {t2}")));
        }
        Ok((m as f64 + 3.5) * t1 * t2 / (t2 - t1))
    };
    Ok(Thresholds { alpha: one(m1, tau0)?, beta: one(m2, tau_mu)? })
}

/// Smallest time on a grid of step `dt` at which the orbit through `fast`
/// leads the orbit through `slow` by more than `m + 1` turns.
pub fn empirical_twist_time(
    field: &Field,
    fast: Point,
    slow: Point,
    m: u32,
    t_max: f64,
    dt: f64,
    opts: &OdeOptions,
) -> Result<Option<f64>, FlowError> {
    let c = center_of(field)?;
    let orient = field.orientation();
    let (tf, ts) = (period_through(field, fast, opts)?, period_through(field, slow, opts)?);
    let rot = |z: Point, tau: f64, t: f64| -> Result<f64, FlowError> {
        let turns = (t / tau).floor();
        let (_, da) = advance_direct(field, z, t - turns * tau, Some(c), opts)?;
        Ok(turns + orient * da / (2.0 * PI))
    };
    let mut t = 0.0;
    while t <= t_max {
        if rot(fast, tf, t)? - rot(slow, ts, t)? > m as f64 + 1.0 {
            return Ok(Some(t));
        }
        t += dt;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e0() -> Field {
        Field::Volterra { a: 1.0, b: 1.0, c: 1.0, d: 1.0 }
    }

    #[test]
    fn period_near_center_matches_linearization() {
        let tau = orbit_period(&e0(), 2.0 + 1e-3, &OdeOptions::default()).unwrap();
        assert!((tau / (2.0 * PI) - 1.0).abs() < 5e-3, "tau = {tau}");
        assert!(orbit_period(&e0(), 2.0, &OdeOptions::default()).is_err());
    }

    #[test]
    fn closed_orbit_returns() {
        let opts = OdeOptions::default();
        let z = Point::new(2.0, 1.0);
        let tau = period_through(&e0(), z, &opts).unwrap();
        let back = e0().flow(z, tau, &opts).unwrap();
        assert!(back.dist(z) < 1e-6 * z.norm());
        assert!((rotation_number(&e0(), z, tau, &opts).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(rotation_number(&e0(), z, 0.0, &opts).unwrap(), 0.0);
    }

    #[test]
    fn duffing_turns_clockwise() {
        let f = Field::Duffing { k: 10.0, p: 4.0 };
        let opts = OdeOptions::default();
        let z = Point::new(-1.0, 0.0);
        let tau = period_through(&f, z, &opts).unwrap();
        assert!((rotation_number(&f, z, tau, &opts).unwrap() + 1.0).abs() < 1e-6);
    }

    #[test]
    fn reduced_flow_matches_direct_integration() {
        let opts = OdeOptions::default();
        let z = Point::new(1.6, 0.9);
        let red = PhaseFlow::new(e0(), 40.0, opts);
        let dir = PhaseFlow::direct(e0(), 40.0, opts);
        let (p, a) = red.advance(z).unwrap();
        let (q, b) = dir.advance(z).unwrap();
        assert!(p.dist(q) < 1e-7, "{p:?} vs {q:?}");
        assert!((a - b).abs() < 1e-7);
        red.advance(z).unwrap();
        assert_eq!(red.cache_len(), 1);
    }

    #[test]
    fn thresholds_formula() {
        let t = switching_thresholds(2, 2, (6.5, 7.5), (6.5, 7.5)).unwrap();
        assert!((t.alpha - 268.125).abs() < 1e-12);
        assert_eq!(t.alpha, t.beta);
        assert!(switching_thresholds(2, 1, (6.5, 6.5), (6.5, 7.5)).is_err());
    }
}
