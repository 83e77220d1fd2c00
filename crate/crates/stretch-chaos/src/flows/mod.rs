//! Switched planar systems: the harvested Volterra model and the
//! piecewise-forced Duffing equation.

pub mod ode;
mod orbit;
mod volterra;
mod duffing;

pub use duffing::{
    duffing_corner, duffing_linked_rects, duffing_periods, duffing_scan, DuffingLevels, DuffingPipeline, DuffingScan, ScanPoint,
    WINDOW_MARGIN,
};
pub use ode::{integrate, Control, IntegrationError, OdeOptions, Step};
pub use orbit::{
    empirical_twist_time, level_point, orbit_period, period_through, rotation_number, switching_thresholds, PhaseFlow,
    Thresholds,
};
pub use volterra::{linked_annuli, LinePoints, LinkedAnnuli, VolterraLevels, VolterraPipeline, THRESHOLD_MARGIN};

use crate::error::DomainError;
use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

/// Coordinates below this abort a Volterra integration.
pub const VOLTERRA_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("root bracketing failed: {0}")]
    Bracket(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// One autonomous phase of a switched system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Field {
    /// `x' = x(a − b y)`, `y' = y(−c + d x)`.
    Volterra { a: f64, b: f64, c: f64, d: f64 },
    /// `x' = y`, `y' = −k x⁺ + p`.
    Duffing { k: f64, p: f64 },
}

impl Field {
    pub fn rhs(&self, z: Point) -> Point {
        match *self {
            Field::Volterra { a, b, c, d } => Point::new(z.x * (a - b * z.y), z.y * (-c + d * z.x)),
            Field::Duffing { k, p } => Point::new(z.y, -k * z.x.max(0.0) + p),
        }
    }

    pub fn in_domain(&self, z: Point) -> bool {
        match self {
            Field::Volterra { .. } => z.x > VOLTERRA_GUARD && z.y > VOLTERRA_GUARD,
            Field::Duffing { .. } => true,
        }
    }

    /// First integral, constant along trajectories.
    pub fn energy(&self, z: Point) -> Result<f64, DomainError> {
        match *self {
            Field::Volterra { a, b, c, d } => {
                if !(z.x > 0.0 && z.y > 0.0) {
                    return Err(DomainError::new(format!("Volterra energy needs x, y > 0 (got ({}, {}))", z.x, z.y)));
                }
                Ok(d * z.x - c * z.x.ln() + b * z.y - a * z.y.ln())
            }
            Field::Duffing { k, p } => {
                let xp = z.x.max(0.0);
                Ok(0.5 * z.y * z.y + 0.5 * k * xp * xp - p * z.x)
            }
        }
    }

    /// Equilibrium surrounded by closed orbits, if any.
    pub fn center(&self) -> Option<Point> {
        match *self {
            Field::Volterra { a, b, c, d } => Some(Point::new(c / d, a / b)),
            Field::Duffing { k, p } => (p > 0.0).then(|| Point::new(p / k, 0.0)),
        }
    }

    /// Energy at the centre.
    pub fn min_energy(&self) -> Option<f64> {
        self.center().and_then(|c| self.energy(c).ok())
    }

    /// `+1` for counterclockwise orbits, `−1` for clockwise ones.
    pub fn orientation(&self) -> f64 {
        match self {
            Field::Volterra { .. } => 1.0,
            Field::Duffing { .. } => -1.0,
        }
    }

    /// Period of the small oscillations about the centre.
    pub fn linear_period(&self) -> Option<f64> {
        match *self {
            Field::Volterra { a, c, .. } => Some(2.0 * std::f64::consts::PI / (a * c).sqrt()),
            Field::Duffing { k, p } => (p > 0.0).then(|| 2.0 * std::f64::consts::PI / k.sqrt()),
        }
    }

    /// Integrates over `[0, duration]`, forwards or (with `backwards`) in
    /// reversed time. Duffing steps are cut at `x = 0`, where the field is
    /// not smooth.
    pub fn integrate<O: FnMut(&Step) -> Control>(
        &self,
        z: Point,
        duration: f64,
        backwards: bool,
        opts: &OdeOptions,
        observer: O,
    ) -> Result<(f64, Point), IntegrationError> {
        let f = *self;
        let sign = if backwards { -1.0 } else { 1.0 };
        match self {
            Field::Volterra { .. } => integrate(move |p| f.rhs(p) * sign, |p| f.in_domain(p), z, duration, opts, observer),
            Field::Duffing { .. } => {
                ode::integrate_with_surface(move |p| f.rhs(p) * sign, |_| true, |p| p.x, z, duration, opts, observer)
            }
        }
    }

    /// State after time `t` (negative `t` integrates backwards).
    pub fn flow(&self, z: Point, t: f64, opts: &OdeOptions) -> Result<Point, IntegrationError> {
        self.integrate(z, t.abs(), t < 0.0, opts, |_| Control::Continue).map(|(_, p)| p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolterraParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Harvesting rate.
    pub mu: f64,
}

impl VolterraParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, mu: f64) -> Result<Self, FlowError> {
        if !(a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0 && (0.0..a).contains(&mu)) {
            return Err(FlowError::Invalid("need a, b, c, d > 0 and 0 <= mu < a".into()));
        }
        Ok(VolterraParams { a, b, c, d, mu })
    }

    pub fn e0(&self) -> Field {
        Field::Volterra { a: self.a, b: self.b, c: self.c, d: self.d }
    }

    pub fn emu(&self) -> Field {
        Field::Volterra { a: self.a - self.mu, b: self.b, c: self.c + self.mu, d: self.d }
    }

    /// Harvest-free phase for `r0`, then harvesting for `r_mu`.
    pub fn system(&self, r0: f64, r_mu: f64) -> Result<SwitchingSystem, FlowError> {
        SwitchingSystem::new(vec![(self.e0(), r0), (self.emu(), r_mu)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    pub k: f64,
    pub q: f64,
    pub s: f64,
}

impl DuffingParams {
    pub fn new(k: f64, q: f64, s: f64) -> Result<Self, FlowError> {
        if !(k > 0.0 && q > 0.0 && s > 0.0) {
            return Err(FlowError::Invalid("need k, q, s > 0".into()));
        }
        Ok(DuffingParams { k, q, s })
    }

    pub fn eq(&self) -> Field {
        Field::Duffing { k: self.k, p: self.q }
    }

    pub fn es(&self) -> Field {
        Field::Duffing { k: self.k, p: -self.s }
    }

    pub fn system(&self, r_q: f64, r_s: f64) -> Result<SwitchingSystem, FlowError> {
        SwitchingSystem::new(vec![(self.eq(), r_q), (self.es(), r_s)])
    }
}

/// A periodic sequence of autonomous phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSystem {
    phases: Vec<(Field, f64)>,
}

impl SwitchingSystem {
    /// Zero-length phases are allowed and skipped.
    pub fn new(phases: Vec<(Field, f64)>) -> Result<Self, FlowError> {
        if phases.is_empty() || phases.iter().any(|(_, t)| !(*t >= 0.0) || !t.is_finite()) {
            return Err(FlowError::Invalid("phase durations must be finite and nonnegative".into()));
        }
        if phases.iter().all(|(_, t)| *t == 0.0) {
            return Err(FlowError::Invalid("period must be positive".into()));
        }
        Ok(SwitchingSystem { phases })
    }

    pub fn phases(&self) -> &[(Field, f64)] {
        &self.phases
    }

    pub fn period(&self) -> f64 {
        self.phases.iter().map(|(_, t)| t).sum()
    }

    /// Map over the `i`-th phase alone.
    pub fn phase_map(&self, i: usize, z: Point, opts: &OdeOptions) -> Result<Point, IntegrationError> {
        let (f, t) = self.phases[i];
        f.flow(z, t, opts)
    }

    /// Poincaré map over one full period, phase by phase.
    pub fn poincare(&self, z: Point, opts: &OdeOptions) -> Result<Point, IntegrationError> {
        self.phases.iter().try_fold(z, |p, (f, t)| f.flow(p, *t, opts))
    }

    /// Inverse Poincaré map: phases in reverse order, backwards in time.
    pub fn poincare_inverse(&self, z: Point, opts: &OdeOptions) -> Result<Point, IntegrationError> {
        self.phases.iter().rev().try_fold(z, |p, (f, t)| f.flow(p, -*t, opts))
    }

    /// Writes `t,x,y,phase,energy` rows sampled from the dense output over
    /// `periods` periods, `per_step` rows per accepted step.
    pub fn write_trajectory_csv<W: Write>(
        &self,
        z0: Point,
        periods: usize,
        per_step: usize,
        opts: &OdeOptions,
        mut w: W,
    ) -> Result<Point, FlowError> {
        let io = |e: std::io::Error| FlowError::Invalid(format!("write failed: {e}"));
        writeln!(w, "t,x,y,phase,energy").map_err(io)?;
        let mut z = z0;
        let mut t_base = 0.0;
        let per_step = per_step.max(1);
        for _ in 0..periods {
            for (id, (f, dur)) in self.phases.iter().enumerate() {
                let f = *f;
                let mut rows = Vec::new();
                let (_, end) = f.integrate(z, *dur, false, opts, |s| {
                    for j in 0..per_step {
                        let t = s.t0 + s.span() * j as f64 / per_step as f64;
                        rows.push((t, s.eval(t)));
                    }
                    Control::Continue
                })?;
                for (t, p) in rows {
                    let e = f.energy(p).unwrap_or(f64::NAN);
                    writeln!(w, "{:.17e},{:.17e},{:.17e},{},{:.17e}", t_base + t, p.x, p.y, id, e).map_err(io)?;
                }
                t_base += dur;
                z = end;
            }
        }
        let e = self.phases[0].0.energy(z).unwrap_or(f64::NAN);
        writeln!(w, "{:.17e},{:.17e},{:.17e},{},{:.17e}", t_base, z.x, z.y, 0, e).map_err(io)?;
        Ok(z)
    }
}

/// Writes Poincaré iterates `n,x,y`.
pub fn write_iterates_csv<W: Write>(sys: &SwitchingSystem, z0: Point, n: usize, opts: &OdeOptions, mut w: W) -> Result<(), FlowError> {
    let io = |e: std::io::Error| FlowError::Invalid(format!("write failed: {e}"));
    writeln!(w, "n,x,y").map_err(io)?;
    let mut z = z0;
    for i in 0..=n {
        writeln!(w, "{},{:.17e},{:.17e}", i, z.x, z.y).map_err(io)?;
        if i < n {
            z = sys.poincare(z, opts)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> VolterraParams {
        VolterraParams::new(1.0, 1.0, 1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn equilibria_are_fixed() {
        let p = unit();
        let z = p.e0().flow(Point::new(1.0, 1.0), 5.0, &OdeOptions::default()).unwrap();
        assert!((z.x - 1.0).abs() < 1e-14 && (z.y - 1.0).abs() < 1e-14);
        let d = DuffingParams::new(10.0, 4.0, 0.5).unwrap();
        let z = d.eq().flow(Point::new(0.4, 0.0), 5.0, &OdeOptions::default()).unwrap();
        assert!((z.x - 0.4).abs() < 1e-14 && z.y.abs() < 1e-14);
    }

    #[test]
    fn energies_at_reference_points() {
        assert_eq!(unit().e0().min_energy(), Some(2.0));
        let d = DuffingParams::new(10.0, 4.0, 0.5).unwrap();
        assert_eq!(d.eq().energy(Point::new(0.0, 0.0)).unwrap(), 0.0);
        assert!(unit().e0().energy(Point::new(-1.0, 1.0)).is_err());
        // x ≤ 0: level lines of E_q are parabolas ½y² − qx = const.
        let e = d.eq().energy(Point::new(-2.0, 3.0)).unwrap();
        assert_eq!(e, 4.5 + 8.0);
        let mu = unit().emu();
        let q = mu.center().unwrap();
        assert_eq!((q.x, q.y), (1.5, 0.5));
    }

    #[test]
    fn energy_conserved_in_each_phase() {
        let opts = OdeOptions::default();
        let p = unit();
        for f in [p.e0(), p.emu()] {
            let z0 = Point::new(2.0, 1.0);
            let e0 = f.energy(z0).unwrap();
            let z = f.flow(z0, 7.0, &opts).unwrap();
            assert!(((f.energy(z).unwrap() - e0) / e0).abs() < 1e-8);
        }
        let d = DuffingParams::new(10.0, 4.0, 0.5).unwrap();
        for f in [d.eq(), d.es()] {
            let z0 = Point::new(-0.7, -1.7);
            let e0 = f.energy(z0).unwrap();
            let z = f.flow(z0, 2.0, &opts).unwrap();
            assert!(((f.energy(z).unwrap() - e0) / e0).abs() < 1e-8);
        }
    }

    #[test]
    fn poincare_composes_and_inverts() {
        let opts = OdeOptions::default();
        let sys = unit().system(3.0, 2.0).unwrap();
        let z0 = Point::new(1.3, 0.8);
        let whole = sys.poincare(z0, &opts).unwrap();
        let split = sys.phase_map(1, sys.phase_map(0, z0, &opts).unwrap(), &opts).unwrap();
        assert!(whole.dist(split) < 1e-10);
        let back = sys.poincare_inverse(whole, &opts).unwrap();
        assert!(back.dist(z0) < 1e-8);
        let d = DuffingParams::new(10.0, 4.0, 0.5).unwrap().system(2.0, 1.0).unwrap();
        let w = d.poincare(Point::new(-0.7, -1.7), &opts).unwrap();
        let err = d.poincare_inverse(w, &opts).unwrap().dist(Point::new(-0.7, -1.7));
        assert!(err < 1e-8, "{err} {w:?}");
    }

    #[test]
    fn zero_length_phases_skip() {
        let sys = SwitchingSystem::new(vec![(unit().e0(), 0.0), (unit().emu(), 1.0)]).unwrap();
        assert_eq!(sys.period(), 1.0);
        assert!(SwitchingSystem::new(vec![(unit().e0(), 0.0)]).is_err());
        assert!(SwitchingSystem::new(vec![(unit().e0(), -1.0)]).is_err());
    }

    #[test]
    fn trajectory_csv_rows() {
        let sys = unit().system(1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        sys.write_trajectory_csv(Point::new(2.0, 1.0), 1, 2, &OdeOptions::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,y,phase,energy\n"));
        assert!(text.lines().count() > 10);
    }
}
