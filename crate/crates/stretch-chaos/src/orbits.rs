//! Periodic points realizing prescribed itineraries: nested covering
//! intervals for interval maps, grid-seeded Newton for planar maps, and the
//! chaos certificate combining them with a stretching check.

use crate::geometry::{OrientedRectangle, Path, Point, RegionPredicate};
use crate::stretching::{check_stretch, PlanarMap, StretchOptions, StretchReport};
use crate::symdyn::{perron_eigenvalue, primitive_necklaces, SymbolMatrix, SymbolSequence};
use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitMethod {
    #[serde(rename = "covering_1d")]
    Covering1d,
    #[serde(rename = "newton_2d")]
    Newton2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitResult {
    pub itinerary: SymbolSequence,
    /// Starting point; interval maps use `(x, 0)`.
    pub point: Point,
    /// The `k` points of the cycle, starting at `point`.
    pub orbit: Vec<Point>,
    /// `‖ψᵏ(w) − w‖∞`.
    pub residual: f64,
    pub itinerary_verified: bool,
    pub method: OrbitMethod,
    /// Final bracket of the covering construction.
    pub interval: Option<(f64, f64)>,
    pub seeds_tried: usize,
    /// Itinerary of an earlier orbit whose point lies within `10·tol`.
    pub duplicate_of: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitError {
    #[error("interval {from} does not cover interval {to} (itinerary positions {position}, {next})")]
    CoveringFails { position: usize, next: usize, from: u8, to: u8 },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

fn check_word(word: &[u8], m: usize) -> Result<(), OrbitError> {
    if word.is_empty() {
        return Err(OrbitError::Invalid("empty itinerary".into()));
    }
    match word.iter().find(|&&s| s as usize >= m) {
        Some(s) => Err(OrbitError::Invalid(format!("symbol {s} with only {m} sets"))),
        None => Ok(()),
    }
}

/// Points per interval used to verify coverings and locate preimages.
pub const COVERING_GRID: usize = 4096;

/// Residual accepted by the covering finder.
pub const COVERING_TOL: f64 = 1e-12;

fn bisect_level(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, level: f64) -> f64 {
    let below_a = f(a) < level;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        if (f(m) < level) == below_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// A subinterval of `[a, b]` mapped by `f` onto `[lo, hi]` with its interior
/// mapped into `[lo, hi]`, from consecutive crossings of the two levels.
fn preimage_component(f: &dyn Fn(f64) -> f64, (a, b): (f64, f64), (lo, hi): (f64, f64)) -> Option<(f64, f64)> {
    let n = COVERING_GRID;
    let xs: Vec<f64> = (0..=n).map(|j| a + (b - a) * j as f64 / n as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let eps = 1e-13 * lo.abs().max(hi.abs()).max(1.0);
    // Crossing events (position, which level): 0 = lo, 1 = hi.
    let mut events: Vec<(f64, u8)> = Vec::new();
    let hits = |y: f64, level: f64| (y - level).abs() <= eps;
    for j in 0..=n {
        for (which, level) in [(0u8, lo), (1u8, hi)] {
            if hits(ys[j], level) {
                events.push((xs[j], which));
            } else if j < n && !hits(ys[j + 1], level) && (ys[j] < level) != (ys[j + 1] < level) {
                events.push((bisect_level(f, xs[j], xs[j + 1], level), which));
            }
        }
    }
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    events.dedup_by(|p, q| p.1 == q.1 && (p.0 - q.0).abs() <= 1e-15 * (b - a).abs().max(1.0));
    events.windows(2).find(|w| w[0].1 != w[1].1).map(|w| (w[0].0, w[1].0))
}

/// Periodic point of an interval map following `word` through `intervals`,
/// via nested preimages and bisection of `fᵏ(x) − x`.
pub fn covering_periodic_point_1d(
    f: &dyn Fn(f64) -> f64,
    intervals: &[(f64, f64)],
    word: &[u8],
) -> Result<PeriodicOrbitResult, OrbitError> {
    check_word(word, intervals.len())?;
    if intervals.iter().any(|(a, b)| !(a < b)) {
        return Err(OrbitError::Invalid("intervals must have a < b".into()));
    }
    let k = word.len();
    for i in 0..k {
        let (a, b) = intervals[word[i] as usize];
        let (c, d) = intervals[word[(i + 1) % k] as usize];
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..=COVERING_GRID {
            let y = f(a + (b - a) * j as f64 / COVERING_GRID as f64);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        let eps = 1e-12 * c.abs().max(d.abs()).max(1.0);
        if !(ymin <= c + eps && ymax >= d - eps) {
            return Err(OrbitError::CoveringFails { position: i, next: (i + 1) % k, from: word[i], to: word[(i + 1) % k] });
        }
    }
    // J_k = I_{s0}; J_i ⊂ I_{si} with f(J_i) = J_{i+1}.
    let mut target = intervals[word[0] as usize];
    for i in (0..k).rev() {
        let src = intervals[word[i] as usize];
        target = preimage_component(f, src, target)
            .ok_or_else(|| OrbitError::NumericalFailure(format!("no preimage component at position {i}")))?;
    }
    let (a, b) = (target.0.min(target.1), target.0.max(target.1));
    let fk = |x: f64| (0..k).fold(x, |y, _| f(y));
    let g = |x: f64| fk(x) - x;
    let (ga, gb) = (g(a), g(b));
    if ga.signum() == gb.signum() && ga != 0.0 && gb != 0.0 {
        return Err(OrbitError::NumericalFailure(format!("no sign change of f^{k}(x) - x on [{a}, {b}]")));
    }
    let (mut lo, mut hi) = (a, b);
    let neg_lo = ga <= 0.0;
    for _ in 0..2000 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if (g(m) <= 0.0) == neg_lo {
            lo = m;
        } else {
            hi = m;
        }
    }
    let x = [lo, hi, 0.5 * (lo + hi)].into_iter().min_by(|p, q| g(*p).abs().total_cmp(&g(*q).abs())).unwrap_or(lo);
    let residual = g(x).abs();
    let mut orbit = Vec::with_capacity(k);
    let mut y = x;
    let mut inside = true;
    for &s in word {
        let (c, d) = intervals[s as usize];
        let eps = COVERING_TOL * c.abs().max(d.abs()).max(1.0);
        inside &= y >= c - eps && y <= d + eps;
        orbit.push(Point::new(y, 0.0));
        y = f(y);
    }
    let verified = inside && residual < COVERING_TOL;
    Ok(PeriodicOrbitResult {
        itinerary: SymbolSequence::periodic(word.to_vec()),
        point: Point::new(x, 0.0),
        orbit,
        residual,
        itinerary_verified: verified,
        method: OrbitMethod::Covering1d,
        interval: Some((lo, hi)),
        seeds_tried: 0,
        duplicate_of: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Seeds per axis over the bounding box of the first region.
    pub grid: usize,
    /// Feasibility band for intermediate iterates, as a fraction of the
    /// bounding-box diameter.
    pub slack: f64,
    /// Relative central-difference step.
    pub fd_step: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Feasible seeds tried, best closure residual first.
    pub max_seeds: usize,
    /// Grid doublings allowed when no seed is feasible.
    pub grid_refinements: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { grid: 64, slack: 1e-3, fd_step: 1e-7, tol: 1e-9, max_iter: 100, max_seeds: 24, grid_refinements: 3 }
    }
}

impl NewtonOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid;
        self
    }
}

fn near(region: &RegionPredicate, p: Point, band: f64) -> bool {
    region.contains(p)
        || [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .iter()
            .any(|&(dx, dy)| region.contains(Point::new(p.x + band * dx, p.y + band * dy)))
}

fn inf_norm(p: Point) -> f64 {
    p.x.abs().max(p.y.abs())
}

struct WordMap<'a> {
    map: &'a dyn PlanarMap,
    regions: Vec<&'a RegionPredicate>,
}

impl WordMap<'_> {
    fn end(&self, w: Point) -> Option<Point> {
        let mut z = w;
        for _ in 0..self.regions.len() {
            z = self.map.apply(z).ok().filter(|p| p.is_finite())?;
        }
        Some(z)
    }

    fn residual(&self, w: Point) -> Option<Point> {
        self.end(w).map(|z| z - w)
    }

    /// Cycle points when every iterate lies within `band` of its region.
    fn cycle(&self, w: Point, band: f64) -> Option<Vec<Point>> {
        let mut z = w;
        let mut out = Vec::with_capacity(self.regions.len());
        for r in &self.regions {
            let ok = if band > 0.0 { near(r, z, band) } else { r.contains(z) };
            if !ok {
                return None;
            }
            out.push(z);
            z = self.map.apply(z).ok()?;
        }
        Some(out)
    }
}

/// Step lengths `1, 1/2, 1/4, ...` tried before giving up on a Newton step.
const DAMPING_STEPS: i32 = 16;

fn fd_h(opts: &NewtonOptions, c: f64) -> f64 {
    if c == 0.0 {
        opts.fd_step
    } else {
        opts.fd_step * c.abs()
    }
}

/// Central difference along `e`, one-sided when a sample leaves the domain.
fn partial(wm: &WordMap, w: Point, e: Point) -> Option<Point> {
    let h = e.x.abs().max(e.y.abs());
    match (wm.residual(w + e), wm.residual(w - e)) {
        (Some(p), Some(m)) => Some((p - m) * (0.5 / h)),
        (Some(p), None) => Some((p - wm.residual(w)?) * (1.0 / h)),
        (None, Some(m)) => Some((wm.residual(w)? - m) * (1.0 / h)),
        (None, None) => None,
    }
}

/// Solves `J d = −g` with `J = [dx dy]`; least-norm solution when `J` is
/// numerically singular.
fn newton_step(dx: Point, dy: Point, g: Point) -> Option<Point> {
    let j = Matrix2::new(dx.x, dy.x, dx.y, dy.y);
    let rhs = Vector2::new(-g.x, -g.y);
    let scale = j.abs().max();
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let d = if j.determinant().abs() > 1e-12 * scale * scale {
        j.lu().solve(&rhs)?
    } else {
        j.svd(true, true).solve(&rhs, 1e-12 * scale).ok()?
    };
    d.iter().all(|v| v.is_finite()).then(|| Point::new(d[0], d[1]))
}

enum NewtonOutcome {
    Converged(Point, f64),
    Stalled(Point, f64),
}

fn newton(wm: &WordMap, seed: Point, opts: &NewtonOptions) -> NewtonOutcome {
    let mut w = seed;
    let Some(mut g) = wm.residual(w) else {
        return NewtonOutcome::Stalled(w, f64::INFINITY);
    };
    for _ in 0..opts.max_iter {
        if inf_norm(g) < opts.tol {
            return NewtonOutcome::Converged(w, inf_norm(g));
        }
        let cols = (|| Some((partial(wm, w, Point::new(fd_h(opts, w.x), 0.0))?, partial(wm, w, Point::new(0.0, fd_h(opts, w.y)))?)))();
        let Some((dx, dy)) = cols else { break };
        let Some(step) = newton_step(dx, dy, g) else { break };
        let mut accepted = false;
        for lambda in (0..DAMPING_STEPS).map(|i| 0.5f64.powi(i)) {
            let cand = w + step * lambda;
            if let Some(gc) = wm.residual(cand) {
                if gc.norm() < g.norm() {
                    w = cand;
                    g = gc;
                    accepted = true;
                    break;
                }
            }
        }
        if !accepted {
            break;
        }
    }
    let r = inf_norm(g);
    if r < opts.tol {
        NewtonOutcome::Converged(w, r)
    } else {
        NewtonOutcome::Stalled(w, r)
    }
}

/// Local residual minimization on successively halved 9×9 grids.
fn refine_minimize(wm: &WordMap, center: Point, half: f64, levels: usize) -> (Point, f64) {
    let mut best = center;
    let mut best_r = wm.residual(center).map(inf_norm).unwrap_or(f64::INFINITY);
    let mut h = half;
    for _ in 0..levels {
        let c = best;
        for i in -4i32..=4 {
            for j in -4i32..=4 {
                let p = Point::new(c.x + h * i as f64 / 4.0, c.y + h * j as f64 / 4.0);
                if let Some(r) = wm.residual(p).map(inf_norm) {
                    if r < best_r {
                        best_r = r;
                        best = p;
                    }
                }
            }
        }
        h *= 0.5;
    }
    (best, best_r)
}

/// Cell centres of an `n×n` grid over region `s₀` whose iterates stay
/// within `band` of their regions, with their closure residual.
fn feasible_seeds(wm: &WordMap, n: usize, band: f64) -> Vec<(usize, Point, f64)> {
    let first = wm.regions[0];
    let bbox = first.bbox();
    (0..n * n)
        .into_par_iter()
        .filter_map(|idx| {
            let (i, j) = (idx % n, idx / n);
            let z = Point::new(
                bbox.x_min + (i as f64 + 0.5) / n as f64 * bbox.width(),
                bbox.y_min + (j as f64 + 0.5) / n as f64 * bbox.height(),
            );
            if !first.contains(z) {
                return None;
            }
            let mut p = z;
            for r in &wm.regions[1..] {
                p = wm.map.apply(p).ok()?;
                if !near(r, p, band) {
                    return None;
                }
            }
            let end = wm.map.apply(p).ok().filter(|q| q.is_finite())?;
            Some((idx, z, inf_norm(end - z)))
        })
        .collect()
}

/// Periodic point of a planar map with itinerary `word` through `regions`
/// (indexed by symbol), from grid seeds refined by damped Newton.
pub fn newton_periodic_point_2d(
    map: &dyn PlanarMap,
    regions: &[RegionPredicate],
    word: &[u8],
    opts: &NewtonOptions,
) -> Result<PeriodicOrbitResult, OrbitError> {
    check_word(word, regions.len())?;
    let wm = WordMap { map, regions: word.iter().map(|&s| &regions[s as usize]).collect() };
    let first = wm.regions[0];
    let bbox = first.bbox();
    let band = opts.slack * bbox.diameter();
    let mut n = opts.grid.max(1);
    let mut seeds = feasible_seeds(&wm, n, band);
    for _ in 0..opts.grid_refinements {
        if !seeds.is_empty() {
            break;
        }
        n *= 2;
        seeds = feasible_seeds(&wm, n, band);
    }
    if seeds.is_empty() {
        return Err(OrbitError::NotFound(format!(
            "no feasible seed for itinerary {} on a {n}x{n} grid",
            SymbolSequence::periodic(word.to_vec()).as_string()
        )));
    }
    seeds.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    let cell = 0.5 * bbox.width().max(bbox.height()) / n as f64;
    let mut tried = 0;
    let mut converged_outside = 0;
    let mut best_stall = f64::INFINITY;
    for &(_, seed, _) in seeds.iter().take(opts.max_seeds) {
        tried += 1;
        let mut outcome = newton(&wm, seed, opts);
        if let NewtonOutcome::Stalled(w, _) = outcome {
            let (m, _) = refine_minimize(&wm, w, 2.0 * cell, 40);
            outcome = newton(&wm, m, opts);
        }
        match outcome {
            NewtonOutcome::Converged(w, r) => {
                if let Some(orbit) = wm.cycle(w, opts.tol) {
                    return Ok(PeriodicOrbitResult {
                        itinerary: SymbolSequence::periodic(word.to_vec()),
                        point: w,
                        orbit,
                        residual: r,
                        itinerary_verified: true,
                        method: OrbitMethod::Newton2d,
                        interval: None,
                        seeds_tried: tried,
                        duplicate_of: None,
                    });
                }
                converged_outside += 1;
            }
            NewtonOutcome::Stalled(_, r) => best_stall = best_stall.min(r),
        }
    }
    let word_s = SymbolSequence::periodic(word.to_vec()).as_string();
    if converged_outside == tried {
        Err(OrbitError::NotFound(format!(
            "itinerary {word_s}: every converged solution leaves the prescribed regions ({tried} seeds)"
        )))
    } else {
        Err(OrbitError::NumericalFailure(format!(
            "itinerary {word_s}: Newton did not reach {} from {tried} seeds (best residual {best_stall:e})",
            opts.tol
        )))
    }
}

/// Method used for each itinerary of a certificate.
pub enum PeriodicFinder<'a> {
    Covering1d { f: &'a (dyn Fn(f64) -> f64 + Sync), intervals: Vec<(f64, f64)> },
    Newton2d(NewtonOptions),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitEntry {
    pub itinerary: String,
    pub period: usize,
    pub result: Option<PeriodicOrbitResult>,
    pub error: Option<OrbitError>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChaosCertificate {
    pub version: String,
    pub stretch: StretchReport,
    pub passing_regions: Vec<usize>,
    pub transition_matrix: Vec<Vec<u64>>,
    pub entropy_bound: f64,
    pub max_period: usize,
    pub method: OrbitMethod,
    pub newton: Option<NewtonOptions>,
    pub orbits: Vec<OrbitEntry>,
    pub failures: Vec<String>,
    pub duplicates: Vec<(String, String)>,
}

impl ChaosCertificate {
    /// Stretching passed on every region and every itinerary was realized.
    pub fn all_realized(&self) -> bool {
        self.stretch.all_pass()
            && self.failures.is_empty()
            && self.orbits.iter().all(|o| o.result.as_ref().is_some_and(|r| r.itinerary_verified))
    }

    pub fn max_residual(&self) -> f64 {
        self.orbits.iter().filter_map(|o| o.result.as_ref()).map(|r| r.residual).fold(0.0, f64::max)
    }

    /// Rows `itinerary,k,x,y,residual`.
    pub fn write_orbits_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "itinerary,k,x,y,residual")?;
        for o in &self.orbits {
            if let Some(r) = &o.result {
                for (k, p) in r.orbit.iter().enumerate() {
                    writeln!(w, "{},{},{:.17e},{:.17e},{:.17e}", o.itinerary, k, p.x, p.y, r.residual)?;
                }
            }
        }
        Ok(())
    }
}

/// Runs `check_stretch` for `(K_i, map): R̃ ⥤ R̃`; when every region passes,
/// looks for a periodic point for each primitive cyclic itinerary up to
/// `max_period`.
pub fn chaos_certificate(
    map: &dyn PlanarMap,
    rect: &OrientedRectangle,
    regions: &[RegionPredicate],
    max_period: usize,
    paths: &[Path],
    finder: &PeriodicFinder,
    opts: &StretchOptions,
) -> ChaosCertificate {
    let stretch = check_stretch(map, rect, rect, regions, paths, opts);
    certificate_from_report(map, regions, stretch, max_period, finder)
}

/// Certificate for an already computed stretching report, e.g. the composite
/// report of a two-phase Poincaré map.
pub fn certificate_from_report(
    map: &dyn PlanarMap,
    regions: &[RegionPredicate],
    stretch: StretchReport,
    max_period: usize,
    finder: &PeriodicFinder,
) -> ChaosCertificate {
    let passing: Vec<usize> = stretch.regions.iter().filter(|r| r.pass).map(|r| r.label).collect();
    let m = passing.len();
    let transition_matrix = vec![vec![1u64; m]; m];
    let entropy_bound = if m == 0 {
        0.0
    } else {
        SymbolMatrix::transition(transition_matrix.clone())
            .ok()
            .and_then(|t| perron_eigenvalue(&t).ok())
            .map(|r| r.entropy)
            .unwrap_or(0.0)
    };
    let (method, newton_opts) = match finder {
        PeriodicFinder::Covering1d { .. } => (OrbitMethod::Covering1d, None),
        PeriodicFinder::Newton2d(o) => (OrbitMethod::Newton2d, Some(*o)),
    };
    let mut failures = Vec::new();
    let mut orbits = Vec::new();
    if stretch.all_pass() {
        let words = primitive_necklaces(regions.len(), max_period);
        orbits = words
            .par_iter()
            .map(|word| {
                let res = match finder {
                    PeriodicFinder::Covering1d { f, intervals } => covering_periodic_point_1d(*f, intervals, word),
                    PeriodicFinder::Newton2d(o) => newton_periodic_point_2d(map, regions, word, o),
                };
                let itinerary = SymbolSequence::periodic(word.clone()).as_string();
                match res {
                    Ok(r) => OrbitEntry { itinerary, period: word.len(), result: Some(r), error: None },
                    Err(e) => OrbitEntry { itinerary, period: word.len(), result: None, error: Some(e) },
                }
            })
            .collect();
        for o in &orbits {
            match (&o.result, &o.error) {
                (Some(r), _) if !r.itinerary_verified => {
                    failures.push(format!("{}: residual {:e} or itinerary not verified", o.itinerary, r.residual))
                }
                (_, Some(e)) => failures.push(format!("{}: {e}", o.itinerary)),
                _ => {}
            }
        }
    } else {
        failures.push("stretching check did not pass on every region; no itineraries attempted".into());
    }
    let tol = newton_opts.map(|o| o.tol).unwrap_or(COVERING_TOL);
    let mut duplicates = Vec::new();
    for i in 0..orbits.len() {
        for j in 0..i {
            let (a, b) = (&orbits[j], &orbits[i]);
            if a.period != b.period {
                continue;
            }
            if let (Some(ra), Some(rb)) = (&a.result, &b.result) {
                if inf_norm(ra.point - rb.point) <= 10.0 * tol {
                    duplicates.push((a.itinerary.clone(), b.itinerary.clone()));
                }
            }
        }
    }
    for (a, b) in &duplicates {
        if let Some(r) = orbits.iter_mut().find(|o| &o.itinerary == b).and_then(|o| o.result.as_mut()) {
            r.duplicate_of = Some(a.clone());
        }
    }
    ChaosCertificate {
        version: crate::report::SCHEMA.into(),
        stretch,
        passing_regions: passing,
        transition_matrix,
        entropy_bound,
        max_period,
        method,
        newton: newton_opts,
        orbits,
        failures,
        duplicates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;

    fn logistic(x: f64) -> f64 {
        4.5 * x * (1.0 - x)
    }

    const I: [(f64, f64); 2] = [(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)];

    #[test]
    fn fixed_points_of_the_logistic_map() {
        let r = covering_periodic_point_1d(&logistic, &I, &[1]).unwrap();
        assert!((r.point.x - 7.0 / 9.0).abs() < 1e-14 && r.itinerary_verified);
        let r = covering_periodic_point_1d(&logistic, &I, &[0]).unwrap();
        assert!(r.point.x.abs() < 1e-14 && r.residual < 1e-12);
    }

    #[test]
    fn non_covering_pair_is_named() {
        let narrow = |x: f64| 0.5 * x;
        match covering_periodic_point_1d(&narrow, &I, &[0, 1]) {
            Err(OrbitError::CoveringFails { position, next, .. }) => assert_eq!((position, next), (0, 1)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(covering_periodic_point_1d(&logistic, &I, &[2]), Err(OrbitError::Invalid(_))));
    }

    #[test]
    fn newton_finds_fixed_point_of_a_contraction() {
        let map = |p: Point| -> Result<Point, crate::DomainError> { Ok(Point::new(0.5 * p.x + 0.1, 0.25 * p.y + 0.3)) };
        let r = RegionPredicate::new(0, "S", BBox::new(0.0, 1.0, 0.0, 1.0), |_| true);
        let res = newton_periodic_point_2d(&map, &[r], &[0], &NewtonOptions::default().with_grid(8)).unwrap();
        assert!((res.point.x - 0.2).abs() < 1e-9 && (res.point.y - 0.4).abs() < 1e-9);
    }

    #[test]
    fn no_feasible_seed_is_not_found() {
        let map = |p: Point| -> Result<Point, crate::DomainError> { Ok(Point::new(p.x + 3.0, p.y)) };
        let near = RegionPredicate::new(0, "S", BBox::new(0.0, 1.0, 0.0, 1.0), |_| true);
        let far = RegionPredicate::new(1, "T", BBox::new(10.0, 11.0, 0.0, 1.0), |p| p.x >= 10.0 && p.x <= 11.0);
        let err = newton_periodic_point_2d(&map, &[near, far], &[0, 1], &NewtonOptions::default().with_grid(8)).unwrap_err();
        assert!(matches!(err, OrbitError::NotFound(_)));
    }

    #[test]
    fn translation_without_fixed_point_is_a_numerical_failure() {
        let map = |p: Point| -> Result<Point, crate::DomainError> { Ok(Point::new(p.x + 5.0, p.y)) };
        let r = RegionPredicate::new(0, "S", BBox::new(0.0, 1.0, 0.0, 1.0), |_| true);
        let opts = NewtonOptions { max_seeds: 2, ..NewtonOptions::default().with_grid(4) };
        let err = newton_periodic_point_2d(&map, &[r], &[0], &opts).unwrap_err();
        assert!(matches!(err, OrbitError::NumericalFailure(_)));
    }
}
