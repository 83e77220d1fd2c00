//! Sampled verification of the stretching-along-paths relation, crossing
//! counts and composition of stretching maps.

use crate::error::DomainError;
use crate::geometry::{OrientedRectangle, Path, Point, RegionPredicate, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A planar map, possibly defined only on part of the plane.
pub trait PlanarMap: Send + Sync {
    fn apply(&self, p: Point) -> Result<Point, DomainError>;
}

impl<F> PlanarMap for F
where
    F: Fn(Point) -> Result<Point, DomainError> + Send + Sync,
{
    fn apply(&self, p: Point) -> Result<Point, DomainError> {
        self(p)
    }
}

pub type SharedMap = Arc<dyn PlanarMap>;

pub fn identity_map() -> SharedMap {
    Arc::new(|p: Point| Ok(p))
}

/// `second ∘ first`.
pub fn compose(first: SharedMap, second: SharedMap) -> SharedMap {
    Arc::new(move |p: Point| second.apply(first.apply(p)?))
}

/// `k`-th iterate of a map.
pub fn iterate(map: &dyn PlanarMap, p: Point, k: usize) -> Result<Point, DomainError> {
    let mut z = p;
    for _ in 0..k {
        z = map.apply(z)?;
    }
    Ok(z)
}

pub const REPORT_VERSION: &str = "sc-report/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StretchOptions {
    /// Side attribution band; `None` means `1e-6 × diam(B)`.
    pub tol: Option<f64>,
    /// Runs with fewer samples are locally resampled.
    pub min_run_samples: usize,
    pub max_refine_levels: usize,
    pub bisection_steps: usize,
    pub map_id: String,
    pub seed: Option<u64>,
}

impl Default for StretchOptions {
    fn default() -> Self {
        StretchOptions {
            tol: None,
            min_run_samples: 8,
            max_refine_levels: 3,
            bisection_steps: 60,
            map_id: "map".into(),
            seed: None,
        }
    }
}

impl StretchOptions {
    pub fn with_map_id(mut self, id: impl Into<String>) -> Self {
        self.map_id = id.into();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub path_id: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub entry: Side,
    pub exit: Side,
    /// Samples of the run that produced this witness.
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionResult {
    pub label: usize,
    pub name: String,
    pub paths_tested: usize,
    pub paths_witnessed: usize,
    pub paths_inconclusive: usize,
    pub status: RegionStatus,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    pub unwitnessed_paths: Vec<usize>,
    pub resolution_warnings: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StretchReport {
    pub version: String,
    pub map_id: String,
    pub rect_a: String,
    pub rect_b: String,
    pub regions: Vec<RegionResult>,
    pub crossing_number: usize,
    pub inconclusive: bool,
    pub tol: f64,
    pub n_paths: usize,
    pub samples_per_path: usize,
    pub seed: Option<u64>,
    pub domain_errors: usize,
    /// Path samples found in more than one region.
    pub overlap_samples: usize,
    /// Smallest distance observed along a path between samples of two different regions.
    pub min_region_gap: Option<f64>,
    pub note: String,
}

impl StretchReport {
    pub fn all_pass(&self) -> bool {
        !self.regions.is_empty() && self.regions.iter().all(|r| r.pass)
    }

    pub fn region(&self, label: usize) -> Option<&RegionResult> {
        self.regions.iter().find(|r| r.label == label)
    }
}

const NOTE: &str = "sampled check over the listed path family; not a proof for all paths";

#[derive(Clone, Copy)]
struct Sample {
    z: Point,
    image: Option<Point>,
    in_b: bool,
}

struct Checker<'a> {
    map: &'a dyn PlanarMap,
    rect_b: &'a OrientedRectangle,
    region: Option<&'a RegionPredicate>,
    path: &'a Path,
    tol: f64,
    opts: &'a StretchOptions,
}

#[derive(Default)]
struct RunOutcome {
    witnesses: Vec<Witness>,
    warnings: usize,
    domain_errors: usize,
}

impl Checker<'_> {
    fn sample(&self, t: f64) -> Sample {
        let z = self.path.eval(t);
        match self.map.apply(z) {
            Ok(w) if w.is_finite() => Sample { z, image: Some(w), in_b: self.rect_b.contains(w) },
            _ => Sample { z, image: None, in_b: false },
        }
    }

    fn ok(&self, s: &Sample) -> bool {
        s.in_b && self.region.is_none_or(|r| r.contains(s.z))
    }

    /// Bisection between a failing parameter `bad` and a passing parameter `good`.
    fn boundary(&self, mut bad: f64, mut good: f64, mut good_s: Sample) -> (f64, Sample) {
        for _ in 0..self.opts.bisection_steps {
            let mid = 0.5 * (bad + good);
            if mid == bad || mid == good {
                break;
            }
            let s = self.sample(mid);
            if self.ok(&s) {
                good = mid;
                good_s = s;
            } else {
                bad = mid;
            }
        }
        (good, good_s)
    }

    fn scan(&self, ts: &[f64], samples: &[Sample], level: usize, all: bool, out: &mut RunOutcome) {
        let n = ts.len();
        let mut k = 0;
        while k < n {
            if !self.ok(&samples[k]) {
                k += 1;
                continue;
            }
            let k0 = k;
            while k + 1 < n && self.ok(&samples[k + 1]) {
                k += 1;
            }
            let k1 = k;
            k += 1;
            let count = k1 - k0 + 1;
            if count < self.opts.min_run_samples && level < self.opts.max_refine_levels && n > 1 {
                let lo = if k0 > 0 { ts[k0 - 1] } else { ts[k0] };
                let hi = if k1 + 1 < n { ts[k1 + 1] } else { ts[k1] };
                if hi > lo {
                    let m = (self.opts.min_run_samples << (level + 1)).max(16);
                    let sub_ts: Vec<f64> = (0..=m).map(|j| lo + (hi - lo) * j as f64 / m as f64).collect();
                    let sub: Vec<Sample> = sub_ts.iter().map(|&t| self.sample(t)).collect();
                    out.domain_errors += sub.iter().filter(|s| s.image.is_none()).count();
                    self.scan(&sub_ts, &sub, level + 1, all, out);
                    if !all && !out.witnesses.is_empty() {
                        return;
                    }
                    continue;
                }
            }
            if count < self.opts.min_run_samples {
                out.warnings += 1;
            }
            let (t0, s0) = if k0 > 0 { self.boundary(ts[k0 - 1], ts[k0], samples[k0]) } else { (ts[k0], samples[k0]) };
            let (t1, s1) = if k1 + 1 < n { self.boundary(ts[k1 + 1], ts[k1], samples[k1]) } else { (ts[k1], samples[k1]) };
            let entry = s0.image.and_then(|w| self.rect_b.attribute_side(w, self.tol));
            let exit = s1.image.and_then(|w| self.rect_b.attribute_side(w, self.tol));
            if let (Some(a), Some(b)) = (entry, exit) {
                if a != b && t0 < t1 {
                    out.witnesses.push(Witness { path_id: self.path.id, t_start: t0, t_end: t1, entry: a, exit: b, samples: count });
                    if !all {
                        return;
                    }
                }
            }
        }
    }
}

fn default_tol(rect_b: &OrientedRectangle, opts: &StretchOptions) -> f64 {
    opts.tol.unwrap_or(1e-6 * rect_b.diameter())
}

struct PathResult {
    per_region: Vec<RunOutcome>,
    domain_errors: usize,
    overlap: usize,
    gap: Option<f64>,
}

/// Checks `(K_i, map): Ã ⥤ B̃` for every region on every path. A path is
/// witnessed for `K_i` when some maximal parameter interval with
/// `γ(t) ∈ K_i` and `map(γ(t)) ∈ B` has its image endpoints on different
/// designated sides of `B`.
pub fn check_stretch(
    map: &dyn PlanarMap,
    rect_a: &OrientedRectangle,
    rect_b: &OrientedRectangle,
    regions: &[RegionPredicate],
    paths: &[Path],
    opts: &StretchOptions,
) -> StretchReport {
    let tol = default_tol(rect_b, opts);
    let results: Vec<PathResult> = paths
        .par_iter()
        .map(|path| {
            let base = Checker { map, rect_b, region: None, path, tol, opts };
            let samples: Vec<Sample> = path.params().iter().map(|&t| base.sample(t)).collect();
            let domain_errors = samples.iter().filter(|s| s.image.is_none()).count();
            let member: Vec<Vec<bool>> =
                regions.iter().map(|r| samples.iter().map(|s| r.contains(s.z)).collect()).collect();

            let mut overlap = 0;
            let mut gap: Option<f64> = None;
            let mut last: Option<(usize, Point)> = None;
            for (k, s) in samples.iter().enumerate() {
                let hits: Vec<usize> = (0..regions.len()).filter(|&i| member[i][k]).collect();
                if hits.len() > 1 {
                    overlap += 1;
                }
                if let [i] = hits[..] {
                    if let Some((j, p)) = last {
                        if j != i {
                            let d = p.dist(s.z);
                            gap = Some(gap.map_or(d, |g: f64| g.min(d)));
                        }
                    }
                    last = Some((i, s.z));
                }
            }

            let per_region = regions
                .iter()
                .map(|r| {
                    let c = Checker { region: Some(r), ..Checker { map, rect_b, region: None, path, tol, opts } };
                    let mut out = RunOutcome::default();
                    c.scan(path.params(), &samples, 0, false, &mut out);
                    out
                })
                .collect();
            PathResult { per_region, domain_errors, overlap, gap }
        })
        .collect();

    let domain_errors: usize = results.iter().map(|r| r.domain_errors).sum();
    let mut region_results = Vec::with_capacity(regions.len());
    for (i, r) in regions.iter().enumerate() {
        let mut witnesses = Vec::new();
        let mut unwitnessed = Vec::new();
        let mut inconclusive = 0;
        let mut warnings = 0;
        for (path, res) in paths.iter().zip(&results) {
            let out = &res.per_region[i];
            warnings += out.warnings;
            match out.witnesses.first() {
                Some(w) => witnesses.push(*w),
                None => {
                    unwitnessed.push(path.id);
                    if res.domain_errors + out.domain_errors > 0 {
                        inconclusive += 1;
                    }
                }
            }
        }
        let status = if unwitnessed.is_empty() {
            RegionStatus::Pass
        } else if inconclusive == unwitnessed.len() {
            RegionStatus::Inconclusive
        } else {
            RegionStatus::Fail
        };
        region_results.push(RegionResult {
            label: r.label,
            name: r.name.clone(),
            paths_tested: paths.len(),
            paths_witnessed: witnesses.len(),
            paths_inconclusive: inconclusive,
            pass: status == RegionStatus::Pass && !paths.is_empty(),
            status,
            witnesses,
            unwitnessed_paths: unwitnessed,
            resolution_warnings: warnings,
        });
    }
    StretchReport {
        version: REPORT_VERSION.into(),
        map_id: opts.map_id.clone(),
        rect_a: rect_a.id().to_string(),
        rect_b: rect_b.id().to_string(),
        crossing_number: region_results.iter().filter(|r| r.pass).count(),
        inconclusive: region_results.iter().any(|r| r.status == RegionStatus::Inconclusive),
        regions: region_results,
        tol,
        n_paths: paths.len(),
        samples_per_path: paths.iter().map(|p| p.len()).max().unwrap_or(0),
        seed: opts.seed,
        domain_errors,
        overlap_samples: results.iter().map(|r| r.overlap).sum(),
        min_region_gap: results.iter().filter_map(|r| r.gap).reduce(f64::min),
        note: NOTE.into(),
    }
}

/// All maximal sub-arcs of `map ∘ path` inside `B` that join the two
/// designated sides of `B`.
pub fn crossing_witnesses(map: &dyn PlanarMap, rect_b: &OrientedRectangle, path: &Path, tol: f64) -> Vec<Witness> {
    let opts = StretchOptions::default();
    let c = Checker { map, rect_b, region: None, path, tol, opts: &opts };
    let samples: Vec<Sample> = path.params().iter().map(|&t| c.sample(t)).collect();
    let mut out = RunOutcome::default();
    c.scan(path.params(), &samples, 0, true, &mut out);
    out.witnesses
}

/// Number of disjoint crossings of `B` by `map ∘ path`; use the identity map
/// to count crossings of an image path directly.
pub fn crossing_count(map: &dyn PlanarMap, rect_b: &OrientedRectangle, path: &Path, tol: f64) -> usize {
    crossing_witnesses(map, rect_b, path, tol).len()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositionReport {
    /// `(i, j)` for each composite region `H_i ∩ φ⁻¹(K_j)`, in report order.
    pub pairs: Vec<(usize, usize)>,
    pub rect_mid: String,
    pub report: StretchReport,
}

impl CompositionReport {
    pub fn all_pass(&self) -> bool {
        self.report.all_pass()
    }
}

/// Composite regions `{z ∈ H_i : φ(z) ∈ K_j}` labelled `i·|K| + j`.
pub fn composite_regions(phi: &SharedMap, h: &[RegionPredicate], k: &[RegionPredicate]) -> Vec<(usize, usize, RegionPredicate)> {
    let mut out = Vec::new();
    for (i, hi) in h.iter().enumerate() {
        for (j, kj) in k.iter().enumerate() {
            let (hi2, kj2, phi2) = (hi.clone(), kj.clone(), phi.clone());
            let region = RegionPredicate::new(
                i * k.len() + j,
                format!("{}&pre({})", hi.name, kj.name),
                hi.bbox(),
                move |z| hi2.contains(z) && phi2.apply(z).is_ok_and(|w| kj2.contains(w)),
            );
            out.push((i, j, region));
        }
    }
    out
}

/// Overlap count and smallest gap between samples of different regions.
fn region_overlap(regions: &[RegionPredicate], path: &Path) -> (usize, Option<f64>) {
    let mut overlap = 0;
    let mut gap: Option<f64> = None;
    let mut last: Option<(usize, Point)> = None;
    for z in path.points() {
        let hits: Vec<usize> = (0..regions.len()).filter(|&i| regions[i].contains(*z)).collect();
        if hits.len() > 1 {
            overlap += 1;
        }
        if let [i] = hits[..] {
            if let Some((j, p)) = last {
                if j != i {
                    let d = p.dist(*z);
                    gap = Some(gap.map_or(d, |g: f64| g.min(d)));
                }
            }
            last = Some((i, *z));
        }
    }
    (overlap, gap)
}

/// Checks `(H_i ∩ φ⁻¹(K_j), ψ∘φ): Ã ⥤ C̃` for every pair. Each path is
/// first cut to the sub-arcs witnessing `(H_i, φ): Ã ⥤ B̃`; those sub-arcs
/// are resampled with the path's sample count and checked for the composite
/// region, which resolves the much shorter composite crossings.
#[allow(clippy::too_many_arguments)]
pub fn check_composition(
    phi: SharedMap,
    psi: SharedMap,
    rect_a: &OrientedRectangle,
    rect_b: &OrientedRectangle,
    rect_c: &OrientedRectangle,
    regions_h: &[RegionPredicate],
    regions_k: &[RegionPredicate],
    paths: &[Path],
    opts: &StretchOptions,
) -> CompositionReport {
    let comps = composite_regions(&phi, regions_h, regions_k);
    let pairs = comps.iter().map(|(i, j, _)| (*i, *j)).collect();
    let composite = compose(phi.clone(), psi);
    let tol_b = default_tol(rect_b, opts);
    let tol_c = default_tol(rect_c, opts);

    // Sub-arcs (path index, t_start, t_end) witnessing each H_i under φ.
    let first: Vec<Vec<(usize, f64, f64)>> = regions_h
        .iter()
        .map(|h| {
            paths
                .par_iter()
                .enumerate()
                .flat_map_iter(|(pi, path)| {
                    let c = Checker { map: phi.as_ref(), rect_b, region: Some(h), path, tol: tol_b, opts };
                    let samples: Vec<Sample> = path.params().iter().map(|&t| c.sample(t)).collect();
                    let mut out = RunOutcome::default();
                    c.scan(path.params(), &samples, 0, true, &mut out);
                    out.witnesses.into_iter().map(move |w| (pi, w.t_start, w.t_end))
                })
                .collect()
        })
        .collect();

    let mut region_results = Vec::with_capacity(comps.len());
    let mut domain_errors = 0;
    for (i, _, region) in &comps {
        let arcs = &first[*i];
        let subpaths: Vec<Path> = arcs
            .iter()
            .enumerate()
            .filter_map(|(k, &(pi, a, b))| {
                let path = &paths[pi];
                Path::from_fn(k, path.len().max(2), |s| path.eval(a + s * (b - a))).ok()
            })
            .collect();
        let rep = check_stretch(composite.as_ref(), rect_a, rect_c, std::slice::from_ref(region), &subpaths, opts);
        domain_errors += rep.domain_errors;
        let sub = &rep.regions[0];
        let mut witnesses = Vec::new();
        let mut unwitnessed = Vec::new();
        for (pi, path) in paths.iter().enumerate() {
            let found = sub.witnesses.iter().find(|w| arcs[w.path_id].0 == pi).map(|w| {
                let (_, a, b) = arcs[w.path_id];
                Witness { path_id: path.id, t_start: a + w.t_start * (b - a), t_end: a + w.t_end * (b - a), ..*w }
            });
            match found {
                Some(w) => witnesses.push(w),
                None => unwitnessed.push(path.id),
            }
        }
        let status = if unwitnessed.is_empty() {
            RegionStatus::Pass
        } else if sub.paths_inconclusive > 0 && witnesses.is_empty() {
            RegionStatus::Inconclusive
        } else {
            RegionStatus::Fail
        };
        region_results.push(RegionResult {
            label: region.label,
            name: region.name.clone(),
            paths_tested: paths.len(),
            paths_witnessed: witnesses.len(),
            paths_inconclusive: if status == RegionStatus::Inconclusive { unwitnessed.len() } else { 0 },
            pass: status == RegionStatus::Pass && !paths.is_empty(),
            status,
            witnesses,
            unwitnessed_paths: unwitnessed,
            resolution_warnings: sub.resolution_warnings,
        });
    }
    let regions: Vec<RegionPredicate> = comps.into_iter().map(|(_, _, r)| r).collect();
    let gaps: Vec<(usize, Option<f64>)> = paths.par_iter().map(|p| region_overlap(&regions, p)).collect();
    let report = StretchReport {
        version: REPORT_VERSION.into(),
        map_id: opts.map_id.clone(),
        rect_a: rect_a.id().to_string(),
        rect_b: rect_c.id().to_string(),
        crossing_number: region_results.iter().filter(|r| r.pass).count(),
        inconclusive: region_results.iter().any(|r| r.status == RegionStatus::Inconclusive),
        regions: region_results,
        tol: tol_c,
        n_paths: paths.len(),
        samples_per_path: paths.iter().map(|p| p.len()).max().unwrap_or(0),
        seed: opts.seed,
        domain_errors,
        overlap_samples: gaps.iter().map(|g| g.0).sum(),
        min_region_gap: gaps.iter().filter_map(|g| g.1).reduce(f64::min),
        note: NOTE.into(),
    };
    CompositionReport { pairs, rect_mid: rect_b.id().to_string(), report }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_rect_from_graphs, sample_test_paths, GraphOrientation};

    fn unit() -> OrientedRectangle {
        make_rect_from_graphs("unit", |_| 0.0, |_| 1.0, 0.0, 1.0, GraphOrientation::Vertical).unwrap()
    }

    #[test]
    fn identity_stretches_onto_itself() {
        let r = unit();
        let paths = sample_test_paths(&r, 10, 64, 3);
        let k = r.as_region(0, "R");
        let rep = check_stretch(identity_map().as_ref(), &r, &r, &[k], &paths, &StretchOptions::default());
        assert!(rep.all_pass());
        assert_eq!(rep.crossing_number, 1);
        let w = rep.regions[0].witnesses[0];
        assert_eq!((w.t_start, w.t_end, w.entry, w.exit), (0.0, 1.0, Side::Left, Side::Right));
    }

    #[test]
    fn chord_and_miss() {
        let r = unit();
        let chord = Path::from_fn(0, 50, |t| Point::new(-0.5 + 2.0 * t, 0.3)).unwrap();
        assert_eq!(crossing_count(identity_map().as_ref(), &r, &chord, 1e-6), 1);
        let away = Path::from_fn(0, 50, |t| Point::new(3.0 + t, 3.0)).unwrap();
        assert_eq!(crossing_count(identity_map().as_ref(), &r, &away, 1e-6), 0);
        let zigzag = Path::from_fn(0, 400, |t| Point::new(0.5 + 0.7 * (3.0 * std::f64::consts::PI * t).cos(), t)).unwrap();
        assert_eq!(crossing_count(identity_map().as_ref(), &r, &zigzag, 1e-6), 3);
    }

    #[test]
    fn domain_errors_are_inconclusive() {
        let r = unit();
        let paths = sample_test_paths(&r, 4, 32, 1);
        let bad = |_: Point| -> Result<Point, DomainError> { Err(DomainError::new("nowhere")) };
        let rep = check_stretch(&bad, &r, &r, &[r.as_region(0, "R")], &paths, &StretchOptions::default());
        assert_eq!(rep.regions[0].status, RegionStatus::Inconclusive);
        assert!(rep.inconclusive && !rep.all_pass());
    }

    #[test]
    fn composition_of_identities() {
        let r = unit();
        let paths = sample_test_paths(&r, 6, 32, 5);
        let k = r.as_region(0, "R");
        let rep = check_composition(
            identity_map(),
            identity_map(),
            &r,
            &r,
            &r,
            std::slice::from_ref(&k),
            std::slice::from_ref(&k),
            &paths,
            &StretchOptions::default(),
        );
        assert_eq!(rep.pairs, vec![(0, 0)]);
        assert!(rep.all_pass());
    }
}
