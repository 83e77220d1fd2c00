use super::ode::OdeOptions;
use super::orbit::{orbit_period, PhaseFlow};
use super::{DuffingParams, FlowError};
use crate::geometry::{sample_test_paths, OrientedRectangle, Path, Point, RegionPredicate};
use crate::stretching::{check_composition, check_stretch, compose, CompositionReport, SharedMap, StretchOptions, StretchReport};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Levels `e₁ < e₂` of `E_q` and `f₁ < f₂` of `E_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingLevels {
    pub e1: f64,
    pub e2: f64,
    pub f1: f64,
    pub f2: f64,
}

impl DuffingLevels {
    /// Levels used for the reference parameters `k = 10, q = 4, s = 0.5`.
    pub const REFERENCE: DuffingLevels = DuffingLevels { e1: 4.5, e2: 5.0, f1: -0.5, f2: 0.0 };
}

/// Lower-half-plane point with `E_q = e`, `E_s = f`; both level lines are
/// parabolas for `x ≤ 0`.
pub fn duffing_corner(p: &DuffingParams, e: f64, f: f64) -> Option<Point> {
    let qs = p.q + p.s;
    let x = (f - e) / qs;
    let y2 = 2.0 * (e * p.s + p.q * f) / qs;
    (x <= 0.0 && y2 >= 0.0).then(|| Point::new(x, -y2.sqrt()))
}

/// `E_q ∈ [e₁, e₂]` and `E_s ∈ [f₁, f₂]` with slack `slack · max(1, |level|)`.
fn band_membership(p: &DuffingParams, lv: &DuffingLevels, slack: f64) -> impl Fn(Point) -> bool + Send + Sync + Copy + 'static {
    let (eq, es, lv) = (p.eq(), p.es(), *lv);
    let se = slack * lv.e2.abs().max(1.0);
    let sf = slack * lv.f2.abs().max(lv.f1.abs()).max(1.0);
    move |z: Point| {
        eq.energy(z).is_ok_and(|e| e >= lv.e1 - se && e <= lv.e2 + se)
            && es.energy(z).is_ok_and(|f| f >= lv.f1 - sf && f <= lv.f2 + sf)
    }
}

/// Energy slack of the regions `H_i` and `K`.
pub const REGION_SLACK: f64 = 1e-6;

/// `R₁` in the third quadrant with sides on `E_q = e₁, e₂`, and its mirror
/// image `R₂` with sides on `E_s = f₁, f₂`.
pub fn duffing_linked_rects(p: &DuffingParams, lv: &DuffingLevels) -> Result<(OrientedRectangle, OrientedRectangle), FlowError> {
    let DuffingLevels { e1, e2, f1, f2 } = *lv;
    if !(e1 < e2 && f1 < f2) {
        return Err(FlowError::Invalid("need e1 < e2 and f1 < f2".into()));
    }
    if f2 > e1 || e1 * p.s + p.q * f1 <= 0.0 {
        return Err(FlowError::Invalid(format!(
            "level lines do not meet in x <= 0, y < 0 (need f2 <= e1 and e1*s + q*f1 > 0; got {lv:?})"
        )));
    }
    let (pp, lv) = (*p, *lv);
    let corner = move |u: f64, v: f64| {
        duffing_corner(&pp, lv.e1 + u * (lv.e2 - lv.e1), lv.f1 + v * (lv.f2 - lv.f1)).unwrap_or(Point::new(f64::NAN, f64::NAN))
    };
    let inside = band_membership(p, &lv, 1e-9);
    let r1 = OrientedRectangle::new("R1", corner, move |z| z.y <= 0.0 && inside(z))?;
    let r2 = OrientedRectangle::new(
        "R2",
        move |u, v| {
            let z = corner(v, u);
            Point::new(z.x, -z.y)
        },
        move |z| z.y >= 0.0 && inside(Point::new(z.x, -z.y)),
    )?;
    Ok((r1, r2))
}

/// Margin added on both ends of the angular extent of `R₂`.
pub const WINDOW_MARGIN: f64 = 0.05;

/// The switched Duffing construction for fixed switching times:
/// `(H_i, Ψ_q): R̃₁ ⥤ R̃₂` with angular windows about the centre of `E_q`,
/// and `Ψ_s: R̃₂ ⥤ R̃₁` on the whole of `R₂`.
pub struct DuffingPipeline {
    pub params: DuffingParams,
    pub levels: DuffingLevels,
    pub r_q: f64,
    pub r_s: f64,
    pub r1: OrientedRectangle,
    pub r2: OrientedRectangle,
    pub psi_q: Arc<PhaseFlow>,
    pub psi_s: Arc<PhaseFlow>,
    pub h: Vec<RegionPredicate>,
    pub k: Vec<RegionPredicate>,
}

impl std::fmt::Debug for DuffingPipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DuffingPipeline")
            .field("params", &self.params)
            .field("levels", &self.levels)
            .field("r_q", &self.r_q)
            .field("r_s", &self.r_s)
            .field("windows", &self.h.len())
            .finish()
    }
}

fn angle_about(z: Point, c: Point) -> f64 {
    (z.y - c.y).atan2(z.x - c.x)
}

impl DuffingPipeline {
    /// At most `m` windows are kept.
    pub fn new(
        params: DuffingParams,
        levels: DuffingLevels,
        m: usize,
        r_q: f64,
        r_s: f64,
        opts: &OdeOptions,
    ) -> Result<Self, FlowError> {
        if !(r_q > 0.0 && r_s > 0.0) {
            return Err(FlowError::Invalid("switching times must be positive".into()));
        }
        let (r1, r2) = duffing_linked_rects(&params, &levels)?;
        let eq = params.eq();
        let c = eq.center().unwrap_or_default();
        let psi_q = Arc::new(PhaseFlow::new(eq, r_q, *opts));
        let psi_s = Arc::new(PhaseFlow::new(params.es(), r_s, *opts));

        let total = {
            let flow = psi_q.clone();
            move |z: Point| flow.advance(z).map(|(_, da)| angle_about(z, c) + da).unwrap_or(f64::NAN)
        };
        let side = |u: f64| {
            (0..=64).map(|j| total(r1.param(u, j as f64 / 64.0))).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                (lo.min(a), hi.max(a))
            })
        };
        let (l, r) = (side(0.0), side(1.0));
        let mut h = Vec::new();
        let sweep = if l.1 < r.0 {
            Some((l.1, r.0))
        } else if r.1 < l.0 {
            Some((r.1, l.0))
        } else {
            None
        };
        if let Some(sweep) = sweep.filter(|s| s.0.is_finite() && s.1.is_finite()) {
            let mut b = (f64::INFINITY, f64::NEG_INFINITY);
            for s in [crate::geometry::Side::Left, crate::geometry::Side::Right, crate::geometry::Side::Down, crate::geometry::Side::Up] {
                for z in r2.side(s) {
                    let a = angle_about(*z, c);
                    b = (b.0.min(a), b.1.max(a));
                }
            }
            let (lo, hi) = (b.0 - WINDOW_MARGIN, b.1 + WINDOW_MARGIN);
            let k_min = ((sweep.0 - lo) / (2.0 * PI)).ceil() as i64;
            let k_max = ((sweep.1 - hi) / (2.0 * PI)).floor() as i64;
            for k in (k_min..=k_max).rev().take(m) {
                let label = h.len();
                let (w_lo, w_hi) = (lo + 2.0 * PI * k as f64, hi + 2.0 * PI * k as f64);
                let (inside, total) = (band_membership(&params, &levels, REGION_SLACK), total.clone());
                h.push(RegionPredicate::new(label, format!("H{label}"), r1.bbox(), move |z| {
                    z.y <= 0.0 && inside(z) && {
                        let a = total(z);
                        a >= w_lo && a <= w_hi
                    }
                }));
            }
        }
        let inside = band_membership(&params, &levels, REGION_SLACK);
        let k = vec![RegionPredicate::new(0, "K0", r2.bbox(), move |z| z.y >= 0.0 && inside(Point::new(z.x, -z.y)))];
        Ok(DuffingPipeline { params, levels, r_q, r_s, r1, r2, psi_q, psi_s, h, k })
    }

    pub fn phase_q_map(&self) -> SharedMap {
        self.psi_q.clone()
    }

    pub fn phase_s_map(&self) -> SharedMap {
        self.psi_s.clone()
    }

    /// `Ψ = Ψ_s ∘ Ψ_q`.
    pub fn poincare_map(&self) -> SharedMap {
        compose(self.phase_q_map(), self.phase_s_map())
    }

    pub fn check_phase_q(&self, paths: &[Path], opts: &StretchOptions) -> StretchReport {
        check_stretch(self.psi_q.as_ref(), &self.r1, &self.r2, &self.h, paths, opts)
    }

    pub fn check_phase_s(&self, paths: &[Path], opts: &StretchOptions) -> StretchReport {
        check_stretch(self.psi_s.as_ref(), &self.r2, &self.r1, &self.k, paths, opts)
    }

    pub fn check_composite(&self, paths: &[Path], opts: &StretchOptions) -> CompositionReport {
        check_composition(self.phase_q_map(), self.phase_s_map(), &self.r1, &self.r2, &self.r1, &self.h, &self.k, paths, opts)
    }
}

/// Periods `τ_q(e₁)`, `τ_q(e₂)` of the forced phase.
pub fn duffing_periods(p: &DuffingParams, lv: &DuffingLevels, opts: &OdeOptions) -> Result<(f64, f64), FlowError> {
    Ok((orbit_period(&p.eq(), lv.e1, opts)?, orbit_period(&p.eq(), lv.e2, opts)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanPoint {
    pub r_q: f64,
    pub r_s: f64,
    pub windows: usize,
    pub crossing_q: usize,
    pub crossing_s: usize,
    /// `None` when a single phase already failed.
    pub composite_crossing: Option<usize>,
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DuffingScan {
    pub params: DuffingParams,
    pub levels: DuffingLevels,
    pub m: usize,
    pub n_paths: usize,
    pub samples_per_path: usize,
    pub seed: u64,
    pub points: Vec<ScanPoint>,
    pub certified: Option<(f64, f64)>,
}

/// Scans `(r_q, r_s)` over a grid. A pair is certified when both phases
/// stretch with crossing numbers `m` and `1` and the composite map stretches
/// on all `m` composite regions. Stops at the first certified pair when
/// `stop_at_first` is set.
#[allow(clippy::too_many_arguments)]
pub fn duffing_scan(
    params: DuffingParams,
    levels: DuffingLevels,
    m: usize,
    r_q_grid: &[f64],
    r_s_grid: &[f64],
    n_paths: usize,
    samples_per_path: usize,
    seed: u64,
    stop_at_first: bool,
    opts: &OdeOptions,
) -> Result<DuffingScan, FlowError> {
    let (r1, r2) = duffing_linked_rects(&params, &levels)?;
    let paths1 = sample_test_paths(&r1, n_paths, samples_per_path, seed);
    let paths2 = sample_test_paths(&r2, n_paths, samples_per_path, seed);
    let sopts = StretchOptions::default().with_seed(seed);
    let mut points = Vec::new();
    let mut certified = None;
    'outer: for &r_s in r_s_grid {
        let probe = DuffingPipeline::new(params, levels, m, r_q_grid.first().copied().unwrap_or(1.0), r_s, opts)?;
        let crossing_s = probe.check_phase_s(&paths2, &sopts).crossing_number;
        for &r_q in r_q_grid {
            let pipe = DuffingPipeline::new(params, levels, m, r_q, r_s, opts)?;
            let mut pt = ScanPoint {
                r_q,
                r_s,
                windows: pipe.h.len(),
                crossing_q: 0,
                crossing_s,
                composite_crossing: None,
                certified: false,
            };
            if pipe.h.len() == m && crossing_s == 1 {
                pt.crossing_q = pipe.check_phase_q(&paths1, &sopts).crossing_number;
                if pt.crossing_q == m {
                    let comp = pipe.check_composite(&paths1, &sopts);
                    pt.composite_crossing = Some(comp.report.crossing_number);
                    pt.certified = comp.all_pass() && comp.report.crossing_number == m;
                }
            }
            let ok = pt.certified;
            points.push(pt);
            if ok && certified.is_none() {
                certified = Some((r_q, r_s));
                if stop_at_first {
                    break 'outer;
                }
            }
        }
    }
    Ok(DuffingScan { params, levels, m, n_paths, samples_per_path, seed, points, certified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Side;

    fn reference() -> DuffingParams {
        DuffingParams::new(10.0, 4.0, 0.5).unwrap()
    }

    #[test]
    fn corners_satisfy_both_energies() {
        let p = reference();
        let lv = DuffingLevels::REFERENCE;
        let (r1, r2) = duffing_linked_rects(&p, &lv).unwrap();
        for (u, v) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            let z = r1.param(u, v);
            let e = lv.e1 + u * (lv.e2 - lv.e1);
            let f = lv.f1 + v * (lv.f2 - lv.f1);
            assert!((p.eq().energy(z).unwrap() - e).abs() < 1e-9);
            assert!((p.es().energy(z).unwrap() - f).abs() < 1e-9);
            let w = r2.param(v, u);
            assert_eq!((w.x, w.y), (z.x, -z.y));
        }
        assert!(r2.side(Side::Left).iter().all(|z| (p.es().energy(*z).unwrap() - lv.f1).abs() < 1e-9));
    }

    #[test]
    fn empty_intersection_refused() {
        let p = reference();
        let lv = DuffingLevels { f2: 5.0, ..DuffingLevels::REFERENCE };
        assert!(duffing_linked_rects(&p, &lv).is_err());
        let lv = DuffingLevels { f1: -3.0, ..DuffingLevels::REFERENCE };
        assert!(duffing_linked_rects(&p, &lv).is_err());
    }

    #[test]
    fn unforced_phase_is_a_parabolic_shear() {
        // For x ≤ 0 the s-phase solves x'' = −s exactly.
        let p = reference();
        let flow = PhaseFlow::new(p.es(), 2.5, OdeOptions::default());
        let z = Point::new(-1.1, 0.8);
        let (w, _) = flow.advance(z).unwrap();
        let t = 2.5;
        assert!((w.x - (z.x + z.y * t - 0.25 * t * t)).abs() < 1e-9);
        assert!((w.y - (z.y - 0.5 * t)).abs() < 1e-9);
    }
}
