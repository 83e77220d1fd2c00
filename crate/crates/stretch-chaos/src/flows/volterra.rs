use super::ode::OdeOptions;
use super::orbit::{orbit_period, switching_thresholds, PhaseFlow, Thresholds};
use super::{FlowError, VolterraParams};
use crate::geometry::{BBox, OrientedRectangle, Path, Point, RegionPredicate};
use crate::stretching::{check_composition, check_stretch, compose, CompositionReport, SharedMap, StretchOptions, StretchReport};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Energy levels of the two annuli: `ℓ₁ < ℓ₂` for the harvest-free phase
/// and `h₁ < h₂` for the harvesting phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolterraLevels {
    pub l1: f64,
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

impl VolterraLevels {
    /// Levels `χ₀ + o₁, χ₀ + o₂` and `χ_μ + o₁, χ_μ + o₂`.
    pub fn above_minimum(p: &VolterraParams, o1: f64, o2: f64) -> Self {
        let chi0 = p.e0().min_energy().unwrap_or(0.0);
        let chimu = p.emu().min_energy().unwrap_or(0.0);
        VolterraLevels { l1: chi0 + o1, l2: chi0 + o2, h1: chimu + o1, h2: chimu + o2 }
    }

    /// Offsets 0.15 and 0.35 above the two minima.
    pub fn reference(p: &VolterraParams) -> Self {
        Self::above_minimum(p, 0.15, 0.35)
    }
}

/// Abscissae of the intersections of the four level lines with the line
/// `by + dx = a + c` through both centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePoints {
    pub p1_minus: f64,
    pub p1_plus: f64,
    pub p2_minus: f64,
    pub p2_plus: f64,
    pub q1_minus: f64,
    pub q1_plus: f64,
    pub q2_minus: f64,
    pub q2_plus: f64,
}

impl LinePoints {
    /// `P₂₋ < P₁₋ ≤ Q₂₋ < Q₁₋ ≤ P₁₊ < P₂₊ ≤ Q₁₊ < Q₂₊`.
    pub fn is_linked(&self) -> bool {
        self.p2_minus < self.p1_minus
            && self.p1_minus <= self.q2_minus
            && self.q2_minus < self.q1_minus
            && self.q1_minus <= self.p1_plus
            && self.p1_plus < self.p2_plus
            && self.p2_plus <= self.q1_plus
            && self.q1_plus < self.q2_plus
    }

    pub fn ordered(&self) -> [(&'static str, f64); 8] {
        [
            ("P2-", self.p2_minus),
            ("P1-", self.p1_minus),
            ("Q2-", self.q2_minus),
            ("Q1-", self.q1_minus),
            ("P1+", self.p1_plus),
            ("P2+", self.p2_plus),
            ("Q1+", self.q1_plus),
            ("Q2+", self.q2_plus),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct LinkedAnnuli {
    pub levels: VolterraLevels,
    pub points: LinePoints,
    pub linked: bool,
    /// `(R₁, R₂)`: the components of the intersection below and above the
    /// line through the centres.
    pub rects: Option<(OrientedRectangle, OrientedRectangle)>,
}

fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The two roots of `E(x, y_r(x)) = level` on either side of `x_c`, where
/// `y_r` is the line through the centres.
fn line_roots(p: &VolterraParams, field: &super::Field, level: f64) -> Result<(f64, f64), FlowError> {
    let x_max = (p.a + p.c) / p.d;
    let e = |x: f64| {
        let y = (p.a + p.c - p.d * x) / p.b;
        field.energy(Point::new(x, y)).unwrap_or(f64::INFINITY) - level
    };
    let xc = field.center().map(|c| c.x).unwrap_or(0.5 * x_max);
    if e(xc) >= 0.0 {
        return Err(FlowError::Invalid(format!("level {level} not above the minimum")));
    }
    let mut lo = None;
    let mut hi = None;
    for k in 1..1100 {
        let s = 0.5f64.powi(k);
        if lo.is_none() && e(xc * s) > 0.0 {
            lo = Some(xc * s);
        }
        if hi.is_none() && e(x_max - (x_max - xc) * s) > 0.0 {
            hi = Some(x_max - (x_max - xc) * s);
        }
        if lo.is_some() && hi.is_some() {
            break;
        }
    }
    match (lo, hi) {
        (Some(lo), Some(hi)) => Ok((bisect(e, lo, xc), bisect(e, xc, hi))),
        _ => Err(FlowError::Bracket(format!("level {level} along the line through the centres"))),
    }
}

/// Point with `E₀ = ℓ` and `E_μ = h` below (`upper == false`) or above the
/// line through the centres. On the ray `y = kx`, `k = exp((h − ℓ)/μ)`, the
/// difference `E₀ − E_μ` is constant and `E₀` is convex in `x`, with its
/// minimum exactly on that line.
fn level_corner(p: &VolterraParams, l: f64, h: f64, upper: bool) -> Option<Point> {
    if p.mu <= 0.0 {
        return None;
    }
    let k = ((h - l) / p.mu).exp();
    let s = p.d + p.b * k;
    let ac = p.a + p.c;
    let g = |x: f64| s * x - ac * x.ln() - p.a * k.ln() - l;
    let xs = ac / s;
    if !(g(xs) < 0.0) {
        return None;
    }
    let mut far = xs;
    for _ in 0..2000 {
        far = if upper { far * 2.0 } else { far * 0.5 };
        if g(far) > 0.0 {
            let x = bisect(g, xs, far);
            return Some(Point::new(x, k * x));
        }
    }
    None
}

/// Locates the eight points on the line through the centres, checks the
/// linking order and, when linked, builds `R₁` (below the line, sides on
/// `Γ₀(ℓ₁)`, `Γ₀(ℓ₂)`) and `R₂` (above it, sides on `Γ_μ(h₁)`, `Γ_μ(h₂)`).
pub fn linked_annuli(p: &VolterraParams, levels: &VolterraLevels) -> Result<LinkedAnnuli, FlowError> {
    let VolterraLevels { l1, l2, h1, h2 } = *levels;
    let (e0, emu) = (p.e0(), p.emu());
    let chi0 = e0.min_energy().unwrap_or(f64::NEG_INFINITY);
    let chimu = emu.min_energy().unwrap_or(f64::NEG_INFINITY);
    if !(chi0 < l1 && l1 < l2 && chimu < h1 && h1 < h2) {
        return Err(FlowError::Invalid(format!(
            "need {chi0} < l1 < l2 and {chimu} < h1 < h2 (got {l1}, {l2}, {h1}, {h2})"
        )));
    }
    let (p1_minus, p1_plus) = line_roots(p, &e0, l1)?;
    let (p2_minus, p2_plus) = line_roots(p, &e0, l2)?;
    let (q1_minus, q1_plus) = line_roots(p, &emu, h1)?;
    let (q2_minus, q2_plus) = line_roots(p, &emu, h2)?;
    let points = LinePoints { p1_minus, p1_plus, p2_minus, p2_plus, q1_minus, q1_plus, q2_minus, q2_plus };
    let linked = points.is_linked() && p.mu > 0.0;
    let rects = if linked { Some((annulus_rect(p, levels, false)?, annulus_rect(p, levels, true)?)) } else { None };
    Ok(LinkedAnnuli { levels: *levels, points, linked, rects })
}

fn annulus_rect(p: &VolterraParams, lv: &VolterraLevels, upper: bool) -> Result<OrientedRectangle, FlowError> {
    let (pp, lv) = (*p, *lv);
    let param = move |u: f64, v: f64| {
        let (su, sv) = if upper { (v, u) } else { (u, v) };
        let l = lv.l1 + su * (lv.l2 - lv.l1);
        let h = lv.h1 + sv * (lv.h2 - lv.h1);
        level_corner(&pp, l, h, upper).unwrap_or(Point::new(f64::NAN, f64::NAN))
    };
    let membership = annulus_membership(p, &lv, upper, 1e-9);
    let id = if upper { "R2" } else { "R1" };
    Ok(OrientedRectangle::new(id, param, membership)?)
}

/// Points of the intersection of the two annuli on one side of the line
/// through the centres, with energy slack `slack · max(1, |level|)`.
fn annulus_membership(p: &VolterraParams, lv: &VolterraLevels, upper: bool, slack: f64) -> impl Fn(Point) -> bool + Send + Sync + 'static {
    let (pp, lv) = (*p, *lv);
    let (e0, emu) = (p.e0(), p.emu());
    let sl = slack * lv.l2.abs().max(1.0);
    let sh = slack * lv.h2.abs().max(1.0);
    move |z: Point| {
        let side = pp.b * z.y + pp.d * z.x - (pp.a + pp.c);
        let side_ok = if upper { side >= -1e-12 } else { side <= 1e-12 };
        side_ok
            && e0.energy(z).is_ok_and(|e| e >= lv.l1 - sl && e <= lv.l2 + sl)
            && emu.energy(z).is_ok_and(|e| e >= lv.h1 - sh && e <= lv.h2 + sh)
    }
}

/// Energy slack of the regions `H_i`, `K_j`; looser than the rectangles so
/// that chords of sampled paths along curved sides stay inside.
pub const REGION_SLACK: f64 = 1e-6;

/// Angle of `z − c` in the frame whose first axis points along the line
/// through the centres, direction `(b, −d)`.
fn frame_angle(p: &VolterraParams, c: Point, z: Point) -> f64 {
    let n = p.b.hypot(p.d);
    let (e1, e2) = (Point::new(p.b / n, -p.d / n), Point::new(p.d / n, p.b / n));
    let w = z - c;
    w.dot(e2).atan2(w.dot(e1))
}

/// The complete construction for the switched Volterra system: linked
/// annuli, switching-time thresholds, the two phase maps and the regions
/// `H_i ⊂ R₁`, `K_j ⊂ R₂` selected by the angle reached after each phase.
pub struct VolterraPipeline {
    pub params: VolterraParams,
    pub levels: VolterraLevels,
    pub m1: u32,
    pub m2: u32,
    pub tau0: (f64, f64),
    pub tau_mu: (f64, f64),
    pub thresholds: Thresholds,
    pub r0: f64,
    pub r_mu: f64,
    pub annuli: LinkedAnnuli,
    pub psi0: Arc<PhaseFlow>,
    pub psi_mu: Arc<PhaseFlow>,
    pub h: Vec<RegionPredicate>,
    pub k: Vec<RegionPredicate>,
}

impl std::fmt::Debug for VolterraPipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VolterraPipeline")
            .field("params", &self.params)
            .field("levels", &self.levels)
            .field("thresholds", &self.thresholds)
            .field("r0", &self.r0)
            .field("r_mu", &self.r_mu)
            .finish()
    }
}

/// Factor applied to the thresholds when no switching times are given.
pub const THRESHOLD_MARGIN: f64 = 1.02;

impl VolterraPipeline {
    /// `times = None` uses `r₀ = 1.02 α`, `r_μ = 1.02 β`.
    pub fn new(
        params: VolterraParams,
        levels: VolterraLevels,
        m1: u32,
        m2: u32,
        times: Option<(f64, f64)>,
        opts: &OdeOptions,
    ) -> Result<Self, FlowError> {
        let annuli = linked_annuli(&params, &levels)?;
        let Some((r1, r2)) = annuli.rects.clone() else {
            return Err(FlowError::Invalid("annuli are not linked".into()));
        };
        let (e0, emu) = (params.e0(), params.emu());
        let tau0 = (orbit_period(&e0, levels.l1, opts)?, orbit_period(&e0, levels.l2, opts)?);
        let tau_mu = (orbit_period(&emu, levels.h1, opts)?, orbit_period(&emu, levels.h2, opts)?);
        let thresholds = switching_thresholds(m1, m2, tau0, tau_mu)?;
        let (r0, r_mu) = times.unwrap_or((THRESHOLD_MARGIN * thresholds.alpha, THRESHOLD_MARGIN * thresholds.beta));
        if !(r0 > 0.0 && r_mu > 0.0) {
            return Err(FlowError::Invalid("switching times must be positive".into()));
        }
        let psi0 = Arc::new(PhaseFlow::new(e0, r0, *opts));
        let psi_mu = Arc::new(PhaseFlow::new(emu, r_mu, *opts));
        let pc = e0.center().unwrap_or_default();
        let qc = emu.center().unwrap_or_default();

        let n_star = (r0 / tau0.1).ceil();
        let h = (0..m1)
            .map(|i| {
                let lo = 2.0 * PI * (n_star + i as f64);
                let (inside, flow) = (annulus_membership(&params, &levels, false, REGION_SLACK), psi0.clone());
                RegionPredicate::new(i as usize, format!("H{i}"), r1.bbox(), move |z| {
                    inside(z)
                        && flow.advance(z).is_ok_and(|(_, da)| {
                            let th = frame_angle(&params, pc, z) + da;
                            th >= lo && th <= lo + PI
                        })
                })
            })
            .collect();
        let n_star2 = (r_mu / tau_mu.1).ceil();
        let k = (0..m2)
            .map(|j| {
                let lo = 2.0 * PI * (n_star2 + j as f64) + PI;
                let (inside, flow) = (annulus_membership(&params, &levels, true, REGION_SLACK), psi_mu.clone());
                RegionPredicate::new(j as usize, format!("K{j}"), r2.bbox(), move |z| {
                    inside(z)
                        && flow.advance(z).is_ok_and(|(_, da)| {
                            let th = frame_angle(&params, qc, z) + da;
                            th >= lo && th <= lo + PI
                        })
                })
            })
            .collect();
        Ok(VolterraPipeline { params, levels, m1, m2, tau0, tau_mu, thresholds, r0, r_mu, annuli, psi0, psi_mu, h, k })
    }

    /// Reference configuration: `m₁ = 2`, `m₂ = 1`, thresholds with margin.
    pub fn reference(params: VolterraParams, opts: &OdeOptions) -> Result<Self, FlowError> {
        Self::new(params, VolterraLevels::reference(&params), 2, 1, None, opts)
    }

    pub fn rect1(&self) -> &OrientedRectangle {
        &self.annuli.rects.as_ref().expect("linked").0
    }

    pub fn rect2(&self) -> &OrientedRectangle {
        &self.annuli.rects.as_ref().expect("linked").1
    }

    pub fn phase0_map(&self) -> SharedMap {
        self.psi0.clone()
    }

    pub fn phase_mu_map(&self) -> SharedMap {
        self.psi_mu.clone()
    }

    /// Poincaré map `Ψ = Ψ_μ ∘ Ψ₀`.
    pub fn poincare_map(&self) -> SharedMap {
        compose(self.phase0_map(), self.phase_mu_map())
    }

    /// `(H_i, Ψ₀): R̃₁ ⥤ R̃₂`.
    pub fn check_phase0(&self, paths: &[Path], opts: &StretchOptions) -> StretchReport {
        check_stretch(self.psi0.as_ref(), self.rect1(), self.rect2(), &self.h, paths, opts)
    }

    /// `(K_j, Ψ_μ): R̃₂ ⥤ R̃₁`.
    pub fn check_phase_mu(&self, paths: &[Path], opts: &StretchOptions) -> StretchReport {
        check_stretch(self.psi_mu.as_ref(), self.rect2(), self.rect1(), &self.k, paths, opts)
    }

    /// `(H_i ∩ Ψ₀⁻¹(K_j), Ψ): R̃₁ ⥤ R̃₁`.
    pub fn check_composite(&self, paths: &[Path], opts: &StretchOptions) -> CompositionReport {
        check_composition(
            self.phase0_map(),
            self.phase_mu_map(),
            self.rect1(),
            self.rect2(),
            self.rect1(),
            &self.h,
            &self.k,
            paths,
            opts,
        )
    }

    pub fn search_box(&self) -> BBox {
        self.rect1().bbox()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(mu: f64) -> VolterraParams {
        VolterraParams::new(1.0, 1.0, 1.0, 1.0, mu).unwrap()
    }

    #[test]
    fn reference_levels_are_linked() {
        let p = unit(0.5);
        let la = linked_annuli(&p, &VolterraLevels::reference(&p)).unwrap();
        assert!(la.linked, "{:?}", la.points);
        let (r1, r2) = la.rects.unwrap();
        let z = r1.param(0.3, 0.6);
        assert!(p.b * z.y + p.d * z.x < p.a + p.c);
        assert!((p.e0().energy(z).unwrap() - (2.15 + 0.3 * 0.2)).abs() < 1e-9);
        let w = r2.param(0.3, 0.6);
        assert!(p.b * w.y + p.d * w.x > p.a + p.c);
        assert!((p.emu().energy(w).unwrap() - la.levels.h1 - 0.3 * 0.2).abs() < 1e-9);
    }

    #[test]
    fn line_roots_match_closed_form() {
        // With a = b = c = d = 1 the line is y = 2 − x and E₀ = 2 − ln(x(2 − x)).
        let p = unit(0.5);
        let (lo, hi) = line_roots(&p, &p.e0(), 2.15).unwrap();
        let w = (1.0 - (-0.15f64).exp()).sqrt();
        assert!((lo - (1.0 - w)).abs() < 1e-12 && (hi - (1.0 + w)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_swallowed_annuli_are_not_linked() {
        let p = unit(0.0);
        let la = linked_annuli(&p, &VolterraLevels::above_minimum(&p, 0.15, 0.35)).unwrap();
        assert!(!la.linked && la.rects.is_none());
        let p = unit(0.5);
        let mut lv = VolterraLevels::reference(&p);
        lv.l2 = 50.0;
        assert!(!linked_annuli(&p, &lv).unwrap().linked);
        lv.l2 = lv.l1;
        assert!(linked_annuli(&p, &lv).is_err());
    }
}
