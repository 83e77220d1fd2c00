use super::{Duopoly, Logistic, ModelError, Olg2d};
use crate::geometry::{make_rect_from_graphs, BBox, GraphOrientation, OrientedRectangle, Point, RegionPredicate};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    HoldsStrict,
    Boundary,
    Fails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub left: f64,
    pub right: f64,
    pub relation: Relation,
    /// Signed slack: positive when the relation holds with room to spare.
    pub margin: f64,
    pub tolerance: f64,
    pub holds: bool,
}

impl Condition {
    pub fn new(name: impl Into<String>, left: f64, relation: Relation, right: f64) -> Self {
        let margin = match relation {
            Relation::Lt | Relation::Le => right - left,
            Relation::Gt | Relation::Ge => left - right,
        };
        let tolerance = 1e-12 * 1f64.max(left.abs()).max(right.abs());
        let holds = if relation.is_strict() { margin > tolerance } else { margin >= -tolerance };
        Condition { name: name.into(), left, right, relation, margin, tolerance, holds }
    }

    fn status(&self) -> Overall {
        if self.margin < -self.tolerance || self.margin.is_nan() {
            Overall::Fails
        } else if self.relation.is_strict() && self.margin <= self.tolerance {
            Overall::Boundary
        } else {
            Overall::HoldsStrict
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub model: String,
    pub conditions: Vec<Condition>,
    /// Derived quantities (`M`, `P`, `Q`, ...).
    pub derived: Vec<(String, f64)>,
    pub overall: Overall,
}

impl ConditionReport {
    fn new(model: &str, conditions: Vec<Condition>, derived: Vec<(String, f64)>) -> Self {
        let overall = conditions.iter().map(Condition::status).fold(Overall::HoldsStrict, |acc, s| match (acc, s) {
            (Overall::Fails, _) | (_, Overall::Fails) => Overall::Fails,
            (Overall::Boundary, _) | (_, Overall::Boundary) => Overall::Boundary,
            _ => Overall::HoldsStrict,
        });
        ConditionReport { model: model.into(), conditions, derived, overall }
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn derived(&self, name: &str) -> Option<f64> {
        self.derived.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Names of the conditions that are not strictly satisfied.
    pub fn offending(&self) -> Vec<String> {
        self.conditions.iter().filter(|c| c.status() != Overall::HoldsStrict).map(|c| c.name.clone()).collect()
    }
}

/// Whether a boundary case may still be used to build geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceMode {
    Strict,
    NonStrict,
}

fn gate(report: &ConditionReport, mode: ToleranceMode) -> Result<(), ModelError> {
    match (report.overall, mode) {
        (Overall::HoldsStrict, _) | (Overall::Boundary, ToleranceMode::NonStrict) => Ok(()),
        (Overall::Boundary, ToleranceMode::Strict) => Err(ModelError::Boundary(report.offending().join(", "))),
        (Overall::Fails, _) => Err(ModelError::ConditionFails(report.offending().join(", "))),
    }
}

pub fn olg_conditions(model: &Olg2d, k: f64) -> ConditionReport {
    let m = model.hump.max_value();
    let x_bar = model.hump.x_bar();
    let b = model.b;
    ConditionReport::new(
        "olg2d",
        vec![
            Condition::new("b*g(K) <= K", b * model.hump.g(k), Relation::Le, k),
            Condition::new("K < M*(1-1/b)", k, Relation::Lt, m * (1.0 - 1.0 / b)),
            Condition::new("K > x_bar", k, Relation::Gt, x_bar),
        ],
        vec![("M".into(), m), ("x_bar".into(), x_bar)],
    )
}

pub fn duopoly_conditions(d: &Duopoly) -> ConditionReport {
    let Duopoly { a, b, c1, c2, alpha, .. } = *d;
    let p = (a + c1 - 2.0 * c2 - 1.0 / alpha) / (3.0 * b);
    let q = (a - c2) / (2.0 * b);
    let cap = (a - c1 + 1.0 / alpha) / b;
    ConditionReport::new(
        "duopoly",
        vec![
            Condition::new("a-2c1+c2 > 26/(3 alpha)", a - 2.0 * c1 + c2, Relation::Gt, 26.0 / (3.0 * alpha)),
            Condition::new("a+c1-2c2-1/alpha >= 0", a + c1 - 2.0 * c2 - 1.0 / alpha, Relation::Ge, 0.0),
            Condition::new("P >= 0", p, Relation::Ge, 0.0),
            Condition::new("P < Q", p, Relation::Lt, q),
            Condition::new("Q < (a-c1+1/alpha)/b", q, Relation::Lt, cap),
        ],
        vec![("P".into(), p), ("Q".into(), q)],
    )
}

/// The trapezoid `{0 ≤ x ≤ K, x ≤ y ≤ M}` and its two halves.
#[derive(Debug, Clone)]
pub struct OlgGeometry {
    pub rect: OrientedRectangle,
    /// `K_i = R_i ∩ F⁻¹(R)` with `R_0 = {x ≤ x̄}`, `R_1 = {x ≥ x̄}`.
    pub regions: [RegionPredicate; 2],
    pub conditions: ConditionReport,
}

fn preimage_split(
    map: Arc<dyn Fn(Point) -> Option<Point> + Send + Sync>,
    rect: &OrientedRectangle,
    halves: [Arc<dyn Fn(Point) -> bool + Send + Sync>; 2],
) -> [RegionPredicate; 2] {
    let make = |label: usize| {
        let (r, r2, m, h) = (rect.clone(), rect.clone(), map.clone(), halves[label].clone());
        RegionPredicate::new(label, format!("K{label}"), r.bbox(), move |z| {
            h(z) && r.contains(z) && m(z).is_some_and(|w| r2.contains(w))
        })
    };
    [make(0), make(1)]
}

pub fn olg_geometry(model: &Olg2d, k: f64, mode: ToleranceMode) -> Result<OlgGeometry, ModelError> {
    let conditions = olg_conditions(model, k);
    gate(&conditions, mode)?;
    let m = model.hump.max_value();
    let x_bar = model.hump.x_bar();
    let rect = make_rect_from_graphs("olg2d-R", |x| x, move |_| m, 0.0, k, GraphOrientation::Vertical)?;
    let f = model.clone();
    let regions = preimage_split(
        Arc::new(move |z| f.eval(z).ok()),
        &rect,
        [Arc::new(move |z: Point| z.x <= x_bar), Arc::new(move |z: Point| z.x >= x_bar)],
    );
    Ok(OlgGeometry { rect, regions, conditions })
}

/// Region `{0 ≤ y ≤ b g(x), x ≤ y ≤ νx + d}` with the two arcs of the graph
/// of `b g` as left and right sides.
pub fn olg_alternative_region(model: &Olg2d, nu: f64, d: f64) -> Result<OrientedRectangle, ModelError> {
    if !(0.0 < nu && nu < 1.0 && d > 0.0) {
        return Err(ModelError::Invalid("need 0 < nu < 1 and d > 0".into()));
    }
    let hump = model.hump.clone();
    let b = model.b;
    let bg = move |x: f64| b * hump.g(x);
    let x_top = d / (1.0 - nu);
    let line = move |x: f64| nu * x + d;
    let bisect = |f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| -> f64 {
        let flo = f(lo) > 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == flo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let n = 4096;
    let xs: Vec<f64> = (1..n).map(|i| x_top * i as f64 / n as f64).collect();
    let above = |x: f64| bg(x) - line(x);
    let first_up = xs.iter().position(|&x| above(x) > 0.0);
    let last_up = xs.iter().rposition(|&x| above(x) > 0.0);
    let (Some(i0), Some(i1)) = (first_up, last_up) else {
        return Err(ModelError::Invalid("graph of b*g never reaches the upper line".into()));
    };
    let x_a = bisect(&above, if i0 == 0 { 0.0 } else { xs[i0 - 1] }, xs[i0]);
    let x_b = bisect(&above, xs[i1], xs.get(i1 + 1).copied().unwrap_or(x_top));
    let diag = |x: f64| bg(x) - x;
    let x_c = bisect(&diag, x_b, x_top);
    if !(diag(x_b) > 0.0 && diag(x_top) < 0.0) {
        return Err(ModelError::Invalid("graph of b*g does not meet the diagonal below the line".into()));
    }
    let (bg1, bg2) = (bg.clone(), bg.clone());
    let left = move |v: f64| {
        let x = v * x_a;
        Point::new(x, bg1(x))
    };
    let right = move |v: f64| {
        let x = x_c + v * (x_b - x_c);
        Point::new(x, bg2(x))
    };
    let down = move |u: f64| Point::new(u * x_c, u * x_c);
    let up = move |u: f64| {
        let x = x_a + u * (x_b - x_a);
        Point::new(x, line(x))
    };
    let (c00, c10, c01, c11) = (down(0.0), down(1.0), up(0.0), up(1.0));
    let param = move |u: f64, v: f64| {
        let (l, r, dn, upp) = (left(v), right(v), down(u), up(u));
        let lin = l * (1.0 - u) + r * u + dn * (1.0 - v) + upp * v;
        let bil = c00 * ((1.0 - u) * (1.0 - v)) + c10 * (u * (1.0 - v)) + c01 * ((1.0 - u) * v) + c11 * (u * v);
        lin - bil
    };
    let scale = 1e-9 * x_top.max(1.0);
    let membership = move |p: Point| p.y >= -scale && p.y <= bg(p.x) + scale && p.y >= p.x - scale && p.y <= line(p.x) + scale;
    Ok(OrientedRectangle::new("olg2d-alt-R", param, membership)?)
}

/// The trapezoid `{P ≤ y ≤ Q, 0 ≤ x ≤ X(y)}` with `X(y) = (a − c₁ + 1/α)/(2b) − y/2`.
#[derive(Debug, Clone)]
pub struct DuopolyGeometry {
    pub rect: OrientedRectangle,
    /// Halves on either side of the segment `x = X(y)/2`, cut down to `F⁻¹(R)`.
    pub regions: [RegionPredicate; 2],
    /// Endpoints of the mid-segment `S` at `y = P` and `y = Q`.
    pub segment: [Point; 2],
    pub conditions: ConditionReport,
    pub boundary: bool,
}

pub fn duopoly_geometry(d: &Duopoly, mode: ToleranceMode) -> Result<DuopolyGeometry, ModelError> {
    let conditions = duopoly_conditions(d);
    gate(&conditions, mode)?;
    let (p, q) = (conditions.derived("P").unwrap_or(0.0), conditions.derived("Q").unwrap_or(0.0));
    if !(q - p > 1e-12 * q.abs().max(1.0)) {
        return Err(ModelError::Boundary("P = Q: degenerate trapezoid".into()));
    }
    let top = (d.a - d.c1 + 1.0 / d.alpha) / (2.0 * d.b);
    let x_max = move |y: f64| top - y / 2.0;
    let param = move |u: f64, v: f64| {
        let y = p + v * (q - p);
        Point::new(u * x_max(y), y)
    };
    let slack = 1e-12 * top.abs().max(q.abs()).max(1.0);
    let membership = move |z: Point| z.y >= p - slack && z.y <= q + slack && z.x >= -slack && z.x <= x_max(z.y) + slack;
    let rect = OrientedRectangle::new("duopoly-R", param, membership)?;
    let f = *d;
    let regions = preimage_split(
        Arc::new(move |z| f.eval(z).ok()),
        &rect,
        [
            Arc::new(move |z: Point| z.x <= x_max(z.y) / 2.0),
            Arc::new(move |z: Point| z.x >= x_max(z.y) / 2.0),
        ],
    );
    let segment = [Point::new(x_max(p) / 2.0, p), Point::new(x_max(q) / 2.0, q)];
    let boundary = conditions.overall == Overall::Boundary;
    Ok(DuopolyGeometry { rect, regions, segment, conditions, boundary })
}

/// The unit square with the strips `I_i × [0, 1]` over the two components
/// of `F⁻¹([0, 1])`, for `μ > 4`.
#[derive(Debug, Clone)]
pub struct LogisticGeometry {
    pub rect: OrientedRectangle,
    pub intervals: [(f64, f64); 2],
    pub regions: [RegionPredicate; 2],
}

pub fn logistic_geometry(model: &Logistic) -> Result<LogisticGeometry, ModelError> {
    let (a, b) = model
        .preimages_of_one()
        .filter(|_| model.mu > 4.0)
        .ok_or_else(|| ModelError::Invalid(format!("mu = {} must exceed 4", model.mu)))?;
    let unit = |p: Point| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y);
    let rect = OrientedRectangle::new("logistic-R", Point::new, unit)?;
    let intervals = [(0.0, a), (b, 1.0)];
    let strip = |label: usize, (lo, hi): (f64, f64)| {
        RegionPredicate::new(label, format!("K{label}"), BBox::new(lo, hi, 0.0, 1.0), move |p: Point| {
            p.x >= lo && p.x <= hi && (0.0..=1.0).contains(&p.y)
        })
    };
    let regions = [strip(0, intervals[0]), strip(1, intervals[1])];
    Ok(LogisticGeometry { rect, intervals, regions })
}

/// A self-covering interval `I` of `F²` split into two halves that each
/// cover `I` under `F²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleCover {
    pub interval: (f64, f64),
    pub halves: [(f64, f64); 2],
    /// Range of `F²` over `I`.
    pub image: (f64, f64),
}

/// For `2 < μ ≤ 4`, `I = [c₁, c₂]` where `c₁ < 1/2 < c₂` are the preimages of
/// `1/2`, the critical points of `F²` besides `1/2` itself.
pub fn logistic_second_iterate_cover(model: &Logistic) -> Result<DoubleCover, ModelError> {
    let mu = model.mu;
    if !(mu > 2.0 && mu <= 4.0) {
        return Err(ModelError::Invalid(format!("mu = {mu} outside (2, 4]")));
    }
    let r = (1.0 - 2.0 / mu).sqrt();
    let (c1, c2) = (0.5 * (1.0 - r), 0.5 * (1.0 + r));
    let f2 = |x: f64| model.f(model.f(x));
    let (hi, lo) = (f2(c1).max(f2(c2)), f2(0.5));
    if !(lo <= c1 && hi >= c2) {
        return Err(ModelError::ConditionFails(format!("F^2 range [{lo}, {hi}] does not cover [{c1}, {c2}]")));
    }
    Ok(DoubleCover { interval: (c1, c2), halves: [(c1, 0.5), (0.5, c2)], image: (lo, hi) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_duopoly(alpha: f64) -> Duopoly {
        Duopoly::new(10.0, 0.5, 3.0, 5.0, alpha, 0.5).unwrap()
    }

    #[test]
    fn olg_reference_parameters_hold() {
        let m = Olg2d::new(80.0, 2.0, 1.3).unwrap();
        let rep = olg_conditions(&m, 6.0);
        assert_eq!(rep.overall, Overall::HoldsStrict);
        let c = rep.condition("b*g(K) <= K").unwrap();
        assert!((c.left - 2.287).abs() < 1e-3);
        assert!((rep.condition("K < M*(1-1/b)").unwrap().right - 6.742).abs() < 1e-3);
    }

    #[test]
    fn olg_flat_hump_fails() {
        let m = Olg2d::new(1.0, 2.0, 1.3).unwrap();
        let rep = olg_conditions(&m, 2.0);
        assert_eq!(rep.overall, Overall::Fails);
        assert!(!rep.condition("K < M*(1-1/b)").unwrap().holds);
        assert!(olg_geometry(&m, 2.0, ToleranceMode::NonStrict).is_err());
    }

    #[test]
    fn olg_degenerate_k_refused() {
        let m = Olg2d::new(80.0, 2.0, 1.3).unwrap();
        let k = m.hump.max_value() * 0.5;
        let err = olg_geometry(&m, k, ToleranceMode::Strict).unwrap_err();
        assert!(matches!(err, ModelError::Boundary(ref s) if s.contains("K < M")));
    }

    #[test]
    fn olg_regions_split_at_one() {
        let m = Olg2d::new(80.0, 2.0, 1.3).unwrap();
        let g = olg_geometry(&m, 6.0, ToleranceMode::Strict).unwrap();
        let on_split = Point::new(1.0, 5.0);
        assert!(!g.regions[0].contains(on_split) && !g.regions[1].contains(on_split));
        // g(0.5) ≈ 11.62 and g(3) ≈ 6.74, so both images land in R.
        assert!(g.regions[0].contains(Point::new(0.5, 13.0)));
        assert!(g.regions[1].contains(Point::new(3.0, 5.0)));
        assert!(!g.regions[1].contains(Point::new(5.0, 13.0)));
    }

    #[test]
    fn duopoly_reference_parameters_are_boundary() {
        let rep = duopoly_conditions(&reference_duopoly(26.0 / 27.0));
        let c = &rep.conditions[0];
        assert!(c.margin.abs() <= 1e-12 && (c.left - 9.0).abs() < 1e-15);
        assert_eq!(rep.overall, Overall::Boundary);
        assert!(matches!(duopoly_geometry(&reference_duopoly(26.0 / 27.0), ToleranceMode::Strict), Err(ModelError::Boundary(_))));
        let g = duopoly_geometry(&reference_duopoly(26.0 / 27.0), ToleranceMode::NonStrict).unwrap();
        assert!(g.boundary);
    }

    #[test]
    fn duopoly_strict_example() {
        let d = reference_duopoly(1.05);
        let rep = duopoly_conditions(&d);
        assert_eq!(rep.overall, Overall::HoldsStrict);
        let p = rep.derived("P").unwrap();
        assert!((p - (3.0 - 1.0 / 1.05) / 1.5).abs() < 1e-14);
        assert_eq!(rep.derived("Q"), Some(5.0));
        let g = duopoly_geometry(&d, ToleranceMode::Strict).unwrap();
        use crate::geometry::Side;
        assert!(g.rect.side(Side::Left).iter().all(|z| z.x == 0.0 && z.y >= p - 1e-12 && z.y <= 5.0));
    }

    #[test]
    fn duopoly_second_condition_on_boundary() {
        let (a, c1, alpha) = (10.0, 3.0, 1.05);
        let c2 = (a + c1 - 1.0 / alpha) / 2.0;
        let rep = duopoly_conditions(&Duopoly::new(a, 0.5, c1, c2, alpha, 0.5).unwrap());
        assert!(rep.conditions[1].margin.abs() < 1e-12);
    }

    #[test]
    fn duopoly_equal_p_q_refused() {
        let (a, b, c1, alpha) = (10.0, 0.5, 1.0, 1.0);
        // P - Q is affine in c2; take its root.
        let pq = |c2: f64| (a + c1 - 2.0 * c2 - 1.0 / alpha) / (3.0 * b) - (a - c2) / (2.0 * b);
        let c2 = -pq(0.0) / (pq(1.0) - pq(0.0));
        let d = Duopoly { a, b, c1, c2, alpha, nu: 0.5 };
        assert!(pq(c2).abs() < 1e-12);
        assert!(duopoly_geometry(&d, ToleranceMode::NonStrict).is_err());
    }

    #[test]
    fn alternative_region_builds() {
        let m = Olg2d::new(14.5, 2.0, 1.0 / 0.95).unwrap();
        let r = olg_alternative_region(&m, 0.6, 3.662313254).unwrap();
        assert!(r.diameter() > 1.0);
    }

    #[test]
    fn logistic_double_cover() {
        let c = logistic_second_iterate_cover(&Logistic { mu: 3.88 }).unwrap();
        assert!((c.interval.0 - 0.1522).abs() < 1e-3 && (c.interval.1 - 0.8478).abs() < 1e-3);
        assert!(c.image.0 < c.interval.0 && c.image.1 > c.interval.1);
        assert!(logistic_second_iterate_cover(&Logistic { mu: 3.0 }).is_err());
    }
}
