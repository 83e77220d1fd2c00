use super::{ModelError, Twist1, Twist2};
use crate::geometry::{BBox, OrientedRectangle, Point, RegionPredicate};
use crate::stretching::SharedMap;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TwistSetup {
    TwoAnnuli(Twist1),
    AnnulusAndStrip(Twist2),
}

/// One of the two invariant sets of a linked twist map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnnulusShape {
    Annulus { cx: f64, cy: f64, inner: f64, outer: f64 },
    Strip { lower: f64, upper: f64 },
}

#[derive(Clone)]
pub struct TwistGeometry {
    pub setup: TwistSetup,
    pub rect_a: OrientedRectangle,
    pub rect_b: OrientedRectangle,
    pub phi: SharedMap,
    pub psi: SharedMap,
    pub annuli: [AnnulusShape; 2],
    /// How the left/right sides were assigned.
    pub convention: String,
}

impl std::fmt::Debug for TwistGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TwistGeometry")
            .field("setup", &self.setup)
            .field("rect_a", &self.rect_a)
            .field("rect_b", &self.rect_b)
            .field("annuli", &self.annuli)
            .finish()
    }
}

fn in_ring(p: Point, c: Point, lo: f64, hi: f64, slack: f64) -> bool {
    let d = p.dist(c);
    d >= lo - slack && d <= hi + slack
}

pub fn twist_geometry(setup: TwistSetup) -> Result<TwistGeometry, ModelError> {
    match setup {
        TwistSetup::TwoAnnuli(t) => two_annuli(t),
        TwistSetup::AnnulusAndStrip(t) => annulus_and_strip(t),
    }
}

fn two_annuli(t: Twist1) -> Result<TwistGeometry, ModelError> {
    let Twist1 { r, p1, p2, q1, q2, .. } = t;
    if !(r > 0.0 && 0.0 < p1 && p1 < p2 && 0.0 < q1 && q1 < q2) {
        return Err(ModelError::Invalid("need r > 0, 0 < p1 < p2 and 0 < q1 < q2".into()));
    }
    if 2.0 * r >= p2 + q2 {
        return Err(ModelError::Invalid(format!("annuli do not overlap: centre distance {} ≥ p2 + q2", 2.0 * r)));
    }
    if !(p1 + q1 > 2.0 * r && p2 - q1 < 2.0 * r && q2 - p1 < 2.0 * r) {
        return Err(ModelError::Invalid("annuli overlap without forming two lens-shaped rectangles".into()));
    }
    let (c1, c2) = (Point::new(-r, 0.0), Point::new(r, 0.0));
    // Point at distances (ρ1, ρ2) from the two centres, in the upper or lower half-plane.
    let bipolar = move |rho1: f64, rho2: f64, sign: f64| {
        let x = (rho1 * rho1 - rho2 * rho2) / (4.0 * r);
        Point::new(x, sign * (rho1 * rho1 - (x + r) * (x + r)).max(0.0).sqrt())
    };
    let slack = 1e-9 * (r + p2 + q2);
    let lens = move |sign: f64| {
        move |p: Point| p.y * sign >= -slack && in_ring(p, c1, p1, p2, slack) && in_ring(p, c2, q1, q2, slack)
    };
    let rect_a = OrientedRectangle::new(
        "A",
        move |u, v| bipolar(p1 + u * (p2 - p1), q1 + v * (q2 - q1), 1.0),
        lens(1.0),
    )?;
    let rect_b = OrientedRectangle::new(
        "B",
        move |u, v| bipolar(p1 + v * (p2 - p1), q1 + u * (q2 - q1), -1.0),
        lens(-1.0),
    )?;
    Ok(TwistGeometry {
        setup: TwistSetup::TwoAnnuli(t),
        rect_a,
        rect_b,
        phi: Arc::new(move |z: Point| Ok(t.phi(z))),
        psi: Arc::new(move |z: Point| Ok(t.psi(z))),
        annuli: [
            AnnulusShape::Annulus { cx: -r, cy: 0.0, inner: p1, outer: p2 },
            AnnulusShape::Annulus { cx: r, cy: 0.0, inner: q1, outer: q2 },
        ],
        convention: "A upper lens, sides on the circles |z+r| = p1, p2; B lower lens, sides on |z-r| = q1, q2".into(),
    })
}

fn annulus_and_strip(t: Twist2) -> Result<TwistGeometry, ModelError> {
    let Twist2 { p1, p2, q1, q2, .. } = t;
    if !(0.0 < p1 && p1 < p2 && -p1 < q1 && q1 < q2 && q2 < p1) {
        return Err(ModelError::Invalid("need 0 < p1 < p2 and -p1 < q1 < q2 < p1".into()));
    }
    let o = Point::new(0.0, 0.0);
    let slack = 1e-9 * p2;
    let half = move |sign: f64| {
        move |p: Point| p.x * sign >= -slack && p.y >= q1 - slack && p.y <= q2 + slack && in_ring(p, o, p1, p2, slack)
    };
    let at = move |rho: f64, y: f64, sign: f64| Point::new(sign * (rho * rho - y * y).max(0.0).sqrt(), y);
    let rect_a = OrientedRectangle::new("A", move |u, v| at(p1 + u * (p2 - p1), q1 + v * (q2 - q1), 1.0), half(1.0))?;
    let rect_b = OrientedRectangle::new("B", move |u, v| at(p1 + v * (p2 - p1), q1 + u * (q2 - q1), -1.0), half(-1.0))?;
    Ok(TwistGeometry {
        setup: TwistSetup::AnnulusAndStrip(t),
        rect_a,
        rect_b,
        phi: Arc::new(move |z: Point| Ok(t.phi(z))),
        psi: Arc::new(move |z: Point| Ok(t.psi(z))),
        annuli: [
            AnnulusShape::Annulus { cx: 0.0, cy: 0.0, inner: p1, outer: p2 },
            AnnulusShape::Strip { lower: q1, upper: q2 },
        ],
        convention: "A right lens, sides on the circles |z| = p1, p2; B left lens, sides on the lines y = q1, q2".into(),
    })
}

/// Which twist of the pair the windows are built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwistSide {
    Phi,
    Psi,
}

/// Centre and total rotation angle of one twist, when it is a rotation.
fn rotation(setup: &TwistSetup, side: TwistSide) -> Option<(Point, Arc<dyn Fn(f64) -> f64 + Send + Sync>)> {
    match (*setup, side) {
        (TwistSetup::TwoAnnuli(t), TwistSide::Phi) => Some((Point::new(-t.r, 0.0), Arc::new(move |rho| t.c1 + t.d1 * rho))),
        (TwistSetup::TwoAnnuli(t), TwistSide::Psi) => Some((Point::new(t.r, 0.0), Arc::new(move |rho| t.c2 + t.d2 * rho))),
        (TwistSetup::AnnulusAndStrip(t), TwistSide::Phi) => Some((
            Point::new(0.0, 0.0),
            Arc::new(move |rho| t.c1 + t.d1 * super::ramp(t.p1, t.p2, rho)),
        )),
        (TwistSetup::AnnulusAndStrip(_), TwistSide::Psi) => None,
    }
}

fn angle_near(p: Point, c: Point, reference: f64) -> f64 {
    let a = (p.y - c.y).atan2(p.x - c.x);
    reference + (a - reference + PI).rem_euclid(2.0 * PI) - PI
}

fn angle_range(pts: &[Point], c: Point, reference: f64) -> (f64, f64) {
    pts.iter().map(|&p| angle_near(p, c, reference)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a), hi.max(a)))
}

fn grid(rect: &OrientedRectangle, n: usize) -> Vec<Point> {
    let mut pts = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            pts.push(rect.param(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    pts
}

/// Regions `H_k` of the source rectangle on which the rotation carries the
/// point once across the whole angular extent of the target, widened by
/// `delta` on both ends. Only windows that every left-to-right path of the
/// source must sweep through are returned.
pub fn twist_windows(geom: &TwistGeometry, side: TwistSide, delta: f64) -> Vec<RegionPredicate> {
    let Some((c, rot)) = rotation(&geom.setup, side) else {
        return Vec::new();
    };
    let (source, target) = match side {
        TwistSide::Phi => (&geom.rect_a, &geom.rect_b),
        TwistSide::Psi => (&geom.rect_b, &geom.rect_a),
    };
    let src_ref = {
        let m = source.param(0.5, 0.5);
        (m.y - c.y).atan2(m.x - c.x)
    };
    let tgt_ref = {
        let m = target.param(0.5, 0.5);
        (m.y - c.y).atan2(m.x - c.x)
    };
    let total = {
        let rot = rot.clone();
        move |p: Point| angle_near(p, c, src_ref) + rot(p.dist(c))
    };
    let side_range = |u: f64| {
        (0..=512).map(|k| total(source.param(u, k as f64 / 512.0))).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
            (lo.min(a), hi.max(a))
        })
    };
    let (l, r) = (side_range(0.0), side_range(1.0));
    let sweep = if l.1 < r.0 {
        (l.1, r.0)
    } else if r.1 < l.0 {
        (r.1, l.0)
    } else {
        return Vec::new();
    };
    let (b_lo, b_hi) = angle_range(&grid(target, 128), c, tgt_ref);
    let (lo, hi) = (b_lo - delta, b_hi + delta);
    let k_min = ((sweep.0 - lo) / (2.0 * PI)).ceil() as i64;
    let k_max = ((sweep.1 - hi) / (2.0 * PI)).floor() as i64;
    let bbox: BBox = source.bbox();
    (k_min..=k_max)
        .enumerate()
        .map(|(label, k)| {
            let (w_lo, w_hi) = (lo + 2.0 * PI * k as f64, hi + 2.0 * PI * k as f64);
            let src = source.clone();
            let total = total.clone();
            RegionPredicate::new(label, format!("H{label}"), bbox, move |p| {
                src.contains(p) && {
                    let a = total(p);
                    a >= w_lo && a <= w_hi
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Side;

    #[test]
    fn two_annuli_lenses() {
        let g = twist_geometry(TwistSetup::TwoAnnuli(Twist1::REFERENCE)).unwrap();
        assert!(g.rect_a.param(0.5, 0.5).y > 0.0 && g.rect_b.param(0.5, 0.5).y < 0.0);
        let c = Point::new(-3.0, 0.0);
        assert!(g.rect_a.side(Side::Left).iter().all(|p| (p.dist(c) - 3.3).abs() < 1e-9));
        assert!(g.rect_a.side(Side::Right).iter().all(|p| (p.dist(c) - 6.0).abs() < 1e-9));
        let c2 = Point::new(3.0, 0.0);
        assert!(g.rect_b.side(Side::Left).iter().all(|p| (p.dist(c2) - 3.3).abs() < 1e-9));
    }

    #[test]
    fn annulus_and_strip_lenses() {
        let g = twist_geometry(TwistSetup::AnnulusAndStrip(Twist2::REFERENCE)).unwrap();
        assert!(g.rect_a.param(0.5, 0.5).x > 0.0 && g.rect_b.param(0.5, 0.5).x < 0.0);
        assert!(g.rect_b.side(Side::Left).iter().all(|p| (p.y + 1.0).abs() < 1e-12));
        assert!(g.rect_b.side(Side::Right).iter().all(|p| (p.y - 2.0).abs() < 1e-12));
    }

    #[test]
    fn disjoint_annuli_refused() {
        let t = Twist1 { r: 7.0, ..Twist1::REFERENCE };
        assert!(twist_geometry(TwistSetup::TwoAnnuli(t)).is_err());
        let t = Twist2 { q2: 3.5, ..Twist2::REFERENCE };
        assert!(twist_geometry(TwistSetup::AnnulusAndStrip(t)).is_err());
    }

    #[test]
    fn two_windows_for_phi() {
        for setup in [TwistSetup::TwoAnnuli(Twist1::REFERENCE), TwistSetup::AnnulusAndStrip(Twist2::REFERENCE)] {
            let g = twist_geometry(setup).unwrap();
            assert_eq!(twist_windows(&g, TwistSide::Phi, 0.1).len(), 2);
        }
        let g = twist_geometry(TwistSetup::TwoAnnuli(Twist1::REFERENCE)).unwrap();
        assert_eq!(twist_windows(&g, TwistSide::Psi, 0.1).len(), 1);
    }
}
