use super::{BBox, Membership, Point, RegionPredicate};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

pub type ParamFn = Arc<dyn Fn(f64, f64) -> Point + Send + Sync>;

/// Samples per boundary arc.
pub const SIDE_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Down,
    Up,
}

impl Side {
    fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
            Side::Down => 2,
            Side::Up => 3,
        }
    }

    /// Unit-square coordinates of the point at arc parameter `s` on this side.
    pub fn uv(self, s: f64) -> (f64, f64) {
        match self {
            Side::Left => (0.0, s),
            Side::Right => (1.0, s),
            Side::Down => (s, 0.0),
            Side::Up => (s, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("parameterization produced a non-finite point at (u,v)=({0},{1})")]
    NonFinite(f64, f64),
    #[error("left and right sides intersect (distance {0:e})")]
    SidesTouch(f64),
    #[error("contour is not injective near (u,v)=({0},{1})")]
    NotInjective(f64, f64),
    #[error("membership rejects param({0},{1})")]
    MembershipViolated(f64, f64),
    #[error("degenerate rectangle: {0}")]
    Degenerate(String),
    #[error("invalid construction: {0}")]
    Invalid(String),
}

/// A generalized rectangle: the image of the unit square under `param`, with
/// `param({0}×[0,1])` and `param({1}×[0,1])` as the designated left/right sides.
#[derive(Clone)]
pub struct OrientedRectangle {
    id: String,
    param: ParamFn,
    membership: Membership,
    bbox: BBox,
    sides: [Vec<Point>; 4],
}

impl std::fmt::Debug for OrientedRectangle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OrientedRectangle").field("id", &self.id).field("bbox", &self.bbox).finish()
    }
}

fn side_samples(param: &ParamFn, side: Side) -> Vec<Point> {
    (0..SIDE_SAMPLES)
        .map(|k| {
            let (u, v) = side.uv(k as f64 / (SIDE_SAMPLES - 1) as f64);
            param(u, v)
        })
        .collect()
}

fn polyline_length(pts: &[Point]) -> f64 {
    pts.windows(2).map(|w| w[0].dist(w[1])).sum()
}

impl OrientedRectangle {
    /// Builds and validates a rectangle from a parameterization and an
    /// independent membership predicate.
    pub fn new(
        id: impl Into<String>,
        param: impl Fn(f64, f64) -> Point + Send + Sync + 'static,
        membership: impl Fn(Point) -> bool + Send + Sync + 'static,
    ) -> Result<Self, GeometryError> {
        Self::from_arcs(id, Arc::new(param), Arc::new(membership))
    }

    pub fn from_arcs(id: impl Into<String>, param: ParamFn, membership: Membership) -> Result<Self, GeometryError> {
        let sides = [
            side_samples(&param, Side::Left),
            side_samples(&param, Side::Right),
            side_samples(&param, Side::Down),
            side_samples(&param, Side::Up),
        ];
        for (i, s) in sides.iter().enumerate() {
            for (k, p) in s.iter().enumerate() {
                if !p.is_finite() {
                    let side = [Side::Left, Side::Right, Side::Down, Side::Up][i];
                    let (u, v) = side.uv(k as f64 / (SIDE_SAMPLES - 1) as f64);
                    return Err(GeometryError::NonFinite(u, v));
                }
            }
        }
        let raw = BBox::from_points(sides.iter().flatten());
        let diam = raw.diameter();
        if !(diam > 0.0) {
            return Err(GeometryError::Degenerate("zero diameter".into()));
        }
        let rect = OrientedRectangle {
            id: id.into(),
            param,
            membership,
            bbox: raw.expand(1e-3 * diam),
            sides,
        };
        rect.validate()?;
        Ok(rect)
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let diam = self.bbox.diameter();
        let eps = 1e-12 * diam;

        let mut gap = f64::INFINITY;
        for p in &self.sides[0] {
            for q in &self.sides[1] {
                gap = gap.min(p.dist(*q));
            }
        }
        if gap <= eps {
            return Err(GeometryError::SidesTouch(gap));
        }

        // Closed contour: down, right, up reversed, left reversed; a side
        // collapsed to a point is tolerated and skipped.
        let n = SIDE_SAMPLES;
        let h = 1.0 / (n - 1) as f64;
        let mut contour: Vec<(Point, f64, f64)> = Vec::with_capacity(4 * n);
        let order = [(Side::Down, false), (Side::Right, false), (Side::Up, true), (Side::Left, true)];
        for (side, rev) in order {
            let pts = &self.sides[side.index()];
            if polyline_length(pts) <= eps {
                continue;
            }
            for j in 0..n - 1 {
                let k = if rev { n - 1 - j } else { j };
                let (u, v) = side.uv(k as f64 * h);
                contour.push((pts[k], u, v));
            }
        }
        let m = contour.len();
        for i in 0..m {
            for j in (i + 1)..m {
                if contour[i].0.dist(contour[j].0) <= eps {
                    return Err(GeometryError::NotInjective(contour[j].1, contour[j].2));
                }
            }
        }

        let g = 24;
        for i in 0..=g {
            for j in 0..=g {
                let (u, v) = (i as f64 / g as f64, j as f64 / g as f64);
                let p = (self.param)(u, v);
                if !p.is_finite() {
                    return Err(GeometryError::NonFinite(u, v));
                }
                if !self.contains(p) {
                    return Err(GeometryError::MembershipViolated(u, v));
                }
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn param(&self, u: f64, v: f64) -> Point {
        (self.param)(u, v)
    }

    pub fn param_fn(&self) -> ParamFn {
        self.param.clone()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.bbox.contains(p) && (self.membership)(p)
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn diameter(&self) -> f64 {
        self.bbox.diameter()
    }

    /// The 256 samples of a boundary arc, in increasing arc parameter.
    pub fn side(&self, side: Side) -> &[Point] {
        &self.sides[side.index()]
    }

    /// Distance from `p` to a boundary arc: nearest polyline vertex, then a
    /// golden-section search on the true arc around it.
    pub fn distance_to_side(&self, p: Point, side: Side) -> f64 {
        let pts = &self.sides[side.index()];
        let n = pts.len();
        let (k, _) = pts
            .iter()
            .enumerate()
            .map(|(i, q)| (i, q.dist(p)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let h = 1.0 / (n - 1) as f64;
        let mut a = (k.saturating_sub(1)) as f64 * h;
        let mut b = ((k + 1).min(n - 1)) as f64 * h;
        let f = |s: f64| {
            let (u, v) = side.uv(s);
            (self.param)(u, v).dist(p)
        };
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d);
            }
            if b - a < 1e-15 {
                break;
            }
        }
        let best = fc.min(fd).min(f(a)).min(f(b));
        best.min(pts[k].dist(p))
    }

    /// Which designated side `p` lies on: within `tol` of it and strictly
    /// nearer to it than to the opposite side.
    pub fn attribute_side(&self, p: Point, tol: f64) -> Option<Side> {
        let dl = self.distance_to_side(p, Side::Left);
        let dr = self.distance_to_side(p, Side::Right);
        if dl <= tol && dl < dr {
            Some(Side::Left)
        } else if dr <= tol && dr < dl {
            Some(Side::Right)
        } else {
            None
        }
    }

    /// Membership as a region predicate.
    pub fn as_region(&self, label: usize, name: impl Into<String>) -> RegionPredicate {
        RegionPredicate::from_arc(label, name, self.bbox, self.membership.clone())
    }

    /// Same set with the roles of (left, right) and (down, up) exchanged.
    pub fn reoriented(&self, id: impl Into<String>) -> Result<Self, GeometryError> {
        let p = self.param.clone();
        OrientedRectangle::from_arcs(id, Arc::new(move |u, v| p(v, u)), self.membership.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphOrientation {
    /// Left/right sides are the vertical segments over `x_lo` and `x_hi`.
    Vertical,
    /// Left/right sides are the lower and upper graphs.
    Graphs,
}

/// Region between two graphs over `[x_lo, x_hi]`, parameterized bilinearly
/// in the vertical direction.
pub fn make_rect_from_graphs(
    id: impl Into<String>,
    lower: impl Fn(f64) -> f64 + Send + Sync + 'static,
    upper: impl Fn(f64) -> f64 + Send + Sync + 'static,
    x_lo: f64,
    x_hi: f64,
    orientation: GraphOrientation,
) -> Result<OrientedRectangle, GeometryError> {
    if !(x_lo < x_hi) || !x_lo.is_finite() || !x_hi.is_finite() {
        return Err(GeometryError::Invalid(format!("interval [{x_lo}, {x_hi}]")));
    }
    let lower = Arc::new(lower);
    let upper = Arc::new(upper);
    let n = 1024;
    let xs: Vec<f64> = (0..=n).map(|i| x_lo + (x_hi - x_lo) * i as f64 / n as f64).collect();
    let widths: Vec<f64> = xs.iter().map(|&x| upper(x) - lower(x)).collect();
    let scale = xs
        .iter()
        .map(|&x| x.abs().max(lower(x).abs()).max(upper(x).abs()))
        .fold(1.0_f64, f64::max);
    let eps = 1e-12 * scale;
    if let Some(i) = widths.iter().position(|w| !w.is_finite() || *w < -eps) {
        return Err(GeometryError::Invalid(format!("upper graph below lower graph at x={}", xs[i])));
    }
    if let Some(i) = widths[1..n].iter().position(|w| *w <= eps) {
        return Err(GeometryError::Degenerate(format!("graphs meet at interior x={}", xs[i + 1])));
    }
    if widths[0] <= eps && widths[n] <= eps {
        return Err(GeometryError::Degenerate("graphs meet at both endpoints".into()));
    }

    let (lo, up) = (lower.clone(), upper.clone());
    let vertical = move |u: f64, v: f64| {
        let x = x_lo + u * (x_hi - x_lo);
        let (a, b) = (lo(x), up(x));
        Point::new(x, a + v * (b - a))
    };
    let param: ParamFn = match orientation {
        GraphOrientation::Vertical => Arc::new(vertical),
        GraphOrientation::Graphs => Arc::new(move |u, v| vertical(v, u)),
    };
    let slack = eps.max(1e-12);
    let membership: Membership = Arc::new(move |p: Point| {
        p.x >= x_lo - slack && p.x <= x_hi + slack && {
            let x = p.x.clamp(x_lo, x_hi);
            p.y >= lower(x) - slack && p.y <= upper(x) + slack
        }
    });
    OrientedRectangle::from_arcs(id, param, membership)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> OrientedRectangle {
        make_rect_from_graphs("unit", |_| 0.0, |_| 1.0, 0.0, 1.0, GraphOrientation::Vertical).unwrap()
    }

    #[test]
    fn unit_square_param_is_identity() {
        let r = unit_square();
        for &(u, v) in &[(0.0, 0.0), (0.25, 0.75), (1.0, 0.5), (0.3, 1.0)] {
            let p = r.param(u, v);
            assert!((p.x - u).abs() < 1e-15 && (p.y - v).abs() < 1e-15);
        }
        assert!(r.contains(Point::new(0.5, 0.5)));
        assert!(!r.contains(Point::new(1.5, 0.5)));
    }

    #[test]
    fn triangle_excludes_point_above_hypotenuse() {
        let r = make_rect_from_graphs("tri", |_| 0.0, |x| 1.0 - x, 0.0, 1.0, GraphOrientation::Vertical).unwrap();
        assert!(!r.contains(Point::new(0.5, 0.6)));
        assert!(r.contains(Point::new(0.5, 0.4)));
    }

    #[test]
    fn olg_trapezoid_sides() {
        let (m, k) = (13.48, 6.0);
        let r = make_rect_from_graphs("olg", |x| x, move |_| m, 0.0, k, GraphOrientation::Vertical).unwrap();
        assert!(r.side(Side::Left).iter().all(|p| p.x == 0.0 && p.y >= 0.0 && p.y <= m));
        assert!(r.side(Side::Right).iter().all(|p| p.x == k && p.y >= k - 1e-12 && p.y <= m));
        let c = [r.param(0.0, 0.0), r.param(1.0, 0.0), r.param(1.0, 1.0), r.param(0.0, 1.0)];
        assert_eq!(c, [Point::new(0.0, 0.0), Point::new(k, k), Point::new(k, m), Point::new(0.0, m)]);
    }

    #[test]
    fn degenerate_graphs_refused() {
        let err = make_rect_from_graphs("d", |_| 0.0, |_| 0.0, 0.0, 1.0, GraphOrientation::Vertical);
        assert!(matches!(err, Err(GeometryError::Degenerate(_))));
        let err = make_rect_from_graphs("d", |x: f64| x * (1.0 - x), |_| 0.0, 0.0, 1.0, GraphOrientation::Vertical);
        assert!(err.is_err());
    }

    #[test]
    fn side_attribution_and_distance() {
        let r = unit_square();
        assert!(r.distance_to_side(Point::new(0.3, 0.4), Side::Left) - 0.3 < 1e-12);
        assert_eq!(r.attribute_side(Point::new(1e-9, 0.5), 1e-6), Some(Side::Left));
        assert_eq!(r.attribute_side(Point::new(1.0, 0.5), 1e-6), Some(Side::Right));
        assert_eq!(r.attribute_side(Point::new(0.5, 0.5), 1e-6), None);
    }

    #[test]
    fn reorientation_swaps_sides() {
        let r = unit_square().reoriented("rot").unwrap();
        assert!(r.side(Side::Left).iter().all(|p| p.y == 0.0));
        assert!(r.side(Side::Right).iter().all(|p| p.y == 1.0));
    }
}
