//! Planar oriented rectangles, sampled paths, implicit regions and the grid
//! form of the cutting check.

mod grid;
mod paths;
mod rect;

pub use grid::{grid_cut_check, grid_spanning_continuum, CutDirection, GridMask, PbmError};
pub use paths::{sample_test_paths, Path, PathError};
pub use rect::{make_rect_from_graphs, GeometryError, GraphOrientation, OrientedRectangle, Side};

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Linear interpolation `self + s (other - self)`.
    pub fn lerp(self, other: Point, s: f64) -> Point {
        Point::new(self.x + s * (other.x - self.x), self.y + s * (other.y - self.y))
    }

    pub fn max_norm(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        BBox { x_min, x_max, y_min, y_max }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut b = BBox::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in pts {
            b.x_min = b.x_min.min(p.x);
            b.x_max = b.x_max.max(p.x);
            b.y_min = b.y_min.min(p.y);
            b.y_max = b.y_max.max(p.y);
        }
        b
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn diameter(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }

    pub fn expand(&self, eps: f64) -> BBox {
        BBox::new(self.x_min - eps, self.x_max + eps, self.y_min - eps, self.y_max + eps)
    }

    pub fn union(&self, o: &BBox) -> BBox {
        BBox::new(
            self.x_min.min(o.x_min),
            self.x_max.max(o.x_max),
            self.y_min.min(o.y_min),
            self.y_max.max(o.y_max),
        )
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

pub type Membership = Arc<dyn Fn(Point) -> bool + Send + Sync>;

/// An implicitly defined compact region with a bounding box and a symbol label.
#[derive(Clone)]
pub struct RegionPredicate {
    pub label: usize,
    pub name: String,
    bbox: BBox,
    contains: Membership,
}

impl std::fmt::Debug for RegionPredicate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegionPredicate")
            .field("label", &self.label)
            .field("name", &self.name)
            .field("bbox", &self.bbox)
            .finish()
    }
}

impl RegionPredicate {
    pub fn new(
        label: usize,
        name: impl Into<String>,
        bbox: BBox,
        contains: impl Fn(Point) -> bool + Send + Sync + 'static,
    ) -> Self {
        RegionPredicate { label, name: name.into(), bbox, contains: Arc::new(contains) }
    }

    pub fn from_arc(label: usize, name: impl Into<String>, bbox: BBox, contains: Membership) -> Self {
        RegionPredicate { label, name: name.into(), bbox, contains }
    }

    /// Always false outside the bounding box.
    pub fn contains(&self, p: Point) -> bool {
        self.bbox.contains(p) && (self.contains)(p)
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// Same region with a different label.
    pub fn relabel(&self, label: usize) -> Self {
        let mut r = self.clone();
        r.label = label;
        r
    }

    /// Region `self ∩ other`, bounded by `self`'s box.
    pub fn intersect(&self, other: &RegionPredicate, label: usize, name: impl Into<String>) -> Self {
        let a = self.clone();
        let b = other.clone();
        RegionPredicate::new(label, name, self.bbox, move |p| a.contains(p) && b.contains(p))
    }
}
