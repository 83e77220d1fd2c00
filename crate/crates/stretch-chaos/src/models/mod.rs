//! Discrete models: the logistic and overlapping-generations maps, the
//! duopoly game, two linked twist maps and a piecewise-linear counterexample.

mod conditions;
mod twist;

pub use conditions::{
    duopoly_conditions, duopoly_geometry, logistic_geometry, logistic_second_iterate_cover, olg_alternative_region, olg_conditions,
    olg_geometry, Condition, ConditionReport, DoubleCover, DuopolyGeometry, LogisticGeometry, OlgGeometry, Overall, Relation,
    ToleranceMode,
};
pub use twist::{twist_geometry, twist_windows, AnnulusShape, TwistGeometry, TwistSetup, TwistSide};

use crate::error::DomainError;
use crate::geometry::Point;
use crate::stretching::{PlanarMap, SharedMap};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("condition fails: {0}")]
    ConditionFails(String),
    #[error("boundary case refused: {0}")]
    Boundary(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error("config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub mu: f64,
}

impl Logistic {
    pub fn f(&self, x: f64) -> f64 {
        self.mu * x * (1.0 - x)
    }

    /// The two preimages of 1, `α < 1/2 < β`; `None` when `μ < 4`.
    pub fn preimages_of_one(&self) -> Option<(f64, f64)> {
        let disc = 1.0 - 4.0 / self.mu;
        (disc >= 0.0).then(|| {
            let r = disc.sqrt();
            (0.5 * (1.0 - r), 0.5 * (1.0 + r))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Olg1d {
    pub mu: f64,
}

impl Olg1d {
    pub fn f(&self, c: f64) -> f64 {
        self.mu * c * (-c).exp()
    }
}

/// Unimodal hump `g` with its maximum point and value.
#[derive(Clone)]
pub enum Hump {
    /// `g(x) = (μ x e^{-x})^{1/β}`, maximal at `x̄ = 1`.
    Exp { mu: f64, beta: f64 },
    Custom { g: Arc<dyn Fn(f64) -> f64 + Send + Sync>, x_bar: f64, m: f64 },
}

impl std::fmt::Debug for Hump {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hump::Exp { mu, beta } => write!(f, "Exp {{ mu: {mu}, beta: {beta} }}"),
            Hump::Custom { x_bar, m, .. } => write!(f, "Custom {{ x_bar: {x_bar}, m: {m} }}"),
        }
    }
}

impl Hump {
    pub fn g(&self, x: f64) -> f64 {
        match self {
            Hump::Exp { mu, beta } => (mu * x * (-x).exp()).powf(1.0 / beta),
            Hump::Custom { g, .. } => g(x),
        }
    }

    pub fn x_bar(&self) -> f64 {
        match self {
            Hump::Exp { .. } => 1.0,
            Hump::Custom { x_bar, .. } => *x_bar,
        }
    }

    /// `M = g(x̄)`.
    pub fn max_value(&self) -> f64 {
        match self {
            Hump::Exp { .. } => self.g(1.0),
            Hump::Custom { m, .. } => *m,
        }
    }
}

/// `F(x, y) = (g(x) − y/b, g(x))`.
#[derive(Debug, Clone)]
pub struct Olg2d {
    pub hump: Hump,
    pub b: f64,
}

impl Olg2d {
    pub fn new(mu: f64, b: f64, beta: f64) -> Result<Self, ModelError> {
        if !(mu > 0.0 && b > 1.0 && beta > 1.0) {
            return Err(ModelError::Invalid(format!("olg2d needs mu>0, b>1, beta>1 (got {mu}, {b}, {beta})")));
        }
        Ok(Olg2d { hump: Hump::Exp { mu, beta }, b })
    }

    pub fn eval(&self, p: Point) -> Result<Point, DomainError> {
        if p.x < 0.0 || p.y < 0.0 {
            return Err(DomainError::new(format!("olg2d outside first quadrant at ({}, {})", p.x, p.y)));
        }
        let g = self.hump.g(p.x);
        Ok(Point::new(g - p.y / self.b, g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Duopoly {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    pub nu: f64,
}

impl Duopoly {
    pub fn new(a: f64, b: f64, c1: f64, c2: f64, alpha: f64, nu: f64) -> Result<Self, ModelError> {
        if !(a > 0.0 && b > 0.0 && c1 > 0.0 && c2 > 0.0 && alpha > 0.0 && (0.0..=1.0).contains(&nu)) {
            return Err(ModelError::Invalid("duopoly needs a,b,c1,c2,alpha > 0 and nu in [0,1]".into()));
        }
        Ok(Duopoly { a, b, c1, c2, alpha, nu })
    }

    pub fn eval(&self, p: Point) -> Result<Point, DomainError> {
        if p.x < 0.0 || p.y < 0.0 {
            return Err(DomainError::new(format!("duopoly outside first quadrant at ({}, {})", p.x, p.y)));
        }
        let Duopoly { a, b, c1, c2, alpha, nu } = *self;
        let f1 = p.x * (1.0 + alpha * a - alpha * b * p.y - alpha * c1 - 2.0 * alpha * b * p.x);
        let f2 = (1.0 - nu) * p.y + nu / (2.0 * b) * (a - c2 - b * p.x);
        Ok(Point::new(f1, f2))
    }
}

/// Two overlapping annuli centred at `(∓r, 0)` with radial twists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Twist1 {
    pub r: f64,
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    pub c1: f64,
    pub d1: f64,
    pub c2: f64,
    pub d2: f64,
}

impl Twist1 {
    pub const REFERENCE: Twist1 = Twist1 { r: 3.0, p1: 3.3, p2: 6.0, q1: 3.3, q2: 6.0, c1: -1.5, d1: 3.3, c2: 0.0, d2: 0.9 };

    /// `φ(z) = −r + (z + r) e^{i(c₁ + d₁|z + r|)}`.
    pub fn phi(&self, p: Point) -> Point {
        let z = Complex64::new(p.x + self.r, p.y);
        let w = z * Complex64::from_polar(1.0, self.c1 + self.d1 * z.norm());
        Point::new(w.re - self.r, w.im)
    }

    /// `ψ(z) = r + (z − r) e^{i(c₂ + d₂|z − r|)}`.
    pub fn psi(&self, p: Point) -> Point {
        let z = Complex64::new(p.x - self.r, p.y);
        let w = z * Complex64::from_polar(1.0, self.c2 + self.d2 * z.norm());
        Point::new(w.re + self.r, w.im)
    }
}

/// `Pr_[a,b](t)`: the clamped affine ramp from 0 at `a` to 1 at `b`.
pub fn ramp(a: f64, b: f64, t: f64) -> f64 {
    (t - a).max(0.0).min(b - a) / (b - a)
}

/// Annulus about the origin and a horizontal strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Twist2 {
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    pub c1: f64,
    pub d1: f64,
    pub c2: f64,
    pub d2: f64,
}

impl Twist2 {
    pub const REFERENCE: Twist2 = Twist2 {
        p1: 3.0,
        p2: 5.0,
        q1: -1.0,
        q2: 2.0,
        c1: 0.4 * std::f64::consts::PI,
        d1: 3.0 * std::f64::consts::PI,
        c2: 1.0,
        d2: 8.6,
    };

    /// `φ(z) = z e^{i f(|z|)}` with `f = c₁ + d₁ Pr_[p₁,p₂]`.
    pub fn phi(&self, p: Point) -> Point {
        let z = Complex64::new(p.x, p.y);
        let w = z * Complex64::from_polar(1.0, self.c1 + self.d1 * ramp(self.p1, self.p2, z.norm()));
        Point::new(w.re, w.im)
    }

    /// `ψ(z) = z + g(Im z)` with `g = c₂ + d₂ Pr_[q₁,q₂]`.
    pub fn psi(&self, p: Point) -> Point {
        Point::new(p.x + self.c2 + self.d2 * ramp(self.q1, self.q2, p.y), p.y)
    }
}

/// Piecewise-linear map of `[0,1]` that expands across `[0,1]` without
/// stretching along paths on the union of its outer branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Counterexample {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, ModelError> {
        if !(0.0 < a && a < b && b < 1.0 && 0.0 < c && c < d && d < 1.0) {
            return Err(ModelError::Invalid("need 0<a<b<1 and 0<c<d<1".into()));
        }
        Ok(Counterexample { a, b, c, d })
    }

    pub fn f(&self, s: f64) -> Result<f64, DomainError> {
        let Counterexample { a, b, c, d } = *self;
        if !(0.0..=1.0).contains(&s) {
            return Err(DomainError::new(format!("counterexample map outside [0,1] at {s}")));
        }
        Ok(if s < a {
            (1.0 - c) / a * s + c
        } else if s <= b {
            (s - b) / (a - b)
        } else {
            d / (1.0 - b) * (s - b)
        })
    }
}

/// Any of the discrete models, evaluated as a planar map. One-dimensional
/// maps act on the first coordinate and leave the second unchanged.
#[derive(Debug, Clone)]
pub enum Model {
    Logistic(Logistic),
    Olg1d(Olg1d),
    Olg2d(Olg2d),
    Duopoly(Duopoly),
    Twist1Phi(Twist1),
    Twist1Psi(Twist1),
    Twist2Phi(Twist2),
    Twist2Psi(Twist2),
    Counterexample(Counterexample),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Logistic(_) => "logistic",
            Model::Olg1d(_) => "olg1d",
            Model::Olg2d(_) => "olg2d",
            Model::Duopoly(_) => "duopoly",
            Model::Twist1Phi(_) => "twist1-phi",
            Model::Twist1Psi(_) => "twist1-psi",
            Model::Twist2Phi(_) => "twist2-phi",
            Model::Twist2Psi(_) => "twist2-psi",
            Model::Counterexample(_) => "counterexample",
        }
    }

    pub fn eval(&self, p: Point) -> Result<Point, DomainError> {
        match self {
            Model::Logistic(m) => Ok(Point::new(m.f(p.x), p.y)),
            Model::Olg1d(m) => Ok(Point::new(m.f(p.x), p.y)),
            Model::Olg2d(m) => m.eval(p),
            Model::Duopoly(m) => m.eval(p),
            Model::Twist1Phi(m) => Ok(m.phi(p)),
            Model::Twist1Psi(m) => Ok(m.psi(p)),
            Model::Twist2Phi(m) => Ok(m.phi(p)),
            Model::Twist2Psi(m) => Ok(m.psi(p)),
            Model::Counterexample(m) => Ok(Point::new(m.f(p.x)?, p.y)),
        }
    }

    pub fn shared(&self) -> SharedMap {
        Arc::new(self.clone())
    }

    /// Builds a model from a flat key-value config: a `model` key plus named
    /// numeric parameters, one `key = value` per line, `#` comments.
    pub fn from_config(text: &str) -> Result<Model, ModelError> {
        let kv = parse_config(text)?;
        let name = kv.get("model").ok_or_else(|| ModelError::Config("missing model".into()))?.clone();
        let num = |k: &str| -> Result<f64, ModelError> {
            kv.get(k)
                .ok_or_else(|| ModelError::Config(format!("missing {k}")))?
                .parse::<f64>()
                .map_err(|_| ModelError::Config(format!("{k} is not a number")))
        };
        let twist1 = || -> Result<Twist1, ModelError> {
            Ok(Twist1 {
                r: num("r")?,
                p1: num("p1")?,
                p2: num("p2")?,
                q1: num("q1")?,
                q2: num("q2")?,
                c1: num("c1")?,
                d1: num("d1")?,
                c2: num("c2")?,
                d2: num("d2")?,
            })
        };
        let twist2 = || -> Result<Twist2, ModelError> {
            Ok(Twist2 {
                p1: num("p1")?,
                p2: num("p2")?,
                q1: num("q1")?,
                q2: num("q2")?,
                c1: num("c1")?,
                d1: num("d1")?,
                c2: num("c2")?,
                d2: num("d2")?,
            })
        };
        Ok(match name.as_str() {
            "logistic" => Model::Logistic(Logistic { mu: num("mu")? }),
            "olg1d" => Model::Olg1d(Olg1d { mu: num("mu")? }),
            "olg2d" => Model::Olg2d(Olg2d::new(num("mu")?, num("b")?, num("beta")?)?),
            "duopoly" => Model::Duopoly(Duopoly::new(
                num("a")?,
                num("b")?,
                num("c1")?,
                num("c2")?,
                num("alpha")?,
                num("nu")?,
            )?),
            "twist1-phi" => Model::Twist1Phi(twist1()?),
            "twist1-psi" => Model::Twist1Psi(twist1()?),
            "twist2-phi" => Model::Twist2Phi(twist2()?),
            "twist2-psi" => Model::Twist2Psi(twist2()?),
            "counterexample" => Model::Counterexample(Counterexample::new(num("a")?, num("b")?, num("c")?, num("d")?)?),
            other => return Err(ModelError::Config(format!("unknown model {other:?}"))),
        })
    }
}

impl PlanarMap for Model {
    fn apply(&self, p: Point) -> Result<Point, DomainError> {
        self.eval(p)
    }
}

/// Parses `key = value` lines into a map.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, ModelError> {
    let mut kv = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ModelError::Config(format!("line {}: expected key = value", i + 1)))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(kv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn olg_hump_maximum() {
        let m = Olg2d::new(80.0, 2.0, 1.3).unwrap();
        assert!((m.hump.max_value() - 13.48474370).abs() < 5e-9);
        assert!(Olg2d::new(80.0, 1.0, 1.3).is_err());
        assert!(m.eval(Point::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn logistic_endpoints_and_preimages() {
        let l = Logistic { mu: 4.5 };
        assert_eq!((l.f(0.0), l.f(1.0)), (0.0, 0.0));
        let (a, b) = l.preimages_of_one().unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15 && (b - 2.0 / 3.0).abs() < 1e-15);
        assert!(Logistic { mu: 3.9 }.preimages_of_one().is_none());
    }

    #[test]
    fn duopoly_fixed_value_on_axis() {
        let d = Duopoly::new(10.0, 0.5, 3.0, 5.0, 26.0 / 27.0, 0.5).unwrap();
        let y = (d.a - d.c2) / (2.0 * d.b);
        let f = d.eval(Point::new(0.0, y)).unwrap();
        assert_eq!((f.x, f.y), (0.0, 5.0));
    }

    #[test]
    fn counterexample_shape() {
        let f = Counterexample::new(0.3, 0.6, 0.2, 0.8).unwrap();
        assert!((f.f(0.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((f.f(0.3).unwrap() - 1.0).abs() < 1e-15);
        assert!(f.f(0.6).unwrap().abs() < 1e-15);
        assert!((f.f(1.0).unwrap() - 0.8).abs() < 1e-15);
        assert!(f.f(1.5).is_err());
        assert!(Counterexample::new(0.6, 0.3, 0.2, 0.8).is_err());
    }

    #[test]
    fn twists_preserve_their_annuli() {
        let t = Twist1::REFERENCE;
        let p = Point::new(1.0, 2.0);
        let q = t.phi(p);
        assert!((Point::new(q.x + 3.0, q.y).norm() - Point::new(4.0, 2.0).norm()).abs() < 1e-12);
        let q = t.psi(p);
        assert!((Point::new(q.x - 3.0, q.y).norm() - Point::new(-2.0, 2.0).norm()).abs() < 1e-12);
        let t2 = Twist2::REFERENCE;
        assert!((t2.phi(p).norm() - p.norm()).abs() < 1e-12);
        assert_eq!(t2.psi(Point::new(0.0, -1.0)), Point::new(1.0, -1.0));
        assert!((t2.psi(Point::new(0.0, 2.0)).x - 9.6).abs() < 1e-12);
    }

    #[test]
    fn config_parsing() {
        let m = Model::from_config("model = olg2d\nmu = 80 # hump\nb=2\nbeta = 1.3\n").unwrap();
        assert_eq!(m.name(), "olg2d");
        assert!(Model::from_config("model = olg2d\nmu = 80").is_err());
        assert!(Model::from_config("model = nope").is_err());
        assert!(Model::from_config("garbage").is_err());
    }
}
