use super::{OrientedRectangle, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("path needs at least two samples")]
    TooShort,
    #[error("params and points differ in length")]
    LengthMismatch,
    #[error("params must start at 0, end at 1 and increase strictly")]
    BadParams,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

type Curve = Arc<dyn Fn(f64) -> Point + Send + Sync>;

/// A sampled continuous curve. Between samples it is evaluated on the
/// underlying curve when one is attached, otherwise linearly interpolated.
#[derive(Clone)]
pub struct Path {
    pub id: usize,
    params: Vec<f64>,
    points: Vec<Point>,
    tolerance: f64,
    curve: Option<Curve>,
}

impl std::fmt::Debug for Path {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Path")
            .field("id", &self.id)
            .field("len", &self.params.len())
            .field("tolerance", &self.tolerance)
            .field("exact", &self.curve.is_some())
            .finish()
    }
}

impl PartialEq for Path {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.params == other.params && self.points == other.points
    }
}

impl Path {
    pub fn new(id: usize, params: Vec<f64>, points: Vec<Point>) -> Result<Self, PathError> {
        if params.len() != points.len() {
            return Err(PathError::LengthMismatch);
        }
        if params.len() < 2 {
            return Err(PathError::TooShort);
        }
        if params[0] != 0.0 || *params.last().unwrap() != 1.0 || params.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(PathError::BadParams);
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(PathError::NonFinite(i));
        }
        let tolerance = points.windows(2).map(|w| w[0].dist(w[1])).fold(0.0, f64::max);
        Ok(Path { id, params, points, tolerance, curve: None })
    }

    /// Attaches the curve the samples were taken from, so that `eval`
    /// between samples stays on it.
    pub fn with_curve(mut self, f: impl Fn(f64) -> Point + Send + Sync + 'static) -> Self {
        self.curve = Some(Arc::new(f));
        self
    }

    /// Uniformly sampled curve `t ↦ f(t)`.
    pub fn from_fn(id: usize, n: usize, f: impl Fn(f64) -> Point) -> Result<Self, PathError> {
        if n < 2 {
            return Err(PathError::TooShort);
        }
        let params: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
        let points = params.iter().map(|&t| f(t)).collect();
        Path::new(id, params, points)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Largest gap between consecutive samples.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn end(&self) -> Point {
        *self.points.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> Point {
        let t = t.clamp(0.0, 1.0);
        let i = match self.params.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.points[i],
            Err(i) => i,
        };
        if let Some(f) = &self.curve {
            return f(t);
        }
        let (t0, t1) = (self.params[i - 1], self.params[i]);
        self.points[i - 1].lerp(self.points[i], (t - t0) / (t1 - t0))
    }

    /// Writes `t,x,y` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y")?;
        for (t, p) in self.params.iter().zip(&self.points) {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", t, p.x, p.y)?;
        }
        Ok(())
    }
}

fn fiber_levels(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5],
        _ => (0..n).map(|j| j as f64 / (n - 1) as f64).collect(),
    }
}

fn bezier(c: [f64; 4], t: f64) -> f64 {
    let s = 1.0 - t;
    s * s * s * c[0] + 3.0 * s * s * t * c[1] + 3.0 * s * t * t * c[2] + t * t * t * c[3]
}

/// The standard test family crossing `rect` from its left to its right side:
/// horizontal fibers (including the down and up arcs) followed by seeded
/// cubic Bézier curves in the unit square that are monotone in `u`.
pub fn sample_test_paths(rect: &OrientedRectangle, n_paths: usize, n_samples: usize, seed: u64) -> Vec<Path> {
    let n_samples = n_samples.max(2);
    let n_fibers = if n_paths <= 3 { n_paths } else { (n_paths / 2).max(3) };
    let ts: Vec<f64> = (0..n_samples).map(|k| k as f64 / (n_samples - 1) as f64).collect();
    let mut out = Vec::with_capacity(n_paths);
    for v in fiber_levels(n_fibers) {
        let pts = ts.iter().map(|&u| rect.param(u, v)).collect();
        let r = rect.clone();
        out.push(Path::new(out.len(), ts.clone(), pts).expect("fiber path").with_curve(move |u| r.param(u, v)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < n_paths {
        let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let cu = [0.0, a, b, 1.0];
        let cv = [rng.random(), rng.random(), rng.random(), rng.random()];
        let at = {
            let r = rect.clone();
            move |t: f64| r.param(bezier(cu, t).clamp(0.0, 1.0), bezier(cv, t).clamp(0.0, 1.0))
        };
        let pts = ts.iter().map(|&t| at(t)).collect();
        out.push(Path::new(out.len(), ts.clone(), pts).expect("bezier path").with_curve(at));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_rect_from_graphs, GraphOrientation};

    #[test]
    fn path_validation() {
        assert_eq!(Path::new(0, vec![0.0], vec![Point::default()]), Err(PathError::TooShort));
        let pts = vec![Point::default(); 3];
        assert_eq!(Path::new(0, vec![0.0, 0.5, 0.5], pts.clone()), Err(PathError::BadParams));
        assert_eq!(Path::new(0, vec![0.1, 0.5, 1.0], pts), Err(PathError::BadParams));
    }

    #[test]
    fn eval_interpolates() {
        let p = Path::from_fn(0, 3, |t| Point::new(t, 2.0 * t)).unwrap();
        let q = p.eval(0.25);
        assert!((q.x - 0.25).abs() < 1e-15 && (q.y - 0.5).abs() < 1e-15);
        assert_eq!(p.tolerance(), Point::new(0.5, 1.0).norm());
    }

    #[test]
    fn three_paths_are_the_middle_and_boundary_fibers() {
        let r = make_rect_from_graphs("u", |_| 0.0, |_| 1.0, 0.0, 1.0, GraphOrientation::Vertical).unwrap();
        let ps = sample_test_paths(&r, 3, 16, 1);
        let vs: Vec<f64> = ps.iter().map(|p| p.start().y).collect();
        assert_eq!(vs, vec![0.0, 0.5, 1.0]);
        assert!(ps.iter().all(|p| p.points().iter().all(|q| q.y == p.start().y)));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = Path::from_fn(0, 4, |t| Point::new(t, 0.0)).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 5);
        assert!(s.starts_with("t,x,y\n"));
    }
}
