use proptest::prelude::*;
use stretch_chaos::geometry::sample_test_paths;
use stretch_chaos::models::{logistic_geometry, olg_geometry, Logistic, Model, Olg2d, ToleranceMode};
use stretch_chaos::orbits::{
    chaos_certificate, covering_periodic_point_1d, newton_periodic_point_2d, NewtonOptions, OrbitError, PeriodicFinder,
};
use stretch_chaos::report::to_json_string;
use stretch_chaos::stretching::StretchOptions;
use stretch_chaos::{BBox, DomainError, OrientedRectangle, Point, RegionPredicate};

fn logistic(mu: f64) -> (Logistic, [(f64, f64); 2]) {
    let l = Logistic { mu };
    let g = logistic_geometry(&l).unwrap();
    (l, g.intervals)
}

/// Period-2 points of the logistic map: roots of μ²x² − μ(μ+1)x + (μ+1).
fn period_two(mu: f64) -> (f64, f64) {
    let (a, b, c) = (mu * mu, -mu * (mu + 1.0), mu + 1.0);
    let d = (b * b - 4.0 * a * c).sqrt();
    ((-b - d) / (2.0 * a), (-b + d) / (2.0 * a))
}

/// Number of primitive necklaces of length n over m symbols.
fn lyndon_count(m: u64, n: u64) -> u64 {
    fn mobius(mut n: u64) -> i64 {
        let mut r = 1;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                n /= p;
                if n % p == 0 {
                    return 0;
                }
                r = -r;
            }
            p += 1;
        }
        if n > 1 {
            r = -r;
        }
        r
    }
    let s: i64 = (1..=n).filter(|d| n % d == 0).map(|d| mobius(d) * m.pow((n / d) as u32) as i64).sum();
    (s / n as i64) as u64
}

#[test]
fn logistic_fixed_points() {
    let (l, iv) = logistic(4.5);
    let f = move |x: f64| l.f(x);
    let r0 = covering_periodic_point_1d(&f, &iv, &[0]).unwrap();
    assert!(r0.point.x.abs() < 1e-14);
    let r1 = covering_periodic_point_1d(&f, &iv, &[1]).unwrap();
    assert!((r1.point.x - 7.0 / 9.0).abs() < 1e-14);
    assert!(r0.itinerary_verified && r1.itinerary_verified);
}

#[test]
fn logistic_period_two_matches_quadratic() {
    let mu = 4.5;
    let (l, iv) = logistic(mu);
    let f = move |x: f64| l.f(x);
    let (lo, hi) = period_two(mu);
    let r = covering_periodic_point_1d(&f, &iv, &[0, 1]).unwrap();
    assert!((r.point.x - lo).abs() < 1e-12, "{} vs {lo}", r.point.x);
    assert!((r.orbit[1].x - hi).abs() < 1e-12);
    assert!((r.point.x - 7.0 / 9.0).abs() > 1e-3 && r.point.x > 1e-3);
}

#[test]
fn broken_line_golden_mean_map() {
    let f = |x: f64| if x <= 1.0 { 1.0 + x } else { 4.0 - 2.0 * x };
    let iv = [(0.0, 1.0), (1.0, 2.0)];
    match covering_periodic_point_1d(&f, &iv, &[0, 0]) {
        Err(OrbitError::CoveringFails { from: 0, to: 0, .. }) => {}
        other => panic!("{other:?}"),
    }
    let r = covering_periodic_point_1d(&f, &iv, &[1]).unwrap();
    assert!((r.point.x - 4.0 / 3.0).abs() < 1e-14);
    let r = covering_periodic_point_1d(&f, &iv, &[0, 1]).unwrap();
    assert!((r.point.x - 2.0 / 3.0).abs() < 1e-14);
}

#[test]
fn map_without_fixed_point_is_not_found() {
    let square = OrientedRectangle::new("unit", |u, v| Point::new(u, v), |p: Point| {
        (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)
    })
    .unwrap();
    let psi = |p: Point| -> Result<Point, DomainError> { Ok(Point::new(0.6 + 0.3 * p.y, 2.0 * p.x - 0.5)) };
    let k = RegionPredicate::new(0, "K", BBox::new(0.25, 0.75, 0.0, 1.0), |p: Point| {
        (0.25..=0.75).contains(&p.x) && (0.0..=1.0).contains(&p.y)
    });
    for regions in [vec![k], vec![square.as_region(0, "R")]] {
        assert!(matches!(
            newton_periodic_point_2d(&psi, &regions, &[0], &NewtonOptions::default()),
            Err(OrbitError::NotFound(_))
        ));
    }
}

#[test]
fn olg_has_two_distinct_fixed_points() {
    let m = Olg2d::new(80.0, 2.0, 1.3).unwrap();
    let g = olg_geometry(&m, 6.0, ToleranceMode::Strict).unwrap();
    let model = Model::Olg2d(m);
    let opts = NewtonOptions::default();
    let a = newton_periodic_point_2d(&model, &g.regions, &[0], &opts).unwrap();
    let b = newton_periodic_point_2d(&model, &g.regions, &[1], &opts).unwrap();
    assert!(a.residual < 1e-9 && b.residual < 1e-9);
    assert!(a.itinerary_verified && b.itinerary_verified);
    assert!(a.point.dist(b.point) > 1e-6);
}

#[test]
fn certificate_covers_every_primitive_itinerary() {
    let (l, _) = logistic(4.5);
    let g = logistic_geometry(&l).unwrap();
    let paths = sample_test_paths(&g.rect, 20, 300, 3);
    let f = move |x: f64| l.f(x);
    let finder = PeriodicFinder::Covering1d { f: &f, intervals: g.intervals.to_vec() };
    let run = || chaos_certificate(&Model::Logistic(l), &g.rect, &g.regions, 7, &paths, &finder, &StretchOptions::default());
    let cert = run();
    let expected: u64 = (1..=7).map(|n| lyndon_count(2, n)).sum();
    assert_eq!(cert.orbits.len() as u64, expected);
    assert!(cert.all_realized());
    assert!((cert.entropy_bound - std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(to_json_string(&cert).unwrap(), to_json_string(&run()).unwrap());
}

#[test]
fn newton_on_embedded_logistic_agrees_with_covering() {
    let (l, iv) = logistic(4.5);
    let g = logistic_geometry(&l).unwrap();
    let f = move |x: f64| l.f(x);
    let model = Model::Logistic(l);
    for word in [vec![1], vec![0, 1], vec![0, 0, 1], vec![0, 1, 1, 1]] {
        let c = covering_periodic_point_1d(&f, &iv, &word).unwrap();
        let n = newton_periodic_point_2d(&model, &g.regions, &word, &NewtonOptions::default()).unwrap();
        assert!((c.point.x - n.point.x).abs() < 1e-9, "{word:?}: {} vs {}", c.point.x, n.point.x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn covering_residual_is_tiny(mu in 4.2f64..6.0, word in proptest::collection::vec(0u8..2, 1..=6)) {
        let (l, iv) = logistic(mu);
        let f = move |x: f64| l.f(x);
        let r = covering_periodic_point_1d(&f, &iv, &word).unwrap();
        prop_assert!(r.residual < 1e-12);
        prop_assert!(r.itinerary_verified);
    }

    #[test]
    fn affine_contraction_fixed_point(a in -0.6f64..0.6, b in -0.6f64..0.6, cx in -0.2f64..0.2, cy in -0.2f64..0.2) {
        let map = move |p: Point| -> Result<Point, DomainError> { Ok(Point::new(a * p.x + b * p.y + cx, b * p.x - a * p.y + cy)) };
        let region = RegionPredicate::new(0, "S", BBox::new(-1.0, 1.0, -1.0, 1.0), |p: Point| p.x.abs() <= 1.0 && p.y.abs() <= 1.0);
        let r = newton_periodic_point_2d(&map, &[region], &[0], &NewtonOptions::default()).unwrap();
        let det = (a - 1.0) * (-a - 1.0) - b * b;
        let x = (-cx * (-a - 1.0) + b * cy) / det;
        let y = (-(a - 1.0) * cy + b * cx) / det;
        prop_assert!((r.point.x - x).abs() < 1e-9 && (r.point.y - y).abs() < 1e-9);
    }
}
