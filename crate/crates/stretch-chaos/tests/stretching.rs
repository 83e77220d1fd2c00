use proptest::prelude::*;
use stretch_chaos::geometry::{make_rect_from_graphs, sample_test_paths, GraphOrientation};
use stretch_chaos::stretching::{check_stretch, StretchOptions};
use stretch_chaos::{DomainError, OrientedRectangle, Point};

fn wavy(amp: f64, freq: f64) -> OrientedRectangle {
    make_rect_from_graphs(
        "W",
        move |x| amp * (freq * x).sin(),
        move |x| 1.0 + amp * (freq * x).cos(),
        0.0,
        2.0,
        GraphOrientation::Vertical,
    )
    .unwrap()
}

#[test]
fn boundary_fibers_evaluate_on_the_true_side() {
    let circle = OrientedRectangle::new(
        "ring",
        |u, v| {
            let (r, a) = (1.0 + u, 0.2 + 1.2 * v);
            Point::new(r * a.cos(), r * a.sin())
        },
        |p: Point| {
            let r = p.norm();
            let a = p.y.atan2(p.x);
            (1.0 - 1e-12..=2.0 + 1e-12).contains(&r) && (0.2 - 1e-12..=1.4 + 1e-12).contains(&a)
        },
    )
    .unwrap()
    .reoriented("ring-t")
    .unwrap();
    let paths = sample_test_paths(&circle, 3, 7, 0);
    for k in 0..=1000 {
        let z = paths[0].eval(k as f64 / 1000.0);
        assert!((z.norm() - 1.0).abs() < 1e-12, "{z:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_stretches_every_rectangle(amp in 0.0f64..0.3, freq in 0.5f64..4.0, seed in 0u64..1000) {
        let r = wavy(amp, freq);
        let paths = sample_test_paths(&r, 12, 200, seed);
        let id = |p: Point| -> Result<Point, DomainError> { Ok(p) };
        let rep = check_stretch(&id, &r, &r, &[r.as_region(0, "R")], &paths, &StretchOptions::default());
        prop_assert!(rep.all_pass());
        prop_assert_eq!(rep.crossing_number, 1);
    }

    #[test]
    fn horizontal_contraction_never_stretches(amp in 0.0f64..0.3, freq in 0.5f64..4.0, c in 0.1f64..0.9) {
        let r = wavy(amp, freq);
        let paths = sample_test_paths(&r, 12, 200, 1);
        let squash = move |p: Point| -> Result<Point, DomainError> { Ok(Point::new(1.0 + c * (p.x - 1.0), p.y)) };
        let rep = check_stretch(&squash, &r, &r, &[r.as_region(0, "R")], &paths, &StretchOptions::default());
        prop_assert!(!rep.all_pass());
        prop_assert_eq!(rep.crossing_number, 0);
    }
}
