use proptest::prelude::*;
use stretch_chaos::geometry::sample_test_paths;
use stretch_chaos::models::{logistic_geometry, logistic_second_iterate_cover, Logistic, Model};
use stretch_chaos::stretching::{check_stretch, StretchOptions};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn logistic_strips_end_at_preimages_of_one(mu in 4.01f64..8.0) {
        let l = Logistic { mu };
        let g = logistic_geometry(&l).unwrap();
        let [(_, a), (b, _)] = g.intervals;
        prop_assert!((l.f(a) - 1.0).abs() < 1e-12 && (l.f(b) - 1.0).abs() < 1e-12);
        prop_assert!(a < 0.5 && b > 0.5);
    }

    #[test]
    fn second_iterate_cover_is_self_covering(mu in 3.84f64..4.0) {
        let l = Logistic { mu };
        let c = logistic_second_iterate_cover(&l).unwrap();
        let (c1, c2) = c.interval;
        prop_assert!((l.f(c1) - 0.5).abs() < 1e-12 && (l.f(c2) - 0.5).abs() < 1e-12);
        prop_assert!(c.image.0 <= c1 && c.image.1 >= c2);
    }
}

#[test]
fn parameter_ranges_are_checked() {
    assert!(logistic_geometry(&Logistic { mu: 4.0 }).is_err());
    assert!(logistic_second_iterate_cover(&Logistic { mu: 3.82 }).is_err());
}

#[test]
fn logistic_stretches_across_the_square() {
    let l = Logistic { mu: 4.2 };
    let g = logistic_geometry(&l).unwrap();
    let paths = sample_test_paths(&g.rect, 30, 300, 9);
    let rep = check_stretch(&Model::Logistic(l), &g.rect, &g.rect, &g.regions, &paths, &StretchOptions::default());
    assert!(rep.all_pass());
    assert_eq!(rep.crossing_number, 2);
}
