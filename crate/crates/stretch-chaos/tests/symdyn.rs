use num_bigint::BigUint;
use proptest::prelude::*;
use stretch_chaos::symdyn::{
    count_admissible_words, is_cyclically_admissible, perron_eigenvalue, primitive_necklaces, SymbolMatrix,
};

fn words(m: usize, n: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|w: Vec<u8>| (0..m as u8).map(move |s| [w.clone(), vec![s]].concat())).collect();
    }
    out
}

fn matrix() -> impl Strategy<Value = Vec<Vec<u64>>> {
    proptest::collection::vec(proptest::collection::vec(0u64..2, 3), 3)
}

#[test]
fn golden_mean_word_counts_are_fibonacci() {
    let t = SymbolMatrix::transition(vec![vec![0, 1], vec![1, 1]]).unwrap();
    let (mut a, mut b) = (1u64, 1u64);
    for n in 1..40 {
        let (c, d) = (b, a + b);
        assert_eq!(count_admissible_words(&t, n), BigUint::from(d), "n = {n}");
        a = c;
        b = d;
    }
}

#[test]
fn necklaces_are_distinct_rotation_classes() {
    let ws = primitive_necklaces(3, 5);
    for w in &ws {
        let k = w.len();
        let rots: Vec<Vec<u8>> = (0..k).map(|r| [&w[r..], &w[..r]].concat()).collect();
        assert!(rots.iter().skip(1).all(|r| r != w), "{w:?} is not primitive");
        assert!(rots.iter().all(|r| r >= w), "{w:?} is not the least rotation");
    }
    let counts: Vec<usize> = (1..=5).map(|n| ws.iter().filter(|w| w.len() == n).count()).collect();
    assert_eq!(counts, vec![3, 3, 8, 18, 48]);
}

#[test]
fn reducible_matrices_use_the_largest_class() {
    let jordan = SymbolMatrix::transition(vec![vec![1, 0, 0], vec![1, 1, 0], vec![0, 1, 0]]).unwrap();
    assert_eq!(perron_eigenvalue(&jordan).unwrap().entropy, 0.0);
    let mixed = SymbolMatrix::adjacency(vec![vec![1, 1, 0], vec![0, 0, 3], vec![0, 3, 0]]).unwrap();
    assert!((perron_eigenvalue(&mixed).unwrap().lambda - 3.0).abs() < 1e-12);
    let nilpotent = SymbolMatrix::transition(vec![vec![0, 1], vec![0, 0]]).unwrap();
    assert_eq!(perron_eigenvalue(&nilpotent).unwrap().lambda, 0.0);
}

proptest! {
    #[test]
    fn two_by_two_eigenvalue_matches_closed_form(a in 0u64..4, b in 1u64..4, c in 1u64..4, d in 0u64..4) {
        let m = SymbolMatrix::adjacency(vec![vec![a, b], vec![c, d]]).unwrap();
        let r = perron_eigenvalue(&m).unwrap();
        let (tr, det) = ((a + d) as f64, (a * d) as f64 - (b * c) as f64);
        let exact = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
        prop_assert!((r.lambda - exact).abs() < 1e-9 * exact.max(1.0), "{} vs {exact}", r.lambda);
    }

    #[test]
    fn word_counts_match_enumeration(rows in matrix(), n in 1usize..6) {
        let Ok(t) = SymbolMatrix::transition(rows.clone()) else { return Ok(()) };
        let brute = words(3, n).iter().filter(|w| w.windows(2).all(|p| rows[p[0] as usize][p[1] as usize] > 0)).count();
        prop_assert_eq!(count_admissible_words(&t, n), BigUint::from(brute));
    }

    #[test]
    fn cyclic_words_count_the_trace(rows in matrix(), n in 1usize..6) {
        let Ok(t) = SymbolMatrix::transition(rows.clone()) else { return Ok(()) };
        let mut p = rows.clone();
        for _ in 1..n {
            p = (0..3).map(|i| (0..3).map(|j| (0..3).map(|k| p[i][k] * rows[k][j]).sum()).collect()).collect();
        }
        let trace: u64 = (0..3).map(|i| p[i][i]).sum();
        let cyclic = words(3, n).iter().filter(|w| is_cyclically_admissible(&t, w)).count() as u64;
        prop_assert_eq!(cyclic, trace);
    }

    #[test]
    fn entropy_lies_between_row_sum_bounds(rows in matrix()) {
        let Ok(t) = SymbolMatrix::transition(rows.clone()) else { return Ok(()) };
        let Ok(r) = perron_eigenvalue(&t) else { return Ok(()) };
        let sums: Vec<u64> = rows.iter().map(|r| r.iter().sum()).collect();
        let (lo, hi) = (*sums.iter().min().unwrap() as f64, *sums.iter().max().unwrap() as f64);
        prop_assert!(r.lambda >= lo - 1e-9 && r.lambda <= hi + 1e-9);
    }
}
