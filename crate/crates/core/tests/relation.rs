mod oracle;

use collage_core::relation::{relation_matrix, MetricError, STRUCTURE_TOL};
use proptest::prelude::*;

fn nonzero(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), n)
        .prop_filter("non-zero rows", |e| e.iter().all(|v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6))
}

proptest! {
    #[test]
    fn gram_matches_double_loop(e in (2usize..10, 2usize..16).prop_flat_map(|(n, d)| nonzero(n, d))) {
        let r = relation_matrix(&e).unwrap();
        let want = oracle::gram(&e);
        for i in 0..e.len() {
            prop_assert!((r.get(i, i) - 1.0).abs() <= STRUCTURE_TOL);
            for j in 0..e.len() {
                prop_assert!((r.get(i, j) - want[i][j]).abs() <= 1e-12, "({}, {})", i, j);
                prop_assert_eq!(r.get(i, j), r.get(j, i));
                prop_assert!(r.get(i, j).abs() <= 1.0 + STRUCTURE_TOL);
            }
        }
    }

    #[test]
    fn invariant_to_embedding_scale(e in nonzero(4, 8), alpha in 1e-3f64..1e3) {
        let scaled: Vec<Vec<f64>> = e.iter().map(|v| v.iter().map(|x| x * alpha).collect()).collect();
        let (a, b) = (relation_matrix(&e).unwrap(), relation_matrix(&scaled).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn zero_vector_is_degenerate() {
    let e = [vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]];
    assert_eq!(relation_matrix(&e), Err(MetricError::DegenerateEmbedding { index: 1 }));
}

#[test]
fn rejects_ragged_and_non_finite() {
    assert!(matches!(
        relation_matrix(&[vec![1.0, 0.0], vec![1.0]]),
        Err(MetricError::DimensionMismatch { index: 1, .. })
    ));
    assert_eq!(relation_matrix(&[vec![1.0, f64::NAN], vec![1.0, 0.0]]), Err(MetricError::NonFinite { index: 0 }));
    assert_eq!(relation_matrix(&[vec![1.0]]), Err(MetricError::TooFewPanels(1)));
}

#[test]
fn identical_panels_give_all_ones() {
    let r = relation_matrix(&vec![vec![2.0, -1.0, 0.5]; 4]).unwrap();
    assert!(r.rows().iter().flatten().all(|v| (v - 1.0).abs() < 1e-12));
}
