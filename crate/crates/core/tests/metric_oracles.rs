use annorel_core::agreement::{
    cohen_kappa, cosine_agreement, fleiss_kappa, krippendorff_alpha, multi_label_agreement, Distance, Score,
    MULTI_LABEL_CUTOFF,
};
use annorel_core::oracle;
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn same(s: Score, o: oracle::OracleScore) -> bool {
    (s.value - o.0).abs() < TOL && s.degenerate == o.1
}

fn hard_pair() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2usize..=12, 2usize..=4).prop_flat_map(|(n, k)| {
        (proptest::collection::vec(0..k, n), proptest::collection::vec(0..k, n))
    })
}

fn prob_vec(k: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..1.0], k)
}

fn soft_pair() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (2usize..=12, 2usize..=4).prop_flat_map(|(n, k)| {
        (proptest::collection::vec(prob_vec(k), n), proptest::collection::vec(prob_vec(k), n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn hard_metrics_match_oracle((a, b) in hard_pair()) {
        prop_assert!(same(cohen_kappa(&a, &b).unwrap(), oracle::cohen_kappa(&a, &b)));
        prop_assert!(same(fleiss_kappa(&a, &b).unwrap(), oracle::fleiss_kappa(&a, &b)));
        for d in [Distance::Nominal, Distance::Interval] {
            prop_assert!(same(krippendorff_alpha(&a, &b, d).unwrap(), oracle::krippendorff_alpha(&a, &b, d)));
        }
    }

    #[test]
    fn soft_metrics_match_oracle((a, b) in soft_pair()) {
        prop_assert!(same(cosine_agreement(&a, &b).unwrap(), oracle::cosine(&a, &b)));
        prop_assert!(same(multi_label_agreement(&a, &b).unwrap(), oracle::multi_label(&a, &b, MULTI_LABEL_CUTOFF)));
    }

    #[test]
    fn metrics_are_symmetric((a, b) in hard_pair()) {
        prop_assert_eq!(cohen_kappa(&a, &b).unwrap(), cohen_kappa(&b, &a).unwrap());
        prop_assert_eq!(fleiss_kappa(&a, &b).unwrap(), fleiss_kappa(&b, &a).unwrap());
        for d in [Distance::Nominal, Distance::Interval] {
            prop_assert_eq!(krippendorff_alpha(&a, &b, d).unwrap(), krippendorff_alpha(&b, &a, d).unwrap());
        }
    }

    #[test]
    fn soft_metrics_are_symmetric((a, b) in soft_pair()) {
        prop_assert_eq!(cosine_agreement(&a, &b).unwrap(), cosine_agreement(&b, &a).unwrap());
        prop_assert_eq!(multi_label_agreement(&a, &b).unwrap(), multi_label_agreement(&b, &a).unwrap());
    }

    #[test]
    fn item_order_does_not_matter((a, b) in hard_pair(), rot in 0usize..12) {
        let r = rot % a.len();
        let (mut a2, mut b2) = (a.clone(), b.clone());
        a2.rotate_left(r);
        b2.rotate_left(r);
        a2.reverse();
        b2.reverse();
        let close = |x: Score, y: Score| (x.value - y.value).abs() < 1e-12 && x.degenerate == y.degenerate;
        prop_assert!(close(cohen_kappa(&a, &b).unwrap(), cohen_kappa(&a2, &b2).unwrap()));
        prop_assert!(close(fleiss_kappa(&a, &b).unwrap(), fleiss_kappa(&a2, &b2).unwrap()));
        prop_assert!(close(
            krippendorff_alpha(&a, &b, Distance::Nominal).unwrap(),
            krippendorff_alpha(&a2, &b2, Distance::Nominal).unwrap()
        ));
    }

    #[test]
    fn identical_non_constant_is_one(a in proptest::collection::vec(0usize..4, 2..12)) {
        prop_assume!(a.iter().any(|&x| x != a[0]));
        prop_assert_eq!(cohen_kappa(&a, &a).unwrap().value, 1.0);
        prop_assert_eq!(fleiss_kappa(&a, &a).unwrap().value, 1.0);
        prop_assert_eq!(krippendorff_alpha(&a, &a, Distance::Nominal).unwrap().value, 1.0);
        prop_assert_eq!(krippendorff_alpha(&a, &a, Distance::Interval).unwrap().value, 1.0);
    }
}

#[test]
fn hand_fixture_against_oracle() {
    let (a, b) = ([0, 0, 1, 1], [0, 1, 1, 1]);
    assert!((cohen_kappa(&a, &b).unwrap().value - 0.5).abs() < 1e-12);
    assert!((krippendorff_alpha(&a, &b, Distance::Nominal).unwrap().value - 0.5333).abs() < 1e-4);
    assert!((fleiss_kappa(&a, &b).unwrap().value - 0.4667).abs() < 1e-4);
    assert!(same(fleiss_kappa(&a, &b).unwrap(), oracle::fleiss_kappa(&a, &b)));
}

#[test]
fn interval_scale_example() {
    // scale points 1..5 stored as indices 0..4
    let (a, b) = ([0, 1, 2], [0, 1, 3]);
    let s = krippendorff_alpha(&a, &b, Distance::Interval).unwrap();
    assert!(same(s, oracle::krippendorff_alpha(&a, &b, Distance::Interval)));
}
