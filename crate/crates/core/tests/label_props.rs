use std::collections::BTreeMap;

use annorel_core::exec::Execution;
use annorel_core::labels::{
    annotation_prob_labels, sample_hard_labels, sample_prob_labels, DefaultLabelGenerator, EffiLabelGenerator,
    HardLabel, HardMode, TopicLabelGenerator,
};
use annorel_core::{infer_label_mapping, AnnotationFrame, LabelMapping};
use proptest::prelude::*;

const CLASSES: [&str; 4] = ["a", "b", "c", "d"];

/// Rows of optional class indices for each of `n` annotators; every row has
/// at least one label.
fn table(n: usize) -> impl Strategy<Value = Vec<Vec<Option<usize>>>> {
    proptest::collection::vec(
        proptest::collection::vec(proptest::option::weighted(0.7, 0usize..4), n)
            .prop_filter("row needs a label", |r| r.iter().any(Option::is_some)),
        1..30,
    )
}

fn frame(rows: &[Vec<Option<usize>>], cell: impl Fn(usize) -> String) -> AnnotationFrame {
    let n = rows[0].len();
    let mut s = String::from("sample_id");
    for a in 0..n {
        s.push_str(&format!(",a{}", a + 1));
    }
    s.push('\n');
    for (i, r) in rows.iter().enumerate() {
        s.push_str(&format!("s{i}"));
        for c in r {
            s.push(',');
            if let Some(c) = c {
                s.push_str(&cell(*c));
            }
        }
        s.push('\n');
    }
    AnnotationFrame::from_csv_bytes(s.as_bytes(), false).unwrap()
}

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("a{i}")).collect()
}

fn mapping() -> LabelMapping {
    LabelMapping::from_labels(CLASSES).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn categorical_labels_are_distributions(rows in table(4), second in 0usize..4) {
        let f = frame(&rows, |c| format!("{};{}", CLASSES[c], CLASSES[(c + 1 + second) % 4]));
        let g = EffiLabelGenerator::new(mapping(), 2.0 / 3.0, 1.0 / 3.0).unwrap();
        let labels = annotation_prob_labels(&f, &names(4), &g, Execution::Sequential).unwrap();
        for col in &labels.first {
            for p in col.iter().flatten() {
                prop_assert!((p.0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(p.0.iter().all(|&x| x >= 0.0));
            }
        }
        for p in sample_prob_labels(&labels, None, Execution::Sequential).unwrap() {
            prop_assert!((p.0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn equal_weights_equal_unweighted(rows in table(3), w in 0.1f64..10.0) {
        let f = frame(&rows, |c| CLASSES[c].to_owned());
        let g = DefaultLabelGenerator { mapping: mapping() };
        let labels = annotation_prob_labels(&f, &names(3), &g, Execution::Sequential).unwrap();
        let rel: BTreeMap<String, f64> = names(3).into_iter().map(|a| (a, w)).collect();
        let plain = sample_prob_labels(&labels, None, Execution::Sequential).unwrap();
        let weighted = sample_prob_labels(&labels, Some(&rel), Execution::Sequential).unwrap();
        for (p, q) in plain.iter().zip(&weighted) {
            for (x, y) in p.0.iter().zip(&q.0) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn argmax_is_scale_invariant(rows in table(3), rel in proptest::collection::vec(0.1f64..3.0, 3), k in 0.1f64..10.0) {
        let f = frame(&rows, |c| CLASSES[c].to_owned());
        let g = DefaultLabelGenerator { mapping: mapping() };
        let labels = annotation_prob_labels(&f, &names(3), &g, Execution::Sequential).unwrap();
        let r1: BTreeMap<String, f64> = names(3).into_iter().zip(rel.iter().copied()).collect();
        let r2: BTreeMap<String, f64> = names(3).into_iter().zip(rel.iter().map(|x| x * k)).collect();
        let p1 = sample_prob_labels(&labels, Some(&r1), Execution::Sequential).unwrap();
        let p2 = sample_prob_labels(&labels, Some(&r2), Execution::Sequential).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            // skip exact ties, where rounding decides
            let mut s = a.0.clone();
            s.sort_by(|x, y| y.total_cmp(x));
            if s.len() > 1 && s[0] - s[1] < 1e-9 {
                continue;
            }
            prop_assert_eq!(a.argmax(), b.argmax());
        }
    }

    #[test]
    fn majority_matches_argmax_without_ties(rows in table(5)) {
        let f = frame(&rows, |c| CLASSES[c].to_owned());
        let g = DefaultLabelGenerator { mapping: mapping() };
        let labels = annotation_prob_labels(&f, &names(5), &g, Execution::Sequential).unwrap();
        let probs = sample_prob_labels(&labels, None, Execution::Sequential).unwrap();
        let argmax = sample_hard_labels(&labels, Some(&probs), &g, HardMode::Argmax, Execution::Sequential).unwrap();
        let majority = sample_hard_labels(&labels, None, &g, HardMode::Majority, Execution::Sequential).unwrap();
        for ((p, x), y) in probs.iter().zip(&argmax).zip(&majority) {
            let top = p.0.iter().cloned().fold(f64::MIN, f64::max);
            if p.0.iter().filter(|&&v| (v - top).abs() < 1e-12).count() == 1 {
                prop_assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree(rows in table(4)) {
        let f = frame(&rows, |c| CLASSES[c].to_owned());
        let g = DefaultLabelGenerator { mapping: mapping() };
        let a = annotation_prob_labels(&f, &names(4), &g, Execution::Sequential).unwrap();
        let b = annotation_prob_labels(&f, &names(4), &g, Execution::Parallel).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(
            sample_prob_labels(&a, None, Execution::Sequential).unwrap(),
            sample_prob_labels(&b, None, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn mapping_ignores_row_order(rows in table(3)) {
        let f = frame(&rows, |c| CLASSES[c].to_owned());
        let mut reversed = rows.clone();
        reversed.reverse();
        let g = frame(&reversed, |c| CLASSES[c].to_owned());
        let m1 = infer_label_mapping(&f, &names(3)).ok();
        let m2 = infer_label_mapping(&g, &names(3)).ok();
        prop_assert_eq!(m1, m2);
    }
}

#[test]
fn topic_threshold_example() {
    let f = AnnotationFrame::from_csv_bytes(b"sample_id,a1\ns1,a;c\n", false).unwrap();
    let g = TopicLabelGenerator::new(mapping(), 0.5).unwrap();
    let labels = annotation_prob_labels(&f, &["a1"], &g, Execution::Sequential).unwrap();
    assert_eq!(labels.first[0][0].as_ref().unwrap().0, vec![1.0, 0.0, 1.0, 0.0]);
    let probs = sample_prob_labels(&labels, None, Execution::Sequential).unwrap();
    let hard = sample_hard_labels(&labels, Some(&probs), &g, HardMode::Argmax, Execution::Sequential).unwrap();
    assert_eq!(hard, vec![HardLabel::Set(vec![0, 2])]);
}
