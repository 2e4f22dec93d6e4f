//! Synthetic annotation data with a planted ground truth.
//!
//! Each sample gets a true class; an annotator reports it, or with their flip
//! probability a uniformly chosen *other* class. Used by the benches, the test
//! suites and for trying the tool without real data.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compilation::AnnotatorTable;
use crate::error::Result;
use crate::frame::SAMPLE_ID;

/// Seeded generator of planted labels.
#[derive(Debug, Clone)]
pub struct Planted {
    pub classes: Vec<String>,
    rng: ChaCha8Rng,
}

impl Planted {
    pub fn new<S: AsRef<str>>(classes: &[S], seed: u64) -> Self {
        assert!(classes.len() >= 2, "need at least two classes");
        Self { classes: classes.iter().map(|c| c.as_ref().to_owned()).collect(), rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn truth(&mut self) -> usize {
        self.rng.gen_range(0..self.classes.len())
    }

    /// `truth`, or with probability `flip` one of the other classes.
    pub fn report(&mut self, truth: usize, flip: f64) -> usize {
        if self.rng.gen_bool(flip) {
            let other = self.rng.gen_range(0..self.classes.len() - 1);
            if other >= truth {
                other + 1
            } else {
                other
            }
        } else {
            truth
        }
    }

    pub fn label(&self, class: usize) -> &str {
        &self.classes[class]
    }
}

/// Compiled CSV where annotators `a1..an` label every one of `rows` samples,
/// annotator `i` flipping with probability `flips[i]`.
pub fn crossed_csv<S: AsRef<str>>(rows: usize, flips: &[f64], classes: &[S], seed: u64) -> Vec<u8> {
    let mut planted = Planted::new(classes, seed);
    let mut out = String::from(SAMPLE_ID);
    out.push_str(",text");
    for i in 1..=flips.len() {
        out.push_str(&format!(",a{i}"));
    }
    out.push('\n');
    for row in 0..rows {
        let truth = planted.truth();
        out.push_str(&format!("{row},doc {row}"));
        for &flip in flips {
            let class = planted.report(truth, flip);
            out.push(',');
            out.push_str(planted.label(class));
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Fills exported task files as annotators would: every row gets a `label`
/// drawn around a per-sample truth, with per-annotator flip probabilities
/// (0 for annotators not in `flips`). Files whose stem starts with `_` (the
/// leftover pool) and non-CSV files are skipped.
pub fn annotate_tasks<S: AsRef<str>>(
    files: &BTreeMap<String, Vec<u8>>,
    flips: &BTreeMap<String, f64>,
    classes: &[S],
    seed: u64,
) -> Result<Vec<AnnotatorTable>> {
    let mut planted = Planted::new(classes, seed);
    let mut truth: BTreeMap<String, usize> = BTreeMap::new();
    let mut tables = Vec::new();
    for (name, bytes) in files {
        let Some(stem) = name.strip_suffix(".csv") else { continue };
        if stem.starts_with('_') {
            continue;
        }
        let mut table = AnnotatorTable::from_csv_bytes(stem, bytes)?;
        let id_col = table.columns.iter().position(|c| c == SAMPLE_ID).unwrap_or(0);
        let flip = flips.get(stem).copied().unwrap_or(0.0);
        table.columns.push("label".into());
        for row in &mut table.rows {
            let t = match truth.get(&row[id_col]) {
                Some(&t) => t,
                None => {
                    let t = planted.truth();
                    truth.insert(row[id_col].clone(), t);
                    t
                }
            };
            let class = planted.report(t, flip);
            row.push(planted.label(class).to_owned());
        }
        tables.push(table);
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::AnnotationFrame;

    #[test]
    fn flips_never_report_truth() {
        let mut p = Planted::new(&["x", "y", "z"], 3);
        for _ in 0..200 {
            let t = p.truth();
            assert_ne!(p.report(t, 1.0), t);
            assert_eq!(p.report(t, 0.0), t);
        }
    }

    #[test]
    fn crossed_frame_shape() {
        let csv = crossed_csv(50, &[0.1, 0.5], &["x", "y"], 1);
        let f = AnnotationFrame::from_csv_bytes(&csv, false).unwrap();
        assert_eq!(f.n_rows(), 50);
        assert_eq!(f.infer_annotators(), ["a1", "a2"]);
        assert_eq!(csv, crossed_csv(50, &[0.1, 0.5], &["x", "y"], 1));
    }
}
