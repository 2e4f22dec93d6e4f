use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::allocate::{Allocation, AnnotatorAssignment};
use crate::error::{Error, Result};
use crate::frame::{reannotation_column, AnnotationFrame};
use crate::mapping::split_choices;

/// Which samples of a compiled frame receive an additional annotator.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    #[default]
    All,
    /// Samples whose annotators gave more than one distinct raw label.
    Disagreement,
    Ids(Vec<String>),
}

/// Assigns one extra annotator to each target sample.
///
/// Targets are visited in a seeded order; a cursor cycles through the
/// annotator list and skips anyone who already labelled the sample or has
/// reached `capacity`. Fails with [`Error::Infeasible`] listing every sample
/// that could not be placed, in frame order.
pub fn redistribute<S: AsRef<str>>(
    compiled: &AnnotationFrame,
    annotators: &[S],
    capacity: usize,
    seed: u64,
    targets: &Targets,
) -> Result<Allocation> {
    let n = annotators.len();
    if n == 0 {
        return Err(Error::InvalidConfig("redistribution needs at least one annotator".into()));
    }
    let cols: Vec<(usize, Option<usize>)> = annotators
        .iter()
        .map(|a| {
            let a = a.as_ref();
            Ok((compiled.require_column(a)?, compiled.column_index(&reannotation_column(a))))
        })
        .collect::<Result<_>>()?;
    let prior = |row: usize, a: usize| {
        let (c, re) = cols[a];
        compiled.cell(row, c).is_some() || re.is_some_and(|re| compiled.cell(row, re).is_some())
    };

    let mut target_rows: Vec<usize> = match targets {
        Targets::All => (0..compiled.n_rows()).collect(),
        Targets::Disagreement => (0..compiled.n_rows())
            .filter(|&row| {
                let labels: BTreeSet<String> = cols
                    .iter()
                    .filter_map(|&(c, _)| compiled.cell(row, c))
                    .map(|cell| split_choices(cell).collect::<Vec<_>>().join(";"))
                    .collect();
                labels.len() > 1
            })
            .collect(),
        Targets::Ids(ids) => {
            let index = compiled.row_index();
            let mut rows = Vec::with_capacity(ids.len());
            for id in ids {
                let row = index
                    .get(id.as_str())
                    .ok_or_else(|| Error::InvalidConfig(format!("target sample {id:?} not in frame")))?;
                rows.push(*row);
            }
            rows.sort_unstable();
            rows.dedup();
            rows
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    target_rows.shuffle(&mut rng);

    let mut assignments: Vec<AnnotatorAssignment> = annotators
        .iter()
        .map(|a| AnnotatorAssignment {
            annotator: a.as_ref().to_owned(),
            single_ids: Vec::new(),
            double_ids: Vec::new(),
            reannotate_ids: Vec::new(),
        })
        .collect();
    let mut assigned_rows = vec![false; compiled.n_rows()];
    let mut stuck_rows = Vec::new();
    let mut cursor = 0;
    for row in target_rows {
        let pick = (0..n)
            .map(|step| (cursor + step) % n)
            .find(|&a| !prior(row, a) && assignments[a].single_ids.len() < capacity);
        match pick {
            Some(a) => {
                assignments[a].single_ids.push(compiled.sample_id(row).to_owned());
                assigned_rows[row] = true;
                cursor = (a + 1) % n;
            }
            None => stuck_rows.push(row),
        }
    }
    if !stuck_rows.is_empty() {
        stuck_rows.sort_unstable();
        return Err(Error::Infeasible {
            stuck: stuck_rows.into_iter().map(|r| compiled.sample_id(r).to_owned()).collect(),
        });
    }

    // keep each annotator's list in frame order
    let index = compiled.row_index();
    for a in assignments.iter_mut() {
        a.single_ids.sort_by_key(|id| index[id.as_str()]);
    }
    let leftover_ids = (0..compiled.n_rows())
        .filter(|&r| !assigned_rows[r])
        .map(|r| compiled.sample_id(r).to_owned())
        .collect();
    Ok(Allocation { assignments, leftover_ids, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(csv: &str) -> AnnotationFrame {
        AnnotationFrame::from_csv_bytes(csv.as_bytes(), false).unwrap()
    }

    #[test]
    fn next_in_cycle() {
        let f = frame("sample_id,a1,a2,a3\ns1,x,,\n");
        let alloc = redistribute(&f, &["a1", "a2", "a3"], 10, 0, &Targets::All).unwrap();
        assert_eq!(alloc.assignment("a2").unwrap().single_ids, vec!["s1"]);
    }

    #[test]
    fn fully_annotated_sample_is_stuck() {
        let f = frame("sample_id,a1,a2,a3\ns1,x,y,x\ns2,x,,\n");
        match redistribute(&f, &["a1", "a2", "a3"], 10, 0, &Targets::All) {
            Err(Error::Infeasible { stuck }) => assert_eq!(stuck, vec!["s1"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reannotation_counts_as_prior() {
        let f = frame("sample_id,a1,a2,re_a2\ns1,x,y,y\n");
        assert!(matches!(
            redistribute(&f, &["a1", "a2"], 10, 0, &Targets::All),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn capacity_exhaustion() {
        let f = frame("sample_id,a1,a2,a3\ns1,x,,\ns2,x,,\ns3,x,,\n");
        match redistribute(&f, &["a1", "a2", "a3"], 1, 4, &Targets::All) {
            Err(Error::Infeasible { stuck }) => assert_eq!(stuck.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn disagreement_targets() {
        let f = frame("sample_id,a1,a2,a3\ns1,x,x,\ns2,x,y,\ns3,,y,\n");
        let alloc = redistribute(&f, &["a1", "a2", "a3"], 10, 0, &Targets::Disagreement).unwrap();
        assert_eq!(alloc.assignment("a3").unwrap().single_ids, vec!["s2"]);
        assert_eq!(alloc.leftover_ids, vec!["s1", "s3"]);
    }
}
