use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{floor, SolvedResources};
use crate::error::{Error, Result};
use crate::frame::{reannotation_column, AnnotationFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributeOptions {
    /// Annotator `i` shares a block with `i+1, …, i+ring_span` (mod n).
    pub ring_span: usize,
    /// Permute the input rows with the seed before assigning blocks.
    pub shuffle: bool,
}

impl Default for DistributeOptions {
    fn default() -> Self {
        Self { ring_span: 1, shuffle: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleAssignment {
    pub sample_id: String,
    pub partner: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorAssignment {
    pub annotator: String,
    pub single_ids: Vec<String>,
    pub double_ids: Vec<DoubleAssignment>,
    /// Subset of this annotator's ids that they label a second time.
    pub reannotate_ids: Vec<String>,
}

impl AnnotatorAssignment {
    fn new(annotator: &str) -> Self {
        Self {
            annotator: annotator.to_owned(),
            single_ids: Vec::new(),
            double_ids: Vec::new(),
            reannotate_ids: Vec::new(),
        }
    }

    /// Every distinct id assigned to this annotator.
    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.single_ids
            .iter()
            .map(String::as_str)
            .chain(self.double_ids.iter().map(|d| d.sample_id.as_str()))
    }

    pub fn load(&self) -> usize {
        self.single_ids.len() + self.double_ids.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub assignments: Vec<AnnotatorAssignment>,
    pub leftover_ids: Vec<String>,
    pub seed: u64,
}

impl Allocation {
    pub fn annotators(&self) -> impl Iterator<Item = &str> + '_ {
        self.assignments.iter().map(|a| a.annotator.as_str())
    }

    pub fn assignment(&self, annotator: &str) -> Option<&AnnotatorAssignment> {
        self.assignments.iter().find(|a| a.annotator == annotator)
    }

    /// `(sample, annotator, is_reannotation)` for every annotation the
    /// allocation asks for.
    pub fn triples(&self) -> BTreeSet<(String, String, bool)> {
        let mut out = BTreeSet::new();
        for a in &self.assignments {
            for id in a.ids() {
                out.insert((id.to_owned(), a.annotator.clone(), false));
            }
            for id in &a.reannotate_ids {
                out.insert((id.clone(), a.annotator.clone(), true));
            }
        }
        out
    }

    /// Reads back the allocation implied by a compiled frame: who labelled
    /// which sample, and which of those were labelled twice. Rows nobody
    /// labelled become leftover.
    pub fn from_compiled<S: AsRef<str>>(frame: &AnnotationFrame, annotators: &[S], seed: u64) -> Result<Self> {
        let cols: Vec<(usize, Option<usize>)> = annotators
            .iter()
            .map(|a| {
                let a = a.as_ref();
                Ok((frame.require_column(a)?, frame.column_index(&reannotation_column(a))))
            })
            .collect::<Result<_>>()?;
        let mut assignments: Vec<AnnotatorAssignment> =
            annotators.iter().map(|a| AnnotatorAssignment::new(a.as_ref())).collect();
        let mut leftover_ids = Vec::new();
        for row in 0..frame.n_rows() {
            let id = frame.sample_id(row);
            let who: Vec<usize> = cols
                .iter()
                .enumerate()
                .filter(|(_, (c, _))| frame.cell(row, *c).is_some())
                .map(|(i, _)| i)
                .collect();
            if who.is_empty() {
                leftover_ids.push(id.to_owned());
            }
            for &i in &who {
                if who.len() == 2 {
                    let partner = if who[0] == i { who[1] } else { who[0] };
                    let partner = assignments[partner].annotator.clone();
                    assignments[i].double_ids.push(DoubleAssignment { sample_id: id.to_owned(), partner });
                } else {
                    assignments[i].single_ids.push(id.to_owned());
                }
                if let Some(re) = cols[i].1 {
                    if frame.cell(row, re).is_some() {
                        assignments[i].reannotate_ids.push(id.to_owned());
                    }
                }
            }
        }
        Ok(Self { assignments, leftover_ids, seed })
    }
}

/// Block sizes implied by a plan: per-pair double block and per-annotator singles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BlockSizes {
    pub pair_block: usize,
    pub singles: usize,
    pub reannotations: usize,
}

pub(crate) fn block_sizes(plan: &SolvedResources, ring_span: usize) -> BlockSizes {
    let m = plan.per_annotator_load;
    let k = ring_span as f64;
    let pair_block = floor(plan.double * m as f64 / (2.0 * k));
    // Distinct-sample contribution per annotator is floored once so the union
    // never exceeds N; the annotator's load stays within m.
    let distinct_share = floor(plan.per_annotator_load_exact * (1.0 - plan.double / 2.0));
    let singles = distinct_share.saturating_sub(ring_span * pair_block);
    BlockSizes { pair_block, singles, reannotations: floor(plan.re * m as f64) }
}

/// Ring pairs `(i, i+j mod n)` for `j = 1..=span`, with repeated pairs merged
/// into a multiplicity.
fn ring_pairs(n: usize, span: usize) -> Vec<((usize, usize), usize)> {
    let mut pairs: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for j in 1..=span {
        for i in 0..n {
            let k = (i + j) % n;
            let key = (i.min(k), i.max(k));
            *pairs.entry(key).or_default() += 1;
        }
    }
    // keep first-seen order: by j, then i
    let mut order: Vec<((usize, usize), usize)> = Vec::new();
    for j in 1..=span {
        for i in 0..n {
            let k = (i + j) % n;
            let key = (i.min(k), i.max(k));
            if let Some(mult) = pairs.remove(&key) {
                order.push((key, mult));
            }
        }
    }
    order
}

/// Assigns samples to annotators.
///
/// Annotators sit on a ring and each adjacent pair shares a block of
/// double-annotated samples; each annotator then receives single samples, and
/// a seeded uniform subset of their ids is flagged for re-annotation. Rows
/// left over go to the leftover pool. Returns the allocation together with
/// human-readable warnings.
pub fn distribute<S: AsRef<str>>(
    frame: &AnnotationFrame,
    annotators: &[S],
    plan: &SolvedResources,
    seed: u64,
    options: DistributeOptions,
) -> Result<(Allocation, Vec<String>)> {
    let n = annotators.len();
    if n < 2 {
        return Err(Error::InvalidConfig(format!("distribution needs at least 2 annotators, got {n}")));
    }
    if n != plan.annotators {
        return Err(Error::InvalidConfig(format!(
            "{n} annotator names given for a plan of {} annotators",
            plan.annotators
        )));
    }
    let span = options.ring_span;
    if span == 0 || span >= n {
        return Err(Error::InvalidConfig(format!("ring span must be in 1..{n}, got {span}")));
    }
    let mut warnings = Vec::new();
    let sizes = block_sizes(plan, span);
    let pairs = ring_pairs(n, span);
    if pairs.len() < n * span && sizes.pair_block > 0 {
        warnings.push(format!(
            "ring of {n} annotators with span {span} repeats pairs; their double blocks are merged"
        ));
    }
    let needed = n * sizes.singles + n * span * sizes.pair_block;
    if frame.n_rows() < needed {
        return Err(Error::InsufficientSamples { needed, available: frame.n_rows() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..frame.n_rows()).collect();
    if options.shuffle {
        order.shuffle(&mut rng);
    }
    let mut next = order.iter().map(|&r| frame.sample_id(r).to_owned());

    let mut assignments: Vec<AnnotatorAssignment> =
        annotators.iter().map(|a| AnnotatorAssignment::new(a.as_ref())).collect();
    for ((a, b), mult) in pairs {
        for _ in 0..sizes.pair_block * mult {
            let id = next.next().expect("row count checked");
            let (name_a, name_b) = (assignments[a].annotator.clone(), assignments[b].annotator.clone());
            assignments[a].double_ids.push(DoubleAssignment { sample_id: id.clone(), partner: name_b });
            assignments[b].double_ids.push(DoubleAssignment { sample_id: id, partner: name_a });
        }
    }
    for a in assignments.iter_mut() {
        a.single_ids.extend(next.by_ref().take(sizes.singles));
    }
    let leftover_ids: Vec<String> = next.collect();

    let position: HashMap<&str, usize> =
        frame.sample_ids().enumerate().map(|(i, s)| (s, i)).collect();
    for a in assignments.iter_mut() {
        let mut ids: Vec<&str> = a.ids().collect();
        ids.sort_by_key(|id| position[id]);
        let k = sizes.reannotations.min(ids.len());
        let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, ids.len(), k).into_vec();
        picked.sort_unstable();
        a.reannotate_ids = picked.into_iter().map(|i| ids[i].to_owned()).collect();
    }

    Ok((Allocation { assignments, leftover_ids, seed }, warnings))
}
