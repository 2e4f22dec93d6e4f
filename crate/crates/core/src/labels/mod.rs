//! Label generation.
//!
//! A [`LabelGenerator`] turns one raw annotation cell into a probability
//! label. Everything else here is shared: per-annotation labels for every
//! annotator (and their `re_` pass), per-sample soft labels aggregated with
//! optional reliability weights, and hard labels.

mod generators;

pub use generators::{
    DefaultLabelGenerator, EffiLabelGenerator, Generator, GeneratorSpec, GeneratorVariant, OrdinalLabelGenerator,
    TopicLabelGenerator,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frame::{prob_column, reannotation_column, AnnotationFrame, SAMPLE_HARD, SAMPLE_PROB};
use crate::mapping::{argmax, LabelMapping, SoftLabel};

/// Why a single cell could not be encoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellError {
    Unmapped(String),
    TooManyChoices,
}

pub trait LabelGenerator: Send + Sync {
    fn mapping(&self) -> &LabelMapping;

    /// Probability label for one raw annotation cell.
    fn annotation_prob(&self, raw: &str) -> Result<SoftLabel, CellError>;

    /// Multi-label generators produce independent per-class indicators
    /// rather than a distribution.
    fn is_multi_label(&self) -> bool {
        false
    }

    fn is_ordinal(&self) -> bool {
        false
    }

    fn topic_threshold(&self) -> Option<f64> {
        None
    }

    fn num_classes(&self) -> usize {
        self.mapping().num_classes()
    }
}

/// Per-annotation probability labels, indexed `[annotator][row]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationLabels {
    pub annotators: Vec<String>,
    pub sample_ids: Vec<String>,
    pub num_classes: usize,
    pub multi_label: bool,
    /// First pass, from the `<annotator>` column.
    pub first: Vec<Vec<Option<SoftLabel>>>,
    /// Second pass, from `re_<annotator>`. `None` when the column is absent.
    pub second: Vec<Option<Vec<Option<SoftLabel>>>>,
}

impl AnnotationLabels {
    pub fn n_rows(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn annotator_index(&self, name: &str) -> Option<usize> {
        self.annotators.iter().position(|a| a == name)
    }

    pub fn second_pass(&self, annotator: usize, row: usize) -> Option<&SoftLabel> {
        self.second[annotator].as_ref().and_then(|col| col[row].as_ref())
    }

    /// The annotator's label for a row, averaging the two passes when both exist.
    pub fn combined(&self, annotator: usize, row: usize) -> Option<SoftLabel> {
        match (self.first[annotator][row].as_ref(), self.second_pass(annotator, row)) {
            (Some(a), Some(b)) => Some(SoftLabel(a.0.iter().zip(&b.0).map(|(x, y)| (x + y) / 2.0).collect())),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        }
    }

    /// Drops one annotator's labels.
    pub fn without(&self, annotator: &str) -> Self {
        let keep: Vec<usize> = (0..self.annotators.len()).filter(|&i| self.annotators[i] != annotator).collect();
        Self {
            annotators: keep.iter().map(|&i| self.annotators[i].clone()).collect(),
            sample_ids: self.sample_ids.clone(),
            num_classes: self.num_classes,
            multi_label: self.multi_label,
            first: keep.iter().map(|&i| self.first[i].clone()).collect(),
            second: keep.iter().map(|&i| self.second[i].clone()).collect(),
        }
    }
}

fn encode_column<G: LabelGenerator + ?Sized>(
    frame: &AnnotationFrame,
    col: usize,
    generator: &G,
    exec: Execution,
) -> Result<Vec<Option<SoftLabel>>> {
    let name = &frame.columns()[col];
    exec.try_map_range(frame.n_rows(), |row| {
        frame
            .cell(row, col)
            .map(|raw| {
                generator.annotation_prob(raw).map_err(|e| match e {
                    CellError::Unmapped(raw) => Error::UnmappedValue { raw, row, column: name.clone() },
                    CellError::TooManyChoices => Error::TooManyChoices { raw: raw.to_owned(), row },
                })
            })
            .transpose()
    })
}

/// Encodes every annotator column and its `re_` column.
pub fn annotation_prob_labels<G, S>(
    frame: &AnnotationFrame,
    annotators: &[S],
    generator: &G,
    exec: Execution,
) -> Result<AnnotationLabels>
where
    G: LabelGenerator + ?Sized,
    S: AsRef<str>,
{
    let mut first = Vec::with_capacity(annotators.len());
    let mut second = Vec::with_capacity(annotators.len());
    for a in annotators {
        let a = a.as_ref();
        first.push(encode_column(frame, frame.require_column(a)?, generator, exec)?);
        second.push(match frame.column_index(&reannotation_column(a)) {
            Some(col) => Some(encode_column(frame, col, generator, exec)?),
            None => None,
        });
    }
    Ok(AnnotationLabels {
        annotators: annotators.iter().map(|a| a.as_ref().to_owned()).collect(),
        sample_ids: frame.sample_ids().map(str::to_owned).collect(),
        num_classes: generator.num_classes(),
        multi_label: generator.is_multi_label(),
        first,
        second,
    })
}

fn weights(labels: &AnnotationLabels, reliabilities: Option<&BTreeMap<String, f64>>) -> Result<Vec<f64>> {
    labels
        .annotators
        .iter()
        .map(|a| match reliabilities {
            None => Ok(1.0),
            Some(map) => map
                .get(a)
                .map(|&r| r.max(0.0))
                .ok_or_else(|| Error::UnknownAnnotator(a.clone())),
        })
        .collect()
}

/// Per-sample soft labels: the weighted mean of each annotator's label, with
/// weight `max(reliability, 0)` (1 for everyone when no reliabilities are given).
/// An annotator who labelled a sample twice contributes the mean of both passes.
pub fn sample_prob_labels(
    labels: &AnnotationLabels,
    reliabilities: Option<&BTreeMap<String, f64>>,
    exec: Execution,
) -> Result<Vec<SoftLabel>> {
    let w = weights(labels, reliabilities)?;
    exec.try_map_range(labels.n_rows(), |row| {
        let mut acc = vec![0.0; labels.num_classes];
        let mut total = 0.0;
        let mut seen = false;
        for (a, &wa) in w.iter().enumerate() {
            if let Some(p) = labels.combined(a, row) {
                seen = true;
                total += wa;
                for (x, y) in acc.iter_mut().zip(&p.0) {
                    *x += wa * y;
                }
            }
        }
        if !seen {
            return Err(Error::NoAnnotations(labels.sample_ids[row].clone()));
        }
        if total <= 0.0 {
            return Err(Error::AllZeroWeights(labels.sample_ids[row].clone()));
        }
        Ok(SoftLabel(acc.into_iter().map(|x| x / total).collect()))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HardLabel {
    Class(usize),
    Set(Vec<usize>),
}

impl HardLabel {
    /// Raw-label text for a CSV cell; sets are joined with `;`.
    pub fn to_cell(&self, mapping: &LabelMapping) -> Option<String> {
        let name = |i: usize| mapping.label(i).unwrap_or_default().to_owned();
        match self {
            HardLabel::Class(i) => Some(name(*i)),
            HardLabel::Set(s) if s.is_empty() => None,
            HardLabel::Set(s) => Some(s.iter().map(|&i| name(i)).collect::<Vec<_>>().join(";")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardMode {
    /// Largest entry of the sample soft label.
    #[default]
    Argmax,
    /// Most common per-annotator hard label.
    Majority,
}

impl std::str::FromStr for HardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "argmax" => Ok(Self::Argmax),
            "majority" => Ok(Self::Majority),
            other => Err(Error::InvalidConfig(format!("unknown hard-label mode {other:?}"))),
        }
    }
}

fn threshold_set(p: &[f64], tau: f64) -> HardLabel {
    HardLabel::Set(p.iter().enumerate().filter(|(_, &x)| x >= tau).map(|(i, _)| i).collect())
}

/// Hard labels, ties going to the lowest class index.
///
/// Argmax mode reads `sample_probs`. Majority mode counts one vote per
/// annotator (the argmax of their label). Multi-label generators return the
/// set of classes at or above the topic threshold; in majority mode that is
/// applied to the unweighted mean.
pub fn sample_hard_labels<G: LabelGenerator + ?Sized>(
    labels: &AnnotationLabels,
    sample_probs: Option<&[SoftLabel]>,
    generator: &G,
    mode: HardMode,
    exec: Execution,
) -> Result<Vec<HardLabel>> {
    if let Some(probs) = sample_probs {
        if probs.len() != labels.n_rows() {
            return Err(Error::InvalidConfig("sample labels do not match the frame".into()));
        }
    }
    match (mode, sample_probs) {
        (HardMode::Argmax, None) => Err(Error::InvalidConfig("argmax hard labels need sample soft labels".into())),
        (HardMode::Argmax, Some(probs)) => Ok(match generator.topic_threshold() {
            Some(tau) => probs.iter().map(|p| threshold_set(&p.0, tau)).collect(),
            None => probs.iter().map(|p| HardLabel::Class(p.argmax())).collect(),
        }),
        (HardMode::Majority, _) => {
            if let Some(tau) = generator.topic_threshold() {
                let mean = sample_prob_labels(labels, None, exec)?;
                return Ok(mean.iter().map(|p| threshold_set(&p.0, tau)).collect());
            }
            exec.try_map_range(labels.n_rows(), |row| {
                let mut votes = vec![0.0; labels.num_classes];
                let mut any = false;
                for a in 0..labels.annotators.len() {
                    if let Some(p) = labels.combined(a, row) {
                        votes[p.argmax()] += 1.0;
                        any = true;
                    }
                }
                if !any {
                    return Err(Error::NoAnnotations(labels.sample_ids[row].clone()));
                }
                Ok(HardLabel::Class(argmax(&votes)))
            })
        }
    }
}

/// Writes `<annotator>_prob` and `re_<annotator>_prob` columns.
pub fn add_annotation_prob_labels(frame: &mut AnnotationFrame, labels: &AnnotationLabels) -> Result<()> {
    let cells = |col: &[Option<SoftLabel>]| col.iter().map(|p| p.as_ref().map(SoftLabel::to_cell)).collect();
    for (a, name) in labels.annotators.iter().enumerate() {
        frame.set_column(&prob_column(name), cells(&labels.first[a]))?;
        if let Some(second) = &labels.second[a] {
            frame.set_column(&prob_column(&reannotation_column(name)), cells(second))?;
        }
    }
    Ok(())
}

pub fn add_sample_prob_labels(frame: &mut AnnotationFrame, probs: &[SoftLabel]) -> Result<()> {
    frame.set_column(SAMPLE_PROB, probs.iter().map(|p| Some(p.to_cell())).collect())
}

pub fn add_sample_hard_labels(frame: &mut AnnotationFrame, hard: &[HardLabel], mapping: &LabelMapping) -> Result<()> {
    frame.set_column(SAMPLE_HARD, hard.iter().map(|h| h.to_cell(mapping)).collect())
}
