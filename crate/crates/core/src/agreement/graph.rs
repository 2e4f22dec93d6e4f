use serde::{Deserialize, Serialize};

use super::metrics::{pairwise_agreement, AgreementMetric, Score};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::labels::AnnotationLabels;
use crate::mapping::SoftLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementConfig {
    pub metric: AgreementMetric,
    /// Minimum number of co-annotated samples before an edge is computed.
    pub overlap_threshold: usize,
}

impl Default for AgreementConfig {
    fn default() -> Self {
        Self { metric: AgreementMetric::default(), overlap_threshold: 15 }
    }
}

impl AgreementConfig {
    /// Threshold actually applied: never below what the metric needs.
    pub fn effective_threshold(&self) -> usize {
        self.overlap_threshold.max(self.metric.min_items())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub intra: Option<f64>,
    pub reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub agreement: f64,
    pub overlap: usize,
}

/// Annotators as nodes, pairwise agreement as undirected weighted edges.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnotatorGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl AnnotatorGraph {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn edge(&self, a: &str, b: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    /// Agreement between two annotators; for `a == b` the intra-annotator value.
    pub fn agreement(&self, a: &str, b: &str) -> Option<f64> {
        if a == b {
            self.node(a).and_then(|n| n.intra)
        } else {
            self.edge(a, b).map(|e| e.agreement)
        }
    }

    /// `(neighbour index, agreement)` lists per node, in node order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            if let (Some(i), Some(j)) = (self.node_index(&e.a), self.node_index(&e.b)) {
                adj[i].push((j, e.agreement));
                adj[j].push((i, e.agreement));
            }
        }
        adj
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_metric(labels: &AnnotationLabels, metric: AgreementMetric) -> Result<()> {
    if labels.multi_label && !metric.uses_prob_labels() {
        return Err(Error::IncompatibleMetric {
            metric: metric.name().into(),
            reason: "multi-label annotations".into(),
        });
    }
    Ok(())
}

/// Agreement between an annotator's first pass and their `re_` pass. `None`
/// when fewer than the effective threshold of samples were labelled twice.
pub fn intra_agreement(labels: &AnnotationLabels, annotator: &str, config: &AgreementConfig) -> Result<Option<Score>> {
    check_metric(labels, config.metric)?;
    let i = labels.annotator_index(annotator).ok_or_else(|| Error::UnknownAnnotator(annotator.to_owned()))?;
    intra_for(labels, i, config)
}

fn intra_for(labels: &AnnotationLabels, i: usize, config: &AgreementConfig) -> Result<Option<Score>> {
    let Some(second) = &labels.second[i] else {
        return Ok(None);
    };
    let (a, b): (Vec<&SoftLabel>, Vec<&SoftLabel>) = labels.first[i]
        .iter()
        .zip(second)
        .filter_map(|(x, y)| Some((x.as_ref()?, y.as_ref()?)))
        .unzip();
    if a.len() < config.effective_threshold() {
        return Ok(None);
    }
    pairwise_agreement(&a, &b, config.metric).map(Some)
}

fn shared(labels: &AnnotationLabels, i: usize, j: usize) -> (Vec<&SoftLabel>, Vec<&SoftLabel>) {
    labels.first[i]
        .iter()
        .zip(&labels.first[j])
        .filter_map(|(x, y)| Some((x.as_ref()?, y.as_ref()?)))
        .unzip()
}

/// Builds the annotator graph: an edge for every pair with at least the
/// threshold of co-annotated samples, intra-agreement on each node, and every
/// reliability set to 1.
pub fn build_graph(labels: &AnnotationLabels, config: &AgreementConfig, exec: Execution) -> Result<AnnotatorGraph> {
    check_metric(labels, config.metric)?;
    let n = labels.annotators.len();
    let threshold = config.effective_threshold();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();

    let edge_results = exec.map(&pairs, |&(i, j)| -> Result<Option<(Edge, bool)>> {
        let (a, b) = shared(labels, i, j);
        if a.len() < threshold {
            return Ok(None);
        }
        let score = pairwise_agreement(&a, &b, config.metric)?;
        Ok(Some((
            Edge {
                a: labels.annotators[i].clone(),
                b: labels.annotators[j].clone(),
                agreement: score.value,
                overlap: a.len(),
            },
            score.degenerate,
        )))
    });
    let intra_results = exec.map_range(n, |i| intra_for(labels, i, config));

    let mut warnings = Vec::new();
    let mut edges = Vec::new();
    for r in edge_results {
        if let Some((edge, degenerate)) = r? {
            if degenerate {
                warnings.push(format!(
                    "{} vs {}: constant labels, agreement set to {}",
                    edge.a, edge.b, edge.agreement
                ));
            }
            edges.push(edge);
        }
    }
    let mut nodes = Vec::with_capacity(n);
    for (i, r) in intra_results.into_iter().enumerate() {
        let score = r?;
        if score.is_some_and(|s| s.degenerate) {
            warnings.push(format!("{}: constant labels in both passes", labels.annotators[i]));
        }
        nodes.push(Node { id: labels.annotators[i].clone(), intra: score.map(|s| s.value), reliability: 1.0 });
    }
    for node in &nodes {
        if !edges.iter().any(|e| e.a == node.id || e.b == node.id) {
            warnings.push(format!("{} has no agreement edges (overlap below {threshold})", node.id));
        }
    }
    Ok(AnnotatorGraph { nodes, edges, warnings })
}
