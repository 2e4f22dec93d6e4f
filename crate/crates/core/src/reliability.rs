//! Annotator reliability as a fixed point over the agreement graph.
//!
//! Each round, for every annotator `i` (Jacobi style, from the previous
//! round's values):
//!
//! ```text
//! inter_i = Σ_j rel_j · a_ij / Σ_j rel_j          over neighbours j
//! g_i     = α · intra_i + (1 − α) · inter_i       (α = 0 without intra data)
//! raw_i   = max(1 + g_i, 0)
//! rel_i   = raw_i · n / Σ_k raw_k                 (mean 1)
//! ```
//!
//! until the largest change drops below the tolerance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agreement::AnnotatorGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityConfig {
    /// Weight of intra-annotator agreement, in `[0, 1]`.
    pub alpha: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        Self { alpha: 0.5, tolerance: 1e-6, max_iterations: 100 }
    }
}

impl ReliabilityConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self { alpha, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("reliability alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub reliability: BTreeMap<String, f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Graph with the final reliabilities written into its nodes.
    #[serde(skip)]
    pub graph: AnnotatorGraph,
    /// Reliabilities after each round, in node order.
    #[serde(skip)]
    pub trajectory: Vec<Vec<f64>>,
}

impl ReliabilityReport {
    pub fn get_user_reliability(&self, annotator: &str) -> Result<f64> {
        self.reliability.get(annotator).copied().ok_or_else(|| Error::UnknownAnnotator(annotator.to_owned()))
    }

    pub fn reliability_dict(&self) -> &BTreeMap<String, f64> {
        &self.reliability
    }
}

/// Runs the fixed-point iteration from equal reliabilities.
pub fn compute_reliability(graph: &AnnotatorGraph, config: &ReliabilityConfig) -> Result<ReliabilityReport> {
    compute_reliability_from(graph, config, &vec![1.0; graph.nodes.len()])
}

/// Runs the fixed-point iteration from the given starting reliabilities
/// (non-negative, in node order).
pub fn compute_reliability_from(
    graph: &AnnotatorGraph,
    config: &ReliabilityConfig,
    initial: &[f64],
) -> Result<ReliabilityReport> {
    config.validate()?;
    let n = graph.nodes.len();
    if n < 2 {
        return Err(Error::TooFewAnnotators(n));
    }
    if initial.len() != n || initial.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidConfig("initial reliabilities must be n non-negative values".into()));
    }
    let adjacency = graph.adjacency();
    for (node, adj) in graph.nodes.iter().zip(&adjacency) {
        if adj.is_empty() && node.intra.is_none() {
            return Err(Error::NoSignal(node.id.clone()));
        }
    }

    let mut rel = initial.to_vec();
    let mut trajectory = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let raw: Vec<f64> = graph
            .nodes
            .iter()
            .zip(&adjacency)
            .map(|(node, adj)| {
                let inter = weighted_inter(adj, &rel);
                let g = match (node.intra, inter) {
                    (Some(intra), Some(inter)) => config.alpha * intra + (1.0 - config.alpha) * inter,
                    (Some(intra), None) => intra,
                    (None, Some(inter)) => inter,
                    (None, None) => unreachable!("checked above"),
                };
                (1.0 + g).max(0.0)
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let next: Vec<f64> = if total > 0.0 {
            raw.iter().map(|r| r * n as f64 / total).collect()
        } else {
            vec![1.0; n]
        };
        let delta = next.iter().zip(&rel).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rel = next;
        trajectory.push(rel.clone());
        if delta < config.tolerance {
            converged = true;
            break;
        }
    }

    let mut graph = graph.clone();
    for (node, &r) in graph.nodes.iter_mut().zip(&rel) {
        node.reliability = r;
    }
    if !converged {
        graph.warnings.push(format!("reliability did not converge within {} iterations", config.max_iterations));
    }
    Ok(ReliabilityReport {
        reliability: graph.nodes.iter().map(|n| (n.id.clone(), n.reliability)).collect(),
        iterations,
        converged,
        graph,
        trajectory,
    })
}

/// Reliability-weighted mean agreement with the neighbours; plain mean when
/// every neighbour has zero weight.
fn weighted_inter(adj: &[(usize, f64)], rel: &[f64]) -> Option<f64> {
    if adj.is_empty() {
        return None;
    }
    let weight: f64 = adj.iter().map(|&(j, _)| rel[j]).sum();
    assert!(weight >= 0.0, "reliabilities are non-negative");
    if weight > 0.0 {
        Some(adj.iter().map(|&(j, a)| rel[j] * a).sum::<f64>() / weight)
    } else {
        Some(adj.iter().map(|&(_, a)| a).sum::<f64>() / adj.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agreement::{Edge, Node};

    fn graph(n: usize, edges: &[(usize, usize, f64)], intra: &[Option<f64>]) -> AnnotatorGraph {
        AnnotatorGraph {
            nodes: (0..n)
                .map(|i| Node { id: format!("a{}", i + 1), intra: intra.get(i).copied().flatten(), reliability: 1.0 })
                .collect(),
            edges: edges
                .iter()
                .map(|&(i, j, a)| Edge { a: format!("a{}", i + 1), b: format!("a{}", j + 1), agreement: a, overlap: 50 })
                .collect(),
            warnings: vec![],
        }
    }

    #[test]
    fn symmetric_pair_is_one_step() {
        let g = graph(2, &[(0, 1, 0.6)], &[]);
        let r = compute_reliability(&g, &ReliabilityConfig::with_alpha(0.0)).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert_eq!(r.get_user_reliability("a1").unwrap(), 1.0);
        assert_eq!(r.get_user_reliability("a2").unwrap(), 1.0);
        assert!(r.get_user_reliability("a9").is_err());
    }

    #[test]
    fn hub_annotator_is_highest() {
        let g = graph(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 0.0)], &[]);
        let cfg = ReliabilityConfig { alpha: 0.0, tolerance: 1e-12, max_iterations: 1000 };
        let r = compute_reliability(&g, &cfg).unwrap();
        assert!(r.converged);
        let (a1, a2, a3) = (r.reliability["a1"], r.reliability["a2"], r.reliability["a3"]);
        assert!(a1 > a2 && a1 > a3);
        assert!((a2 - a3).abs() < 1e-12);
        // at the fixed point a2 = a3 = x with a1 + 2x = 3 and x / a1 = raw_2 / raw_1,
        // where raw_1 = 2 and raw_2 = 1 + a1 / (a1 + x)
        let x = a2;
        let a1_expected = 3.0 - 2.0 * x;
        assert!((a1 - a1_expected).abs() < 1e-9);
        let raw2 = 1.0 + a1 / (a1 + x);
        let raw1 = 2.0;
        assert!((x / a1 - raw2 / raw1).abs() < 1e-9);
    }

    #[test]
    fn mean_is_one_every_round() {
        let g = graph(4, &[(0, 1, 0.9), (1, 2, 0.3), (2, 3, 0.7), (3, 0, 0.1)], &[Some(0.8), None, Some(0.2), None]);
        let r = compute_reliability(&g, &ReliabilityConfig::default()).unwrap();
        for round in &r.trajectory {
            let mean = round.iter().sum::<f64>() / round.len() as f64;
            assert!((mean - 1.0).abs() < 1e-9);
        }
        let total: f64 = r.reliability_dict().values().sum();
        assert!((total - 4.0).abs() < 4e-9);
        assert_eq!(r.graph.nodes[0].reliability, r.reliability["a1"]);
    }

    #[test]
    fn intra_only_node_is_allowed() {
        let g = graph(3, &[(0, 1, 0.5)], &[None, None, Some(0.9)]);
        let r = compute_reliability(&g, &ReliabilityConfig::default()).unwrap();
        assert!(r.reliability["a3"] > r.reliability["a1"]);
    }

    #[test]
    fn errors() {
        let g = graph(3, &[(0, 1, 0.5)], &[]);
        assert!(matches!(compute_reliability(&g, &ReliabilityConfig::default()), Err(Error::NoSignal(id)) if id == "a3"));
        let g = graph(1, &[], &[Some(1.0)]);
        assert!(matches!(compute_reliability(&g, &ReliabilityConfig::default()), Err(Error::TooFewAnnotators(1))));
        let g = graph(2, &[(0, 1, 0.5)], &[]);
        assert!(compute_reliability(&g, &ReliabilityConfig::with_alpha(1.5)).is_err());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = graph(3, &[(0, 1, 0.9), (1, 2, 0.1), (0, 2, 0.5)], &[]);
        let cfg = ReliabilityConfig { alpha: 0.0, tolerance: 1e-300, max_iterations: 2 };
        let r = compute_reliability(&g, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
    }

    #[test]
    fn report_json() {
        let g = graph(2, &[(0, 1, 0.6)], &[]);
        let r = compute_reliability(&g, &ReliabilityConfig::with_alpha(0.0)).unwrap();
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"reliability":{"a1":1.0,"a2":1.0},"iterations":1,"converged":true}"#
        );
    }
}
