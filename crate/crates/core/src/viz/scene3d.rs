use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::agreement_color;
use crate::agreement::AnnotatorGraph;

pub const SCENE_SCHEMA: &str = "annorel.scene3d";
pub const SCENE_VERSION: u32 = 1;
const RING_RADIUS: f64 = 10.0;
const Z_SCALE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneNode {
    pub id: String,
    pub position: [f64; 3],
    pub reliability: f64,
    pub intra: Option<f64>,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEdge {
    pub source: String,
    pub target: String,
    pub agreement: f64,
    pub overlap: usize,
    pub color: String,
}

/// 3D scene for the interactive graph view; see `schemas/scene3d.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene3d {
    pub schema: String,
    pub version: u32,
    pub color_range: [f64; 2],
    pub nodes: Vec<SceneNode>,
    pub edges: Vec<SceneEdge>,
}

/// Nodes sit on a ring in the xy plane, lifted along z by how far their
/// reliability is from the mean of 1.
pub fn export_graph_3d(graph: &AnnotatorGraph) -> Scene3d {
    let n = graph.nodes.len().max(1) as f64;
    let nodes = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let angle = 2.0 * PI * i as f64 / n;
            SceneNode {
                id: node.id.clone(),
                position: [RING_RADIUS * angle.cos(), RING_RADIUS * angle.sin(), Z_SCALE * (node.reliability - 1.0)],
                reliability: node.reliability,
                intra: node.intra,
                color: node.intra.map_or_else(|| "#ffffff".to_owned(), agreement_color),
            }
        })
        .collect();
    let edges = graph
        .edges
        .iter()
        .map(|e| SceneEdge {
            source: e.a.clone(),
            target: e.b.clone(),
            agreement: e.agreement,
            overlap: e.overlap,
            color: agreement_color(e.agreement),
        })
        .collect();
    Scene3d { schema: SCENE_SCHEMA.to_owned(), version: SCENE_VERSION, color_range: [-1.0, 1.0], nodes, edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agreement::{Edge, Node};

    #[test]
    fn counts_and_lift() {
        let g = AnnotatorGraph {
            nodes: vec![
                Node { id: "a1".into(), intra: None, reliability: 1.5 },
                Node { id: "a2".into(), intra: Some(0.2), reliability: 0.5 },
            ],
            edges: vec![Edge { a: "a1".into(), b: "a2".into(), agreement: 0.3, overlap: 20 }],
            warnings: vec![],
        };
        let s = export_graph_3d(&g);
        assert_eq!((s.nodes.len(), s.edges.len()), (2, 1));
        assert_eq!(s.nodes[0].position[2], 2.5);
        assert_eq!(s.nodes[1].position[2], -2.5);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["schema"], "annorel.scene3d");
        assert_eq!(v["version"], 1);
    }
}
