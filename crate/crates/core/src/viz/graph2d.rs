use std::f64::consts::PI;
use std::fmt::Write;

use super::{agreement_color, escape};
use crate::agreement::AnnotatorGraph;

const SIZE: f64 = 640.0;
const RADIUS: f64 = 220.0;
const NODE_RADIUS: f64 = 26.0;

fn position(i: usize, n: usize, radius: f64) -> (f64, f64) {
    let angle = 2.0 * PI * i as f64 / n.max(1) as f64 - PI / 2.0;
    (SIZE / 2.0 + radius * angle.cos(), SIZE / 2.0 + radius * angle.sin())
}

/// Circular layout in node order. Each edge carries its agreement to two
/// decimals; the intra-annotator value sits just outside its node and the
/// reliability is part of the node caption.
pub fn export_graph_2d(graph: &AnnotatorGraph) -> String {
    let n = graph.nodes.len();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for e in &graph.edges {
        let (Some(i), Some(j)) = (graph.node_index(&e.a), graph.node_index(&e.b)) else { continue };
        let (x1, y1) = position(i, n, RADIUS);
        let (x2, y2) = position(j, n, RADIUS);
        let width = 1.0 + 4.0 * e.agreement.abs().min(1.0);
        let _ = writeln!(
            svg,
            r#"<line class="edge" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{}" stroke-width="{width:.2}"/>"#,
            agreement_color(e.agreement)
        );
        let (mx, my) = ((x1 + x2) / 2.0, (y1 + y2) / 2.0);
        let _ = writeln!(
            svg,
            r#"<text class="edge-label" x="{mx:.2}" y="{my:.2}" text-anchor="middle" fill="black">{:.2}</text>"#,
            e.agreement
        );
    }

    for (i, node) in graph.nodes.iter().enumerate() {
        let (x, y) = position(i, n, RADIUS);
        let fill = node.intra.map_or_else(|| "#ffffff".to_owned(), agreement_color);
        let _ = writeln!(
            svg,
            r#"<circle class="node" cx="{x:.2}" cy="{y:.2}" r="{NODE_RADIUS}" fill="{fill}" stroke="black"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text class="node-label" x="{x:.2}" y="{:.2}" text-anchor="middle">{} (rel {:.2})</text>"#,
            y + 4.0,
            escape(&node.id),
            node.reliability
        );
        if let Some(intra) = node.intra {
            let (ox, oy) = position(i, n, RADIUS + NODE_RADIUS + 18.0);
            let _ = writeln!(
                svg,
                r#"<text class="intra" x="{ox:.2}" y="{oy:.2}" text-anchor="middle" font-style="italic">{intra:.2}</text>"#
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agreement::{Edge, Node};

    fn ring(n: usize, intra: bool) -> AnnotatorGraph {
        AnnotatorGraph {
            nodes: (0..n)
                .map(|i| Node { id: format!("a{}", i + 1), intra: intra.then_some(0.8), reliability: 1.0 })
                .collect(),
            edges: (0..n)
                .map(|i| Edge {
                    a: format!("a{}", i + 1),
                    b: format!("a{}", (i + 1) % n + 1),
                    agreement: 0.1 * i as f64,
                    overlap: 25,
                })
                .collect(),
            warnings: vec![],
        }
    }

    #[test]
    fn element_counts() {
        let svg = export_graph_2d(&ring(6, true));
        assert_eq!(svg.matches(r#"class="node""#).count(), 6);
        assert_eq!(svg.matches(r#"class="edge-label""#).count(), 6);
        assert_eq!(svg.matches(r#"class="intra""#).count(), 6);
        assert!(svg.contains(">0.50</text>"));
        assert!(svg.contains("a1 (rel 1.00)"));
    }

    #[test]
    fn absent_intra_and_single_edge() {
        let mut g = ring(2, false);
        g.edges.truncate(1);
        let svg = export_graph_2d(&g);
        assert_eq!(svg.matches(r#"class="edge-label""#).count(), 1);
        assert_eq!(svg.matches(r#"class="intra""#).count(), 0);
    }

    #[test]
    fn deterministic() {
        assert_eq!(export_graph_2d(&ring(5, true)), export_graph_2d(&ring(5, true)));
    }
}
