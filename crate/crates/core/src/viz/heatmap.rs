use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{agreement_color, escape};
use crate::agreement::AnnotatorGraph;
use crate::error::{Error, Result};

const CELL: f64 = 56.0;
const MARGIN: f64 = 90.0;

/// Heatmap data. `values[r][c]` is the agreement between `rows[r]` and
/// `columns[c]`; the intra value when they are the same annotator, `None`
/// where there is no edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

/// Node ids of `subset` (all nodes when `None`), ordered by descending
/// reliability with node order breaking ties.
fn ordered(graph: &AnnotatorGraph, subset: Option<&[String]>) -> Result<Vec<String>> {
    let mut idx: Vec<usize> = match subset {
        None => (0..graph.nodes.len()).collect(),
        Some(names) => {
            let mut out = Vec::new();
            for name in names {
                let i = graph.node_index(name).ok_or_else(|| Error::UnknownAnnotator(name.clone()))?;
                if !out.contains(&i) {
                    out.push(i);
                }
            }
            out
        }
    };
    idx.sort_by(|&a, &b| graph.nodes[b].reliability.total_cmp(&graph.nodes[a].reliability).then(a.cmp(&b)));
    Ok(idx.into_iter().map(|i| graph.nodes[i].id.clone()).collect())
}

/// Builds the matrix for `annotators` (rows) against `other_annotators`
/// (columns); each defaults to every annotator.
pub fn heatmap_matrix(
    graph: &AnnotatorGraph,
    annotators: Option<&[String]>,
    other_annotators: Option<&[String]>,
) -> Result<HeatmapMatrix> {
    let rows = ordered(graph, annotators)?;
    let columns = ordered(graph, other_annotators)?;
    let values = rows.iter().map(|r| columns.iter().map(|c| graph.agreement(r, c)).collect()).collect();
    Ok(HeatmapMatrix { rows, columns, values })
}

/// Renders the heatmap as SVG and returns it with the matrix it shows.
pub fn export_heatmap(
    graph: &AnnotatorGraph,
    annotators: Option<&[String]>,
    other_annotators: Option<&[String]>,
) -> Result<(String, HeatmapMatrix)> {
    let m = heatmap_matrix(graph, annotators, other_annotators)?;
    let width = MARGIN + CELL * m.columns.len() as f64 + 10.0;
    let height = MARGIN + CELL * m.rows.len() as f64 + 10.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (c, name) in m.columns.iter().enumerate() {
        let x = MARGIN + CELL * (c as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text class="col-label" x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN - 10.0,
            escape(name)
        );
    }
    for (r, name) in m.rows.iter().enumerate() {
        let y = MARGIN + CELL * r as f64;
        let _ = writeln!(
            svg,
            r#"<text class="row-label" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN - 10.0,
            y + CELL / 2.0 + 4.0,
            escape(name)
        );
        for (c, value) in m.values[r].iter().enumerate() {
            let x = MARGIN + CELL * c as f64;
            match value {
                Some(v) => {
                    let _ = writeln!(
                        svg,
                        r#"<rect class="cell" data-row="{r}" data-col="{c}" x="{x:.2}" y="{y:.2}" width="{CELL}" height="{CELL}" fill="{}" stroke="white"/>"#,
                        agreement_color(*v)
                    );
                    let _ = writeln!(
                        svg,
                        r#"<text class="cell-value" data-row="{r}" data-col="{c}" x="{:.2}" y="{:.2}" text-anchor="middle">{v:.2}</text>"#,
                        x + CELL / 2.0,
                        y + CELL / 2.0 + 4.0
                    );
                }
                None => {
                    let _ = writeln!(
                        svg,
                        r##"<rect class="cell blank" data-row="{r}" data-col="{c}" x="{x:.2}" y="{y:.2}" width="{CELL}" height="{CELL}" fill="#ffffff" stroke="#dddddd"/>"##
                    );
                }
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok((svg, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agreement::{Edge, Node};

    fn graph() -> AnnotatorGraph {
        let rel = [0.8, 1.3, 0.9];
        AnnotatorGraph {
            nodes: (0..3)
                .map(|i| Node {
                    id: format!("a{}", i + 1),
                    intra: (i != 2).then_some(0.5 + 0.1 * i as f64),
                    reliability: rel[i],
                })
                .collect(),
            edges: vec![
                Edge { a: "a1".into(), b: "a2".into(), agreement: 0.4, overlap: 30 },
                Edge { a: "a2".into(), b: "a3".into(), agreement: -0.2, overlap: 30 },
            ],
            warnings: vec![],
        }
    }

    #[test]
    fn ordered_by_reliability_with_intra_diagonal() {
        let m = heatmap_matrix(&graph(), None, None).unwrap();
        assert_eq!(m.rows, ["a2", "a3", "a1"]);
        assert_eq!(m.columns, m.rows);
        assert_eq!(m.values[0][0], Some(0.6));
        assert_eq!(m.values[1][1], None);
        assert_eq!(m.values[1][2], None);
        assert_eq!(m.values[0][2], Some(0.4));
        assert_eq!(m.values[2][0], Some(0.4));
    }

    #[test]
    fn subset_shapes() {
        let g = graph();
        let rows = vec!["a1".to_string()];
        let cols = vec!["a2".to_string(), "a3".to_string(), "a1".to_string()];
        let m = heatmap_matrix(&g, Some(&rows), Some(&cols)).unwrap();
        assert_eq!((m.values.len(), m.values[0].len()), (1, 3));
        let bad = vec!["zz".to_string()];
        assert!(matches!(heatmap_matrix(&g, Some(&bad), None), Err(Error::UnknownAnnotator(_))));
    }

    #[test]
    fn svg_mirrors_matrix() {
        let (svg, m) = export_heatmap(&graph(), None, None).unwrap();
        let filled = m.values.iter().flatten().filter(|v| v.is_some()).count();
        assert_eq!(svg.matches(r#"class="cell-value""#).count(), filled);
        assert_eq!(svg.matches(r#"class="cell blank""#).count(), 9 - filled);
        let shown: Vec<String> = svg
            .lines()
            .filter(|l| l.contains(r#"class="cell-value""#))
            .map(|l| l.rsplit_once("\">").unwrap().1.trim_end_matches("</text>").to_owned())
            .collect();
        let expected: Vec<String> = m.values.iter().flatten().flatten().map(|v| format!("{v:.2}")).collect();
        assert_eq!(shown, expected);
    }
}
