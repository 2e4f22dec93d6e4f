//! Static renderings of the agreement graph: a circular 2D graph and a
//! heatmap as SVG, plus the 3D scene description consumed by the web UI.
//!
//! Every export is a pure function of its input graph.

mod graph2d;
mod heatmap;
mod scene3d;

pub use graph2d::export_graph_2d;
pub use heatmap::{export_heatmap, heatmap_matrix, HeatmapMatrix};
pub use scene3d::{export_graph_3d, Scene3d, SceneEdge, SceneNode, SCENE_SCHEMA, SCENE_VERSION};

/// Diverging scale over the fixed range [-1, 1]: red, light grey at 0, blue.
pub fn agreement_color(value: f64) -> String {
    const NEG: [f64; 3] = [215.0, 48.0, 39.0];
    const MID: [f64; 3] = [247.0, 247.0, 247.0];
    const POS: [f64; 3] = [43.0, 140.0, 190.0];
    let v = if value.is_nan() { 0.0 } else { value.clamp(-1.0, 1.0) };
    let (from, to, t) = if v < 0.0 { (MID, NEG, -v) } else { (MID, POS, v) };
    let c: Vec<u8> = (0..3).map(|i| (from[i] + (to[i] - from[i]) * t).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn color_scale_endpoints() {
        assert_eq!(agreement_color(-1.0), "#d73027");
        assert_eq!(agreement_color(0.0), "#f7f7f7");
        assert_eq!(agreement_color(1.0), "#2b8cbe");
        assert_eq!(agreement_color(5.0), agreement_color(1.0));
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b>&\"c\""), "a&lt;b&gt;&amp;&quot;c&quot;");
    }
}
