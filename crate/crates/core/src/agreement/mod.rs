//! Pairwise agreement metrics and the annotator agreement graph.

mod graph;
mod metrics;

pub use graph::{build_graph, intra_agreement, AgreementConfig, AnnotatorGraph, Edge, Node};
pub use metrics::{
    cohen_kappa, cosine_agreement, fleiss_kappa, krippendorff_alpha, multi_label_agreement, pairwise_agreement,
    AgreementMetric, Distance, Score, MULTI_LABEL_CUTOFF,
};
