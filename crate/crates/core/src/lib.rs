//! Annotation project engine.
//!
//! Plans how many samples a team can label and splits a dataset between
//! annotators with controlled overlap, merges the returned annotations,
//! turns raw labels into soft and hard labels, and scores annotators by
//! agreement with each other and with themselves.
//!
//! Data-parallel steps run on rayon with the default `parallel` feature; every
//! such step also takes an [`Execution`] so the sequential path stays
//! available for comparison.

pub mod agreement;
pub mod compilation;
pub mod config;
pub mod distribution;
mod error;
pub mod exec;
pub mod frame;
pub mod labels;
pub mod mapping;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod pipeline;
pub mod reliability;
pub mod synthetic;
pub mod viz;

pub use error::{Error, Result};
pub use exec::Execution;
pub use frame::{validate_frame, AnnotationFrame, Violation};
pub use mapping::{infer_label_mapping, LabelMapping, SoftLabel};

/// Crate version, reported by the health endpoint and the CLI.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
