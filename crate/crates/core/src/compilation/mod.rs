//! Merging annotator files into one frame, and project bundles for external
//! annotation platforms.

mod archive;
mod compile;
mod project;

pub use archive::{pack_archive, unpack_archive};
pub use compile::{compile, concat_annotations, AnnotatorTable, CompileOptions};
pub use project::{
    generate_project, LabelOption, LabelSchema, ProjectManifest, LABEL_FIELD, MANIFEST_FILE, MANIFEST_VERSION,
    PROJECT_FORMAT, TASKS_DIR,
};
