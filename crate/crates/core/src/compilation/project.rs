use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distribution::{export_allocation, Allocation, LEFTOVER_FILE, REANNOTATION_FLAG};
use crate::error::{Error, Result};
use crate::frame::{AnnotationFrame, SAMPLE_ID};
use crate::mapping::LabelMapping;

pub const MANIFEST_FILE: &str = "project.json";
pub const TASKS_DIR: &str = "tasks";
pub const PROJECT_FORMAT: &str = "teamware-like";
pub const MANIFEST_VERSION: u32 = 1;
/// Empty column added to task files for the annotator to fill in.
pub const LABEL_FIELD: &str = "label";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelOption {
    pub value: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSchema {
    pub name: String,
    /// `radio` for single choice, `checkbox` when several labels may be picked.
    #[serde(rename = "type")]
    pub kind: String,
    pub options: Vec<LabelOption>,
}

/// Contents of `project.json`. The key set is fixed; see
/// `schemas/project-manifest.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectManifest {
    pub format: String,
    pub version: u32,
    pub id_field: String,
    pub label_field: String,
    pub reannotation_field: String,
    pub document_fields: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_schema: Option<LabelSchema>,
    pub annotators: Vec<String>,
    /// Task file per annotator, relative to the bundle root.
    pub task_files: BTreeMap<String, String>,
    /// Distinct samples per annotator, in frame order.
    pub assignments: BTreeMap<String, Vec<String>>,
    pub reannotations: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub leftover: Vec<String>,
}

fn check_format(format: &str) -> Result<()> {
    match format {
        PROJECT_FORMAT | "teamware" => Ok(()),
        other => Err(Error::UnsupportedFormat(other.to_owned())),
    }
}

/// Builds a project bundle: `tasks/<annotator>.csv` for every annotator and a
/// `project.json` manifest. The returned map is ready for
/// [`pack_archive`](super::pack_archive).
pub fn generate_project(
    frame: &AnnotationFrame,
    allocation: &Allocation,
    mapping: Option<&LabelMapping>,
    format: &str,
    multi_label: bool,
) -> Result<BTreeMap<String, Vec<u8>>> {
    check_format(format)?;
    let mut tasks = frame.clone();
    if !tasks.has_column(LABEL_FIELD) {
        tasks.set_column(LABEL_FIELD, vec![None; tasks.n_rows()])?;
    }
    let mut exported = export_allocation(allocation, &tasks)?;
    exported.remove(LEFTOVER_FILE);

    let order = frame.row_index();
    let in_frame_order = |ids: Vec<&str>| {
        let mut ids: Vec<&str> = ids;
        ids.sort_by_key(|id| order.get(id).copied().unwrap_or(usize::MAX));
        ids.into_iter().map(str::to_owned).collect::<Vec<_>>()
    };
    let manifest = ProjectManifest {
        format: PROJECT_FORMAT.to_owned(),
        version: MANIFEST_VERSION,
        id_field: SAMPLE_ID.to_owned(),
        label_field: LABEL_FIELD.to_owned(),
        reannotation_field: REANNOTATION_FLAG.to_owned(),
        document_fields: frame.columns().iter().filter(|c| *c != SAMPLE_ID && *c != LABEL_FIELD).cloned().collect(),
        label_schema: mapping.map(|m| LabelSchema {
            name: LABEL_FIELD.to_owned(),
            kind: if multi_label { "checkbox" } else { "radio" }.to_owned(),
            options: m.labels().iter().enumerate().map(|(index, value)| LabelOption { value: value.clone(), index }).collect(),
        }),
        annotators: allocation.annotators().map(str::to_owned).collect(),
        task_files: allocation
            .annotators()
            .map(|a| (a.to_owned(), format!("{TASKS_DIR}/{a}.csv")))
            .collect(),
        assignments: allocation
            .assignments
            .iter()
            .map(|a| (a.annotator.clone(), in_frame_order(a.ids().collect())))
            .collect(),
        reannotations: allocation
            .assignments
            .iter()
            .map(|a| (a.annotator.clone(), in_frame_order(a.reannotate_ids.iter().map(String::as_str).collect())))
            .collect(),
        leftover: allocation.leftover_ids.clone(),
    };

    let mut files: BTreeMap<String, Vec<u8>> =
        exported.into_iter().map(|(name, bytes)| (format!("{TASKS_DIR}/{name}"), bytes)).collect();
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    files.insert(MANIFEST_FILE.to_owned(), json);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compilation::{compile, pack_archive, unpack_archive, CompileOptions};
    use crate::distribution::{distribute, solve_resources, DistributeOptions, ResourceSpec};

    fn setup(samples: usize, leftover: bool) -> (AnnotationFrame, Allocation) {
        let mut csv = String::from("sample_id,text\n");
        for i in 0..samples {
            csv.push_str(&format!("s{i},text {i}\n"));
        }
        let frame = AnnotationFrame::from_csv_bytes(csv.as_bytes(), false).unwrap();
        let plan = solve_resources(&ResourceSpec {
            annotators: Some(6.0),
            time: Some(1.0),
            rate: Some(22.0),
            samples: None,
            double: 0.5,
            re: 0.1,
        })
        .unwrap();
        let frame = if leftover { frame } else { frame.select_rows(&(0..plan.samples).collect::<Vec<_>>()) };
        let names: Vec<String> = (1..=6).map(|i| format!("a{i}")).collect();
        let (alloc, _) = distribute(&frame, &names, &plan, 3, DistributeOptions::default()).unwrap();
        (frame, alloc)
    }

    fn manifest(files: &BTreeMap<String, Vec<u8>>) -> serde_json::Value {
        serde_json::from_slice(&files[MANIFEST_FILE]).unwrap()
    }

    #[test]
    fn six_assignment_lists_and_no_leftover_key() {
        let (frame, alloc) = setup(200, false);
        let map = LabelMapping::from_labels(["x", "y"]).unwrap();
        let files = generate_project(&frame, &alloc, Some(&map), "teamware-like", false).unwrap();
        let m = manifest(&files);
        assert_eq!(m["assignments"].as_object().unwrap().len(), 6);
        assert!(m.get("leftover").is_none());
        assert_eq!(m["label_schema"]["options"][1], serde_json::json!({"value": "y", "index": 1}));
        assert_eq!(files.len(), 7);
    }

    #[test]
    fn leftover_listed_when_present() {
        let (frame, alloc) = setup(300, true);
        let files = generate_project(&frame, &alloc, None, "teamware", false).unwrap();
        let m = manifest(&files);
        assert_eq!(m["leftover"].as_array().unwrap().len(), alloc.leftover_ids.len());
        assert!(m.get("label_schema").is_none());
    }

    #[test]
    fn unknown_format() {
        let (frame, alloc) = setup(200, false);
        assert!(matches!(generate_project(&frame, &alloc, None, "mturk", false), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn round_trip_reproduces_assignments() {
        let (frame, alloc) = setup(200, true);
        let files = generate_project(&frame, &alloc, None, PROJECT_FORMAT, false).unwrap();
        // Annotators fill in the label column.
        let filled: BTreeMap<String, Vec<u8>> = files
            .iter()
            .map(|(name, bytes)| {
                if !name.ends_with(".csv") {
                    return (name.clone(), bytes.clone());
                }
                let text = String::from_utf8(bytes.clone()).unwrap();
                let out = text.replace(",,0\n", ",x,0\n").replace(",,1\n", ",x,1\n");
                (name.clone(), out.into_bytes())
            })
            .collect();
        let (tables, warnings) = unpack_archive(&pack_archive(&filled).unwrap()).unwrap();
        assert_eq!(tables.len(), 6);
        assert_eq!(warnings.len(), 1);
        let (compiled, _) = compile(&tables, &CompileOptions::default()).unwrap();
        let m: ProjectManifest = serde_json::from_slice(&files[MANIFEST_FILE]).unwrap();
        let back = Allocation::from_compiled(&compiled, &m.annotators, alloc.seed).unwrap();
        for a in &back.assignments {
            let mut ids: Vec<String> = a.ids().map(str::to_owned).collect();
            ids.sort();
            let mut expected = m.assignments[&a.annotator].clone();
            expected.sort();
            assert_eq!(ids, expected);
            let mut re = a.reannotate_ids.clone();
            re.sort();
            let mut expected = m.reannotations[&a.annotator].clone();
            expected.sort();
            assert_eq!(re, expected);
        }
    }
}
