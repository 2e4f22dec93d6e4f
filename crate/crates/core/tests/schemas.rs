use std::path::PathBuf;

use annorel_core::agreement::{AnnotatorGraph, Edge, Node};
use annorel_core::compilation::{generate_project, MANIFEST_FILE};
use annorel_core::distribution::{distribute, solve_resources, DistributeOptions, ResourceSpec};
use annorel_core::viz::export_graph_3d;
use annorel_core::{AnnotationFrame, LabelMapping};
use serde_json::Value;

fn schema(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, instance: &Value) {
    let errors: Vec<String> = v.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn scene_matches_schema() {
    let g = AnnotatorGraph {
        nodes: (0..6)
            .map(|i| Node { id: format!("a{i}"), intra: (i % 2 == 0).then_some(0.7), reliability: 0.5 + 0.2 * i as f64 })
            .collect(),
        edges: (0..6)
            .map(|i| Edge { a: format!("a{i}"), b: format!("a{}", (i + 1) % 6), agreement: -0.3 + 0.2 * i as f64, overlap: 25 })
            .collect(),
        warnings: vec![],
    };
    let scene = serde_json::to_value(export_graph_3d(&g)).unwrap();
    let v = schema("scene3d.schema.json");
    assert_valid(&v, &scene);
    assert_eq!(scene["nodes"].as_array().unwrap().len(), 6);

    let mut broken = scene.clone();
    broken["version"] = 2.into();
    assert!(!v.is_valid(&broken));
}

#[test]
fn manifest_matches_schema() {
    let mut csv = String::from("sample_id,text\n");
    for i in 0..500 {
        csv.push_str(&format!("s{i},doc {i}\n"));
    }
    let frame = AnnotationFrame::from_csv_bytes(csv.as_bytes(), false).unwrap();
    let plan = solve_resources(&ResourceSpec {
        annotators: Some(6.0),
        time: Some(1.0),
        rate: Some(110.0),
        samples: None,
        double: 0.5,
        re: 0.1,
    })
    .unwrap();
    let names: Vec<String> = (1..=6).map(|i| format!("a{i}")).collect();
    let mapping = LabelMapping::from_labels(["debunk", "misinfo", "other"]).unwrap();
    let v = schema("project-manifest.schema.json");
    for leftover in [true, false] {
        let f = if leftover { frame.clone() } else { frame.select_rows(&(0..plan.samples).collect::<Vec<_>>()) };
        let (alloc, _) = distribute(&f, &names, &plan, 9, DistributeOptions::default()).unwrap();
        let files = generate_project(&f, &alloc, Some(&mapping), "teamware-like", false).unwrap();
        let manifest: Value = serde_json::from_slice(&files[MANIFEST_FILE]).unwrap();
        assert_valid(&v, &manifest);
        assert_eq!(manifest.get("leftover").is_some(), leftover);
    }
}
