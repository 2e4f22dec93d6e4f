use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::distribution::REANNOTATION_FLAG;
use crate::error::{Error, Result};
use crate::frame::{reannotation_column, AnnotationFrame, SAMPLE_ID};

/// One annotator's raw annotation table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatorTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl AnnotatorTable {
    pub fn from_csv_bytes(name: &str, bytes: &[u8]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let columns = rdr.headers()?.iter().map(str::to_owned).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_owned).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { name: name.to_owned(), columns, rows })
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileOptions {
    /// Column renames applied to every table before anything else.
    #[serde(default)]
    pub renames: BTreeMap<String, String>,
    /// Columns holding the annotation. Several non-empty ones are joined with
    /// `;` (e.g. first and second choice).
    #[serde(default = "default_label_columns")]
    pub label_columns: Vec<String>,
}

fn default_label_columns() -> Vec<String> {
    vec!["label".to_owned()]
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { renames: BTreeMap::new(), label_columns: default_label_columns() }
    }
}

/// Orders sample ids numerically when they are all integers, else lexicographically.
fn sort_sample_ids(ids: &mut [String]) {
    if ids.iter().all(|s| s.parse::<i64>().is_ok()) {
        ids.sort_by_key(|s| s.parse::<i64>().expect("checked"));
    } else {
        ids.sort();
    }
}

#[derive(Default)]
struct Passes {
    first: HashMap<String, String>,
    second: HashMap<String, String>,
}

/// Merges per-annotator tables into one wide frame.
///
/// Within an annotator's table the first row for a sample is the original
/// annotation and a second row is the re-annotation (`re_<annotator>`); a
/// third is an error. Rows with an empty label still register the sample.
/// Output rows are sorted by sample id, annotator columns by name, so the
/// result does not depend on the order of the input tables.
pub fn compile(tables: &[AnnotatorTable], options: &CompileOptions) -> Result<(AnnotationFrame, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut sorted: Vec<&AnnotatorTable> = tables.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    for w in sorted.windows(2) {
        if w[0].name == w[1].name {
            return Err(Error::AnnotatorCollision(w[0].name.clone()));
        }
    }

    let mut data_columns: Vec<String> = Vec::new();
    let mut data: HashMap<String, HashMap<String, String>> = HashMap::new();
    let mut ids: BTreeSet<String> = BTreeSet::new();
    let mut passes: BTreeMap<String, Passes> = BTreeMap::new();

    for table in sorted {
        let columns: Vec<String> = table
            .columns
            .iter()
            .map(|c| options.renames.get(c).cloned().unwrap_or_else(|| c.clone()))
            .collect();
        let id_col = columns
            .iter()
            .position(|c| c == SAMPLE_ID)
            .ok_or_else(|| Error::MissingSampleId(table.name.clone()))?;
        let label_cols: Vec<usize> = options
            .label_columns
            .iter()
            .filter_map(|l| columns.iter().position(|c| c == l))
            .collect();
        if label_cols.is_empty() {
            return Err(Error::MissingColumn(format!("{} in table {:?}", options.label_columns.join("/"), table.name)));
        }
        let extra: Vec<usize> = (0..columns.len())
            .filter(|&c| c != id_col && !label_cols.contains(&c) && columns[c] != REANNOTATION_FLAG)
            .collect();
        for &c in &extra {
            if !data_columns.contains(&columns[c]) {
                data_columns.push(columns[c].clone());
            }
        }

        let entry = passes.entry(table.name.clone()).or_default();
        for (r, row) in table.rows.iter().enumerate() {
            let cell = |c: usize| row.get(c).map(String::as_str).unwrap_or("");
            let id = cell(id_col);
            if id.is_empty() {
                return Err(Error::InvalidFrame(format!("empty sample_id in table {:?} row {r}", table.name)));
            }
            ids.insert(id.to_owned());
            let doc = data.entry(id.to_owned()).or_default();
            for &c in &extra {
                if !cell(c).is_empty() {
                    doc.entry(columns[c].clone()).or_insert_with(|| cell(c).to_owned());
                }
            }
            let label: Vec<&str> = label_cols.iter().map(|&c| cell(c)).filter(|v| !v.is_empty()).collect();
            if label.is_empty() {
                continue;
            }
            let label = label.join(";");
            if !entry.first.contains_key(id) {
                entry.first.insert(id.to_owned(), label);
            } else if !entry.second.contains_key(id) {
                entry.second.insert(id.to_owned(), label);
            } else {
                return Err(Error::TripleAnnotation { annotator: table.name.clone(), sample: id.to_owned() });
            }
        }
        if entry.first.is_empty() {
            warnings.push(format!("table {:?} has no labelled rows", table.name));
        }
    }

    let mut ids: Vec<String> = ids.into_iter().collect();
    sort_sample_ids(&mut ids);
    let mut columns = vec![SAMPLE_ID.to_owned()];
    columns.extend(data_columns.iter().cloned());
    columns.extend(passes.keys().cloned());
    let with_re: Vec<&String> = passes.iter().filter(|(_, p)| !p.second.is_empty()).map(|(a, _)| a).collect();
    columns.extend(with_re.iter().map(|a| reannotation_column(a)));

    let rows = ids
        .iter()
        .map(|id| {
            let mut row = Vec::with_capacity(columns.len());
            row.push(Some(id.clone()));
            let doc = data.get(id);
            row.extend(data_columns.iter().map(|c| doc.and_then(|d| d.get(c)).cloned()));
            row.extend(passes.values().map(|p| p.first.get(id).cloned()));
            row.extend(with_re.iter().map(|a| passes[*a].second.get(id).cloned()));
            row
        })
        .collect();
    Ok((AnnotationFrame::new(columns, rows)?, warnings))
}

/// Merges frames by sample id. Columns and rows keep first-appearance order;
/// equal cells merge, differing non-empty cells are an error.
pub fn concat_annotations(frames: &[AnnotationFrame]) -> Result<AnnotationFrame> {
    let mut columns: Vec<String> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    for f in frames {
        for c in f.columns() {
            if !col_index.contains_key(c) {
                col_index.insert(c.clone(), columns.len());
                columns.push(c.clone());
            }
        }
    }
    let mut rows: Vec<Vec<Option<String>>> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    for f in frames {
        let map: Vec<usize> = f.columns().iter().map(|c| col_index[c]).collect();
        for r in 0..f.n_rows() {
            let id = f.sample_id(r).to_owned();
            let target = *row_index.entry(id.clone()).or_insert_with(|| {
                rows.push(vec![None; columns.len()]);
                rows.len() - 1
            });
            for (c, cell) in f.row(r).iter().enumerate() {
                let Some(value) = cell else { continue };
                let slot = &mut rows[target][map[c]];
                match slot {
                    None => *slot = Some(value.clone()),
                    Some(existing) if existing == value => {}
                    Some(_) => {
                        return Err(Error::ConflictingCell { sample: id, column: columns[map[c]].clone() });
                    }
                }
            }
        }
    }
    AnnotationFrame::new(columns, rows)
}
