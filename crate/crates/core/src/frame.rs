//! The annotation table shared by every pipeline stage.
//!
//! A frame is a dense, row-major table of optional string cells with one
//! mandatory `sample_id` column. Annotator columns carry raw labels, `re_`
//! columns carry an annotator's second pass over the same sample, and label
//! generation appends `<annotator>_prob`, `sample_prob` and `sample_hard`.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

pub const SAMPLE_ID: &str = "sample_id";
pub const REANNOTATION_PREFIX: &str = "re_";
pub const PROB_SUFFIX: &str = "_prob";
pub const SAMPLE_PROB: &str = "sample_prob";
pub const SAMPLE_HARD: &str = "sample_hard";

/// Name of the re-annotation column for `annotator`.
pub fn reannotation_column(annotator: &str) -> String {
    format!("{REANNOTATION_PREFIX}{annotator}")
}

/// Name of the generated probability column for a raw column.
pub fn prob_column(column: &str) -> String {
    format!("{column}{PROB_SUFFIX}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationFrame {
    columns: Vec<String>,
    id_col: usize,
    rows: Vec<Vec<Option<String>>>,
}

impl AnnotationFrame {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Option<String>>>) -> Result<Self> {
        let id_col = columns
            .iter()
            .position(|c| c == SAMPLE_ID)
            .ok_or_else(|| Error::MissingSampleId("frame".into()))?;
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(Error::InvalidFrame(format!("duplicate column {c:?}")));
            }
        }
        if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::InvalidFrame(format!(
                "row {i} has {} cells, header has {}",
                rows[i].len(),
                columns.len()
            )));
        }
        Ok(Self { columns, id_col, rows })
    }

    /// Reads a CSV table with a header row. Empty cells become missing values.
    ///
    /// When the header has no `sample_id` column and `assign_ids` is set, one is
    /// prepended holding the zero-based row index.
    pub fn from_csv_reader<R: Read>(reader: R, assign_ids: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut columns: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            rows.push(
                record
                    .iter()
                    .map(|c| if c.is_empty() { None } else { Some(c.to_owned()) })
                    .collect::<Vec<_>>(),
            );
        }
        if assign_ids && !columns.iter().any(|c| c == SAMPLE_ID) {
            columns.insert(0, SAMPLE_ID.to_owned());
            for (i, row) in rows.iter_mut().enumerate() {
                row.insert(0, Some(i.to_string()));
            }
        }
        Self::new(columns, rows)
    }

    pub fn from_csv_bytes(bytes: &[u8], assign_ids: bool) -> Result<Self> {
        Self::from_csv_reader(bytes, assign_ids)
    }

    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.as_deref().unwrap_or("")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.to_csv_writer(&mut out)?;
        Ok(out)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name).ok_or_else(|| Error::MissingColumn(name.to_owned()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&str> {
        self.rows[row][col].as_deref()
    }

    pub fn row(&self, row: usize) -> &[Option<String>] {
        &self.rows[row]
    }

    pub fn rows(&self) -> &[Vec<Option<String>>] {
        &self.rows
    }

    pub fn sample_id(&self, row: usize) -> &str {
        self.rows[row][self.id_col].as_deref().unwrap_or("")
    }

    pub fn sample_ids(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.rows.len()).map(move |r| self.sample_id(r))
    }

    /// Cells of one column, top to bottom.
    pub fn column(&self, col: usize) -> impl Iterator<Item = Option<&str>> + '_ {
        self.rows.iter().map(move |r| r[col].as_deref())
    }

    /// Map from sample id to row index. Later duplicates shadow earlier ones.
    pub fn row_index(&self) -> HashMap<&str, usize> {
        self.sample_ids().enumerate().map(|(i, s)| (s, i)).collect()
    }

    /// Adds a column, or replaces the cells of an existing one.
    pub fn set_column(&mut self, name: &str, values: Vec<Option<String>>) -> Result<()> {
        if values.len() != self.rows.len() {
            return Err(Error::InvalidFrame(format!(
                "column {name:?} has {} values for {} rows",
                values.len(),
                self.rows.len()
            )));
        }
        if name == SAMPLE_ID {
            return Err(Error::InvalidFrame("sample_id cannot be overwritten".into()));
        }
        match self.column_index(name) {
            Some(col) => {
                for (row, v) in self.rows.iter_mut().zip(values) {
                    row[col] = v;
                }
            }
            None => {
                self.columns.push(name.to_owned());
                for (row, v) in self.rows.iter_mut().zip(values) {
                    row.push(v);
                }
            }
        }
        Ok(())
    }

    /// A new frame without the named columns. Unknown names are ignored.
    pub fn without_columns(&self, names: &[&str]) -> Self {
        let keep: Vec<usize> = (0..self.columns.len())
            .filter(|&c| c == self.id_col || !names.contains(&self.columns[c].as_str()))
            .collect();
        self.project(&keep)
    }

    fn project(&self, keep: &[usize]) -> Self {
        let columns: Vec<String> = keep.iter().map(|&c| self.columns[c].clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| keep.iter().map(|&c| r[c].clone()).collect())
            .collect();
        let id_col = keep.iter().position(|&c| c == self.id_col).expect("id column kept");
        Self { columns, id_col, rows }
    }

    /// A new frame holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            columns: self.columns.clone(),
            id_col: self.id_col,
            rows: rows.iter().map(|&r| self.rows[r].clone()).collect(),
        }
    }

    /// Annotator names for which both `<a>` and `re_<a>` columns exist.
    pub fn reannotated_annotators(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter_map(|c| c.strip_prefix(REANNOTATION_PREFIX))
            .filter(|a| self.has_column(a))
            .collect()
    }

    /// Guesses the annotator columns when none are configured: every
    /// column that is not the id, a `re_` pass, a generated label column or
    /// the re-annotation flag, and that does not look like document content
    /// (complete and all-distinct, such as a text column).
    pub fn infer_annotators(&self) -> Vec<String> {
        self.columns
            .iter()
            .enumerate()
            .filter(|&(c, name)| {
                if c == self.id_col || is_reserved_column(name) {
                    return false;
                }
                if self.has_column(&reannotation_column(name)) {
                    return true;
                }
                let mut seen = std::collections::HashSet::new();
                let document_like = self.rows.iter().all(|r| r[c].as_deref().is_some_and(|v| seen.insert(v)));
                !document_like || self.rows.len() < 2
            })
            .map(|(_, name)| name.clone())
            .collect()
    }
}

/// Columns the pipeline writes or reads for its own bookkeeping.
pub fn is_reserved_column(name: &str) -> bool {
    name == SAMPLE_ID
        || name == SAMPLE_PROB
        || name == SAMPLE_HARD
        || name == crate::distribution::REANNOTATION_FLAG
        || name.starts_with(REANNOTATION_PREFIX)
        || name.ends_with(PROB_SUFFIX)
}

/// One broken frame invariant, located by row and/or column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptySampleId { row: usize },
    Duplicate { sample_id: String, row: usize, first_row: usize },
    OrphanReColumn { column: String },
    OrphanReannotation { row: usize, sample_id: String, column: String },
}

/// Checks the frame invariants and lists every violation found.
pub fn validate_frame(frame: &AnnotationFrame) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut first_seen: HashMap<&str, usize> = HashMap::new();
    for (row, id) in frame.sample_ids().enumerate() {
        if id.is_empty() {
            out.push(Violation::EmptySampleId { row });
            continue;
        }
        if let Some(&first_row) = first_seen.get(id) {
            out.push(Violation::Duplicate { sample_id: id.to_owned(), row, first_row });
        } else {
            first_seen.insert(id, row);
        }
    }
    for (re_col, name) in frame.columns().iter().enumerate() {
        let Some(base) = name.strip_prefix(REANNOTATION_PREFIX) else {
            continue;
        };
        let Some(base_col) = frame.column_index(base) else {
            out.push(Violation::OrphanReColumn { column: name.clone() });
            continue;
        };
        for row in 0..frame.n_rows() {
            if frame.cell(row, re_col).is_some() && frame.cell(row, base_col).is_none() {
                out.push(Violation::OrphanReannotation {
                    row,
                    sample_id: frame.sample_id(row).to_owned(),
                    column: name.clone(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(csv: &str) -> AnnotationFrame {
        AnnotationFrame::from_csv_bytes(csv.as_bytes(), false).unwrap()
    }

    #[test]
    fn empty_cells_are_missing() {
        let f = frame("sample_id,a1,a2\ns1,x,\ns2,,y\n");
        assert_eq!(f.cell(0, 2), None);
        assert_eq!(f.cell(1, 2), Some("y"));
        assert_eq!(f.to_csv_bytes().unwrap(), b"sample_id,a1,a2\ns1,x,\ns2,,y\n");
    }

    #[test]
    fn annotator_columns_are_inferred() {
        let f = frame("sample_id,text,a1,a2,re_a1,a1_prob,sample_hard\ns1,foo,x,,x,,\ns2,bar,y,x,,,\ns3,baz,,x,,,\n");
        assert_eq!(f.infer_annotators(), ["a1", "a2"]);
        let full = frame("sample_id,text,a1\ns1,foo,x\ns2,bar,x\n");
        assert_eq!(full.infer_annotators(), ["a1"]);
    }

    #[test]
    fn assigns_ids_when_missing() {
        let f = AnnotationFrame::from_csv_bytes(b"text\nfoo\nbar\n", true).unwrap();
        assert_eq!(f.columns(), &["sample_id", "text"]);
        assert_eq!(f.sample_ids().collect::<Vec<_>>(), vec!["0", "1"]);
        assert!(AnnotationFrame::from_csv_bytes(b"text\nfoo\n", false).is_err());
    }

    #[test]
    fn duplicate_sample_id_is_reported() {
        let f = frame("sample_id,a1\ns1,x\ns1,y\n");
        assert_eq!(
            validate_frame(&f),
            vec![Violation::Duplicate { sample_id: "s1".into(), row: 1, first_row: 0 }]
        );
    }

    #[test]
    fn orphan_reannotation_is_reported() {
        let f = frame("sample_id,a1,re_a1\ns1,,x\ns2,y,y\n");
        assert_eq!(
            validate_frame(&f),
            vec![Violation::OrphanReannotation {
                row: 0,
                sample_id: "s1".into(),
                column: "re_a1".into()
            }]
        );
        let f = frame("sample_id,re_a9\ns1,x\n");
        assert_eq!(validate_frame(&f), vec![Violation::OrphanReColumn { column: "re_a9".into() }]);
    }

    #[test]
    fn valid_six_annotator_fixture() {
        let mut csv = String::from("sample_id,text,a1,a2,a3,a4,a5,a6,re_a1,re_a4\n");
        for i in 0..12 {
            let mut cells = vec![format!("s{i}"), format!("doc {i}")];
            for a in 0..6 {
                // ring: sample i is labelled by annotators i%6 and (i+1)%6
                let on = a == i % 6 || a == (i + 1) % 6;
                cells.push(if on { ["x", "y"][i % 2].to_string() } else { String::new() });
            }
            cells.push(if i % 6 == 0 { "x".into() } else { String::new() });
            cells.push(if i % 6 == 3 { "y".into() } else { String::new() });
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        assert_eq!(validate_frame(&frame(&csv)), vec![]);
    }

    #[test]
    fn set_column_replaces_or_appends() {
        let mut f = frame("sample_id,a1\ns1,x\n");
        f.set_column("a1", vec![Some("z".into())]).unwrap();
        f.set_column("b", vec![None]).unwrap();
        assert_eq!(f.columns(), &["sample_id", "a1", "b"]);
        assert_eq!(f.cell(0, 1), Some("z"));
        assert!(f.set_column("c", vec![]).is_err());
    }
}
