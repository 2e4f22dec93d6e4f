//! Raw label values, their class indices, and probability labels.

use std::collections::{BTreeSet, HashMap};

use serde::de::{Deserialize, Deserializer};
use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::error::{Error, Result};
use crate::frame::{reannotation_column, AnnotationFrame};

/// Separator between multiple choices inside one raw label cell
/// (first/second choice, or a set of topics).
pub const CHOICE_SEPARATOR: char = ';';

/// Canonical string form of a raw label.
///
/// Values that parse as finite numbers are rewritten without redundant zeros
/// (`"01"`, `"1.0"` and `"1"` all become `"1"`); anything else is trimmed.
pub fn canonical_label(raw: &str) -> String {
    let trimmed = raw.trim();
    match parse_number(trimmed) {
        Some(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
        Some(v) => format!("{v}"),
        None => trimmed.to_owned(),
    }
}

fn parse_number(s: &str) -> Option<f64> {
    // reject "inf", "nan" and friends, which f64::from_str accepts
    if !s.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// The canonical choices in one raw cell, in cell order. Empty parts are dropped.
pub fn split_choices(cell: &str) -> impl Iterator<Item = String> + '_ {
    cell.split(CHOICE_SEPARATOR)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(canonical_label)
}

/// Ordered map from canonical raw label to class index `0..C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelMapping {
    /// Builds a mapping from `(label, index)` pairs whose indices are exactly `0..C`.
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: AsRef<str>,
    {
        let mut pairs: Vec<(String, usize)> = entries
            .into_iter()
            .map(|(k, v)| (canonical_label(k.as_ref()), v))
            .collect();
        pairs.sort_by_key(|&(_, v)| v);
        if pairs.len() < 2 {
            return Err(Error::TooFewClasses(pairs.len()));
        }
        for (expected, (label, idx)) in pairs.iter().enumerate() {
            if *idx != expected {
                return Err(Error::InvalidMapping(format!(
                    "indices must be 0..{}, label {label:?} has {idx}",
                    pairs.len()
                )));
            }
        }
        let labels: Vec<String> = pairs.into_iter().map(|(k, _)| k).collect();
        let index: HashMap<String, usize> =
            labels.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        if index.len() != labels.len() {
            return Err(Error::InvalidMapping("duplicate labels after canonicalisation".into()));
        }
        Ok(Self { labels, index })
    }

    /// Assigns indices in the given order.
    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::new(labels.into_iter().enumerate().map(|(i, l)| (l, i)))
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    /// Class index of a raw value, after canonicalisation.
    pub fn index_of(&self, raw: &str) -> Option<usize> {
        self.index.get(&canonical_label(raw)).copied()
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mapping serialises")
    }
}

impl Serialize for LabelMapping {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.labels.len()))?;
        for (i, l) in self.labels.iter().enumerate() {
            map.serialize_entry(l, &i)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for LabelMapping {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw: HashMap<String, usize> = HashMap::deserialize(deserializer)?;
        LabelMapping::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Builds a mapping from every distinct raw value in the annotator columns
/// and their `re_` columns, ordered lexicographically by canonical form.
pub fn infer_label_mapping<S: AsRef<str>>(
    frame: &AnnotationFrame,
    annotators: &[S],
) -> Result<LabelMapping> {
    let values = distinct_values(frame, annotators)?;
    check_uniform_types(&values)?;
    LabelMapping::from_labels(values)
}

/// Distinct canonical values across annotator and `re_` columns, sorted.
pub(crate) fn distinct_values<S: AsRef<str>>(
    frame: &AnnotationFrame,
    annotators: &[S],
) -> Result<BTreeSet<String>> {
    let mut cols = Vec::new();
    for a in annotators {
        cols.push(frame.require_column(a.as_ref())?);
        if let Some(c) = frame.column_index(&reannotation_column(a.as_ref())) {
            cols.push(c);
        }
    }
    let mut values = BTreeSet::new();
    for &c in &cols {
        for cell in frame.column(c).flatten() {
            values.extend(split_choices(cell));
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyAnnotations);
    }
    Ok(values)
}

pub(crate) fn check_uniform_types(values: &BTreeSet<String>) -> Result<()> {
    let numeric = values.iter().find(|v| parse_number(v).is_some());
    let text = values.iter().find(|v| parse_number(v).is_none());
    match (numeric, text) {
        (Some(n), Some(t)) => Err(Error::MixedTypes { numeric: n.clone(), text: t.clone() }),
        _ => Ok(()),
    }
}

/// True when every value parses as a finite number.
pub(crate) fn all_numeric(values: &BTreeSet<String>) -> bool {
    values.iter().all(|v| parse_number(v).is_some())
}

pub(crate) fn numeric_value(v: &str) -> Option<f64> {
    parse_number(v)
}

/// A probability vector over the classes of a [`LabelMapping`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct SoftLabel(pub Vec<f64>);

impl SoftLabel {
    pub fn one_hot(num_classes: usize, class: usize) -> Self {
        let mut v = vec![0.0; num_classes];
        v[class] = 1.0;
        Self(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// JSON array text as stored in generated CSV cells.
    pub fn to_cell(&self) -> String {
        serde_json::to_string(&self.0).expect("finite floats serialise")
    }

    pub fn from_cell(cell: &str) -> Result<Self> {
        Ok(Self(serde_json::from_str(cell)?))
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(csv: &str) -> AnnotationFrame {
        AnnotationFrame::from_csv_bytes(csv.as_bytes(), false).unwrap()
    }

    #[test]
    fn lexicographic_order() {
        let f = frame("sample_id,a1,a2\ns1,misinfo,debunk\ns2,other,\n");
        let m = infer_label_mapping(&f, &["a1", "a2"]).unwrap();
        assert_eq!(m.labels(), &["debunk", "misinfo", "other"]);
        assert_eq!(m.index_of("other"), Some(2));
    }

    #[test]
    fn numeric_strings() {
        let f = frame("sample_id,a1\ns1,0\ns2,1\ns3,1.0\n");
        let m = infer_label_mapping(&f, &["a1"]).unwrap();
        assert_eq!(m.labels(), &["0", "1"]);
        assert_eq!(m.index_of("01"), Some(1));
    }

    #[test]
    fn reannotation_only_values_are_included() {
        let f = frame("sample_id,a1,a2,a3,re_a3\ns1,A,B,A,C\ns2,B,A,B,\n");
        let m = infer_label_mapping(&f, &["a1", "a2", "a3"]).unwrap();
        assert_eq!(m.labels(), &["A", "B", "C"]);
    }

    #[test]
    fn errors() {
        let f = frame("sample_id,a1\ns1,\n");
        assert!(matches!(infer_label_mapping(&f, &["a1"]), Err(Error::EmptyAnnotations)));
        let f = frame("sample_id,a1\ns1,1\ns2,yes\n");
        assert!(matches!(infer_label_mapping(&f, &["a1"]), Err(Error::MixedTypes { .. })));
        let f = frame("sample_id,a1\ns1,x\n");
        assert!(matches!(infer_label_mapping(&f, &["a1"]), Err(Error::TooFewClasses(1))));
        assert!(matches!(infer_label_mapping(&f, &["zz"]), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn mapping_validation() {
        assert!(LabelMapping::new([("a", 0), ("b", 2)]).is_err());
        assert!(LabelMapping::new([("a", 0), ("a", 1)]).is_err());
        let m = LabelMapping::new([("b", 1), ("a", 0)]).unwrap();
        assert_eq!(m.to_json(), r#"{"a":0,"b":1}"#);
        let back: LabelMapping = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(canonical_label(" 007 "), "7");
        assert_eq!(canonical_label("1.50"), "1.5");
        assert_eq!(canonical_label("-0"), "0");
        assert_eq!(canonical_label("inf"), "inf");
        assert_eq!(canonical_label("Yes "), "Yes");
    }

    #[test]
    fn argmax_ties_low() {
        assert_eq!(argmax(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5, 0.0]), 0);
    }
}
