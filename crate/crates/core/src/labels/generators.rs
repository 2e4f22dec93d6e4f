use serde::{Deserialize, Serialize};

use super::{CellError, LabelGenerator};
use crate::error::{Error, Result};
use crate::frame::AnnotationFrame;
use crate::mapping::{
    all_numeric, check_uniform_types, distinct_values, infer_label_mapping, numeric_value, split_choices,
    LabelMapping, SoftLabel,
};

fn single_choice(mapping: &LabelMapping, raw: &str) -> Result<SoftLabel, CellError> {
    let mut choices = split_choices(raw);
    let (Some(first), None) = (choices.next(), choices.next()) else {
        return Err(CellError::Unmapped(raw.to_owned()));
    };
    mapping
        .index_of(&first)
        .map(|i| SoftLabel::one_hot(mapping.num_classes(), i))
        .ok_or_else(|| CellError::Unmapped(raw.to_owned()))
}

/// One-hot encoding of a single raw label.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultLabelGenerator {
    pub mapping: LabelMapping,
}

impl LabelGenerator for DefaultLabelGenerator {
    fn mapping(&self) -> &LabelMapping {
        &self.mapping
    }

    fn annotation_prob(&self, raw: &str) -> Result<SoftLabel, CellError> {
        single_choice(&self.mapping, raw)
    }
}

/// First and second choice (`"first;second"`) spread over two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct EffiLabelGenerator {
    pub mapping: LabelMapping,
    pub first_weight: f64,
    pub second_weight: f64,
}

impl EffiLabelGenerator {
    pub fn new(mapping: LabelMapping, first_weight: f64, second_weight: f64) -> Result<Self> {
        if !((first_weight + second_weight - 1.0).abs() < 1e-9 && first_weight > second_weight && second_weight > 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "choice weights must satisfy w1 + w2 = 1 and w1 > w2 > 0, got ({first_weight}, {second_weight})"
            )));
        }
        Ok(Self { mapping, first_weight, second_weight })
    }
}

impl LabelGenerator for EffiLabelGenerator {
    fn mapping(&self) -> &LabelMapping {
        &self.mapping
    }

    fn annotation_prob(&self, raw: &str) -> Result<SoftLabel, CellError> {
        let choices: Vec<String> = split_choices(raw).collect();
        let idx = |c: &str| self.mapping.index_of(c).ok_or_else(|| CellError::Unmapped(c.to_owned()));
        let c = self.mapping.num_classes();
        match choices.as_slice() {
            [first] => Ok(SoftLabel::one_hot(c, idx(first)?)),
            [first, second] => {
                let (i, j) = (idx(first)?, idx(second)?);
                if i == j {
                    return Ok(SoftLabel::one_hot(c, i));
                }
                let mut p = vec![0.0; c];
                p[i] = self.first_weight;
                p[j] = self.second_weight;
                Ok(SoftLabel(p))
            }
            [] => Err(CellError::Unmapped(raw.to_owned())),
            _ => Err(CellError::TooManyChoices),
        }
    }
}

/// Multi-hot encoding of a set of topics (`"economy;health"`).
#[derive(Debug, Clone, PartialEq)]
pub struct TopicLabelGenerator {
    pub mapping: LabelMapping,
    /// A topic is part of the hard label when its aggregated probability is at least this.
    pub threshold: f64,
}

impl TopicLabelGenerator {
    pub fn new(mapping: LabelMapping, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidConfig(format!("topic threshold {threshold} outside (0, 1)")));
        }
        Ok(Self { mapping, threshold })
    }
}

impl LabelGenerator for TopicLabelGenerator {
    fn mapping(&self) -> &LabelMapping {
        &self.mapping
    }

    fn annotation_prob(&self, raw: &str) -> Result<SoftLabel, CellError> {
        let mut p = vec![0.0; self.mapping.num_classes()];
        let mut any = false;
        for choice in split_choices(raw) {
            let i = self.mapping.index_of(&choice).ok_or(CellError::Unmapped(choice))?;
            p[i] = 1.0;
            any = true;
        }
        if !any {
            return Err(CellError::Unmapped(raw.to_owned()));
        }
        Ok(SoftLabel(p))
    }

    fn is_multi_label(&self) -> bool {
        true
    }

    fn topic_threshold(&self) -> Option<f64> {
        Some(self.threshold)
    }
}

/// One-hot over the points of a rating scale. Class indices follow scale order,
/// which the interval metric relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalLabelGenerator {
    pub mapping: LabelMapping,
}

impl OrdinalLabelGenerator {
    /// Scale `1..=points`.
    pub fn with_scale(points: usize) -> Result<Self> {
        Ok(Self { mapping: LabelMapping::from_labels((1..=points).map(|p| p.to_string()))? })
    }
}

impl LabelGenerator for OrdinalLabelGenerator {
    fn mapping(&self) -> &LabelMapping {
        &self.mapping
    }

    fn annotation_prob(&self, raw: &str) -> Result<SoftLabel, CellError> {
        single_choice(&self.mapping, raw)
    }

    fn is_ordinal(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorVariant {
    #[default]
    Default,
    Effi,
    Topic,
    Ordinal,
}

impl std::str::FromStr for GeneratorVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Self::Default),
            "effi" => Ok(Self::Effi),
            "topic" => Ok(Self::Topic),
            "ordinal" => Ok(Self::Ordinal),
            other => Err(Error::InvalidConfig(format!("unknown label generator {other:?}"))),
        }
    }
}

fn default_effi_weights() -> [f64; 2] {
    [2.0 / 3.0, 1.0 / 3.0]
}

fn default_topic_threshold() -> f64 {
    0.5
}

/// Serializable description of a generator. A missing mapping is inferred
/// from the annotations when the generator is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(default)]
    pub variant: GeneratorVariant,
    #[serde(default)]
    pub mapping: Option<LabelMapping>,
    #[serde(default = "default_effi_weights")]
    pub effi_weights: [f64; 2],
    #[serde(default)]
    pub ordinal_scale: Option<usize>,
    #[serde(default = "default_topic_threshold")]
    pub topic_threshold: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self::new(GeneratorVariant::Default)
    }
}

impl GeneratorSpec {
    pub fn new(variant: GeneratorVariant) -> Self {
        Self {
            variant,
            mapping: None,
            effi_weights: default_effi_weights(),
            ordinal_scale: None,
            topic_threshold: default_topic_threshold(),
        }
    }

    /// Instantiates the generator, building the mapping from the raw
    /// annotations when none was given.
    pub fn resolve<S: AsRef<str>>(&self, frame: &AnnotationFrame, annotators: &[S]) -> Result<Generator> {
        let mapping = match (&self.mapping, self.variant, self.ordinal_scale) {
            (Some(m), _, _) => m.clone(),
            (None, GeneratorVariant::Ordinal, Some(points)) => OrdinalLabelGenerator::with_scale(points)?.mapping,
            (None, GeneratorVariant::Ordinal, None) => ordinal_mapping(frame, annotators)?,
            (None, _, _) => infer_label_mapping(frame, annotators)?,
        };
        let [w1, w2] = self.effi_weights;
        Ok(match self.variant {
            GeneratorVariant::Default => Generator::Default(DefaultLabelGenerator { mapping }),
            GeneratorVariant::Effi => Generator::Effi(EffiLabelGenerator::new(mapping, w1, w2)?),
            GeneratorVariant::Topic => Generator::Topic(TopicLabelGenerator::new(mapping, self.topic_threshold)?),
            GeneratorVariant::Ordinal => Generator::Ordinal(OrdinalLabelGenerator { mapping }),
        })
    }
}

/// Scale points ordered numerically when every value is a number.
fn ordinal_mapping<S: AsRef<str>>(frame: &AnnotationFrame, annotators: &[S]) -> Result<LabelMapping> {
    let values = distinct_values(frame, annotators)?;
    check_uniform_types(&values)?;
    let mut ordered: Vec<String> = values.iter().cloned().collect();
    if all_numeric(&values) {
        ordered.sort_by(|a, b| numeric_value(a).partial_cmp(&numeric_value(b)).expect("finite"));
    }
    LabelMapping::from_labels(ordered)
}

/// One of the preset generators.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Default(DefaultLabelGenerator),
    Effi(EffiLabelGenerator),
    Topic(TopicLabelGenerator),
    Ordinal(OrdinalLabelGenerator),
}

impl Generator {
    fn inner(&self) -> &dyn LabelGenerator {
        match self {
            Generator::Default(g) => g,
            Generator::Effi(g) => g,
            Generator::Topic(g) => g,
            Generator::Ordinal(g) => g,
        }
    }

    pub fn variant(&self) -> GeneratorVariant {
        match self {
            Generator::Default(_) => GeneratorVariant::Default,
            Generator::Effi(_) => GeneratorVariant::Effi,
            Generator::Topic(_) => GeneratorVariant::Topic,
            Generator::Ordinal(_) => GeneratorVariant::Ordinal,
        }
    }
}

impl LabelGenerator for Generator {
    fn mapping(&self) -> &LabelMapping {
        self.inner().mapping()
    }

    fn annotation_prob(&self, raw: &str) -> Result<SoftLabel, CellError> {
        self.inner().annotation_prob(raw)
    }

    fn is_multi_label(&self) -> bool {
        self.inner().is_multi_label()
    }

    fn is_ordinal(&self) -> bool {
        self.inner().is_ordinal()
    }

    fn topic_threshold(&self) -> Option<f64> {
        self.inner().topic_threshold()
    }
}
