//! Two-rater agreement statistics.
//!
//! All metrics take two aligned sequences over the samples both raters
//! labelled. Chance-corrected metrics are 0/0 when the expected agreement is
//! perfect (both raters use a single shared class); those cases score 1.0 if
//! observed agreement is perfect and 0.0 otherwise, with `degenerate` set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::SoftLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementMetric {
    #[default]
    KrippendorffNominal,
    KrippendorffInterval,
    CohenKappa,
    FleissKappa,
    Cosine,
    MultiKrippendorff,
}

impl AgreementMetric {
    pub const ALL: [AgreementMetric; 6] = [
        AgreementMetric::KrippendorffNominal,
        AgreementMetric::KrippendorffInterval,
        AgreementMetric::CohenKappa,
        AgreementMetric::FleissKappa,
        AgreementMetric::Cosine,
        AgreementMetric::MultiKrippendorff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgreementMetric::KrippendorffNominal => "krippendorff_nominal",
            AgreementMetric::KrippendorffInterval => "krippendorff_interval",
            AgreementMetric::CohenKappa => "cohen_kappa",
            AgreementMetric::FleissKappa => "fleiss_kappa",
            AgreementMetric::Cosine => "cosine",
            AgreementMetric::MultiKrippendorff => "multi_krippendorff",
        }
    }

    /// Whether the metric reads probability labels rather than hard classes.
    pub fn uses_prob_labels(self) -> bool {
        matches!(self, AgreementMetric::Cosine | AgreementMetric::MultiKrippendorff)
    }

    /// Smallest number of shared items the metric is defined for.
    pub fn min_items(self) -> usize {
        match self {
            AgreementMetric::Cosine => 1,
            _ => 2,
        }
    }
}

impl std::fmt::Display for AgreementMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AgreementMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match norm.as_str() {
            "krippendorff" | "krippendorff_nominal" | "nominal" => AgreementMetric::KrippendorffNominal,
            "krippendorff_interval" | "interval" => AgreementMetric::KrippendorffInterval,
            "cohen" | "cohen_kappa" | "cohens_kappa" => AgreementMetric::CohenKappa,
            "fleiss" | "fleiss_kappa" => AgreementMetric::FleissKappa,
            "cosine" => AgreementMetric::Cosine,
            "multi_krippendorff" | "multi_label" => AgreementMetric::MultiKrippendorff,
            _ => return Err(Error::InvalidConfig(format!("unknown agreement metric {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Nominal,
    /// Squared difference of class indices.
    Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    /// Set when the chance-corrected formula was 0/0 and the fallback applied.
    pub degenerate: bool,
}

impl Score {
    fn new(value: f64) -> Self {
        Self { value, degenerate: false }
    }

    fn fallback(perfect: bool) -> Self {
        Self { value: if perfect { 1.0 } else { 0.0 }, degenerate: true }
    }
}

fn check_lengths(a: usize, b: usize, min: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidConfig(format!("label sequences differ in length ({a} vs {b})")));
    }
    if a < min {
        return Err(Error::InsufficientOverlap { needed: min, got: a });
    }
    Ok(())
}

fn num_classes(a: &[usize], b: &[usize]) -> usize {
    a.iter().chain(b).copied().max().map_or(0, |m| m + 1)
}

/// Cohen's κ from the two raters' separate marginals.
pub fn cohen_kappa(a: &[usize], b: &[usize]) -> Result<Score> {
    check_lengths(a.len(), b.len(), 2)?;
    let k = num_classes(a, b);
    let n = a.len() as u64;
    let (mut row, mut col) = (vec![0u64; k], vec![0u64; k]);
    let mut agree = 0u64;
    for (&x, &y) in a.iter().zip(b) {
        row[x] += 1;
        col[y] += 1;
        agree += u64::from(x == y);
    }
    let chance: u64 = row.iter().zip(&col).map(|(r, c)| r * c).sum();
    if chance == n * n {
        return Ok(Score::fallback(agree == n));
    }
    let p_o = agree as f64 / n as f64;
    let p_e = chance as f64 / (n * n) as f64;
    Ok(Score::new((p_o - p_e) / (1.0 - p_e)))
}

/// Fleiss' κ for two raters: chance agreement from the pooled marginals
/// (equal to Scott's π).
pub fn fleiss_kappa(a: &[usize], b: &[usize]) -> Result<Score> {
    check_lengths(a.len(), b.len(), 2)?;
    let k = num_classes(a, b);
    let n = a.len() as u64;
    let mut pooled = vec![0u64; k];
    let mut agree = 0u64;
    for (&x, &y) in a.iter().zip(b) {
        pooled[x] += 1;
        pooled[y] += 1;
        agree += u64::from(x == y);
    }
    if pooled.iter().any(|&c| c == 2 * n) {
        return Ok(Score::fallback(agree == n));
    }
    let p_o = agree as f64 / n as f64;
    let total = (2 * n) as f64;
    let p_e: f64 = pooled.iter().map(|&c| (c as f64 / total).powi(2)).sum();
    Ok(Score::new((p_o - p_e) / (1.0 - p_e)))
}

fn delta(distance: Distance, c: usize, k: usize) -> f64 {
    match distance {
        Distance::Nominal => f64::from(u8::from(c != k)),
        Distance::Interval => (c as f64 - k as f64).powi(2),
    }
}

/// Krippendorff's α = 1 − D_o/D_e on the two-rater coincidence matrix.
pub fn krippendorff_alpha(a: &[usize], b: &[usize], distance: Distance) -> Result<Score> {
    check_lengths(a.len(), b.len(), 2)?;
    let k = num_classes(a, b);
    let mut pooled = vec![0u64; k];
    let mut observed = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        pooled[x] += 1;
        pooled[y] += 1;
        // each unit adds (x, y) and (y, x) to the coincidence matrix
        observed += 2.0 * delta(distance, x, y);
    }
    let total = (2 * a.len()) as f64;
    let mut expected = 0.0;
    for c in 0..k {
        for j in 0..k {
            if pooled[c] > 0 && pooled[j] > 0 && c != j {
                expected += (pooled[c] * pooled[j]) as f64 * delta(distance, c, j);
            }
        }
    }
    if expected == 0.0 {
        return Ok(Score::fallback(observed == 0.0));
    }
    let d_o = observed / total;
    let d_e = expected / (total * (total - 1.0));
    Ok(Score::new(1.0 - d_o / d_e))
}

/// Mean cosine similarity over samples; a zero vector contributes 0.
pub fn cosine_agreement<A: AsRef<[f64]>, B: AsRef<[f64]>>(a: &[A], b: &[B]) -> Result<Score> {
    check_lengths(a.len(), b.len(), 1)?;
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let (x, y) = (x.as_ref(), y.as_ref());
            let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            let nx = x.iter().map(|p| p * p).sum::<f64>().sqrt();
            let ny = y.iter().map(|q| q * q).sum::<f64>().sqrt();
            if nx == 0.0 || ny == 0.0 {
                0.0
            } else {
                dot / (nx * ny)
            }
        })
        .sum();
    Ok(Score::new(sum / a.len() as f64))
}

/// Threshold at which a multi-label probability counts as "selected".
pub const MULTI_LABEL_CUTOFF: f64 = 0.5;

/// Per-class nominal α over selected/not-selected indicators, averaged over
/// the classes whose pooled indicators vary.
pub fn multi_label_agreement<A: AsRef<[f64]>, B: AsRef<[f64]>>(a: &[A], b: &[B]) -> Result<Score> {
    check_lengths(a.len(), b.len(), 2)?;
    let classes = a.iter().map(|x| x.as_ref().len()).chain(b.iter().map(|y| y.as_ref().len())).max().unwrap_or(0);
    let bit = |v: &[f64], c: usize| usize::from(v.get(c).is_some_and(|&p| p >= MULTI_LABEL_CUTOFF));
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut all_perfect = true;
    for c in 0..classes {
        let xa: Vec<usize> = a.iter().map(|x| bit(x.as_ref(), c)).collect();
        let xb: Vec<usize> = b.iter().map(|y| bit(y.as_ref(), c)).collect();
        let s = krippendorff_alpha(&xa, &xb, Distance::Nominal)?;
        if s.degenerate {
            all_perfect &= s.value == 1.0;
            continue;
        }
        sum += s.value;
        used += 1;
    }
    if used == 0 {
        return Ok(Score::fallback(all_perfect));
    }
    Ok(Score::new(sum / used as f64))
}

/// Agreement between two aligned label sequences under `metric`. Hard
/// metrics use each label's argmax class.
pub fn pairwise_agreement(a: &[&SoftLabel], b: &[&SoftLabel], metric: AgreementMetric) -> Result<Score> {
    fn hard(v: &[&SoftLabel]) -> Vec<usize> {
        v.iter().map(|p| p.argmax()).collect()
    }
    fn probs<'a>(v: &[&'a SoftLabel]) -> Vec<&'a [f64]> {
        v.iter().map(|p| p.probs()).collect()
    }
    match metric {
        AgreementMetric::KrippendorffNominal => krippendorff_alpha(&hard(a), &hard(b), Distance::Nominal),
        AgreementMetric::KrippendorffInterval => krippendorff_alpha(&hard(a), &hard(b), Distance::Interval),
        AgreementMetric::CohenKappa => cohen_kappa(&hard(a), &hard(b)),
        AgreementMetric::FleissKappa => fleiss_kappa(&hard(a), &hard(b)),
        AgreementMetric::Cosine => cosine_agreement(&probs(a), &probs(b)),
        AgreementMetric::MultiKrippendorff => multi_label_agreement(&probs(a), &probs(b)),
    }
}
