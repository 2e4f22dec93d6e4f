//! Resource planning and sample allocation.
//!
//! The planner links six quantities: annotator count `n`, hours per annotator
//! `t`, annotation rate `ρ` (annotations per hour), distinct sample count `N`,
//! double-annotation proportion `d` and re-annotation proportion `r`.
//!
//! `d` and `r` are proportions of an annotator's *distinct* samples. A
//! re-annotation costs one extra annotation and a double-annotated sample
//! costs one annotation to each of its two annotators, so every annotator
//! covers `m = t·ρ / (1 + r)` distinct samples and
//!
//! ```text
//! N = n · m · (1 − d/2)
//! ```
//!
//! Any one of `n`, `t`, `ρ`, `N` can be left unknown and is solved in closed form.

mod allocate;
mod export;
mod redistribute;

pub use allocate::{distribute, Allocation, AnnotatorAssignment, DistributeOptions, DoubleAssignment};
pub use export::{export_allocation, write_files, LEFTOVER_FILE, REANNOTATION_FLAG};
pub use redistribute::{redistribute, Targets};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack absorbed by floor operations on values that should be integral.
pub(crate) const FLOOR_EPS: f64 = 1e-9;

pub(crate) fn floor(x: f64) -> usize {
    (x + FLOOR_EPS).floor().max(0.0) as usize
}

/// The planning variables. Exactly one of `annotators`, `time`, `rate` and
/// `samples` may be `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceSpec {
    pub annotators: Option<f64>,
    pub time: Option<f64>,
    pub rate: Option<f64>,
    pub samples: Option<f64>,
    #[serde(default)]
    pub double: f64,
    #[serde(default)]
    pub re: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    Annotators,
    Time,
    Rate,
    Samples,
}

/// A fully determined plan. Counts are floored; the exact values are kept
/// alongside so rounding loss stays visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedResources {
    pub solved_for: Option<Variable>,
    pub annotators: usize,
    pub annotators_exact: f64,
    pub time: f64,
    pub rate: f64,
    pub samples: usize,
    pub samples_exact: f64,
    pub double: f64,
    pub re: f64,
    /// Distinct samples per annotator, `t·ρ/(1+r)`, floored.
    pub per_annotator_load: usize,
    pub per_annotator_load_exact: f64,
}

impl SolvedResources {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialises")
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::NonPositiveSolution { variable: name, value: v })
    }
}

/// Completes `spec` through the capacity identity.
pub fn solve_resources(spec: &ResourceSpec) -> Result<SolvedResources> {
    let ResourceSpec { annotators, time, rate, samples, double: d, re: r } = *spec;
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidConfig(format!("double proportion {d} outside [0, 1]")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidConfig(format!("re-annotation proportion {r} outside [0, 1)")));
    }
    for (name, v) in [("annotators", annotators), ("time", time), ("rate", rate), ("samples", samples)] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
    }
    let unknowns = [annotators, time, rate, samples].iter().filter(|v| v.is_none()).count();
    if unknowns > 1 {
        return Err(Error::Underdetermined(unknowns));
    }
    // distinct samples produced per unit of n·t·ρ
    let yield_factor = (1.0 - d / 2.0) / (1.0 + r);

    let (n, t, rho, big_n, solved_for) = match (annotators, time, rate, samples) {
        (None, Some(t), Some(rho), Some(big_n)) => {
            let n = positive("annotators", big_n / (t * rho * yield_factor))?;
            (n, t, rho, big_n, Some(Variable::Annotators))
        }
        (Some(n), None, Some(rho), Some(big_n)) => {
            let t = positive("time", big_n / (n * rho * yield_factor))?;
            (n, t, rho, big_n, Some(Variable::Time))
        }
        (Some(n), Some(t), None, Some(big_n)) => {
            let rho = positive("rate", big_n / (n * t * yield_factor))?;
            (n, t, rho, big_n, Some(Variable::Rate))
        }
        (Some(n), Some(t), Some(rho), None) => {
            let big_n = positive("samples", n * t * rho * yield_factor)?;
            (n, t, rho, big_n, Some(Variable::Samples))
        }
        (Some(n), Some(t), Some(rho), Some(big_n)) => {
            let implied = n * t * rho * yield_factor;
            if (implied - big_n).abs() > n.max(1.0) {
                return Err(Error::Overdetermined(format!(
                    "{n} annotators x {t} h x {rho}/h cover {implied:.3} samples, not {big_n}"
                )));
            }
            (n, t, rho, big_n, None)
        }
        _ => unreachable!("unknown count checked above"),
    };

    let annotators = floor(n);
    if annotators == 0 {
        return Err(Error::NonPositiveSolution { variable: "annotators", value: n });
    }
    let load_exact = t * rho / (1.0 + r);
    Ok(SolvedResources {
        solved_for,
        annotators,
        annotators_exact: n,
        time: t,
        rate: rho,
        samples: floor(big_n),
        samples_exact: big_n,
        double: d,
        re: r,
        per_annotator_load: floor(load_exact),
        per_annotator_load_exact: load_exact,
    })
}
