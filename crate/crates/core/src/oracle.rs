//! Slow reference implementations used to cross-check the library in tests.
//!
//! These deliberately take a different route from the main code: explicit
//! contingency tables, per-item Fleiss terms, and Krippendorff's α by
//! enumerating every ordered pair of pairable values.

use crate::agreement::Distance;

/// `(value, degenerate)` with the same fallback rule as the library: when the
/// chance term leaves nothing to correct for, 1 for perfect observed
/// agreement and 0 otherwise.
pub type OracleScore = (f64, bool);

fn fallback(perfect: bool) -> OracleScore {
    (if perfect { 1.0 } else { 0.0 }, true)
}

fn classes(a: &[usize], b: &[usize]) -> usize {
    a.iter().chain(b).max().map_or(0, |m| m + 1)
}

pub fn cohen_kappa(a: &[usize], b: &[usize]) -> OracleScore {
    let k = classes(a, b);
    let n = a.len() as f64;
    let mut table = vec![vec![0.0f64; k]; k];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1.0;
    }
    let p_o = (0..k).map(|c| table[c][c]).sum::<f64>() / n;
    let p_e: f64 = (0..k)
        .map(|c| {
            let row: f64 = table[c].iter().sum();
            let col: f64 = table.iter().map(|r| r[c]).sum();
            row * col / (n * n)
        })
        .sum();
    if p_e == 1.0 {
        return fallback(p_o == 1.0);
    }
    ((p_o - p_e) / (1.0 - p_e), false)
}

/// Fleiss' κ with the textbook per-item agreement terms, two ratings per item.
pub fn fleiss_kappa(a: &[usize], b: &[usize]) -> OracleScore {
    let k = classes(a, b);
    let n = a.len() as f64;
    let raters = 2.0;
    let mut p_bar = 0.0;
    let mut totals = vec![0.0f64; k];
    for (&x, &y) in a.iter().zip(b) {
        let mut counts = vec![0.0f64; k];
        counts[x] += 1.0;
        counts[y] += 1.0;
        p_bar += counts.iter().map(|c| c * (c - 1.0)).sum::<f64>() / (raters * (raters - 1.0));
        for c in 0..k {
            totals[c] += counts[c];
        }
    }
    p_bar /= n;
    let p_e: f64 = totals.iter().map(|t| (t / (n * raters)).powi(2)).sum();
    if p_e == 1.0 {
        return fallback(p_bar == 1.0);
    }
    ((p_bar - p_e) / (1.0 - p_e), false)
}

fn delta(distance: Distance, c: usize, k: usize) -> f64 {
    match distance {
        Distance::Nominal => {
            if c == k {
                0.0
            } else {
                1.0
            }
        }
        Distance::Interval => {
            let d = c as f64 - k as f64;
            d * d
        }
    }
}

/// α = 1 − (n − 1) · Σ_within δ / Σ_all δ, summing over ordered pairs of
/// distinct values, either inside one unit or across the whole pool.
pub fn krippendorff_alpha(a: &[usize], b: &[usize], distance: Distance) -> OracleScore {
    let values: Vec<(usize, usize)> = a.iter().zip(b).enumerate().flat_map(|(u, (&x, &y))| [(u, x), (u, y)]).collect();
    let n = values.len() as f64;
    let mut within = 0.0;
    let mut all = 0.0;
    for (i, &(ui, vi)) in values.iter().enumerate() {
        for (j, &(uj, vj)) in values.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = delta(distance, vi, vj);
            all += d;
            if ui == uj {
                // m_u − 1 = 1 with two values per unit
                within += d;
            }
        }
    }
    if all == 0.0 {
        return fallback(within == 0.0);
    }
    (1.0 - (n - 1.0) * within / all, false)
}

pub fn cosine(a: &[Vec<f64>], b: &[Vec<f64>]) -> OracleScore {
    let unit = |v: &[f64]| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (norm > 0.0).then(|| v.iter().map(|x| x / norm).collect::<Vec<_>>())
    };
    let total: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| match (unit(x), unit(y)) {
            (Some(x), Some(y)) => x.iter().zip(&y).map(|(p, q)| p * q).sum(),
            _ => 0.0,
        })
        .sum();
    (total / a.len() as f64, false)
}

pub fn multi_label(a: &[Vec<f64>], b: &[Vec<f64>], cutoff: f64) -> OracleScore {
    let k = a.iter().chain(b).map(Vec::len).max().unwrap_or(0);
    let mut scores = Vec::new();
    let mut all_perfect = true;
    for c in 0..k {
        let ind = |v: &Vec<f64>| usize::from(v.get(c).copied().unwrap_or(0.0) >= cutoff);
        let xa: Vec<usize> = a.iter().map(ind).collect();
        let xb: Vec<usize> = b.iter().map(ind).collect();
        let constant = xa.iter().chain(&xb).all(|&v| v == xa[0]);
        if constant {
            all_perfect &= xa == xb;
            continue;
        }
        scores.push(krippendorff_alpha(&xa, &xb, Distance::Nominal).0);
    }
    if scores.is_empty() {
        return fallback(all_perfect);
    }
    (scores.iter().sum::<f64>() / scores.len() as f64, false)
}
