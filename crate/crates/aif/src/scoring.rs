//! Confidence-based scoring of learned concentrations against the ground
//! truth.
//!
//! The raw score of an (industry, process) pair is the concentration the
//! agent assigns to the correct outcome minus its largest concentration on
//! any incorrect outcome, so confident wrong beliefs score negative. The
//! normalized score divides by the column's concentration sum, bounding each
//! pair in (-1, 1) and keeping totals from ballooning as counts accumulate.
//! The raw totals are reported alongside so both readings stay inspectable.

use crate::env::GroundTruth;
use crate::error::{Error, Result};
use crate::model::ConcentrationArray;

/// Which (industry, process) pairs a report covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    All,
    Industries(Vec<usize>),
    Pairs(Vec<(usize, usize)>),
}

impl Scope {
    /// Expands to the explicit pair list for the given dimensions.
    pub fn pairs(&self, n_industries: usize, n_processes: usize) -> Vec<(usize, usize)> {
        match self {
            Scope::All => (0..n_industries)
                .flat_map(|j| (0..n_processes).map(move |k| (j, k)))
                .collect(),
            Scope::Industries(list) => list
                .iter()
                .flat_map(|&j| (0..n_processes).map(move |k| (j, k)))
                .collect(),
            Scope::Pairs(pairs) => pairs.clone(),
        }
    }
}

/// Score of one (industry, process) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub industry: usize,
    pub process: usize,
    pub raw: f64,
    pub normalized: f64,
}

/// Scores over a scope, with per-pair, per-industry, and grand totals.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub pairs: Vec<PairScore>,
    /// Raw per-industry sums over in-scope pairs (length = industry count).
    pub industry_totals_raw: Vec<f64>,
    /// Normalized per-industry sums over in-scope pairs.
    pub industry_totals_norm: Vec<f64>,
    pub total_raw: f64,
    pub total_norm: f64,
}

/// Raw pair score: belief in the correct outcome minus the strongest belief
/// in any incorrect outcome, in concentration units.
pub fn pair_score(column: &[f64], correct: usize) -> Result<f64> {
    if column.len() < 2 {
        return Err(Error::EmptyInput { op: "pair_score" });
    }
    if correct >= column.len() {
        return Err(Error::IndexOutOfRange {
            what: "correct outcome",
            index: correct,
            bound: column.len(),
        });
    }
    let best_wrong = column
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != correct)
        .map(|(_, &a)| a)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(column[correct] - best_wrong)
}

/// Normalizes a raw pair score by the column's concentration sum, bounding it
/// in (-1, 1).
pub fn normalize_pair_score(raw: f64, column: &[f64]) -> f64 {
    raw / column.iter().sum::<f64>()
}

/// Scores the learned concentrations against the truth over a scope.
///
/// The correct outcome of each cell is the argmax of the truth mapping (well
/// defined for the deterministic tables the scenarios ship).
pub fn total_score(
    conc: &ConcentrationArray,
    truth: &GroundTruth,
    scope: &Scope,
) -> Result<ScoreReport> {
    let ni = truth.n_industries();
    let np = truth.n_processes();
    if conc.n_states() != ni * np {
        return Err(Error::LengthMismatch {
            op: "total_score",
            left: conc.n_states(),
            right: ni * np,
        });
    }
    let pairs_in_scope = scope.pairs(ni, np);
    if pairs_in_scope.is_empty() {
        return Err(Error::EmptyInput { op: "total_score" });
    }
    let mut pairs = Vec::with_capacity(pairs_in_scope.len());
    let mut industry_totals_raw = vec![0.0; ni];
    let mut industry_totals_norm = vec![0.0; ni];
    let mut total_raw = 0.0;
    let mut total_norm = 0.0;
    for (j, k) in pairs_in_scope {
        if j >= ni || k >= np {
            return Err(Error::IndexOutOfRange {
                what: "score pair",
                index: j * np + k,
                bound: ni * np,
            });
        }
        let column = conc.column(j * np + k);
        let correct = truth.correct_outcome(j, k);
        let raw = pair_score(column, correct)?;
        let normalized = normalize_pair_score(raw, column);
        industry_totals_raw[j] += raw;
        industry_totals_norm[j] += normalized;
        total_raw += raw;
        total_norm += normalized;
        pairs.push(PairScore {
            industry: j,
            process: k,
            raw,
            normalized,
        });
    }
    Ok(ScoreReport {
        pairs,
        industry_totals_raw,
        industry_totals_norm,
        total_raw,
        total_norm,
    })
}
