//! Dirichlet concentration updates with learning and forgetting rates.
//!
//! The update applied once per trial is
//! `a' = max(omega * a, floor) + eta * sum over events of (outcome x state)`,
//! where the state weight is the posterior joint belief at the time of the
//! observation (soft counts, not a hard assignment). The decay runs once per
//! trial, not once per within-trial step.

use crate::error::{Error, Result};
use crate::inference::BeliefState;
use crate::math::Categorical;
use crate::model::{ConcentrationArray, GenerativeModel};

/// Keeps concentrations strictly positive under heavy forgetting.
pub const CONCENTRATION_FLOOR: f64 = 1e-8;

/// One observed (outcome, state-belief) pair destined for a learnable
/// modality.
#[derive(Debug, Clone)]
pub struct LearningEvent {
    pub modality: usize,
    /// One-hot observed outcome.
    pub outcome: Categorical,
    /// State beliefs at observation time; the joint is what gets counted.
    pub state: BeliefState,
    /// Within-trial step index.
    pub timestamp: usize,
}

impl LearningEvent {
    pub fn new(modality: usize, outcome: Categorical, state: BeliefState, timestamp: usize) -> Result<Self> {
        let ones = outcome.probs().iter().filter(|&&p| p == 1.0).count();
        let zeros = outcome.probs().iter().filter(|&&p| p == 0.0).count();
        if ones != 1 || ones + zeros != outcome.len() {
            return Err(Error::InvalidValue {
                op: "LearningEvent outcome (must be one-hot)",
                index: 0,
                value: outcome.get(0),
            });
        }
        Ok(Self {
            modality,
            outcome,
            state,
            timestamp,
        })
    }

    /// Index of the observed outcome.
    pub fn outcome_index(&self) -> usize {
        self.outcome.argmax()
    }
}

/// Applies the decay-then-count update to one concentration array.
///
/// Every entry is first scaled by `forgetting_rate` (and floor-clamped), then
/// incremented by `learning_rate` times the summed outcome-state outer
/// products of the events.
pub fn update_concentrations(
    conc: &ConcentrationArray,
    events: &[LearningEvent],
    learning_rate: f64,
    forgetting_rate: f64,
) -> Result<ConcentrationArray> {
    let n_outcomes = conc.n_outcomes();
    let n_states = conc.n_states();
    for event in events {
        if event.outcome.len() != n_outcomes {
            return Err(Error::LengthMismatch {
                op: "update_concentrations outcome",
                left: event.outcome.len(),
                right: n_outcomes,
            });
        }
        if event.state.joint().len() != n_states {
            return Err(Error::LengthMismatch {
                op: "update_concentrations state",
                left: event.state.joint().len(),
                right: n_states,
            });
        }
    }
    let mut data: Vec<f64> = conc
        .data()
        .iter()
        .map(|&a| (forgetting_rate * a).max(CONCENTRATION_FLOOR))
        .collect();
    for event in events {
        for (o, &ov) in event.outcome.probs().iter().enumerate() {
            if ov == 0.0 {
                continue;
            }
            for (s, &qs) in event.state.joint().probs().iter().enumerate() {
                if qs > 0.0 {
                    data[s * n_outcomes + o] += learning_rate * ov * qs;
                }
            }
        }
    }
    ConcentrationArray::new(conc.modality, n_outcomes, n_states, data)
}

/// Applies one trial's worth of events to a model.
///
/// Events are grouped by modality; each modality that received at least one
/// event gets a single decay-then-count update with the model's learning and
/// forgetting rates, after which the point-estimate likelihoods are
/// refreshed. Modalities without events (and fixed-likelihood modalities) are
/// left untouched. An event addressed to a modality without learnable
/// concentrations is an error.
pub fn learn_trial(model: &mut GenerativeModel, events: &[LearningEvent]) -> Result<()> {
    let n_modalities = model.modalities.len();
    for event in events {
        if event.modality >= n_modalities {
            return Err(Error::IndexOutOfRange {
                what: "learning event modality",
                index: event.modality,
                bound: n_modalities,
            });
        }
        if model.concentrations[event.modality].is_none() {
            return Err(Error::NotLearnable(event.modality));
        }
    }
    for m in 0..n_modalities {
        let batch: Vec<LearningEvent> = events
            .iter()
            .filter(|e| e.modality == m)
            .cloned()
            .collect();
        if batch.is_empty() {
            continue;
        }
        let conc = model.concentrations[m]
            .as_ref()
            .expect("checked learnable above");
        let updated =
            update_concentrations(conc, &batch, model.learning_rate, model.forgetting_rate)?;
        model.concentrations[m] = Some(updated);
    }
    model.refresh_likelihoods()
}
