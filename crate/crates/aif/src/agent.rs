//! The two-level agent: a top level that infers the industry from a cue and
//! passes it down as an empirical prior, and a bottom level that selects
//! research processes, observes outcomes, and learns its outcome likelihoods.
//!
//! One agent instance runs trials sequentially (learning makes them order
//! dependent); independent replicas with different seeds parallelize freely.

use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::env::EnvironmentState;
use crate::error::{Error, Result};
use crate::inference::{
    compute_vfe, expected_free_energy, infer_states, predict_for_policy, select_policy,
    BeliefState, EfeBreakdown, Observation,
};
use crate::learning::{learn_trial, update_concentrations, LearningEvent};
use crate::math::Categorical;
use crate::model::{
    build_two_level_model, ConcentrationArray, GenerativeModel, Hyper, ModelDims, FACTOR_INDUSTRY,
    MODALITY_CUE, MODALITY_OUTCOME, MODALITY_PROCESS,
};

/// Replaces the bottom level's industry prior with the top level's posterior,
/// so the cue's evidence conditions everything the bottom level does.
pub fn link_down(top_posterior: &Categorical, bottom: &mut GenerativeModel) -> Result<()> {
    let cardinality = bottom.factors[FACTOR_INDUSTRY].cardinality;
    if top_posterior.len() != cardinality {
        return Err(Error::LengthMismatch {
            op: "link_down",
            left: top_posterior.len(),
            right: cardinality,
        });
    }
    bottom.priors[FACTOR_INDUSTRY].dist = top_posterior.clone();
    Ok(())
}

/// Everything logged about one trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub iteration: u32,
    pub trial: usize,
    /// True industry set by the environment.
    pub industry: usize,
    /// Cue observed at the start of the trial.
    pub cue: usize,
    pub top_posterior: Vec<f64>,
    /// Process chosen at each step.
    pub chosen_processes: Vec<usize>,
    /// Outcome observed at each step.
    pub outcomes: Vec<usize>,
    /// Per-policy expected-free-energy breakdown at the first step.
    pub first_step_efe: Vec<EfeBreakdown>,
    /// Variational free energy after the last step's inference.
    pub final_vfe: Option<f64>,
    /// Hash of the bottom concentrations after learning.
    pub concentration_hash: String,
}

/// The two-level agent. Bottom-level concentrations persist across trials and
/// environments; everything else is reset per trial.
#[derive(Debug, Clone)]
pub struct HierarchicalAgent {
    pub top: GenerativeModel,
    pub bottom: GenerativeModel,
}

impl HierarchicalAgent {
    pub fn new(dims: ModelDims, hyper: Hyper) -> Result<Self> {
        let (top, bottom) = build_two_level_model(dims, hyper)?;
        Ok(Self { top, bottom })
    }

    /// Infers the industry from a cue with a fresh top-level prior.
    pub fn top_step(&self, cue: usize) -> Result<Categorical> {
        let prior = BeliefState::from_marginals(
            &self
                .top
                .priors
                .iter()
                .map(|p| p.dist.clone())
                .collect::<Vec<_>>(),
        )?;
        let posterior = infer_states(&self.top, &Observation::full(&[cue]), &prior)?;
        Ok(posterior.marginal(0).clone())
    }

    /// Swaps in previously learned bottom concentrations (carry-over between
    /// runs) and refreshes the likelihoods.
    pub fn replace_bottom_concentrations(
        &mut self,
        snapshot: Vec<Option<ConcentrationArray>>,
    ) -> Result<()> {
        if snapshot.len() != self.bottom.modalities.len() {
            return Err(Error::LengthMismatch {
                op: "replace_bottom_concentrations",
                left: snapshot.len(),
                right: self.bottom.modalities.len(),
            });
        }
        for (m, entry) in snapshot.iter().enumerate() {
            match (entry, &self.bottom.concentrations[m]) {
                (Some(conc), Some(current)) => {
                    if conc.n_outcomes() != current.n_outcomes()
                        || conc.n_states() != current.n_states()
                    {
                        return Err(Error::LengthMismatch {
                            op: "carry-over concentration shape",
                            left: conc.n_outcomes() * conc.n_states(),
                            right: current.n_outcomes() * current.n_states(),
                        });
                    }
                }
                (None, None) => {}
                _ => return Err(Error::NotLearnable(m)),
            }
        }
        self.bottom.concentrations = snapshot;
        self.bottom.refresh_likelihoods()
    }

    /// Runs one trial against the environment.
    ///
    /// Sequence: the environment emits a cue for its current industry; the
    /// top level infers the industry and passes it down; then for each step
    /// the bottom level scores all policies by expected free energy, samples
    /// one, observes the (process, outcome, cue) triple the environment
    /// emits, infers states, and queues a learning event for the outcome
    /// modality. All queued events are committed once at the end of the
    /// trial.
    ///
    /// Within the trial, policy scoring runs against a working copy of the
    /// bottom model that already includes the queued counts (without the
    /// per-trial decay); without that, a fresh agent would happily resample
    /// the same process four times instead of covering all of them.
    pub fn run_trial(
        &mut self,
        env: &mut EnvironmentState,
        iteration: u32,
        trial: usize,
        steps_per_trial: u32,
        policy_rng: &mut ChaCha8Rng,
    ) -> Result<TrialRecord> {
        self.run_trial_inner(env, iteration, trial, steps_per_trial, policy_rng)
            .map_err(|e| e.in_trial(iteration, trial))
    }

    fn run_trial_inner(
        &mut self,
        env: &mut EnvironmentState,
        iteration: u32,
        trial: usize,
        steps_per_trial: u32,
        policy_rng: &mut ChaCha8Rng,
    ) -> Result<TrialRecord> {
        let industry = env.current_industry();
        let cue = env.emit_cue();
        let top_posterior = self.top_step(cue)?;
        link_down(&top_posterior, &mut self.bottom)?;

        let mut working = self.bottom.clone();
        let mut belief = BeliefState::from_marginals(
            &working
                .priors
                .iter()
                .map(|p| p.dist.clone())
                .collect::<Vec<_>>(),
        )?;

        let mut events: Vec<LearningEvent> = Vec::new();
        let mut chosen_processes = Vec::new();
        let mut outcomes = Vec::new();
        let mut first_step_efe = Vec::new();
        let mut final_vfe = None;

        for step in 0..steps_per_trial {
            let breakdowns: Vec<EfeBreakdown> = working
                .policies
                .iter()
                .map(|p| expected_free_energy(&working, &belief, p))
                .collect::<Result<_>>()?;
            if step == 0 {
                first_step_efe = breakdowns.clone();
            }
            let totals: Vec<f64> = breakdowns.iter().map(|b| b.total).collect();
            let choice = select_policy(&totals, working.policy_precision, policy_rng)?;
            let process = choice.chosen;

            let outcome = env.emit_outcome(process)?;
            let step_cue = env.emit_cue();

            let predicted = predict_for_policy(&working, &belief, &working.policies[process])?;
            let prior_after_action = predicted
                .into_iter()
                .next()
                .expect("single-step policy produces one prediction")
                .states;

            let mut observed = vec![None; working.modalities.len()];
            observed[MODALITY_PROCESS] = Some(process);
            observed[MODALITY_OUTCOME] = Some(outcome);
            observed[MODALITY_CUE] = Some(step_cue);
            let obs = Observation::new(observed);

            let posterior = infer_states(&working, &obs, &prior_after_action)?;
            final_vfe = Some(compute_vfe(&working, &posterior, &obs, &prior_after_action)?.total);

            let event = LearningEvent::new(
                MODALITY_OUTCOME,
                Categorical::one_hot(working.modalities[MODALITY_OUTCOME].cardinality, outcome),
                posterior.clone(),
                step as usize,
            )?;
            // fold the count into the working model so the next step's
            // novelty sees it; decay waits for the end-of-trial commit
            let pending = update_concentrations(
                working.concentrations[MODALITY_OUTCOME]
                    .as_ref()
                    .expect("outcome modality is learnable"),
                std::slice::from_ref(&event),
                working.learning_rate,
                1.0,
            )?;
            working.concentrations[MODALITY_OUTCOME] = Some(pending);
            working.refresh_modality(MODALITY_OUTCOME)?;

            events.push(event);
            chosen_processes.push(process);
            outcomes.push(outcome);
            belief = posterior;
        }

        learn_trial(&mut self.bottom, &events)?;

        Ok(TrialRecord {
            iteration,
            trial,
            industry,
            cue,
            top_posterior: top_posterior.probs().to_vec(),
            chosen_processes,
            outcomes,
            first_step_efe,
            final_vfe,
            concentration_hash: hash_concentrations(&self.bottom.concentrations),
        })
    }
}

/// Stable hash of a concentration snapshot (bit-exact over entries).
pub fn hash_concentrations(concentrations: &[Option<ConcentrationArray>]) -> String {
    let mut hasher = Sha256::new();
    for (m, entry) in concentrations.iter().enumerate() {
        hasher.update((m as u64).to_le_bytes());
        match entry {
            Some(conc) => {
                hasher.update([1u8]);
                for &a in conc.data() {
                    hasher.update(a.to_bits().to_le_bytes());
                }
            }
            None => hasher.update([0u8]),
        }
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
