//! Generative-model data structures for one hierarchical level.
//!
//! A model is a factorized hidden state (one [`FactorSpec`] per factor), a set
//! of observation channels (one [`ModalitySpec`] per modality), and the usual
//! POMDP pieces: per-modality likelihood tables over the joint state space,
//! optional Dirichlet concentration tables shadowing them, per-factor
//! transition tables, log-preferences, initial-state priors, and a policy set.
//!
//! Joint states are indexed row-major with factor 0 slowest: for factor
//! cardinalities `[c0, c1]`, joint index `s = i0 * c1 + i1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{expected_log_likelihood, normalize, Categorical, SUM_TOLERANCE};

/// One hidden-state factor.
#[derive(Debug, Clone)]
pub struct FactorSpec {
    pub name: String,
    pub cardinality: usize,
    pub controllable: bool,
}

/// One observation channel.
#[derive(Debug, Clone)]
pub struct ModalitySpec {
    pub name: String,
    pub cardinality: usize,
}

/// Computes the joint index of a multi-factor state configuration.
pub fn joint_index(indices: &[usize], shape: &[usize]) -> usize {
    debug_assert_eq!(indices.len(), shape.len());
    let mut s = 0;
    for (&i, &c) in indices.iter().zip(shape) {
        debug_assert!(i < c);
        s = s * c + i;
    }
    s
}

/// Inverse of [`joint_index`].
pub fn joint_unravel(mut s: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for f in (0..shape.len()).rev() {
        out[f] = s % shape[f];
        s /= shape[f];
    }
    out
}

/// Per-modality conditional distribution over outcomes, one column per joint
/// state. Stored column-contiguous: `data[s * n_outcomes + o]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodArray {
    pub modality: usize,
    n_outcomes: usize,
    n_states: usize,
    data: Vec<f64>,
}

impl LikelihoodArray {
    pub fn new(modality: usize, n_outcomes: usize, n_states: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_outcomes * n_states {
            return Err(Error::LengthMismatch {
                op: "LikelihoodArray",
                left: data.len(),
                right: n_outcomes * n_states,
            });
        }
        let arr = Self {
            modality,
            n_outcomes,
            n_states,
            data,
        };
        arr.check_columns()?;
        Ok(arr)
    }

    fn check_columns(&self) -> Result<()> {
        for s in 0..self.n_states {
            let col = self.column(s);
            let mut sum = 0.0;
            for (o, &p) in col.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::InvalidValue {
                        op: "LikelihoodArray",
                        index: s * self.n_outcomes + o,
                        value: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::NotNormalized { sum });
            }
        }
        Ok(())
    }

    /// Square identity mapping: outcome i is certain in state i.
    pub fn identity(modality: usize, n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for s in 0..n {
            data[s * n + s] = 1.0;
        }
        Self {
            modality,
            n_outcomes: n,
            n_states: n,
            data,
        }
    }

    /// Maximally ambiguous table: every column uniform.
    pub fn uniform(modality: usize, n_outcomes: usize, n_states: usize) -> Self {
        Self {
            modality,
            n_outcomes,
            n_states,
            data: vec![1.0 / n_outcomes as f64; n_outcomes * n_states],
        }
    }

    /// Deterministic projection of the joint state onto one factor: the
    /// outcome equals that factor's index with certainty.
    pub fn projection(modality: usize, shape: &[usize], factor: usize) -> Self {
        let n_outcomes = shape[factor];
        let n_states: usize = shape.iter().product();
        let mut data = vec![0.0; n_outcomes * n_states];
        for s in 0..n_states {
            let idx = joint_unravel(s, shape);
            data[s * n_outcomes + idx[factor]] = 1.0;
        }
        Self {
            modality,
            n_outcomes,
            n_states,
            data,
        }
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn column(&self, state: usize) -> &[f64] {
        &self.data[state * self.n_outcomes..(state + 1) * self.n_outcomes]
    }

    #[inline]
    pub fn get(&self, outcome: usize, state: usize) -> f64 {
        self.data[state * self.n_outcomes + outcome]
    }

    /// True when every column is a point mass.
    pub fn is_deterministic(&self) -> bool {
        (0..self.n_states).all(|s| self.column(s).iter().filter(|&&p| p > 0.0).count() == 1)
    }
}

/// Dirichlet pseudo-counts shadowing a [`LikelihoodArray`]. Same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationArray {
    pub modality: usize,
    n_outcomes: usize,
    n_states: usize,
    data: Vec<f64>,
}

impl ConcentrationArray {
    pub fn new(
        modality: usize,
        n_outcomes: usize,
        n_states: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != n_outcomes * n_states {
            return Err(Error::LengthMismatch {
                op: "ConcentrationArray",
                left: data.len(),
                right: n_outcomes * n_states,
            });
        }
        for (i, &a) in data.iter().enumerate() {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::NonPositiveConcentration {
                    op: "ConcentrationArray",
                    index: i,
                    value: a,
                });
            }
        }
        Ok(Self {
            modality,
            n_outcomes,
            n_states,
            data,
        })
    }

    /// Uniform pseudo-counts.
    pub fn constant(modality: usize, n_outcomes: usize, n_states: usize, value: f64) -> Self {
        assert!(value > 0.0, "concentrations must be strictly positive");
        Self {
            modality,
            n_outcomes,
            n_states,
            data: vec![value; n_outcomes * n_states],
        }
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn column(&self, state: usize) -> &[f64] {
        &self.data[state * self.n_outcomes..(state + 1) * self.n_outcomes]
    }

    #[inline]
    pub fn column_mut(&mut self, state: usize) -> &mut [f64] {
        &mut self.data[state * self.n_outcomes..(state + 1) * self.n_outcomes]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// Per-factor transition tables, one column-stochastic map per control value.
/// `data[control][from][to]`, column = fixed `(control, from)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionArray {
    pub factor: usize,
    n_states: usize,
    n_controls: usize,
    data: Vec<f64>,
}

impl TransitionArray {
    pub fn new(factor: usize, n_states: usize, n_controls: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_controls * n_states * n_states {
            return Err(Error::LengthMismatch {
                op: "TransitionArray",
                left: data.len(),
                right: n_controls * n_states * n_states,
            });
        }
        let arr = Self {
            factor,
            n_states,
            n_controls,
            data,
        };
        for u in 0..n_controls {
            for from in 0..n_states {
                let sum: f64 = arr.column(u, from).iter().sum();
                if (sum - 1.0).abs() > SUM_TOLERANCE {
                    return Err(Error::NotNormalized { sum });
                }
            }
        }
        Ok(arr)
    }

    /// Single-control identity dynamics (the factor never changes).
    pub fn identity(factor: usize, n_states: usize) -> Self {
        let mut data = vec![0.0; n_states * n_states];
        for s in 0..n_states {
            data[s * n_states + s] = 1.0;
        }
        Self {
            factor,
            n_states,
            n_controls: 1,
            data,
        }
    }

    /// One control per state; control `u` moves the factor to state `u`
    /// regardless of where it was.
    pub fn set_state(factor: usize, n_states: usize) -> Self {
        let mut data = vec![0.0; n_states * n_states * n_states];
        for u in 0..n_states {
            for from in 0..n_states {
                data[u * n_states * n_states + from * n_states + u] = 1.0;
            }
        }
        Self {
            factor,
            n_states,
            n_controls: n_states,
            data,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    /// Distribution over next states given `(control, from)`.
    #[inline]
    pub fn column(&self, control: usize, from: usize) -> &[f64] {
        let base = control * self.n_states * self.n_states + from * self.n_states;
        &self.data[base..base + self.n_states]
    }
}

/// Log-space outcome preferences for one modality (unnormalized).
#[derive(Debug, Clone)]
pub struct PreferenceVector {
    pub modality: usize,
    pub log_prefs: Vec<f64>,
}

impl PreferenceVector {
    /// Flat preferences: every outcome equally preferred.
    pub fn uniform(modality: usize, n_outcomes: usize) -> Self {
        Self {
            modality,
            log_prefs: vec![0.0; n_outcomes],
        }
    }
}

/// Initial-state prior for one factor.
#[derive(Debug, Clone)]
pub struct PriorVector {
    pub factor: usize,
    pub dist: Categorical,
}

/// A candidate control sequence: `steps[t][factor]` is the control index
/// applied to `factor` at step `t`. Uncontrollable factors use control 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub steps: Vec<Vec<usize>>,
}

impl Policy {
    pub fn single_step(controls: Vec<usize>) -> Self {
        Self {
            steps: vec![controls],
        }
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }
}

/// How point-estimate likelihoods are derived from concentrations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LikelihoodMode {
    /// `A(o|s) proportional to exp(E[ln theta_o])`, the digamma form.
    #[serde(rename = "expected-log")]
    ExpectedLog,
    /// `A(o|s) = a(o|s) / sum_o a(o|s)`, the posterior-mean form.
    #[serde(rename = "normalized-mean")]
    NormalizedMean,
}

impl Default for LikelihoodMode {
    fn default() -> Self {
        LikelihoodMode::ExpectedLog
    }
}

/// One level of the hierarchical generative model.
#[derive(Debug, Clone)]
pub struct GenerativeModel {
    pub factors: Vec<FactorSpec>,
    pub modalities: Vec<ModalitySpec>,
    /// One likelihood table per modality.
    pub likelihoods: Vec<LikelihoodArray>,
    /// Learnable pseudo-counts; `None` for modalities with fixed likelihoods.
    pub concentrations: Vec<Option<ConcentrationArray>>,
    /// One transition table per factor.
    pub transitions: Vec<TransitionArray>,
    /// One preference vector per modality.
    pub preferences: Vec<PreferenceVector>,
    /// One initial-state prior per factor.
    pub priors: Vec<PriorVector>,
    pub policies: Vec<Policy>,
    /// Softmax precision for policy selection.
    pub policy_precision: f64,
    /// Concentration increment per observed count.
    pub learning_rate: f64,
    /// Multiplicative concentration decay per learning step, in (0, 1].
    pub forgetting_rate: f64,
    pub likelihood_mode: LikelihoodMode,
}

impl GenerativeModel {
    pub fn factor_shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.cardinality).collect()
    }

    pub fn joint_size(&self) -> usize {
        self.factors.iter().map(|f| f.cardinality).product()
    }

    /// Recomputes the point-estimate likelihood of every learnable modality
    /// from its concentrations, column by column, using the configured mode.
    pub fn refresh_likelihoods(&mut self) -> Result<()> {
        for m in 0..self.modalities.len() {
            self.refresh_modality(m)?;
        }
        Ok(())
    }

    /// Refreshes a single modality; a no-op for fixed-likelihood modalities.
    pub fn refresh_modality(&mut self, modality: usize) -> Result<()> {
        let Some(conc) = &self.concentrations[modality] else {
            return Ok(());
        };
        let n_outcomes = conc.n_outcomes();
        let n_states = conc.n_states();
        let mut data = vec![0.0; n_outcomes * n_states];
        for s in 0..n_states {
            let col = conc.column(s);
            let probs = match self.likelihood_mode {
                LikelihoodMode::NormalizedMean => normalize(col)?,
                LikelihoodMode::ExpectedLog => {
                    let el = expected_log_likelihood(col)?;
                    let max = el.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let weights: Vec<f64> = el.iter().map(|&e| (e - max).exp()).collect();
                    normalize(&weights)?
                }
            };
            data[s * n_outcomes..(s + 1) * n_outcomes].copy_from_slice(probs.probs());
        }
        self.likelihoods[modality] = LikelihoodArray::new(modality, n_outcomes, n_states, data)?;
        Ok(())
    }

    /// Structural consistency checks across all fields.
    pub fn validate(&self) -> Result<()> {
        let n_states = self.joint_size();
        if self.likelihoods.len() != self.modalities.len()
            || self.concentrations.len() != self.modalities.len()
            || self.preferences.len() != self.modalities.len()
        {
            return Err(Error::LengthMismatch {
                op: "GenerativeModel modalities",
                left: self.likelihoods.len(),
                right: self.modalities.len(),
            });
        }
        if self.transitions.len() != self.factors.len() || self.priors.len() != self.factors.len()
        {
            return Err(Error::LengthMismatch {
                op: "GenerativeModel factors",
                left: self.transitions.len(),
                right: self.factors.len(),
            });
        }
        for (m, lik) in self.likelihoods.iter().enumerate() {
            if lik.n_states() != n_states || lik.n_outcomes() != self.modalities[m].cardinality {
                return Err(Error::LengthMismatch {
                    op: "likelihood shape",
                    left: lik.n_outcomes(),
                    right: self.modalities[m].cardinality,
                });
            }
            if let Some(conc) = &self.concentrations[m] {
                if conc.n_states() != n_states || conc.n_outcomes() != lik.n_outcomes() {
                    return Err(Error::LengthMismatch {
                        op: "concentration shape",
                        left: conc.n_outcomes(),
                        right: lik.n_outcomes(),
                    });
                }
            }
        }
        for (f, spec) in self.factors.iter().enumerate() {
            if self.transitions[f].n_states() != spec.cardinality {
                return Err(Error::LengthMismatch {
                    op: "transition shape",
                    left: self.transitions[f].n_states(),
                    right: spec.cardinality,
                });
            }
            if self.priors[f].dist.len() != spec.cardinality {
                return Err(Error::LengthMismatch {
                    op: "prior shape",
                    left: self.priors[f].dist.len(),
                    right: spec.cardinality,
                });
            }
        }
        for policy in &self.policies {
            if policy.horizon() == 0 {
                return Err(Error::EmptyInput { op: "Policy" });
            }
            for step in &policy.steps {
                if step.len() != self.factors.len() {
                    return Err(Error::LengthMismatch {
                        op: "policy controls",
                        left: step.len(),
                        right: self.factors.len(),
                    });
                }
                for (f, &u) in step.iter().enumerate() {
                    if u >= self.transitions[f].n_controls() {
                        return Err(Error::IndexOutOfRange {
                            what: "policy control",
                            index: u,
                            bound: self.transitions[f].n_controls(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Dimensions of the two-level research-agent model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub industries: usize,
    pub processes: usize,
    pub outcomes: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            industries: 16,
            processes: 4,
            outcomes: 5,
        }
    }
}

/// Hyperparameters shared by both levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    /// Concentration increment per observed count (eta).
    pub learning_rate: f64,
    /// Multiplicative concentration decay per learning step (omega).
    pub forgetting_rate: f64,
    /// Policy softmax precision (gamma).
    pub policy_precision: f64,
    /// Initial pseudo-count for learnable likelihood entries.
    pub prior_count: f64,
    #[serde(default)]
    pub likelihood_mode: LikelihoodMode,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            forgetting_rate: 1.0,
            policy_precision: 16.0,
            prior_count: 0.25,
            likelihood_mode: LikelihoodMode::ExpectedLog,
        }
    }
}

/// The five-point outcome quality scale used by the bundled scenarios.
pub const OUTCOME_LABELS: [&str; 5] = ["Excellent", "Good", "Neutral", "Poor", "Terrible"];

/// Bottom-level factor indices.
pub const FACTOR_INDUSTRY: usize = 0;
pub const FACTOR_PROCESS: usize = 1;

/// Bottom-level modality indices.
pub const MODALITY_PROCESS: usize = 0;
pub const MODALITY_OUTCOME: usize = 1;
pub const MODALITY_CUE: usize = 2;

/// Builds the two-level research-agent model.
///
/// The top level has a single industry factor observed through an identity
/// cue modality; it is purely inferential. The bottom level factorizes into
/// (industry, research process), observes the process and the cue through
/// deterministic projections, and learns the outcome modality from uniform
/// pseudo-counts. One single-step policy exists per research process.
pub fn build_two_level_model(dims: ModelDims, hyper: Hyper) -> Result<(GenerativeModel, GenerativeModel)> {
    let mut invalid = Vec::new();
    if dims.industries < 1 {
        invalid.push("industries");
    }
    if dims.processes < 1 {
        invalid.push("processes");
    }
    if dims.outcomes < 1 {
        invalid.push("outcomes");
    }
    if !invalid.is_empty() {
        return Err(Error::InvalidValue {
            op: "build_two_level_model dims",
            index: 0,
            value: 0.0,
        });
    }
    if !(hyper.prior_count > 0.0) {
        return Err(Error::NonPositiveConcentration {
            op: "build_two_level_model",
            index: 0,
            value: hyper.prior_count,
        });
    }

    let ni = dims.industries;
    let np = dims.processes;
    let no = dims.outcomes;

    let top = GenerativeModel {
        factors: vec![FactorSpec {
            name: "industry".into(),
            cardinality: ni,
            controllable: false,
        }],
        modalities: vec![ModalitySpec {
            name: "industry-cue".into(),
            cardinality: ni,
        }],
        likelihoods: vec![LikelihoodArray::identity(0, ni)],
        concentrations: vec![None],
        transitions: vec![TransitionArray::identity(0, ni)],
        preferences: vec![PreferenceVector::uniform(0, ni)],
        priors: vec![PriorVector {
            factor: 0,
            dist: Categorical::uniform(ni),
        }],
        policies: Vec::new(),
        policy_precision: hyper.policy_precision,
        learning_rate: hyper.learning_rate,
        forgetting_rate: hyper.forgetting_rate,
        likelihood_mode: hyper.likelihood_mode,
    };

    let shape = [ni, np];
    let n_states = ni * np;
    let outcome_conc = ConcentrationArray::constant(MODALITY_OUTCOME, no, n_states, hyper.prior_count);
    let mut bottom = GenerativeModel {
        factors: vec![
            FactorSpec {
                name: "industry".into(),
                cardinality: ni,
                controllable: false,
            },
            FactorSpec {
                name: "research-process".into(),
                cardinality: np,
                controllable: true,
            },
        ],
        modalities: vec![
            ModalitySpec {
                name: "research-process".into(),
                cardinality: np,
            },
            ModalitySpec {
                name: "outcome".into(),
                cardinality: no,
            },
            ModalitySpec {
                name: "industry-cue".into(),
                cardinality: ni,
            },
        ],
        likelihoods: vec![
            LikelihoodArray::projection(MODALITY_PROCESS, &shape, FACTOR_PROCESS),
            // placeholder; refreshed from concentrations below
            LikelihoodArray::uniform(MODALITY_OUTCOME, no, n_states),
            LikelihoodArray::projection(MODALITY_CUE, &shape, FACTOR_INDUSTRY),
        ],
        concentrations: vec![None, Some(outcome_conc), None],
        transitions: vec![
            TransitionArray::identity(FACTOR_INDUSTRY, ni),
            TransitionArray::set_state(FACTOR_PROCESS, np),
        ],
        preferences: vec![
            PreferenceVector::uniform(MODALITY_PROCESS, np),
            PreferenceVector::uniform(MODALITY_OUTCOME, no),
            PreferenceVector::uniform(MODALITY_CUE, ni),
        ],
        priors: vec![
            PriorVector {
                factor: FACTOR_INDUSTRY,
                dist: Categorical::uniform(ni),
            },
            PriorVector {
                factor: FACTOR_PROCESS,
                dist: Categorical::uniform(np),
            },
        ],
        policies: (0..np)
            .map(|k| Policy::single_step(vec![0, k]))
            .collect(),
        policy_precision: hyper.policy_precision,
        learning_rate: hyper.learning_rate,
        forgetting_rate: hyper.forgetting_rate,
        likelihood_mode: hyper.likelihood_mode,
    };
    bottom.refresh_modality(MODALITY_OUTCOME)?;
    bottom.validate()?;
    top.validate()?;
    Ok((top, bottom))
}
