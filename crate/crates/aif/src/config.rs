//! Scenario configuration: the on-disk TOML format, loading, and validation.
//!
//! Configs are a key-value tree with nested tables. Truth tables appear as
//! explicit outcome-index grids (one row per industry, one column per
//! process) rather than seeds, so the ground truth of a run is reviewable in
//! the file itself. All indices are 0-based.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{ChangeEvent, GroundTruth, ScheduleKind};
use crate::error::{Error, Result};
use crate::math::Categorical;
use crate::model::{Hyper, ModelDims};
use crate::scoring::Scope;

/// Truth grid wrapper (`truth.grid` in the file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    pub grid: Vec<Vec<usize>>,
}

/// One patched cell of a change event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellPatch {
    pub industry: usize,
    pub process: usize,
    pub outcome: usize,
}

/// A scheduled change, as configured.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeConfig {
    pub at_iteration: u32,
    pub cells: Vec<CellPatch>,
}

impl ChangeConfig {
    pub fn to_change_event(&self, n_outcomes: usize) -> Result<ChangeEvent> {
        let mut cells = Vec::with_capacity(self.cells.len());
        for cell in &self.cells {
            if cell.outcome >= n_outcomes {
                return Err(Error::IndexOutOfRange {
                    what: "change outcome",
                    index: cell.outcome,
                    bound: n_outcomes,
                });
            }
            cells.push((
                cell.industry,
                cell.process,
                Categorical::one_hot(n_outcomes, cell.outcome),
            ));
        }
        Ok(ChangeEvent {
            at_iteration: self.at_iteration,
            cells,
        })
    }
}

/// Which (industry, process) pairs the per-iteration score totals cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScopeConfig {
    /// The literal string `"all"`.
    Keyword(String),
    /// An explicit list of industry indices.
    Industries(Vec<usize>),
}

impl Default for ScopeConfig {
    fn default() -> Self {
        ScopeConfig::Keyword("all".into())
    }
}

impl ScopeConfig {
    pub fn to_scope(&self) -> Result<Scope> {
        match self {
            ScopeConfig::Keyword(s) if s == "all" => Ok(Scope::All),
            ScopeConfig::Keyword(s) => Err(Error::ConfigInvalid(vec![format!(
                "score_scope: unknown keyword {s:?} (expected \"all\" or a list of industries)"
            )])),
            ScopeConfig::Industries(list) => Ok(Scope::Industries(list.clone())),
        }
    }

    /// Short label used in result files.
    pub fn label(&self) -> String {
        match self {
            ScopeConfig::Keyword(s) => s.clone(),
            ScopeConfig::Industries(list) => {
                let parts: Vec<String> = list.iter().map(|i| i.to_string()).collect();
                format!("industries={}", parts.join("+"))
            }
        }
    }
}

fn default_start_iteration() -> u32 {
    1
}

/// Everything needed to reproduce one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub iterations: u32,
    /// Absolute number of the first iteration; lets a scenario resume where a
    /// previous phase left off so change schedules and random streams line up.
    #[serde(default = "default_start_iteration")]
    pub start_iteration: u32,
    pub steps_per_trial: u32,
    #[serde(default)]
    pub schedule: ScheduleKind,
    #[serde(default)]
    pub cue_noise: f64,
    #[serde(default)]
    pub score_scope: ScopeConfig,
    pub dims: ModelDims,
    pub hyper: Hyper,
    pub truth: TruthTable,
    #[serde(default, rename = "change")]
    pub changes: Vec<ChangeConfig>,
}

impl ScenarioConfig {
    /// Checks every field, collecting all violations rather than stopping at
    /// the first.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.name.is_empty() {
            errors.push("name: must not be empty".to_string());
        }
        if self.iterations < 1 {
            errors.push("iterations: must be at least 1".to_string());
        }
        if self.start_iteration < 1 {
            errors.push("start_iteration: must be at least 1".to_string());
        }
        if self.dims.industries < 1 {
            errors.push("dims.industries: must be at least 1".to_string());
        }
        if self.dims.processes < 1 {
            errors.push("dims.processes: must be at least 1".to_string());
        }
        if self.dims.outcomes < 1 {
            errors.push("dims.outcomes: must be at least 1".to_string());
        }
        if !(self.hyper.learning_rate > 0.0) {
            errors.push(format!(
                "hyper.learning_rate: must be positive, got {}",
                self.hyper.learning_rate
            ));
        }
        if !(self.hyper.forgetting_rate > 0.0 && self.hyper.forgetting_rate <= 1.0) {
            errors.push(format!(
                "hyper.forgetting_rate: must be in (0, 1], got {}",
                self.hyper.forgetting_rate
            ));
        }
        if !(self.hyper.policy_precision >= 0.0) {
            errors.push(format!(
                "hyper.policy_precision: must be non-negative, got {}",
                self.hyper.policy_precision
            ));
        }
        if !(self.hyper.prior_count > 0.0) {
            errors.push(format!(
                "hyper.prior_count: must be positive, got {}",
                self.hyper.prior_count
            ));
        }
        if !(0.0..1.0).contains(&self.cue_noise) {
            errors.push(format!(
                "cue_noise: must be in [0, 1), got {}",
                self.cue_noise
            ));
        }
        if self.truth.grid.len() != self.dims.industries {
            errors.push(format!(
                "truth.grid: expected {} rows, got {}",
                self.dims.industries,
                self.truth.grid.len()
            ));
        }
        for (j, row) in self.truth.grid.iter().enumerate() {
            if row.len() != self.dims.processes {
                errors.push(format!(
                    "truth.grid row {j}: expected {} entries, got {}",
                    self.dims.processes,
                    row.len()
                ));
            }
            for (k, &outcome) in row.iter().enumerate() {
                if outcome >= self.dims.outcomes {
                    errors.push(format!(
                        "truth.grid[{j}][{k}]: outcome {outcome} out of range (< {})",
                        self.dims.outcomes
                    ));
                }
            }
        }
        for (c, change) in self.changes.iter().enumerate() {
            if change.at_iteration < 1 {
                errors.push(format!("change[{c}].at_iteration: must be at least 1"));
            }
            for cell in &change.cells {
                if cell.industry >= self.dims.industries {
                    errors.push(format!(
                        "change[{c}] cell (industry {}, process {}): industry out of range (< {})",
                        cell.industry, cell.process, self.dims.industries
                    ));
                }
                if cell.process >= self.dims.processes {
                    errors.push(format!(
                        "change[{c}] cell (industry {}, process {}): process out of range (< {})",
                        cell.industry, cell.process, self.dims.processes
                    ));
                }
                if cell.outcome >= self.dims.outcomes {
                    errors.push(format!(
                        "change[{c}] cell (industry {}, process {}): outcome {} out of range (< {})",
                        cell.industry, cell.process, cell.outcome, self.dims.outcomes
                    ));
                }
            }
        }
        if let ScopeConfig::Keyword(s) = &self.score_scope {
            if s != "all" {
                errors.push(format!(
                    "score_scope: unknown keyword {s:?} (expected \"all\" or a list of industries)"
                ));
            }
        }
        if let ScopeConfig::Industries(list) = &self.score_scope {
            if list.is_empty() {
                errors.push("score_scope: industry list must not be empty".to_string());
            }
            for &j in list {
                if j >= self.dims.industries {
                    errors.push(format!(
                        "score_scope: industry {j} out of range (< {})",
                        self.dims.industries
                    ));
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errors))
        }
    }

    pub fn to_ground_truth(&self) -> Result<GroundTruth> {
        GroundTruth::from_grid(&self.truth.grid, self.dims.outcomes, self.cue_noise)
    }

    pub fn to_change_events(&self) -> Result<Vec<ChangeEvent>> {
        self.changes
            .iter()
            .map(|c| c.to_change_event(self.dims.outcomes))
            .collect()
    }

    /// Inclusive range of absolute iteration numbers this run covers.
    pub fn iteration_numbers(&self) -> std::ops::RangeInclusive<u32> {
        self.start_iteration..=(self.start_iteration + self.iterations - 1)
    }

    /// Renders the scenario as TOML. Written by hand (rather than through the
    /// serializer) so truth grids come out one industry per line and stay
    /// reviewable; [`load_config`] parses the result back losslessly.
    pub fn to_toml_string(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(&format!("name = {}\n", toml_str(&self.name)));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("iterations = {}\n", self.iterations));
        out.push_str(&format!("start_iteration = {}\n", self.start_iteration));
        out.push_str(&format!("steps_per_trial = {}\n", self.steps_per_trial));
        let schedule = match self.schedule {
            ScheduleKind::RoundRobin => "round-robin",
            ScheduleKind::UniformRandom => "uniform-random",
        };
        out.push_str(&format!("schedule = \"{schedule}\"\n"));
        out.push_str(&format!("cue_noise = {}\n", toml_float(self.cue_noise)));
        match &self.score_scope {
            ScopeConfig::Keyword(s) => out.push_str(&format!("score_scope = {}\n", toml_str(s))),
            ScopeConfig::Industries(list) => {
                let items: Vec<String> = list.iter().map(|j| j.to_string()).collect();
                out.push_str(&format!("score_scope = [{}]\n", items.join(", ")));
            }
        }
        out.push_str("\n[dims]\n");
        out.push_str(&format!("industries = {}\n", self.dims.industries));
        out.push_str(&format!("processes = {}\n", self.dims.processes));
        out.push_str(&format!("outcomes = {}\n", self.dims.outcomes));
        out.push_str("\n[hyper]\n");
        out.push_str(&format!(
            "learning_rate = {}\n",
            toml_float(self.hyper.learning_rate)
        ));
        out.push_str(&format!(
            "forgetting_rate = {}\n",
            toml_float(self.hyper.forgetting_rate)
        ));
        out.push_str(&format!(
            "policy_precision = {}\n",
            toml_float(self.hyper.policy_precision)
        ));
        out.push_str(&format!(
            "prior_count = {}\n",
            toml_float(self.hyper.prior_count)
        ));
        let mode = match self.hyper.likelihood_mode {
            crate::model::LikelihoodMode::ExpectedLog => "expected-log",
            crate::model::LikelihoodMode::NormalizedMean => "normalized-mean",
        };
        out.push_str(&format!("likelihood_mode = \"{mode}\"\n"));
        out.push_str("\n# one row per industry, one outcome index per process\n[truth]\ngrid = [\n");
        for row in &self.truth.grid {
            let items: Vec<String> = row.iter().map(|o| o.to_string()).collect();
            out.push_str(&format!("    [{}],\n", items.join(", ")));
        }
        out.push_str("]\n");
        for change in &self.changes {
            out.push_str("\n[[change]]\n");
            out.push_str(&format!("at_iteration = {}\n", change.at_iteration));
            out.push_str("cells = [\n");
            for cell in &change.cells {
                out.push_str(&format!(
                    "    {{ industry = {}, process = {}, outcome = {} }},\n",
                    cell.industry, cell.process, cell.outcome
                ));
            }
            out.push_str("]\n");
        }
        Ok(out)
    }
}

fn toml_str(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn toml_float(v: f64) -> String {
    if v.fract() == 0.0 && v.is_finite() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Loads and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let config: ScenarioConfig = toml::from_str(&text).map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}
