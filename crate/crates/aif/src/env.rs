//! The generative process: ground-truth state-outcome mappings, observation
//! emission, and scheduled environment changes.
//!
//! The environment owns its own random stream, reseeded per trial from the
//! run seed, so observation sequences are reproducible independently of how
//! the agent consumes its policy stream.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{CellPatch, ChangeConfig, ScenarioConfig, ScopeConfig, TruthTable};
use crate::error::{Error, Result};
use crate::math::Categorical;
use crate::model::{Hyper, ModelDims};
use crate::rng::{trial_rng, Stream};

/// True state-outcome mapping per (industry, process) cell, plus cue noise.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    n_industries: usize,
    n_processes: usize,
    n_outcomes: usize,
    /// Probability that the emitted cue is *not* the current industry.
    pub cue_noise: f64,
    /// Row-major (industry, process) grid of outcome distributions.
    mapping: Vec<Categorical>,
}

impl GroundTruth {
    /// Deterministic truth from a grid of outcome indices.
    pub fn from_grid(grid: &[Vec<usize>], n_outcomes: usize, cue_noise: f64) -> Result<Self> {
        if grid.is_empty() || grid[0].is_empty() {
            return Err(Error::EmptyInput { op: "GroundTruth" });
        }
        let n_industries = grid.len();
        let n_processes = grid[0].len();
        let mut mapping = Vec::with_capacity(n_industries * n_processes);
        for row in grid {
            if row.len() != n_processes {
                return Err(Error::LengthMismatch {
                    op: "GroundTruth grid row",
                    left: row.len(),
                    right: n_processes,
                });
            }
            for &outcome in row {
                if outcome >= n_outcomes {
                    return Err(Error::IndexOutOfRange {
                        what: "truth outcome",
                        index: outcome,
                        bound: n_outcomes,
                    });
                }
                mapping.push(Categorical::one_hot(n_outcomes, outcome));
            }
        }
        Ok(Self {
            n_industries,
            n_processes,
            n_outcomes,
            cue_noise,
            mapping,
        })
    }

    pub fn n_industries(&self) -> usize {
        self.n_industries
    }

    pub fn n_processes(&self) -> usize {
        self.n_processes
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn mapping(&self, industry: usize, process: usize) -> &Categorical {
        &self.mapping[industry * self.n_processes + process]
    }

    pub fn set_mapping(&mut self, industry: usize, process: usize, dist: Categorical) -> Result<()> {
        if industry >= self.n_industries || process >= self.n_processes {
            return Err(Error::IndexOutOfRange {
                what: "truth cell",
                index: industry * self.n_processes + process,
                bound: self.mapping.len(),
            });
        }
        if dist.len() != self.n_outcomes {
            return Err(Error::LengthMismatch {
                op: "truth mapping",
                left: dist.len(),
                right: self.n_outcomes,
            });
        }
        self.mapping[industry * self.n_processes + process] = dist;
        Ok(())
    }

    /// The highest-probability outcome of a cell (lowest index wins ties).
    pub fn correct_outcome(&self, industry: usize, process: usize) -> usize {
        self.mapping(industry, process).argmax()
    }
}

/// A scheduled atomic patch of truth cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeEvent {
    pub at_iteration: u32,
    /// `(industry, process)` cells and their new outcome distributions.
    pub cells: Vec<(usize, usize, Categorical)>,
}

/// How the environment picks the industry for each trial of an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// Trial `t` visits industry `t mod n`.
    #[default]
    RoundRobin,
    /// Each trial draws an industry uniformly from the environment stream.
    UniformRandom,
}

/// Live environment state for one run.
#[derive(Debug, Clone)]
pub struct EnvironmentState {
    truth: GroundTruth,
    schedule: ScheduleKind,
    current_industry: usize,
    pending: Vec<ChangeEvent>,
    rng: ChaCha8Rng,
}

impl EnvironmentState {
    pub fn new(truth: GroundTruth, schedule: ScheduleKind, changes: Vec<ChangeEvent>) -> Self {
        Self {
            truth,
            schedule,
            current_industry: 0,
            pending: changes,
            rng: trial_rng(0, 0, 0, Stream::Environment),
        }
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn current_industry(&self) -> usize {
        self.current_industry
    }

    pub fn pending_changes(&self) -> &[ChangeEvent] {
        &self.pending
    }

    /// Reseeds the environment stream for a trial and sets its industry
    /// according to the schedule.
    pub fn begin_trial(&mut self, seed: u64, iteration: u32, trial: usize) {
        self.rng = trial_rng(seed, iteration, trial, Stream::Environment);
        self.current_industry = match self.schedule {
            ScheduleKind::RoundRobin => trial % self.truth.n_industries,
            ScheduleKind::UniformRandom => self.rng.gen_range(0..self.truth.n_industries),
        };
    }

    /// Applies every pending change scheduled for `iteration` atomically and
    /// removes it from the queue; calling again for the same iteration is a
    /// no-op.
    pub fn apply_changes(&mut self, iteration: u32) -> Result<()> {
        let due: Vec<ChangeEvent> = self
            .pending
            .iter()
            .filter(|c| c.at_iteration == iteration)
            .cloned()
            .collect();
        self.pending.retain(|c| c.at_iteration != iteration);
        for change in due {
            for (j, k, dist) in change.cells {
                self.truth.set_mapping(j, k, dist)?;
            }
        }
        Ok(())
    }

    /// Emits the industry cue: the current industry with probability
    /// `1 - cue_noise`, otherwise a uniformly drawn *other* industry.
    pub fn emit_cue(&mut self) -> usize {
        let n = self.truth.n_industries;
        if self.truth.cue_noise > 0.0 {
            let u: f64 = self.rng.gen();
            if u < self.truth.cue_noise && n > 1 {
                let other = self.rng.gen_range(0..n - 1);
                return if other >= self.current_industry {
                    other + 1
                } else {
                    other
                };
            }
        }
        self.current_industry
    }

    /// Samples an outcome for running `process` in the current industry.
    pub fn emit_outcome(&mut self, process: usize) -> Result<usize> {
        if process >= self.truth.n_processes {
            return Err(Error::IndexOutOfRange {
                what: "process",
                index: process,
                bound: self.truth.n_processes,
            });
        }
        let dist = self.truth.mapping(self.current_industry, process);
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        for (o, &p) in dist.probs().iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(o);
            }
        }
        Ok(dist.len() - 1)
    }
}

/// The fixed truth grid shipped with the bundled scenarios.
///
/// Industry 0 keeps processes 0 and 1 pinned to Excellent and Good; every
/// other cell is a fixed seed-0 draw, committed here (via the config files)
/// so that results reproduce run to run.
pub fn builtin_truth_grid(dims: ModelDims) -> Vec<Vec<usize>> {
    let mut rng = trial_rng(0, 0, 0, Stream::Environment);
    let mut grid = Vec::with_capacity(dims.industries);
    for j in 0..dims.industries {
        let mut row = Vec::with_capacity(dims.processes);
        for _ in 0..dims.processes {
            row.push(rng.gen_range(0..dims.outcomes));
        }
        if j == 0 {
            if dims.processes > 0 {
                row[0] = 0;
            }
            if dims.processes > 1 && dims.outcomes > 1 {
                row[1] = 1;
            }
        }
        grid.push(row);
    }
    grid
}

/// A cell-wise outcome rotation; any nonzero rotation of the outcome set is a
/// derangement, so no patched cell keeps its previous outcome.
fn rotate_row(row: &[usize], rotation: usize, n_outcomes: usize) -> Vec<usize> {
    row.iter().map(|&o| (o + rotation) % n_outcomes).collect()
}

fn change_for_industries(
    grid: &[Vec<usize>],
    industries: &[usize],
    at_iteration: u32,
    n_outcomes: usize,
) -> ChangeConfig {
    let mut cells = Vec::new();
    for &j in industries {
        let rotation = 1 + (j % (n_outcomes - 1));
        for (k, &new_outcome) in rotate_row(&grid[j], rotation, n_outcomes).iter().enumerate() {
            cells.push(CellPatch {
                industry: j,
                process: k,
                outcome: new_outcome,
            });
        }
    }
    ChangeConfig {
        at_iteration,
        cells,
    }
}

/// The three bundled scenarios.
///
/// - `env1`: 10 iterations of the fixed truth, scored over all industries.
/// - `env2`: 20 iterations starting at iteration 11, with industry 0's four
///   mappings deranged at iteration 11; scored over industry 0 only.
/// - `env3`: 20 iterations starting at iteration 11, with industries 0-9
///   deranged at iteration 11; scored over all industries, and run with a
///   forgetting rate below one so stale counts decay fast enough for the
///   total score to overtake its pre-change peak.
pub fn builtin_scenarios() -> [ScenarioConfig; 3] {
    let dims = ModelDims::default();
    let grid = builtin_truth_grid(dims);
    let base = ScenarioConfig {
        name: "env1".into(),
        seed: 0,
        iterations: 10,
        start_iteration: 1,
        steps_per_trial: 4,
        schedule: ScheduleKind::RoundRobin,
        cue_noise: 0.0,
        score_scope: ScopeConfig::default(),
        dims,
        hyper: Hyper::default(),
        truth: TruthTable { grid: grid.clone() },
        changes: Vec::new(),
    };

    let env2 = ScenarioConfig {
        name: "env2".into(),
        iterations: 20,
        start_iteration: 11,
        score_scope: ScopeConfig::Industries(vec![0]),
        changes: vec![change_for_industries(&grid, &[0], 11, dims.outcomes)],
        ..base.clone()
    };

    let env3 = ScenarioConfig {
        name: "env3".into(),
        iterations: 20,
        start_iteration: 11,
        hyper: Hyper {
            forgetting_rate: 0.985,
            ..Hyper::default()
        },
        changes: vec![change_for_industries(
            &grid,
            &(0..10).collect::<Vec<_>>(),
            11,
            dims.outcomes,
        )],
        ..base.clone()
    };

    [base, env2, env3]
}
