//! Experiment orchestration: seeded execution of a scenario, per-iteration
//! scoring, and results persistence.
//!
//! A run is sequential; independent (config, seed) runs own all their state
//! and can execute in parallel. Output files contain no timestamps or other
//! nondeterminism: the same config and seed reproduce them byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde_json::Value;

use crate::agent::{HierarchicalAgent, TrialRecord};
use crate::config::ScenarioConfig;
use crate::env::{builtin_scenarios, EnvironmentState};
use crate::error::{Error, Result};
use crate::model::{ConcentrationArray, MODALITY_OUTCOME};
use crate::rng::{trial_rng, Stream};
use crate::scoring::{total_score, Scope, ScoreReport};

/// Bottom-level concentrations as persisted between runs; one entry per
/// modality, `None` where the likelihood is fixed.
pub type ConcentrationSnapshot = Vec<Option<ConcentrationArray>>;

/// Scores taken after one iteration's trials.
#[derive(Debug, Clone)]
pub struct IterationScore {
    pub iteration: u32,
    /// Report over all pairs (feeds the per-industry columns).
    pub full: ScoreReport,
    /// Report over the configured scope (feeds the headline totals).
    pub scoped: ScoreReport,
}

/// Everything produced by one run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub scores: Vec<IterationScore>,
    pub trials: Vec<TrialRecord>,
    pub final_concentrations: ConcentrationSnapshot,
    pub duration: Duration,
}

/// Executes a scenario, optionally starting from previously learned
/// concentrations.
pub fn run_experiment(
    config: &ScenarioConfig,
    carry: Option<&ConcentrationSnapshot>,
) -> Result<RunResult> {
    config.validate()?;
    let started = Instant::now();

    let mut agent = HierarchicalAgent::new(config.dims, config.hyper)?;
    if let Some(snapshot) = carry {
        agent.replace_bottom_concentrations(snapshot.clone())?;
    }
    let mut env = EnvironmentState::new(
        config.to_ground_truth()?,
        config.schedule,
        config.to_change_events()?,
    );
    let scope = config.score_scope.to_scope()?;
    let trials_per_iteration = config.dims.industries;

    let mut scores = Vec::with_capacity(config.iterations as usize);
    let mut trials = Vec::with_capacity(config.iterations as usize * trials_per_iteration);

    for iteration in config.iteration_numbers() {
        env.apply_changes(iteration)?;
        for trial in 0..trials_per_iteration {
            env.begin_trial(config.seed, iteration, trial);
            let mut policy_rng = trial_rng(config.seed, iteration, trial, Stream::Policy);
            let record = agent.run_trial(
                &mut env,
                iteration,
                trial,
                config.steps_per_trial,
                &mut policy_rng,
            )?;
            trials.push(record);
        }
        let conc = agent.bottom.concentrations[MODALITY_OUTCOME]
            .as_ref()
            .expect("outcome modality is learnable");
        let full = total_score(conc, env.truth(), &Scope::All)?;
        let scoped = match &scope {
            Scope::All => full.clone(),
            other => total_score(conc, env.truth(), other)?,
        };
        scores.push(IterationScore {
            iteration,
            full,
            scoped,
        });
    }

    Ok(RunResult {
        config: config.clone(),
        scores,
        trials,
        final_concentrations: agent.bottom.concentrations.clone(),
        duration: started.elapsed(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn fmt_joined<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Writes the result files into `dir` (created if needed):
/// `scores.csv`, `trials.csv`, `final_a.json`, and `plot_score.csv`.
pub fn write_results(result: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;

    let n_industries = result.config.dims.industries;
    let scope_label = result.config.score_scope.label();

    let mut scores = String::from("iteration,scope,total_raw,total_norm");
    for j in 0..n_industries {
        scores.push_str(&format!(",industry_{j}"));
    }
    scores.push('\n');
    for entry in &result.scores {
        scores.push_str(&format!(
            "{},{},{},{}",
            entry.iteration, scope_label, entry.scoped.total_raw, entry.scoped.total_norm
        ));
        for j in 0..n_industries {
            scores.push_str(&format!(",{}", entry.full.industry_totals_norm[j]));
        }
        scores.push('\n');
    }
    write_file(&dir.join("scores.csv"), &scores)?;

    let mut trials = String::from(
        "iteration,trial,industry,cue,top_posterior,chosen,outcomes,efe_risk,efe_ambiguity,efe_novelty,efe_total,vfe,a_hash\n",
    );
    for record in &result.trials {
        let vfe = record
            .final_vfe
            .map(|v| v.to_string())
            .unwrap_or_default();
        trials.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            record.iteration,
            record.trial,
            record.industry,
            record.cue,
            fmt_joined(&record.top_posterior),
            fmt_joined(&record.chosen_processes),
            fmt_joined(&record.outcomes),
            fmt_joined(&record.first_step_efe.iter().map(|b| b.risk).collect::<Vec<_>>()),
            fmt_joined(&record.first_step_efe.iter().map(|b| b.ambiguity).collect::<Vec<_>>()),
            fmt_joined(&record.first_step_efe.iter().map(|b| b.novelty).collect::<Vec<_>>()),
            fmt_joined(&record.first_step_efe.iter().map(|b| b.total).collect::<Vec<_>>()),
            vfe,
            record.concentration_hash,
        ));
    }
    write_file(&dir.join("trials.csv"), &trials)?;

    let json = snapshot_to_json(
        &result.final_concentrations,
        result.config.dims.industries,
        result.config.dims.processes,
    );
    write_file(
        &dir.join("final_a.json"),
        &serde_json::to_string_pretty(&json).expect("snapshot JSON serializes"),
    )?;

    let mut plot = String::from("iteration,score\n");
    for entry in &result.scores {
        plot.push_str(&format!("{},{}\n", entry.iteration, entry.scoped.total_norm));
    }
    write_file(&dir.join("plot_score.csv"), &plot)?;

    Ok(())
}

/// Encodes a snapshot as nested arrays indexed
/// `[modality][outcome][industry][process]`, `null` for fixed modalities.
pub fn snapshot_to_json(
    snapshot: &ConcentrationSnapshot,
    n_industries: usize,
    n_processes: usize,
) -> Value {
    let modalities: Vec<Value> = snapshot
        .iter()
        .map(|entry| match entry {
            None => Value::Null,
            Some(conc) => {
                let mut outcomes = Vec::with_capacity(conc.n_outcomes());
                for o in 0..conc.n_outcomes() {
                    let mut industries = Vec::with_capacity(n_industries);
                    for j in 0..n_industries {
                        let mut processes = Vec::with_capacity(n_processes);
                        for k in 0..n_processes {
                            let s = j * n_processes + k;
                            processes.push(Value::from(conc.column(s)[o]));
                        }
                        industries.push(Value::from(processes));
                    }
                    outcomes.push(Value::from(industries));
                }
                Value::from(outcomes)
            }
        })
        .collect();
    Value::from(modalities)
}

/// Decodes `final_a.json` content back into a snapshot.
pub fn snapshot_from_json(value: &Value) -> Result<ConcentrationSnapshot> {
    let invalid = || Error::ConfigParse {
        path: PathBuf::from("final_a.json"),
        message: "expected [modality][outcome][industry][process] nested arrays".into(),
    };
    let modalities = value.as_array().ok_or_else(invalid)?;
    let mut snapshot = Vec::with_capacity(modalities.len());
    for (m, entry) in modalities.iter().enumerate() {
        if entry.is_null() {
            snapshot.push(None);
            continue;
        }
        let outcomes = entry.as_array().ok_or_else(invalid)?;
        let n_outcomes = outcomes.len();
        let first = outcomes.first().and_then(|v| v.as_array()).ok_or_else(invalid)?;
        let n_industries = first.len();
        let n_processes = first
            .first()
            .and_then(|v| v.as_array())
            .ok_or_else(invalid)?
            .len();
        let n_states = n_industries * n_processes;
        let mut data = vec![0.0; n_outcomes * n_states];
        for (o, industries) in outcomes.iter().enumerate() {
            let industries = industries.as_array().ok_or_else(invalid)?;
            if industries.len() != n_industries {
                return Err(invalid());
            }
            for (j, processes) in industries.iter().enumerate() {
                let processes = processes.as_array().ok_or_else(invalid)?;
                if processes.len() != n_processes {
                    return Err(invalid());
                }
                for (k, v) in processes.iter().enumerate() {
                    let a = v.as_f64().ok_or_else(invalid)?;
                    data[(j * n_processes + k) * n_outcomes + o] = a;
                }
            }
        }
        snapshot.push(Some(ConcentrationArray::new(m, n_outcomes, n_states, data)?));
    }
    Ok(snapshot)
}

/// Loads a carry-over snapshot from a `final_a.json` file.
pub fn load_carry(path: &Path) -> Result<ConcentrationSnapshot> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    snapshot_from_json(&value)
}

/// Results of the bundled three-environment protocol.
pub struct ProtocolResult {
    pub env1: RunResult,
    pub env2: RunResult,
    pub env3: RunResult,
}

/// Runs the bundled protocol: env1 from scratch, then env2 and env3 each
/// continuing from env1's learned concentrations, writing results to
/// `out/env1`, `out/env2`, and `out/env3`.
pub fn run_paper_protocol(out: &Path, seed: Option<u64>) -> Result<ProtocolResult> {
    let [mut env1, mut env2, mut env3] = builtin_scenarios();
    if let Some(seed) = seed {
        env1.seed = seed;
        env2.seed = seed;
        env3.seed = seed;
    }
    let r1 = run_experiment(&env1, None)?;
    write_results(&r1, &out.join("env1"))?;
    let r2 = run_experiment(&env2, Some(&r1.final_concentrations))?;
    write_results(&r2, &out.join("env2"))?;
    let r3 = run_experiment(&env3, Some(&r1.final_concentrations))?;
    write_results(&r3, &out.join("env3"))?;
    Ok(ProtocolResult {
        env1: r1,
        env2: r2,
        env3: r3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScopeConfig;

    fn small_config() -> ScenarioConfig {
        let [mut env1, _, _] = builtin_scenarios();
        env1.iterations = 3;
        env1
    }

    #[test]
    fn run_produces_one_score_row_per_iteration() {
        let config = small_config();
        let result = run_experiment(&config, None).unwrap();
        assert_eq!(result.scores.len(), 3);
        assert_eq!(result.trials.len(), 3 * 16);
        assert_eq!(
            result.scores.iter().map(|s| s.iteration).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn scores_csv_has_header_plus_one_line_per_iteration() {
        let config = small_config();
        let result = run_experiment(&config, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_results(&result, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("scores.csv")).unwrap();
        let lines: Vec<&str> = text.trim_end().lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("iteration,scope,total_raw,total_norm,industry_0"));
    }

    #[test]
    fn scores_csv_roundtrips_totals_exactly() {
        let config = small_config();
        let result = run_experiment(&config, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_results(&result, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("scores.csv")).unwrap();
        for (line, entry) in text.trim_end().lines().skip(1).zip(&result.scores) {
            let fields: Vec<&str> = line.split(',').collect();
            let total_raw: f64 = fields[2].parse().unwrap();
            let total_norm: f64 = fields[3].parse().unwrap();
            assert_eq!(total_raw, entry.scoped.total_raw);
            assert_eq!(total_norm, entry.scoped.total_norm);
        }
    }

    #[test]
    fn identical_seeds_give_identical_files() {
        let config = small_config();
        let a = run_experiment(&config, None).unwrap();
        let b = run_experiment(&config, None).unwrap();
        let da = tempfile::tempdir().unwrap();
        let db = tempfile::tempdir().unwrap();
        write_results(&a, da.path()).unwrap();
        write_results(&b, db.path()).unwrap();
        for file in ["scores.csv", "trials.csv", "final_a.json", "plot_score.csv"] {
            let left = std::fs::read(da.path().join(file)).unwrap();
            let right = std::fs::read(db.path().join(file)).unwrap();
            assert_eq!(left, right, "nondeterministic {file}");
        }
    }

    #[test]
    fn snapshot_json_roundtrips() {
        let config = small_config();
        let result = run_experiment(&config, None).unwrap();
        let json = snapshot_to_json(&result.final_concentrations, 16, 4);
        let back = snapshot_from_json(&json).unwrap();
        assert_eq!(back, result.final_concentrations);
    }

    #[test]
    fn carry_over_resumes_identically() {
        // running env1 then a continuation equals one concatenated run
        let [env1, _, _] = builtin_scenarios();
        let mut phase1 = env1.clone();
        phase1.iterations = 4;
        let mut phase2 = env1.clone();
        phase2.start_iteration = 5;
        phase2.iterations = 3;
        let mut whole = env1.clone();
        whole.iterations = 7;

        let r1 = run_experiment(&phase1, None).unwrap();

        // via the JSON file, as the CLI would
        let dir = tempfile::tempdir().unwrap();
        write_results(&r1, dir.path()).unwrap();
        let carried = load_carry(&dir.path().join("final_a.json")).unwrap();
        assert_eq!(carried, r1.final_concentrations);

        let r2 = run_experiment(&phase2, Some(&carried)).unwrap();
        let rw = run_experiment(&whole, None).unwrap();
        for (split, joined) in r1.scores.iter().chain(r2.scores.iter()).zip(&rw.scores) {
            assert_eq!(split.iteration, joined.iteration);
            assert!((split.scoped.total_norm - joined.scoped.total_norm).abs() < 1e-9);
            assert!((split.scoped.total_raw - joined.scoped.total_raw).abs() < 1e-9);
        }
        assert_eq!(r2.final_concentrations, rw.final_concentrations);
    }

    #[test]
    fn scoped_totals_match_recomputation_from_full_report() {
        let [_, mut env2, _] = builtin_scenarios();
        env2.iterations = 2;
        env2.score_scope = ScopeConfig::Industries(vec![0]);
        let result = run_experiment(&env2, None).unwrap();
        for entry in &result.scores {
            assert!(
                (entry.scoped.total_norm - entry.full.industry_totals_norm[0]).abs() < 1e-9
            );
        }
    }
}
