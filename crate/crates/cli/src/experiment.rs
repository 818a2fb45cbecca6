//! Experiment orchestration: rounds-vs-cost sweeps with common random
//! numbers, exact (exhaustive) evaluation for scenario instances, and
//! per-trial offline lower bounds.

use crate::format::AnyInstance;
use anyhow::{bail, Result};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use subcover_core::oracles::{entropy_lower_bound, offline_optimal};
use subcover_core::parca::{ParcaConfig, Sampler, SscRunner};
use subcover_core::ratio::Ratio64;
use subcover_core::setbased::{
    run_set_based_independent, run_set_based_scenario, SetMode, SetRoundPolicy,
};
use subcover_core::sparca::NscRunner;
use subcover_core::{ElemSet, IndSource, IndependentInstance, ScenarioInstance, ScnSource};

/// Scenario count at or below which exhaustive evaluation is selected
/// automatically.
pub const AUTO_EXHAUSTIVE_LIMIT: u32 = 256;

/// Trials are dispatched to workers in fixed-size chunks so that results do
/// not depend on the worker count.
const TRIAL_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    /// r-round solver for independent items.
    Ssc,
    /// r-round solver for scenario items.
    Nsc,
    /// 2r-round two-threshold solver for scenario items.
    Nsc2r,
    /// Set-based conversion, fixed round count.
    SetSmall,
    /// Set-based conversion, doubled round count.
    SetLarge,
}

impl Algo {
    pub fn is_scenario_only(self) -> bool {
        matches!(self, Algo::Nsc | Algo::Nsc2r)
    }

    pub fn is_set_based(self) -> bool {
        matches!(self, Algo::SetSmall | Algo::SetLarge)
    }
}

impl FromStr for Algo {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Algo> {
        Ok(match s {
            "ssc" => Algo::Ssc,
            "nsc" => Algo::Nsc,
            "nsc2r" => Algo::Nsc2r,
            "set-small" => Algo::SetSmall,
            "set-large" => Algo::SetLarge,
            other => bail!("unknown algorithm {other:?} (ssc, nsc, nsc2r, set-small, set-large)"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Monte-Carlo with the configured trial count.
    MonteCarlo,
    /// Exact expectation over all scenarios (scenario model only).
    Exhaustive,
    /// Exhaustive when the instance is a scenario model with at most
    /// [`AUTO_EXHAUSTIVE_LIMIT`] scenarios, Monte-Carlo otherwise.
    Auto,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub algo: Algo,
    /// Inclusive round range.
    pub rounds: (u32, u32),
    pub trials: u32,
    pub master_seed: u64,
    pub eval: EvalMode,
    /// Score computation for independent instances.
    pub sampler: Sampler,
    /// Compute the per-trial offline optimum.
    pub offline_bound: bool,
    /// Failure budget for the fixed-round set-based mode.
    pub eta: f64,
    pub mu_trials: u32,
    /// Per-item sample count for sampled scoring; `None` uses the default
    /// formula.
    pub k_samples: Option<u64>,
}

impl ExperimentSpec {
    pub fn new(algo: Algo, rounds: (u32, u32), master_seed: u64) -> ExperimentSpec {
        ExperimentSpec {
            algo,
            rounds,
            trials: 20,
            master_seed,
            eval: EvalMode::Auto,
            sampler: Sampler::Exact,
            offline_bound: true,
            eta: 0.2,
            mu_trials: 200,
            k_samples: None,
        }
    }

    fn validate(&self, inst: &AnyInstance) -> Result<()> {
        if self.rounds.0 < 1 || self.rounds.0 > self.rounds.1 {
            bail!("round range must satisfy 1 <= r_min <= r_max");
        }
        if self.trials < 1 {
            bail!("trials must be at least 1");
        }
        match (self.algo, inst) {
            (Algo::Ssc, AnyInstance::Scenario(_)) => {
                bail!("algorithm ssc needs an independent-model instance")
            }
            (a, AnyInstance::Independent(_)) if a.is_scenario_only() => {
                bail!("algorithm requires a scenario-model instance")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u32,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<u32>,
    pub cost: u64,
    pub covered: bool,
    pub rounds_used: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offline: Option<u64>,
    /// Digest of the probe/observation stream, for verifying that the same
    /// trial consumes identical realizations across round budgets.
    pub realization_digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundsEntry {
    pub r: u32,
    pub eval_mode: String,
    pub trials: u32,
    pub mean_cost: f64,
    pub stderr: f64,
    pub coverage_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lb_offline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lb_entropy: Option<f64>,
    /// Effective thresholds (negative powers of two) per round of the
    /// first trial.
    pub effective_delta_exps: Vec<u32>,
    pub per_trial: Vec<TrialRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub algo: Algo,
    pub model: String,
    pub master_seed: u64,
    pub entries: Vec<RoundsEntry>,
}

struct TrialOutcome {
    cost: u64,
    covered: bool,
    rounds_used: u32,
    digest: u64,
    offline: Option<u64>,
}

fn offline_for_scenario(inst: &ScenarioInstance, omega: u32) -> Result<u64> {
    let realized: Vec<ElemSet> = (0..inst.m())
        .map(|e| inst.realization(e, omega).clone())
        .collect();
    let bound = offline_optimal(inst.costs(), &realized, inst.objective())?;
    Ok(bound.value())
}

fn offline_for_outcomes(inst: &IndependentInstance, outcomes: &[u32]) -> Result<u64> {
    let costs: Vec<u64> = inst.items().iter().map(|i| i.cost).collect();
    let realized: Vec<ElemSet> = inst
        .items()
        .iter()
        .zip(outcomes)
        .map(|(item, &o)| item.support()[o as usize].0.clone())
        .collect();
    let bound = offline_optimal(&costs, &realized, inst.objective())?;
    Ok(bound.value())
}

fn run_scenario_once(
    inst: &ScenarioInstance,
    runner: &mut NscRunner<'_>,
    spec: &ExperimentSpec,
    r: u32,
    omega: u32,
) -> Result<TrialOutcome> {
    // digest of the realization stream: equal across round budgets for the
    // same trial (common random numbers)
    let digest = fnv_mix([omega].into_iter());
    let (cost, covered, rounds_used) = match spec.algo {
        Algo::Nsc | Algo::Nsc2r => {
            let t = if spec.algo == Algo::Nsc {
                runner.solve(r, &mut ScnSource::Fixed(omega))?
            } else {
                runner.solve_2r(r, &mut ScnSource::Fixed(omega))?
            };
            (t.total_cost, t.covered, t.rounds.len() as u32)
        }
        Algo::SetSmall | Algo::SetLarge => {
            let mode = if spec.algo == Algo::SetSmall {
                SetMode::SmallR { eta: spec.eta }
            } else {
                SetMode::LargeR
            };
            let mut policy = SetRoundPolicy::new(r, mode);
            policy.mu_trials = spec.mu_trials;
            policy.rng_seed = spec.master_seed;
            let t = run_set_based_scenario(inst, &policy, &mut ScnSource::Fixed(omega))?;
            (t.total_cost, t.covered, t.rounds_used)
        }
        Algo::Ssc => bail!("ssc cannot run on a scenario instance"),
    };
    let offline = spec
        .offline_bound
        .then(|| offline_for_scenario(inst, omega))
        .transpose()?;
    Ok(TrialOutcome {
        cost,
        covered,
        rounds_used,
        digest,
        offline,
    })
}

fn fnv_mix(items: impl Iterator<Item = u32>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in items {
        for byte in x.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    }
    h
}

fn run_independent_once(
    inst: &IndependentInstance,
    runner: &mut SscRunner<'_>,
    spec: &ExperimentSpec,
    r: u32,
    outcomes: &[u32],
) -> Result<TrialOutcome> {
    let digest = fnv_mix(outcomes.iter().copied());
    let (cost, covered, rounds_used) = match spec.algo {
        Algo::Ssc => {
            let t = runner.solve(r, &mut IndSource::Fixed(outcomes))?;
            (t.total_cost, t.covered, t.rounds.len() as u32)
        }
        Algo::SetSmall | Algo::SetLarge => {
            let mode = if spec.algo == Algo::SetSmall {
                SetMode::SmallR { eta: spec.eta }
            } else {
                SetMode::LargeR
            };
            let mut policy = SetRoundPolicy::new(r, mode);
            policy.mu_trials = spec.mu_trials;
            policy.rng_seed = spec.master_seed;
            let scoring = scoring_config(spec);
            let t =
                run_set_based_independent(inst, &policy, &scoring, &mut IndSource::Fixed(outcomes))?;
            (t.total_cost, t.covered, t.rounds_used)
        }
        _ => bail!("scenario algorithms cannot run on an independent instance"),
    };
    let offline = spec
        .offline_bound
        .then(|| offline_for_outcomes(inst, outcomes))
        .transpose()?;
    Ok(TrialOutcome {
        cost,
        covered,
        rounds_used,
        digest,
        offline,
    })
}

fn scoring_config(spec: &ExperimentSpec) -> ParcaConfig {
    ParcaConfig {
        delta: Ratio64::new(1, 2), // per-round thresholds override this
        sampler: spec.sampler,
        k_samples: spec.k_samples,
        epsilon: None,
        rng_seed: spec.master_seed,
    }
}

fn summarize(
    r: u32,
    eval_mode: &str,
    records: Vec<TrialRecord>,
    weights: Option<&[u64]>,
    entropy: Option<f64>,
    delta_exps: Vec<u32>,
) -> RoundsEntry {
    let n = records.len() as f64;
    let (mean, stderr, coverage, offline_mean) = match weights {
        Some(ws) => {
            // exact expectation over scenarios
            let total: u64 = ws.iter().sum();
            let mean = records
                .iter()
                .zip(ws)
                .map(|(t, &w)| t.cost as f64 * w as f64)
                .sum::<f64>()
                / total as f64;
            let coverage = records
                .iter()
                .zip(ws)
                .map(|(t, &w)| if t.covered { w as f64 } else { 0.0 })
                .sum::<f64>()
                / total as f64;
            let offline = records.iter().all(|t| t.offline.is_some()).then(|| {
                records
                    .iter()
                    .zip(ws)
                    .map(|(t, &w)| t.offline.unwrap() as f64 * w as f64)
                    .sum::<f64>()
                    / total as f64
            });
            (mean, 0.0, coverage, offline)
        }
        None => {
            let mean = records.iter().map(|t| t.cost as f64).sum::<f64>() / n;
            let var = if records.len() > 1 {
                records
                    .iter()
                    .map(|t| (t.cost as f64 - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0)
            } else {
                0.0
            };
            let stderr = (var / n).sqrt();
            let coverage = records.iter().filter(|t| t.covered).count() as f64 / n;
            let offline = records.iter().all(|t| t.offline.is_some()).then(|| {
                records.iter().map(|t| t.offline.unwrap() as f64).sum::<f64>() / n
            });
            (mean, stderr, coverage, offline)
        }
    };
    RoundsEntry {
        r,
        eval_mode: eval_mode.into(),
        trials: records.len() as u32,
        mean_cost: mean,
        stderr,
        coverage_rate: coverage,
        lb_offline: offline_mean,
        lb_entropy: entropy,
        effective_delta_exps: delta_exps,
        per_trial: records,
    }
}

/// Runs the full sweep described by `spec` on `inst`.
///
/// Realizations are drawn per trial from `master_seed ^ trial`, so every
/// round budget replays the same realization stream (common random
/// numbers). Trials run in parallel in fixed chunks; the report is
/// byte-identical for any worker count.
pub fn run_experiment(inst: &AnyInstance, spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate(inst)?;
    let exhaustive = match (spec.eval, inst) {
        (EvalMode::Exhaustive, AnyInstance::Independent(_)) => {
            bail!("exhaustive evaluation needs a scenario-model instance")
        }
        (EvalMode::Exhaustive, AnyInstance::Scenario(_)) => true,
        (EvalMode::Auto, AnyInstance::Scenario(s)) => s.s() <= AUTO_EXHAUSTIVE_LIMIT,
        _ => false,
    };
    let mut entries = Vec::new();
    for r in spec.rounds.0..=spec.rounds.1 {
        let entry = match inst {
            AnyInstance::Scenario(scn) => {
                if exhaustive {
                    let outcomes = run_chunked(scn.s(), |chunk| {
                        let mut runner = NscRunner::new(scn);
                        chunk
                            .iter()
                            .map(|&omega| {
                                run_scenario_once(scn, &mut runner, spec, r, omega)
                                    .map(|o| (omega, o))
                            })
                            .collect()
                    })?;
                    let records: Vec<TrialRecord> = outcomes
                        .into_iter()
                        .map(|(omega, o)| trial_record(omega, spec.master_seed, Some(omega), o))
                        .collect();
                    let weights: Vec<u64> = (0..scn.s()).map(|w| scn.weight(w)).collect();
                    let mut entry = summarize(
                        r,
                        "exhaustive",
                        records,
                        Some(&weights),
                        Some(entropy_lower_bound(scn).bits),
                        Vec::new(),
                    );
                    entry.effective_delta_exps = first_delta_exps(scn, spec, r)?;
                    entry
                } else {
                    let seeds: Vec<u64> =
                        (0..spec.trials).map(|t| spec.master_seed ^ t as u64).collect();
                    let outcomes = run_chunked(spec.trials, |chunk| {
                        let mut runner = NscRunner::new(scn);
                        chunk
                            .iter()
                            .map(|&t| {
                                let seed = seeds[t as usize];
                                let omega = scn.draw_scenario(
                                    &mut <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed),
                                );
                                run_scenario_once(scn, &mut runner, spec, r, omega)
                                    .map(|o| (t, omega, o))
                            })
                            .collect()
                    })?;
                    let records: Vec<TrialRecord> = outcomes
                        .into_iter()
                        .map(|(t, omega, o)| {
                            trial_record(t, spec.master_seed ^ t as u64, Some(omega), o)
                        })
                        .collect();
                    let mut entry = summarize(
                        r,
                        "monte_carlo",
                        records,
                        None,
                        Some(entropy_lower_bound(scn).bits),
                        Vec::new(),
                    );
                    entry.effective_delta_exps = first_delta_exps(scn, spec, r)?;
                    entry
                }
            }
            AnyInstance::Independent(ind) => {
                let seeds: Vec<u64> =
                    (0..spec.trials).map(|t| spec.master_seed ^ t as u64).collect();
                let outcomes = run_chunked(spec.trials, |chunk| {
                    let mut runner = SscRunner::new(ind, scoring_config(spec));
                    chunk
                        .iter()
                        .map(|&t| {
                            let seed = seeds[t as usize];
                            let outcomes = ind.draw_outcomes(
                                &mut <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed),
                            );
                            run_independent_once(ind, &mut runner, spec, r, &outcomes)
                                .map(|o| (t, o))
                        })
                        .collect()
                })?;
                let records: Vec<TrialRecord> = outcomes
                    .into_iter()
                    .map(|(t, o)| trial_record(t, spec.master_seed ^ t as u64, None, o))
                    .collect();
                let mut entry = summarize(r, "monte_carlo", records, None, None, Vec::new());
                if spec.algo == Algo::Ssc {
                    // deltas from the first trial's transcript
                    let outcomes = ind.draw_outcomes(
                        &mut <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(spec.master_seed),
                    );
                    let mut runner = SscRunner::new(ind, scoring_config(spec));
                    let t = runner.solve(r, &mut IndSource::Fixed(&outcomes))?;
                    entry.effective_delta_exps =
                        t.rounds.iter().map(|x| x.delta_exp).collect();
                }
                entry
            }
        };
        entries.push(entry);
    }
    Ok(ExperimentReport {
        algo: spec.algo,
        model: inst.model().into(),
        master_seed: spec.master_seed,
        entries,
    })
}

fn first_delta_exps(inst: &ScenarioInstance, spec: &ExperimentSpec, r: u32) -> Result<Vec<u32>> {
    if spec.algo.is_set_based() {
        return Ok(Vec::new());
    }
    let mut runner = NscRunner::new(inst);
    let t = match spec.algo {
        Algo::Nsc => runner.solve(r, &mut ScnSource::Fixed(0))?,
        Algo::Nsc2r => runner.solve_2r(r, &mut ScnSource::Fixed(0))?,
        _ => unreachable!(),
    };
    Ok(t.rounds.iter().map(|x| x.delta_exp).collect())
}

fn trial_record(trial: u32, seed: u64, scenario: Option<u32>, o: TrialOutcome) -> TrialRecord {
    TrialRecord {
        trial,
        seed,
        scenario,
        cost: o.cost,
        covered: o.covered,
        rounds_used: o.rounds_used,
        offline: o.offline,
        realization_digest: format!("{:016x}", o.digest),
    }
}

/// Runs `per_chunk` over fixed-size chunks of `0..count` in parallel and
/// flattens the results in index order.
fn run_chunked<T: Send>(
    count: u32,
    per_chunk: impl Fn(&[u32]) -> Result<Vec<T>> + Sync + Send,
) -> Result<Vec<T>> {
    let indices: Vec<u32> = (0..count).collect();
    let chunks: Vec<&[u32]> = indices.chunks(TRIAL_CHUNK).collect();
    let nested: Vec<Vec<T>> = chunks
        .into_par_iter()
        .map(per_chunk)
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}
