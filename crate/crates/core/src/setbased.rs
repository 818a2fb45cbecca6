//! Conversion of permutation-style rounds into batched (set-based) rounds.
//!
//! A permutation round probes a list one item at a time and stops mid-list;
//! a set-based round must commit to a batch up front and pays for all of it.
//! Each round here estimates the expected stopping cost `mu` of the
//! underlying permutation round from the current state, then probes the
//! maximal list prefix of cost at most `(r/eta) * mu` (fixed round count,
//! coverage with probability at least `1 - eta`) or `4 * mu` (doubled round
//! count, constant batch overhead). A round succeeds when the permutation
//! stopping rule fires inside the batch; the batch is always a superset of
//! what the permutation run would have probed in that case.

use crate::error::Error;
use crate::instance::{IndSource, IndependentInstance, ScenarioInstance, ScnSource};
use crate::objective::Objective;
use crate::parca::{build_next_list_item, ParcaConfig, ScoreParams, ScoreState};
use crate::ratio::{CoverThreshold, Pow2};
use crate::set::ElemSet;
use crate::sparca::{next_scn_list_item, ScenarioPartition, ScnListState};
use crate::Result;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Conditional outcome spaces up to this size are enumerated exactly when
/// estimating a round's expected stopping cost.
pub const EXACT_MU_LIMIT: u64 = 4096;

/// Batching mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetMode {
    /// Exactly `r` rounds with prefix budget `ceil((r/eta) * mu)`; covers
    /// with probability at least `1 - eta` and never probes past round `r`.
    SmallR { eta: f64 },
    /// `2r` rounds (independent) or `4r` rounds (scenario) with prefix
    /// budget `ceil(4 * mu)`; enough rounds succeed with high probability
    /// that the residual recursion completes.
    LargeR,
}

/// A set-based policy wrapping the round structure of the permutation
/// solvers.
#[derive(Debug, Clone)]
pub struct SetRoundPolicy {
    /// Round parameter `r` of the underlying permutation algorithm.
    pub rounds: u32,
    pub mode: SetMode,
    /// Monte-Carlo sample count for `mu` estimation when the conditional
    /// outcome space exceeds [`EXACT_MU_LIMIT`].
    pub mu_trials: u32,
    pub rng_seed: u64,
}

impl SetRoundPolicy {
    pub fn new(rounds: u32, mode: SetMode) -> SetRoundPolicy {
        SetRoundPolicy {
            rounds,
            mode,
            mu_trials: 200,
            rng_seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("round budget must be at least 1".into()));
        }
        if self.mu_trials == 0 {
            return Err(Error::InvalidParameter("mu_trials must be at least 1".into()));
        }
        if let SetMode::SmallR { eta } = self.mode {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "eta must lie in (0, 1), got {eta}"
                )));
            }
        }
        Ok(())
    }

    fn budget(&self, mu: f64) -> u64 {
        let factor = match self.mode {
            SetMode::SmallR { eta } => self.rounds as f64 / eta,
            SetMode::LargeR => 4.0,
        };
        libm::ceil(factor * mu) as u64
    }
}

/// One batched round.
#[derive(Debug, Clone, PartialEq)]
pub struct SetRound {
    pub probed: Vec<u32>,
    pub observed: Vec<ElemSet>,
    /// Full batch cost (paid even when the stopping rule fires early).
    pub cost: u64,
    pub budget: u64,
    pub mu_estimate: f64,
    /// Whether the permutation stopping rule fired within the batch.
    pub success: bool,
    /// How many batch items the permutation run would have probed, when the
    /// round succeeded (the batch is a superset of that prefix).
    pub permutation_prefix_len: usize,
}

/// Record of a set-based execution.
#[derive(Debug, Clone, PartialEq)]
pub struct SetRoundTranscript {
    pub rounds: Vec<SetRound>,
    pub total_cost: u64,
    pub covered: bool,
    pub rounds_used: u32,
    pub final_value: u64,
    pub max_value: u64,
}

// ---------------------------------------------------------------------------
// independent model

struct IndRound<'a> {
    inst: &'a IndependentInstance,
    params: ScoreParams,
    state: ScoreState,
    produced: Vec<u32>,
}

impl<'a> IndRound<'a> {
    fn new(
        inst: &'a IndependentInstance,
        available: &[u32],
        covered: &ElemSet,
        delta: Pow2,
        scoring: &ParcaConfig,
        seed: u64,
    ) -> IndRound<'a> {
        let objective = inst.objective().residual(covered);
        let params =
            ScoreParams::from_config(inst, available, objective, delta, scoring, seed);
        IndRound {
            inst,
            params,
            state: ScoreState::new(available.to_vec()),
            produced: Vec::new(),
        }
    }

    fn ensure(&mut self, idx: usize) -> Result<Option<u32>> {
        while idx >= self.produced.len() {
            match build_next_list_item(self.inst, &mut self.state, &self.params)? {
                Some(e) => self.produced.push(e),
                None => return Ok(None),
            }
        }
        Ok(Some(self.produced[idx]))
    }

    /// Expected stopping cost of probing the list from scratch under fresh
    /// realizations of every unprobed item.
    fn mu(&mut self, trials: u32, rng: &mut ChaCha8Rng) -> Result<f64> {
        if !self.params.threshold.below(0) {
            return Ok(0.0);
        }
        let product = self
            .state
            .remaining()
            .iter()
            .chain(self.state.chosen())
            .try_fold(1u64, |acc, &i| {
                let p = acc.checked_mul(self.inst.item(i).support().len() as u64)?;
                (p <= EXACT_MU_LIMIT).then_some(p)
            });
        if product.is_some() {
            return self.mu_exact(0, &ElemSet::new());
        }
        let mut total = 0.0;
        for _ in 0..trials {
            total += self.simulate_stopping_cost(rng)?;
        }
        Ok(total / trials as f64)
    }

    fn mu_exact(&mut self, idx: usize, union: &ElemSet) -> Result<f64> {
        let value = self.params.objective.eval_unchecked(union);
        if !self.params.threshold.below(value) {
            return Ok(0.0);
        }
        let e = match self.ensure(idx)? {
            Some(e) => e,
            None => {
                return Err(Error::InvariantViolation(
                    "items exhausted before the stopping rule fired".into(),
                ))
            }
        };
        let item = self.inst.item(e);
        let mut expect = item.cost as f64;
        let total = item.weight_total() as f64;
        for oi in 0..item.support().len() {
            let (subset, w) = &item.support()[oi];
            let child_union = union.union(subset);
            let w = *w as f64;
            expect += (w / total) * self.mu_exact(idx + 1, &child_union)?;
        }
        Ok(expect)
    }

    fn simulate_stopping_cost(&mut self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let mut union = ElemSet::new();
        let mut cost = 0u64;
        let mut idx = 0;
        while self
            .params
            .threshold
            .below(self.params.objective.eval_unchecked(&union))
        {
            let e = match self.ensure(idx)? {
                Some(e) => e,
                None => {
                    return Err(Error::InvariantViolation(
                        "items exhausted before the stopping rule fired".into(),
                    ))
                }
            };
            idx += 1;
            let item = self.inst.item(e);
            let o = item.sample_outcome(rng);
            union.union_with(&item.support()[o as usize].0);
            cost += item.cost;
        }
        Ok(cost as f64)
    }

    /// Maximal list prefix of total cost at most `budget`.
    fn batch(&mut self, budget: u64) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        let mut cost = 0u64;
        let mut idx = 0;
        while let Some(e) = self.ensure(idx)? {
            let c = self.inst.item(e).cost;
            if cost + c > budget {
                break;
            }
            cost += c;
            out.push(e);
            idx += 1;
        }
        Ok(out)
    }
}

/// Expected stopping cost of one independent-model permutation round from
/// the given state, by exact enumeration when the conditional outcome space
/// is small and Monte-Carlo otherwise.
pub fn estimate_round_cost_independent(
    inst: &IndependentInstance,
    available: &[u32],
    covered: &ElemSet,
    delta: Pow2,
    scoring: &ParcaConfig,
    trials: u32,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut round = IndRound::new(inst, available, covered, delta, scoring, scoring.rng_seed);
    round.mu(trials, rng)
}

/// Runs a set-based policy on an independent instance.
pub fn run_set_based_independent(
    inst: &IndependentInstance,
    policy: &SetRoundPolicy,
    scoring: &ParcaConfig,
    src: &mut IndSource<'_>,
) -> Result<SetRoundTranscript> {
    policy.validate()?;
    let r = policy.rounds;
    let q = inst.objective().max_value();
    let total_rounds = match policy.mode {
        SetMode::SmallR { .. } => r,
        SetMode::LargeR => 2 * r,
    };
    let fixed_delta = match policy.mode {
        SetMode::LargeR => Some(Pow2::floor_of_inverse_root(q.max(1), r)?),
        SetMode::SmallR { .. } => None,
    };
    let mut covered = ElemSet::new();
    let mut available: Vec<u32> = (0..inst.m()).collect();
    let mut rounds = Vec::new();
    let mut total_cost = 0u64;
    for k in 0..total_rounds {
        let q_hat = q - inst.objective().eval_unchecked(&covered);
        if q_hat == 0 {
            break;
        }
        let delta = match fixed_delta {
            Some(d) => d,
            None => Pow2::floor_of_inverse_root(q_hat, r - k)?,
        };
        let seed = policy.rng_seed ^ covered.fingerprint() ^ ((k as u64) << 40);
        let mut round = IndRound::new(inst, &available, &covered, delta, scoring, seed);
        let mut mu_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d75);
        let mu = round.mu(policy.mu_trials, &mut mu_rng)?;
        let budget = policy.budget(mu);
        let batch = round.batch(budget)?;
        let mut observed = Vec::with_capacity(batch.len());
        let mut cost = 0u64;
        for &e in &batch {
            let item = inst.item(e);
            let o = src.observe(item);
            observed.push(item.support()[o as usize].0.clone());
            cost += item.cost;
        }
        // where the permutation run would have stopped
        let thr = round.params.threshold;
        let mut union = ElemSet::new();
        let mut stop_len = None;
        for (i, obs) in observed.iter().enumerate() {
            union.union_with(obs);
            if !thr.below(round.params.objective.eval_unchecked(&union)) {
                stop_len = Some(i + 1);
                break;
            }
        }
        let probed_set: BTreeSet<u32> = batch.iter().copied().collect();
        available.retain(|e| !probed_set.contains(e));
        for obs in &observed {
            covered.union_with(obs);
        }
        total_cost += cost;
        rounds.push(SetRound {
            probed: batch,
            observed,
            cost,
            budget,
            mu_estimate: mu,
            success: stop_len.is_some(),
            permutation_prefix_len: stop_len.unwrap_or(0),
        });
    }
    let final_value = inst.objective().eval_unchecked(&covered);
    Ok(SetRoundTranscript {
        rounds_used: rounds.len() as u32,
        total_cost,
        covered: final_value == q,
        final_value,
        max_value: q,
        rounds,
    })
}

// ---------------------------------------------------------------------------
// scenario model

struct ScnRound<'a> {
    inst: &'a ScenarioInstance,
    objective: Objective,
    delta: Pow2,
    round_size: u64,
    eps: Option<CoverThreshold>,
    state: ScnListState,
    produced: Vec<u32>,
}

impl<'a> ScnRound<'a> {
    fn new(
        inst: &'a ScenarioInstance,
        available: &[u32],
        live: &[u32],
        realized: &ElemSet,
        delta: Pow2,
        eps: Option<Pow2>,
    ) -> ScnRound<'a> {
        let objective = inst.objective().residual(realized);
        let eps = eps.map(|e| CoverThreshold::new(objective.max_value(), e));
        let state = ScnListState {
            chosen: Vec::new(),
            remaining: available.to_vec(),
            partition: ScenarioPartition::root(inst, &objective, live, delta, eps),
        };
        ScnRound {
            inst,
            objective,
            delta,
            round_size: live.len() as u64,
            eps,
            state,
            produced: Vec::new(),
        }
    }

    fn keep_probing(&self, value: u64, live_count: u64) -> bool {
        if !self.delta.times_le(self.round_size, live_count) {
            return false;
        }
        match &self.eps {
            Some(thr) => thr.below(value),
            None => value < self.objective.max_value(),
        }
    }

    fn ensure(&mut self, idx: usize) -> Result<Option<u32>> {
        while idx >= self.produced.len() {
            match next_scn_list_item(self.inst, &mut self.state, &self.objective)? {
                Some(e) => self.produced.push(e),
                None => return Ok(None),
            }
        }
        Ok(Some(self.produced[idx]))
    }

    /// Stopping cost under a fixed hidden scenario.
    fn stopping_cost(&mut self, live: &[u32], omega: u32) -> Result<u64> {
        let mut live: Vec<u32> = live.to_vec();
        let mut union = ElemSet::new();
        let mut cost = 0u64;
        let mut idx = 0;
        loop {
            let value = self.objective.eval_unchecked(&union);
            if !self.keep_probing(value, live.len() as u64) {
                return Ok(cost);
            }
            let e = match self.ensure(idx)? {
                Some(e) => e,
                None => {
                    return Err(Error::InvariantViolation(
                        "items exhausted before the stopping rule fired".into(),
                    ))
                }
            };
            idx += 1;
            let obs = self.inst.realization(e, omega).clone();
            live.retain(|&w| self.inst.realization(e, w) == &obs);
            union.union_with(&obs);
            cost += self.inst.cost(e);
        }
    }

    fn mu(&mut self, live: &[u32], trials: u32, rng: &mut ChaCha8Rng) -> Result<f64> {
        if !self.keep_probing(0, live.len() as u64) || self.objective.max_value() == 0 {
            return Ok(0.0);
        }
        if (live.len() as u64) <= EXACT_MU_LIMIT {
            // exact conditional expectation over the renormalized live set
            let total: u64 = self.inst.weight_of(live);
            let mut sum = 0.0;
            for &omega in live {
                let c = self.stopping_cost(live, omega)? as f64;
                sum += c * self.inst.weight(omega) as f64;
            }
            return Ok(sum / total as f64);
        }
        let mut total = 0.0;
        for _ in 0..trials {
            let omega = self.inst.draw_scenario_among(live, rng);
            total += self.stopping_cost(live, omega)? as f64;
        }
        Ok(total / trials as f64)
    }

    fn batch(&mut self, budget: u64) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        let mut cost = 0u64;
        let mut idx = 0;
        while let Some(e) = self.ensure(idx)? {
            let c = self.inst.cost(e);
            if cost + c > budget {
                break;
            }
            cost += c;
            out.push(e);
            idx += 1;
        }
        Ok(out)
    }
}

/// Expected stopping cost of one scenario-model permutation round from the
/// given state; exact over the live set when it is small, sampled from the
/// renormalized live set otherwise.
#[allow(clippy::too_many_arguments)]
pub fn estimate_round_cost_scenario(
    inst: &ScenarioInstance,
    available: &[u32],
    live: &[u32],
    realized: &ElemSet,
    delta: Pow2,
    eps: Option<Pow2>,
    trials: u32,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut round = ScnRound::new(inst, available, live, realized, delta, eps);
    round.mu(live, trials, rng)
}

/// Runs a set-based policy on a scenario instance.
pub fn run_set_based_scenario(
    inst: &ScenarioInstance,
    policy: &SetRoundPolicy,
    src: &mut ScnSource,
) -> Result<SetRoundTranscript> {
    policy.validate()?;
    let omega = src.resolve(inst)?;
    let r = policy.rounds;
    let q = inst.objective().max_value();
    let total_rounds = match policy.mode {
        SetMode::SmallR { .. } => r,
        SetMode::LargeR => 4 * r,
    };
    let fixed = match policy.mode {
        SetMode::LargeR => Some((
            Pow2::floor_of_inverse_root(inst.s() as u64, r)?,
            Pow2::floor_of_inverse_root(q.max(1), r)?,
        )),
        SetMode::SmallR { .. } => None,
    };
    let mut realized = ElemSet::new();
    let mut live: Vec<u32> = (0..inst.s()).collect();
    let mut available: Vec<u32> = (0..inst.m()).collect();
    let mut rounds = Vec::new();
    let mut total_cost = 0u64;
    for k in 0..total_rounds {
        let q_hat = q - inst.objective().eval_unchecked(&realized);
        if q_hat == 0 {
            break;
        }
        let (delta, eps) = match fixed {
            Some((d, e)) => (d, Some(e)),
            None => (
                Pow2::floor_of_inverse_root(live.len() as u64, r - k)?,
                None,
            ),
        };
        let mut round = ScnRound::new(inst, &available, &live, &realized, delta, eps);
        let seed = policy.rng_seed ^ realized.fingerprint() ^ ((k as u64) << 40) ^ 0x736e;
        let mut mu_rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = round.mu(&live, policy.mu_trials, &mut mu_rng)?;
        let budget = policy.budget(mu);
        let batch = round.batch(budget)?;
        let mut observed = Vec::with_capacity(batch.len());
        let mut cost = 0u64;
        for &e in &batch {
            observed.push(inst.realization(e, omega).clone());
            cost += inst.cost(e);
        }
        // virtual permutation stopping point within the batch
        let mut vlive = live.clone();
        let mut vunion = ElemSet::new();
        let mut stop_len = None;
        for (i, (&e, obs)) in batch.iter().zip(&observed).enumerate() {
            let value = round.objective.eval_unchecked(&vunion);
            if !round.keep_probing(value, vlive.len() as u64) {
                stop_len = Some(i);
                break;
            }
            vlive.retain(|&w| inst.realization(e, w) == obs);
            vunion.union_with(obs);
        }
        if stop_len.is_none()
            && !round.keep_probing(
                round.objective.eval_unchecked(&vunion),
                vlive.len() as u64,
            )
        {
            stop_len = Some(batch.len());
        }
        // commit the full batch
        for (&e, obs) in batch.iter().zip(&observed) {
            live.retain(|&w| inst.realization(e, w) == obs);
            realized.union_with(obs);
        }
        if live.is_empty() {
            return Err(Error::IncompatibleRealization);
        }
        let probed_set: BTreeSet<u32> = batch.iter().copied().collect();
        available.retain(|e| !probed_set.contains(e));
        total_cost += cost;
        rounds.push(SetRound {
            probed: batch,
            observed,
            cost,
            budget,
            mu_estimate: mu,
            success: stop_len.is_some(),
            permutation_prefix_len: stop_len.unwrap_or(0),
        });
    }
    let final_value = inst.objective().eval_unchecked(&realized);
    Ok(SetRoundTranscript {
        rounds_used: rounds.len() as u32,
        total_cost,
        covered: final_value == q,
        final_value,
        max_value: q,
        rounds,
    })
}
