//! Independent-items solver.
//!
//! A single partial-cover pass builds a probing list greedily: each step
//! scores every remaining item by its expected relative marginal gain over a
//! random draw of the already-listed items (restricted to draws that have
//! not yet reached the partial-cover threshold), normalized by cost. Items
//! are then probed in list order until the realized value exceeds
//! `Q(1 - delta)`. The r-round solver runs one pass per round on the
//! residual objective, shrinking the residual target by a `Q^{1/r}` factor
//! each round.
//!
//! List construction never looks at realizations, so the next list entry is
//! computed only when probing demands it; the sequence is identical to
//! materializing the whole list up front.

use crate::error::Error;
use crate::instance::{IndItem, IndSource, IndependentInstance};
use crate::objective::Objective;
use crate::ratio::{frac, frac_zero, ratio64_to_frac, CoverThreshold, Frac, Pow2, Ratio64};
use crate::set::ElemSet;
use crate::transcript::{PolicyTranscript, RoundRecord};
use crate::Result;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Upper bound on the number of joint prefix outcomes exact scoring will
/// enumerate.
pub const EXACT_SUPPORT_LIMIT: u128 = 1_000_000;

/// Hard cap on the per-item sample count in sampled scoring mode.
pub const MAX_SAMPLES: u64 = 1_000_000;

/// Score computation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Exact expectation over the joint support of the listed prefix.
    Exact,
    /// Monte-Carlo estimate from seeded samples.
    Sampled,
}

/// Configuration for a partial-cover pass.
#[derive(Debug, Clone)]
pub struct ParcaConfig {
    /// Partial-cover parameter in (0, 1]; rounded down to a power of two
    /// internally (the effective value is reported in the outcome).
    pub delta: Ratio64,
    pub sampler: Sampler,
    /// Sample count per item and step; `None` uses
    /// `4 m^2 c_max ceil(log2(m c_max + 2))`, capped at [`MAX_SAMPLES`].
    pub k_samples: Option<u64>,
    /// Low-score cutoff; `None` uses `1 / (m^2 c_max)`. Once every remaining
    /// item scores below the cutoff, the rest of the list is id order.
    pub epsilon: Option<Ratio64>,
    pub rng_seed: u64,
}

impl ParcaConfig {
    pub fn exact(delta: Ratio64) -> ParcaConfig {
        ParcaConfig {
            delta,
            sampler: Sampler::Exact,
            k_samples: None,
            epsilon: None,
            rng_seed: 0,
        }
    }

    pub fn sampled(delta: Ratio64, rng_seed: u64) -> ParcaConfig {
        ParcaConfig {
            delta,
            sampler: Sampler::Sampled,
            k_samples: None,
            epsilon: None,
            rng_seed,
        }
    }
}

fn ceil_log2(x: u64) -> u32 {
    64 - (x.saturating_sub(1)).leading_zeros()
}

/// Default sample count for sampled scoring.
pub fn default_k_samples(m: u64, c_max: u64) -> u64 {
    let base = 4u64
        .saturating_mul(m.saturating_mul(m))
        .saturating_mul(c_max)
        .saturating_mul(ceil_log2(m.saturating_mul(c_max).saturating_add(2)) as u64);
    base.clamp(1, MAX_SAMPLES)
}

/// Scoring context for one pass: the (residual) objective, threshold, and
/// sampler settings.
#[derive(Debug, Clone)]
pub struct ScoreParams {
    pub objective: Objective,
    pub threshold: CoverThreshold,
    pub sampler: Sampler,
    pub k_samples: u64,
    pub epsilon: Frac,
    pub rng_seed: u64,
}

impl ScoreParams {
    pub(crate) fn from_config(
        inst: &IndependentInstance,
        items: &[u32],
        objective: Objective,
        delta: Pow2,
        cfg: &ParcaConfig,
        seed: u64,
    ) -> ScoreParams {
        let m = items.len() as u64;
        let c_max = items
            .iter()
            .map(|&i| inst.item(i).cost)
            .max()
            .unwrap_or(1);
        let threshold = CoverThreshold::new(objective.max_value(), delta);
        ScoreParams {
            objective,
            threshold,
            sampler: cfg.sampler,
            k_samples: cfg.k_samples.unwrap_or_else(|| default_k_samples(m, c_max)),
            epsilon: cfg
                .epsilon
                .map(ratio64_to_frac)
                .unwrap_or_else(|| frac(1, m.saturating_mul(m).saturating_mul(c_max).max(1))),
            rng_seed: seed,
        }
    }
}

/// Greedy list construction state: the chosen prefix, the items still
/// unlisted, and whether the low-score fallback has engaged.
#[derive(Debug, Clone)]
pub struct ScoreState {
    chosen: Vec<u32>,
    remaining: Vec<u32>,
    fallback: bool,
    /// Scores computed for the latest step, for inspection in tests.
    pub last_scores: Vec<(u32, Frac)>,
}

impl ScoreState {
    pub fn new(mut items: Vec<u32>) -> ScoreState {
        items.sort_unstable();
        ScoreState {
            chosen: Vec::new(),
            remaining: items,
            fallback: false,
            last_scores: Vec::new(),
        }
    }

    pub fn chosen(&self) -> &[u32] {
        &self.chosen
    }

    pub fn remaining(&self) -> &[u32] {
        &self.remaining
    }
}

/// Joint outcomes of a list prefix: `(weight, realized union)` per
/// combination, with total weight equal to the product of the items'
/// weight totals.
fn joint_outcomes(
    inst: &IndependentInstance,
    prefix: &[u32],
) -> Result<Vec<(BigInt, ElemSet)>> {
    let mut product: u128 = 1;
    for &i in prefix {
        product = product.saturating_mul(inst.item(i).support().len() as u128);
        if product > EXACT_SUPPORT_LIMIT {
            return Err(Error::ScoreSupportTooLarge {
                product,
                limit: EXACT_SUPPORT_LIMIT,
            });
        }
    }
    let mut table = alloc::vec![(BigInt::from(1u32), ElemSet::new())];
    for &i in prefix {
        let item = inst.item(i);
        let mut next = Vec::with_capacity(table.len() * item.support().len());
        for (w, set) in &table {
            for (subset, sw) in item.support() {
                next.push((w * sw, set.union(subset)));
            }
        }
        table = next;
    }
    Ok(table)
}

fn score_from_table(
    table: &[(BigInt, ElemSet)],
    prefix_weight_total: &BigInt,
    item: &IndItem,
    params: &ScoreParams,
) -> Frac {
    let f = &params.objective;
    let thr = &params.threshold;
    // bucket by residual target so the rational sum stays small
    let mut buckets: BTreeMap<u64, BigInt> = BTreeMap::new();
    for (w, set) in table {
        let v = f.eval_unchecked(set);
        if !thr.below(v) {
            continue;
        }
        let mut inner = BigInt::zero();
        for (subset, sw) in item.support() {
            let gain = f.eval_unchecked(&set.union(subset)) - v;
            if gain > 0 {
                inner += BigInt::from(*sw) * gain;
            }
        }
        if !inner.is_zero() {
            *buckets.entry(thr.max_value - v).or_insert_with(BigInt::zero) += w * inner;
        }
    }
    let mut sum = frac_zero();
    for (resid, num) in buckets {
        sum += Frac::new(num, BigInt::from(resid));
    }
    sum / Frac::from(
        prefix_weight_total * item.weight_total() * item.cost,
    )
}

/// Exact score of `item` given the listed `prefix`: the expectation, over
/// the joint prefix outcome `S` and the item's own realization, of
/// `1[f(S) <= Q(1-delta)] * (f(S ∪ X) - f(S)) / (Q - f(S))`, divided by the
/// item's cost.
pub fn score_exact(
    inst: &IndependentInstance,
    item: u32,
    prefix: &[u32],
    params: &ScoreParams,
) -> Result<Frac> {
    let table = joint_outcomes(inst, prefix)?;
    let total: BigInt = prefix
        .iter()
        .map(|&i| BigInt::from(inst.item(i).weight_total()))
        .product();
    Ok(score_from_table(&table, &total, inst.item(item), params))
}

/// Sampled score estimate: the average of `k` independent joint samples of
/// the same indicator-weighted ratio, divided by the item's cost. The result
/// is an exact rational of the empirical mean, deterministic in the RNG.
pub fn score_sampled(
    inst: &IndependentInstance,
    item: u32,
    prefix: &[u32],
    params: &ScoreParams,
    k: u64,
    rng: &mut ChaCha8Rng,
) -> Frac {
    let f = &params.objective;
    let thr = &params.threshold;
    let it = inst.item(item);
    let mut buckets: BTreeMap<u64, u128> = BTreeMap::new();
    for _ in 0..k {
        let mut union = ElemSet::new();
        for &p in prefix {
            let pi = inst.item(p);
            let o = pi.sample_outcome(rng);
            union.union_with(&pi.support()[o as usize].0);
        }
        let v = f.eval_unchecked(&union);
        if !thr.below(v) {
            continue;
        }
        let o = it.sample_outcome(rng);
        let gain = f.eval_unchecked(&union.union(&it.support()[o as usize].0)) - v;
        if gain > 0 {
            *buckets.entry(thr.max_value - v).or_insert(0) += gain as u128;
        }
    }
    let mut sum = frac_zero();
    for (resid, num) in buckets {
        sum += Frac::new(BigInt::from(num), BigInt::from(resid));
    }
    sum / Frac::from(BigInt::from(k) * it.cost)
}

/// Appends the next list entry: the remaining item of maximal (estimated)
/// score, ties broken by lowest id. Once every remaining item scores below
/// the cutoff the rest of the list is id order.
pub fn build_next_list_item(
    inst: &IndependentInstance,
    state: &mut ScoreState,
    params: &ScoreParams,
) -> Result<Option<u32>> {
    if state.remaining.is_empty() {
        return Ok(None);
    }
    let pick = if state.fallback {
        state.remaining[0]
    } else {
        let mut scores: Vec<(u32, Frac)> = Vec::with_capacity(state.remaining.len());
        match params.sampler {
            Sampler::Exact => {
                let table = joint_outcomes(inst, &state.chosen)?;
                let total: BigInt = state
                    .chosen
                    .iter()
                    .map(|&i| BigInt::from(inst.item(i).weight_total()))
                    .product();
                for &e in &state.remaining {
                    scores.push((e, score_from_table(&table, &total, inst.item(e), params)));
                }
            }
            Sampler::Sampled => {
                let step = state.chosen.len() as u64;
                for &e in &state.remaining {
                    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
                    rng.set_stream((step << 32) ^ e as u64);
                    scores.push((
                        e,
                        score_sampled(inst, e, &state.chosen, params, params.k_samples, &mut rng),
                    ));
                }
            }
        }
        let (mut best, mut best_score) = (scores[0].0, scores[0].1.clone());
        for (e, s) in scores.iter().skip(1) {
            if *s > best_score {
                best = *e;
                best_score = s.clone();
            }
        }
        state.last_scores = scores;
        if best_score < params.epsilon {
            state.fallback = true;
            state.remaining[0]
        } else {
            best
        }
    };
    state.remaining.retain(|&e| e != pick);
    state.chosen.push(pick);
    Ok(Some(pick))
}

/// Materializes the full probing list for the given configuration without
/// probing anything.
pub fn build_full_list(inst: &IndependentInstance, cfg: &ParcaConfig) -> Result<Vec<u32>> {
    let delta = Pow2::floor_of_ratio(cfg.delta)?;
    let items: Vec<u32> = (0..inst.m()).collect();
    let params = ScoreParams::from_config(
        inst,
        &items,
        inst.objective().clone(),
        delta,
        cfg,
        cfg.rng_seed,
    );
    let mut state = ScoreState::new(items);
    let mut list = Vec::new();
    while let Some(e) = build_next_list_item(inst, &mut state, &params)? {
        list.push(e);
    }
    Ok(list)
}

/// Result of one partial-cover pass.
#[derive(Debug, Clone)]
pub struct ParcaOutcome {
    pub probed: Vec<u32>,
    pub observed: Vec<ElemSet>,
    /// Union of everything observed in this pass.
    pub realized: ElemSet,
    pub cost: u64,
    /// Value of the pass objective on `realized`.
    pub final_value: u64,
    /// Effective threshold: `delta = 2^-delta_exp`.
    pub delta_exp: u32,
}

fn run_pass(
    inst: &IndependentInstance,
    state: &mut ScoreState,
    params: &ScoreParams,
    produced: &mut Vec<u32>,
    src: &mut IndSource<'_>,
) -> Result<ParcaOutcome> {
    let thr = &params.threshold;
    let mut out = ParcaOutcome {
        probed: Vec::new(),
        observed: Vec::new(),
        realized: ElemSet::new(),
        cost: 0,
        final_value: 0,
        delta_exp: thr.delta.exp(),
    };
    let mut idx = 0usize;
    while thr.below(out.final_value) {
        if idx == produced.len() {
            match build_next_list_item(inst, state, params)? {
                Some(e) => produced.push(e),
                None => {
                    return Err(Error::InvariantViolation(alloc::format!(
                        "items exhausted with value {} still at or below the partial-cover threshold",
                        out.final_value
                    )))
                }
            }
        }
        let e = produced[idx];
        idx += 1;
        let item = inst.item(e);
        let o = src.observe(item);
        let subset = item.support()[o as usize].0.clone();
        out.realized.union_with(&subset);
        out.final_value = params.objective.eval_unchecked(&out.realized);
        out.cost += item.cost;
        out.probed.push(e);
        out.observed.push(subset);
    }
    Ok(out)
}

/// One partial-cover pass over the whole instance: probes the greedy list
/// until the realized value exceeds `Q(1 - delta)`.
pub fn parca_run(
    inst: &IndependentInstance,
    cfg: &ParcaConfig,
    src: &mut IndSource<'_>,
) -> Result<ParcaOutcome> {
    let delta = Pow2::floor_of_ratio(cfg.delta)?;
    let items: Vec<u32> = (0..inst.m()).collect();
    let objective = inst.objective().clone();
    if objective.max_value() == 0 {
        return Ok(ParcaOutcome {
            probed: Vec::new(),
            observed: Vec::new(),
            realized: ElemSet::new(),
            cost: 0,
            final_value: 0,
            delta_exp: delta.exp(),
        });
    }
    let params = ScoreParams::from_config(inst, &items, objective, delta, cfg, cfg.rng_seed);
    let mut state = ScoreState::new(items);
    let mut produced = Vec::new();
    run_pass(inst, &mut state, &params, &mut produced, src)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct RoundKey {
    rounds_left: u32,
    items: Vec<u32>,
    covered: ElemSet,
}

struct CachedList {
    state: ScoreState,
    params: ScoreParams,
    produced: Vec<u32>,
}

/// Multi-round solver with a list cache.
///
/// Round lists are pure functions of (rounds left, available items, realized
/// set), so repeated runs on the same instance, as in Monte-Carlo
/// evaluation, reuse list prefixes instead of rebuilding them.
pub struct SscRunner<'a> {
    inst: &'a IndependentInstance,
    cfg: ParcaConfig,
    cache: BTreeMap<RoundKey, CachedList>,
}

impl<'a> SscRunner<'a> {
    /// `cfg.delta` is ignored; each round derives its own threshold from the
    /// residual target.
    pub fn new(inst: &'a IndependentInstance, cfg: ParcaConfig) -> SscRunner<'a> {
        SscRunner {
            inst,
            cfg,
            cache: BTreeMap::new(),
        }
    }

    pub fn solve(&mut self, r: u32, src: &mut IndSource<'_>) -> Result<PolicyTranscript> {
        if r == 0 {
            return Err(Error::InvalidParameter("round budget must be at least 1".into()));
        }
        let q = self.inst.objective().max_value();
        let mut covered = ElemSet::new();
        let mut available: Vec<u32> = (0..self.inst.m()).collect();
        let mut rounds = Vec::new();
        let mut total_cost = 0u64;
        for k in 0..r {
            let objective = self.inst.objective().residual(&covered);
            let q_hat = objective.max_value();
            if q_hat == 0 {
                break;
            }
            let rounds_left = r - k;
            let delta = Pow2::floor_of_inverse_root(q_hat, rounds_left)?;
            let key = RoundKey {
                rounds_left,
                items: available.clone(),
                covered: covered.clone(),
            };
            if !self.cache.contains_key(&key) {
                let seed = self.cfg.rng_seed
                    ^ key.covered.fingerprint()
                    ^ (rounds_left as u64) << 48
                    ^ (available.len() as u64);
                let params = ScoreParams::from_config(
                    self.inst,
                    &available,
                    objective.clone(),
                    delta,
                    &self.cfg,
                    seed,
                );
                self.cache.insert(
                    key.clone(),
                    CachedList {
                        state: ScoreState::new(available.clone()),
                        params,
                        produced: Vec::new(),
                    },
                );
            }
            let entry = self.cache.get_mut(&key).expect("just inserted");
            let outcome = run_pass(
                self.inst,
                &mut entry.state,
                &entry.params,
                &mut entry.produced,
                src,
            )?;
            let probed: BTreeSet<u32> = outcome.probed.iter().copied().collect();
            available.retain(|e| !probed.contains(e));
            covered.union_with(&outcome.realized);
            total_cost += outcome.cost;
            rounds.push(RoundRecord {
                probed: outcome.probed,
                observed: outcome.observed,
                cost: outcome.cost,
                delta_exp: outcome.delta_exp,
                eps_exp: None,
            });
        }
        let final_value = self.inst.objective().eval_unchecked(&covered);
        Ok(PolicyTranscript {
            rounds,
            total_cost,
            covered: final_value == q,
            final_value,
            max_value: q,
        })
    }
}

/// Runs the r-round solver once. For repeated evaluation on one instance,
/// construct an [`SscRunner`] and reuse it.
pub fn ssc_solve(
    r: u32,
    inst: &IndependentInstance,
    src: &mut IndSource<'_>,
    cfg: &ParcaConfig,
) -> Result<PolicyTranscript> {
    SscRunner::new(inst, cfg.clone()).solve(r, src)
}
