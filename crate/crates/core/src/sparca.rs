//! Correlated-items (scenario) solver.
//!
//! Progress is measured two ways at once: covering the objective and
//! narrowing the set of scenarios compatible with the observations. The
//! greedy list scores an item by the probability mass of scenarios it would
//! split away from the majority outcome (information gain) plus its expected
//! relative marginal value, both restricted to the "large" cells of the
//! partition of scenarios by observed-so-far realizations. Probing stops
//! when the compatible set drops below `delta * s` or the value rule fires.
//!
//! Two stopping variants share the machinery: the full-coverage rule
//! (value = Q) and a two-threshold rule (value > Q(1 - epsilon)) that the
//! 2r-round driver applies with fixed thresholds each round.

use crate::error::Error;
use crate::instance::{ScenarioInstance, ScnSource};
use crate::objective::Objective;
use crate::ratio::{frac_zero, CoverThreshold, Frac, Pow2, Ratio64};
use crate::set::ElemSet;
use crate::transcript::{PolicyTranscript, RoundRecord};
use crate::Result;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use num_bigint::BigInt;

/// Configuration for one scenario partial-cover pass.
#[derive(Debug, Clone)]
pub struct SparcaConfig {
    /// Scenario threshold in (0, 1]; rounded down to a power of two.
    pub delta: Ratio64,
    /// Value threshold; `None` means the pass only stops at full coverage.
    pub epsilon: Option<Ratio64>,
    pub rng_seed: u64,
}

impl SparcaConfig {
    pub fn classic(delta: Ratio64) -> SparcaConfig {
        SparcaConfig {
            delta,
            epsilon: None,
            rng_seed: 0,
        }
    }
}

/// One cell of the partition: scenarios that realize identically on every
/// listed item, with the shared realization and its value cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Part {
    /// Sorted scenario ids.
    pub scenarios: Vec<u32>,
    /// Shared realization of the listed items under these scenarios.
    pub realized: ElemSet,
    /// Objective value of `realized` (under the round's residual objective).
    pub value: u64,
    /// Total prior weight of the scenarios.
    pub weight: u64,
}

/// Partition of a round's scenario set by realization of the listed items.
#[derive(Debug, Clone)]
pub struct ScenarioPartition {
    parts: Vec<Part>,
    delta: Pow2,
    /// Scenario count of the round this partition belongs to.
    round_size: u64,
    /// Value filter for the two-threshold variant.
    eps: Option<CoverThreshold>,
}

impl ScenarioPartition {
    pub(crate) fn root(
        inst: &ScenarioInstance,
        objective: &Objective,
        live: &[u32],
        delta: Pow2,
        eps: Option<CoverThreshold>,
    ) -> ScenarioPartition {
        let mut scenarios: Vec<u32> = live.to_vec();
        scenarios.sort_unstable();
        let weight = inst.weight_of(&scenarios);
        ScenarioPartition {
            parts: alloc::vec![Part {
                scenarios,
                realized: ElemSet::new(),
                value: objective.eval_unchecked(&ElemSet::new()),
                weight,
            }],
            delta,
            round_size: live.len() as u64,
            eps,
        }
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    /// Whether a part counts as large: at least `delta * s` scenarios, and
    /// under the two-threshold variant also still below the value threshold.
    pub fn is_large(&self, part: &Part) -> bool {
        if !self.delta.times_le(self.round_size, part.scenarios.len() as u64) {
            return false;
        }
        match &self.eps {
            Some(thr) => thr.below(part.value),
            None => true,
        }
    }

    pub fn large_parts(&self) -> impl Iterator<Item = &Part> {
        self.parts.iter().filter(|p| self.is_large(p))
    }

    /// Splits every part by the realization of `item`.
    fn refine(&mut self, inst: &ScenarioInstance, objective: &Objective, item: u32) {
        let mut next = Vec::with_capacity(self.parts.len());
        for part in &self.parts {
            let mut groups: BTreeMap<&ElemSet, Vec<u32>> = BTreeMap::new();
            for &omega in &part.scenarios {
                groups
                    .entry(inst.realization(item, omega))
                    .or_default()
                    .push(omega);
            }
            for (outcome, scenarios) in groups {
                let realized = part.realized.union(outcome);
                let value = objective.eval_unchecked(&realized);
                let weight = inst.weight_of(&scenarios);
                next.push(Part {
                    scenarios,
                    realized,
                    value,
                    weight,
                });
            }
        }
        self.parts = next;
    }
}

/// Builds the partition of `live` scenarios induced by the realizations of
/// the items in `chosen`, with large-part marking for the given thresholds.
pub fn partition_by_prefix(
    inst: &ScenarioInstance,
    objective: &Objective,
    chosen: &[u32],
    live: &[u32],
    delta: Pow2,
    eps: Option<CoverThreshold>,
) -> ScenarioPartition {
    let mut partition = ScenarioPartition::root(inst, objective, live, delta, eps);
    for &item in chosen {
        partition.refine(inst, objective, item);
    }
    partition
}

/// Split of a scenario cell by one item's realization: the largest class
/// (ties broken by lexicographically smallest realization) and the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemSplit {
    /// `B`: a maximum-cardinality realization class.
    pub largest: Vec<u32>,
    /// `L = Z \ B`; if the hidden scenario lies here, probing the item at
    /// least halves the compatible set.
    pub rest: Vec<u32>,
}

/// Partitions the scenarios `z` by the realization of `item`.
pub fn split_by_item(inst: &ScenarioInstance, z: &[u32], item: u32) -> Result<ItemSplit> {
    if z.is_empty() {
        return Err(Error::InvalidParameter("cannot split an empty cell".into()));
    }
    let mut groups: BTreeMap<&ElemSet, Vec<u32>> = BTreeMap::new();
    for &omega in z {
        groups
            .entry(inst.realization(item, omega))
            .or_default()
            .push(omega);
    }
    // largest class; BTreeMap iteration order makes the lexicographically
    // smallest realization win ties
    let best_key = groups
        .iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        .map(|(k, _)| *k)
        .expect("non-empty cell");
    let largest = groups.remove(best_key).expect("key exists");
    let mut rest: Vec<u32> = groups.into_values().flatten().collect();
    rest.sort_unstable();
    Ok(ItemSplit { largest, rest })
}

/// Score of `item` against the current partition: over each large part, the
/// mass of scenarios that would leave the majority class plus the expected
/// relative value gain, normalized by the item's cost.
pub fn scenario_score(
    inst: &ScenarioInstance,
    item: u32,
    partition: &ScenarioPartition,
    objective: &Objective,
) -> Result<Frac> {
    let q = objective.max_value();
    let mut sum = frac_zero();
    for part in partition.large_parts() {
        let split = split_by_item(inst, &part.scenarios, item)?;
        let info: u64 = split.rest.iter().map(|&w| inst.weight(w)).sum();
        if info > 0 {
            sum += Frac::from(BigInt::from(info));
        }
        let residual = q - part.value;
        if residual > 0 {
            let mut gain_num: u128 = 0;
            for &omega in &part.scenarios {
                let with = part.realized.union(inst.realization(item, omega));
                let gain = objective.eval_unchecked(&with) - part.value;
                gain_num += inst.weight(omega) as u128 * gain as u128;
            }
            if gain_num > 0 {
                sum += Frac::new(BigInt::from(gain_num), BigInt::from(residual));
            }
        }
    }
    Ok(sum / Frac::from(BigInt::from(inst.weight_total()) * inst.cost(item)))
}

/// List construction state for one pass.
#[derive(Debug, Clone)]
pub(crate) struct ScnListState {
    pub(crate) chosen: Vec<u32>,
    pub(crate) remaining: Vec<u32>,
    pub(crate) partition: ScenarioPartition,
}

pub(crate) fn next_scn_list_item(
    inst: &ScenarioInstance,
    state: &mut ScnListState,
    objective: &Objective,
) -> Result<Option<u32>> {
    if state.remaining.is_empty() {
        return Ok(None);
    }
    let mut best = state.remaining[0];
    let mut best_score = scenario_score(inst, best, &state.partition, objective)?;
    for &e in state.remaining.iter().skip(1) {
        let s = scenario_score(inst, e, &state.partition, objective)?;
        if s > best_score {
            best = e;
            best_score = s;
        }
    }
    state.remaining.retain(|&e| e != best);
    state.chosen.push(best);
    state.partition.refine(inst, objective, best);
    Ok(Some(best))
}

/// Result of one scenario partial-cover pass.
#[derive(Debug, Clone)]
pub struct SparcaOutcome {
    pub probed: Vec<u32>,
    pub observed: Vec<ElemSet>,
    pub realized: ElemSet,
    /// Scenarios still compatible with everything observed.
    pub live: Vec<u32>,
    pub cost: u64,
    /// Value of the pass objective on `realized`.
    pub final_value: u64,
    pub delta_exp: u32,
    pub eps_exp: Option<u32>,
}

struct ScnPassParams {
    objective: Objective,
    delta: Pow2,
    round_size: u64,
    eps: Option<CoverThreshold>,
}

fn run_scn_pass(
    inst: &ScenarioInstance,
    state: &mut ScnListState,
    params: &ScnPassParams,
    produced: &mut Vec<u32>,
    live_at_start: &[u32],
    omega: u32,
) -> Result<SparcaOutcome> {
    let q = params.objective.max_value();
    let mut out = SparcaOutcome {
        probed: Vec::new(),
        observed: Vec::new(),
        realized: ElemSet::new(),
        live: live_at_start.to_vec(),
        cost: 0,
        final_value: 0,
        delta_exp: params.delta.exp(),
        eps_exp: params.eps.as_ref().map(|t| t.delta.exp()),
    };
    if q == 0 {
        return Ok(out);
    }
    let keep_probing = |value: u64, live: &[u32]| -> bool {
        if !params.delta.times_le(params.round_size, live.len() as u64) {
            return false; // compatible set already small
        }
        match &params.eps {
            Some(thr) => thr.below(value),
            None => value < q,
        }
    };
    let mut idx = 0usize;
    while keep_probing(out.final_value, &out.live) {
        if idx == produced.len() {
            match next_scn_list_item(inst, state, &params.objective)? {
                Some(e) => produced.push(e),
                None => {
                    return Err(Error::InvariantViolation(
                        "items exhausted before a stopping rule fired".into(),
                    ))
                }
            }
        }
        let e = produced[idx];
        idx += 1;
        let observed = inst.realization(e, omega).clone();
        out.live.retain(|&w| inst.realization(e, w) == &observed);
        if out.live.is_empty() {
            return Err(Error::IncompatibleRealization);
        }
        out.realized.union_with(&observed);
        out.final_value = params.objective.eval_unchecked(&out.realized);
        out.cost += inst.cost(e);
        out.probed.push(e);
        out.observed.push(observed);
    }
    Ok(out)
}

/// One scenario partial-cover pass over the whole instance.
pub fn sparca_run(
    inst: &ScenarioInstance,
    cfg: &SparcaConfig,
    src: &mut ScnSource,
) -> Result<SparcaOutcome> {
    let omega = src.resolve(inst)?;
    let delta = Pow2::floor_of_ratio(cfg.delta)?;
    let objective = inst.objective().clone();
    let eps = cfg
        .epsilon
        .map(Pow2::floor_of_ratio)
        .transpose()?
        .map(|e| CoverThreshold::new(objective.max_value(), e));
    let live: Vec<u32> = (0..inst.s()).collect();
    let params = ScnPassParams {
        delta,
        round_size: live.len() as u64,
        eps,
        objective,
    };
    let mut state = ScnListState {
        chosen: Vec::new(),
        remaining: (0..inst.m()).collect(),
        partition: ScenarioPartition::root(
            inst,
            &params.objective,
            &live,
            delta,
            params.eps,
        ),
    };
    let mut produced = Vec::new();
    run_scn_pass(inst, &mut state, &params, &mut produced, &live, omega)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct ScnKey {
    items: Vec<u32>,
    live: Vec<u32>,
    delta: Pow2,
    eps: Option<Pow2>,
}

struct CachedScnList {
    state: ScnListState,
    params: ScnPassParams,
    produced: Vec<u32>,
}

/// Multi-round scenario solver with a list cache.
///
/// Round lists depend only on (available items, live scenarios, thresholds),
/// so exhaustive per-scenario evaluation shares list prefixes across runs.
pub struct NscRunner<'a> {
    inst: &'a ScenarioInstance,
    cache: BTreeMap<ScnKey, CachedScnList>,
}

impl<'a> NscRunner<'a> {
    pub fn new(inst: &'a ScenarioInstance) -> NscRunner<'a> {
        NscRunner {
            inst,
            cache: BTreeMap::new(),
        }
    }

    fn round_pass(
        &mut self,
        available: &[u32],
        live: &[u32],
        realized: &ElemSet,
        delta: Pow2,
        eps: Option<Pow2>,
        omega: u32,
    ) -> Result<SparcaOutcome> {
        let key = ScnKey {
            items: available.to_vec(),
            live: live.to_vec(),
            delta,
            eps,
        };
        if !self.cache.contains_key(&key) {
            let objective = self.inst.objective().residual(realized);
            let eps_thr = eps.map(|e| CoverThreshold::new(objective.max_value(), e));
            let params = ScnPassParams {
                delta,
                round_size: live.len() as u64,
                eps: eps_thr,
                objective,
            };
            let state = ScnListState {
                chosen: Vec::new(),
                remaining: key.items.clone(),
                partition: ScenarioPartition::root(
                    self.inst,
                    &params.objective,
                    live,
                    delta,
                    params.eps,
                ),
            };
            self.cache.insert(
                key.clone(),
                CachedScnList {
                    state,
                    params,
                    produced: Vec::new(),
                },
            );
        }
        let entry = self.cache.get_mut(&key).expect("just inserted");
        run_scn_pass(
            self.inst,
            &mut entry.state,
            &entry.params,
            &mut entry.produced,
            live,
            omega,
        )
    }

    fn drive(
        &mut self,
        max_rounds: u32,
        omega: u32,
        mut thresholds: impl FnMut(u32, u64, u64) -> Result<(Pow2, Option<Pow2>)>,
    ) -> Result<PolicyTranscript> {
        let q = self.inst.objective().max_value();
        let mut realized = ElemSet::new();
        let mut live: Vec<u32> = (0..self.inst.s()).collect();
        let mut available: Vec<u32> = (0..self.inst.m()).collect();
        let mut rounds = Vec::new();
        let mut total_cost = 0u64;
        for k in 0..max_rounds {
            let q_hat = q - self.inst.objective().eval_unchecked(&realized);
            if q_hat == 0 {
                break;
            }
            let (delta, eps) = thresholds(k, live.len() as u64, q_hat)?;
            let outcome = self.round_pass(&available, &live, &realized, delta, eps, omega)?;
            let probed: BTreeSet<u32> = outcome.probed.iter().copied().collect();
            available.retain(|e| !probed.contains(e));
            live = outcome.live;
            realized.union_with(&outcome.realized);
            total_cost += outcome.cost;
            rounds.push(RoundRecord {
                probed: outcome.probed,
                observed: outcome.observed,
                cost: outcome.cost,
                delta_exp: outcome.delta_exp,
                eps_exp: outcome.eps_exp,
            });
        }
        let final_value = self.inst.objective().eval_unchecked(&realized);
        let transcript = PolicyTranscript {
            rounds,
            total_cost,
            covered: final_value == q,
            final_value,
            max_value: q,
        };
        if !transcript.covered {
            return Err(Error::InvariantViolation(
                "scenario solver finished its round budget without covering".into(),
            ));
        }
        Ok(transcript)
    }

    /// r rounds; round k narrows the live scenario set by a factor
    /// `s_k^{1/(r-k)}` unless the objective completes first.
    pub fn solve(&mut self, r: u32, src: &mut ScnSource) -> Result<PolicyTranscript> {
        if r == 0 {
            return Err(Error::InvalidParameter("round budget must be at least 1".into()));
        }
        let omega = src.resolve(self.inst)?;
        self.drive(r, omega, |k, live_count, _q_hat| {
            Ok((Pow2::floor_of_inverse_root(live_count, r - k)?, None))
        })
    }

    /// Up to 2r rounds with fixed thresholds `delta = s^{-1/r}` and
    /// `epsilon = Q^{-1/r}`; every round either narrows scenarios by
    /// `s^{1/r}` or shrinks the residual target by `Q^{1/r}`, so coverage
    /// completes within the budget.
    pub fn solve_2r(&mut self, r: u32, src: &mut ScnSource) -> Result<PolicyTranscript> {
        if r == 0 {
            return Err(Error::InvalidParameter("round budget must be at least 1".into()));
        }
        let omega = src.resolve(self.inst)?;
        let delta = Pow2::floor_of_inverse_root(self.inst.s() as u64, r)?;
        let eps = Pow2::floor_of_inverse_root(self.inst.objective().max_value(), r)?;
        self.drive(2 * r, omega, |_k, _live, _q_hat| Ok((delta, Some(eps))))
    }
}

/// Runs the r-round scenario solver once.
pub fn nsc_solve(r: u32, inst: &ScenarioInstance, src: &mut ScnSource) -> Result<PolicyTranscript> {
    NscRunner::new(inst).solve(r, src)
}

/// Runs the 2r-round two-threshold solver once.
pub fn nsc2r_solve(
    r: u32,
    inst: &ScenarioInstance,
    src: &mut ScnSource,
) -> Result<PolicyTranscript> {
    NscRunner::new(inst).solve_2r(r, src)
}

/// Exact expected cost of a policy under the scenario prior, by running it
/// once per scenario. Returns the expectation and the per-scenario
/// transcripts (indexed by scenario id).
pub fn expected_cost_exhaustive(
    inst: &ScenarioInstance,
    mut run: impl FnMut(u32) -> Result<PolicyTranscript>,
) -> Result<(Frac, Vec<PolicyTranscript>)> {
    let mut transcripts = Vec::with_capacity(inst.s() as usize);
    let mut num = BigInt::from(0u32);
    for omega in 0..inst.s() {
        let t = run(omega)?;
        num += BigInt::from(inst.weight(omega)) * t.total_cost;
        transcripts.push(t);
    }
    Ok((
        Frac::new(num, BigInt::from(inst.weight_total())),
        transcripts,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::ObjectiveFamily;
    use crate::ratio::frac;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(elems: &[u32]) -> ElemSet {
        elems.iter().copied().collect()
    }

    fn coverage(target: u64, n: u32) -> Objective {
        Objective::new(
            ObjectiveFamily::TruncatedCoverage {
                target,
                relevant: None,
            },
            n,
        )
        .unwrap()
    }

    /// Two items, four scenarios: item 0 splits the scenarios 2/2 and item 1
    /// covers element 0 in every scenario.
    fn four_scenarios() -> ScenarioInstance {
        let obj = coverage(1, 4);
        ScenarioInstance::new(
            obj,
            alloc::vec![1, 1],
            alloc::vec![
                (alloc::vec![set(&[1]), set(&[0])], 1),
                (alloc::vec![set(&[1]), set(&[0, 1])], 1),
                (alloc::vec![set(&[2]), set(&[0])], 1),
                (alloc::vec![set(&[2]), set(&[0, 3])], 1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_prefix_is_one_part() {
        let inst = four_scenarios();
        let delta = Pow2::from_exp(2);
        let p = partition_by_prefix(
            &inst,
            inst.objective(),
            &[],
            &(0..inst.s()).collect::<Vec<_>>(),
            delta,
            None,
        );
        assert_eq!(p.parts().len(), 1);
        assert_eq!(p.parts()[0].scenarios.len(), inst.s() as usize);
        assert!(p.is_large(&p.parts()[0]));
    }

    #[test]
    fn binary_item_split_yields_two_large_parts() {
        // 4 scenarios, one item realizing two ways 2/2, delta*s = 1
        let obj = coverage(1, 3);
        let inst = ScenarioInstance::new(
            obj,
            alloc::vec![1, 1],
            alloc::vec![
                (alloc::vec![set(&[1]), set(&[0])], 1),
                (alloc::vec![set(&[1]), set(&[0, 1])], 1),
                (alloc::vec![set(&[2]), set(&[0])], 1),
                (alloc::vec![set(&[2]), set(&[0, 2])], 1),
            ],
        )
        .unwrap();
        let delta = Pow2::from_exp(2); // 1/4, so delta*s = 1
        let p = partition_by_prefix(&inst, inst.objective(), &[0], &[0, 1, 2, 3], delta, None);
        assert_eq!(p.parts().len(), 2);
        assert!(p.parts().iter().all(|part| p.is_large(part)));
        assert_eq!(p.parts()[0].scenarios.len(), 2);
    }

    #[test]
    fn two_items_can_induce_three_parts() {
        // five scenarios, two probed items, realization vectors falling into
        // exactly three classes
        let obj = coverage(1, 5);
        let inst = ScenarioInstance::new(
            obj,
            alloc::vec![1, 1, 1],
            alloc::vec![
                (alloc::vec![set(&[1]), set(&[2]), set(&[0])], 1),
                (alloc::vec![set(&[1]), set(&[2]), set(&[0, 1])], 1),
                (alloc::vec![set(&[1]), set(&[3]), set(&[0])], 1),
                (alloc::vec![set(&[4]), set(&[3]), set(&[0])], 1),
                (alloc::vec![set(&[4]), set(&[3]), set(&[0, 2])], 1),
            ],
        )
        .unwrap();
        let p = partition_by_prefix(
            &inst,
            inst.objective(),
            &[0, 1],
            &[0, 1, 2, 3, 4],
            Pow2::from_exp(3),
            None,
        );
        let mut cells: Vec<Vec<u32>> = p.parts().iter().map(|x| x.scenarios.clone()).collect();
        cells.sort();
        assert_eq!(cells, alloc::vec![
            alloc::vec![0, 1],
            alloc::vec![2],
            alloc::vec![3, 4]
        ]);
    }

    #[test]
    fn split_constant_item_keeps_whole_cell() {
        let obj = coverage(1, 2);
        let inst = ScenarioInstance::new(
            obj,
            alloc::vec![1, 1],
            alloc::vec![
                (alloc::vec![set(&[0]), set(&[1])], 1),
                (alloc::vec![set(&[0]), ElemSet::new()], 1),
                (alloc::vec![set(&[0]), set(&[0, 1])], 1),
            ],
        )
        .unwrap();
        let split = split_by_item(&inst, &[0, 1, 2], 0).unwrap();
        assert!(split.rest.is_empty());
        assert_eq!(split.largest, alloc::vec![0, 1, 2]);
    }

    #[test]
    fn split_distinct_everywhere_leaves_one_survivor() {
        let obj = coverage(1, 4);
        let inst = ScenarioInstance::new(
            obj,
            alloc::vec![1],
            alloc::vec![
                (alloc::vec![set(&[1])], 1),
                (alloc::vec![set(&[2])], 1),
                (alloc::vec![set(&[3])], 1),
            ],
        )
        .unwrap();
        let split = split_by_item(&inst, &[0, 1, 2], 0).unwrap();
        assert_eq!(split.rest.len(), 2);
        // tie among singleton classes broken by lexicographically smallest
        // realization, which is {1} (scenario 0)
        assert_eq!(split.largest, alloc::vec![0]);
    }

    #[test]
    fn split_three_one_one() {
        let inst = ScenarioInstance::new(
            coverage(1, 4),
            alloc::vec![1, 1],
            alloc::vec![
                (alloc::vec![set(&[1]), set(&[0])], 1),
                (alloc::vec![set(&[1]), set(&[0, 1])], 1),
                (alloc::vec![set(&[1]), set(&[0, 2])], 1),
                (alloc::vec![set(&[2]), set(&[0])], 1),
                (alloc::vec![set(&[3]), set(&[0])], 1),
            ],
        )
        .unwrap();
        let split = split_by_item(&inst, &[0, 1, 2, 3, 4], 0).unwrap();
        assert_eq!(split.largest, alloc::vec![0, 1, 2]);
        assert_eq!(split.rest, alloc::vec![3, 4]);
    }

    #[test]
    fn scenario_score_info_plus_value() {
        // one part {w0, w1}, uniform, the item separates them and covers the
        // whole residual either way: score = 1/2 (info) + 1 (value) = 3/2
        let obj = coverage(1, 2);
        let inst = ScenarioInstance::new(
            obj,
            alloc::vec![1],
            alloc::vec![
                (alloc::vec![set(&[0])], 1),
                (alloc::vec![set(&[1])], 1),
            ],
        )
        .unwrap();
        let delta = Pow2::from_exp(1);
        let p = partition_by_prefix(&inst, inst.objective(), &[], &[0, 1], delta, None);
        let s = scenario_score(&inst, 0, &p, inst.objective()).unwrap();
        assert_eq!(s, frac(3, 2));
    }

    #[test]
    fn zero_gain_constant_item_scores_zero() {
        let obj = coverage(1, 2);
        let inst = ScenarioInstance::new(
            obj,
            alloc::vec![1, 1],
            alloc::vec![
                (alloc::vec![ElemSet::new(), set(&[0])], 1),
                (alloc::vec![ElemSet::new(), set(&[1])], 1),
            ],
        )
        .unwrap();
        let delta = Pow2::from_exp(1);
        let p = partition_by_prefix(&inst, inst.objective(), &[], &[0, 1], delta, None);
        let s = scenario_score(&inst, 0, &p, inst.objective()).unwrap();
        assert_eq!(s, frac_zero());
    }

    #[test]
    fn uniform_cost_scaling_divides_scores_and_keeps_argmax() {
        let inst = four_scenarios();
        let scaled = inst.scale_costs(5).unwrap();
        let delta = Pow2::from_exp(2);
        let live: Vec<u32> = (0..inst.s()).collect();
        let p = partition_by_prefix(&inst, inst.objective(), &[], &live, delta, None);
        let ps = partition_by_prefix(&scaled, scaled.objective(), &[], &live, delta, None);
        let five = Frac::from(BigInt::from(5u32));
        let mut best = (0, frac_zero());
        let mut best_scaled = (0, frac_zero());
        for e in 0..inst.m() {
            let a = scenario_score(&inst, e, &p, inst.objective()).unwrap();
            let b = scenario_score(&scaled, e, &ps, scaled.objective()).unwrap();
            assert_eq!(a, &b * &five);
            if a > best.1 {
                best = (e, a);
            }
            if b > best_scaled.1 {
                best_scaled = (e, b);
            }
        }
        assert_eq!(best.0, best_scaled.0);
    }

    #[test]
    fn classic_full_coverage_when_delta_hits_one_over_s() {
        let inst = four_scenarios();
        let s = inst.s() as u64;
        for omega in 0..inst.s() {
            let cfg = SparcaConfig::classic(Ratio64::new(1, s));
            let out = sparca_run(&inst, &cfg, &mut ScnSource::Fixed(omega)).unwrap();
            assert_eq!(out.final_value, inst.objective().max_value());
        }
    }

    #[test]
    fn single_scenario_probes_until_coverage() {
        let obj = coverage(2, 2);
        let inst = ScenarioInstance::new(
            obj,
            alloc::vec![1, 1],
            alloc::vec![(alloc::vec![set(&[0]), set(&[1])], 1)],
        )
        .unwrap();
        let cfg = SparcaConfig::classic(Ratio64::new(1, 1));
        let out = sparca_run(&inst, &cfg, &mut ScnSource::Fixed(0)).unwrap();
        // delta*s = 1 and |H| = 1 throughout, so only coverage stops the pass
        assert_eq!(out.final_value, 2);
        assert_eq!(out.probed.len(), 2);
    }

    #[test]
    fn two_scenarios_with_delta_half_need_full_coverage() {
        // the first probe separates the scenarios, but |H| = 1 is not below
        // delta*s = 1, so probing continues until the value rule fires
        let obj = coverage(2, 4);
        let inst = ScenarioInstance::new(
            obj,
            alloc::vec![1, 1],
            alloc::vec![
                (alloc::vec![set(&[0]), set(&[2])], 1),
                (alloc::vec![set(&[1]), set(&[2])], 1),
            ],
        )
        .unwrap();
        let cfg = SparcaConfig::classic(Ratio64::new(1, 2));
        let out = sparca_run(&inst, &cfg, &mut ScnSource::Fixed(0)).unwrap();
        assert_eq!(out.probed.len(), 2);
        assert_eq!(out.live, alloc::vec![0]);
        assert_eq!(out.final_value, 2);
    }

    #[test]
    fn incompatible_fixed_scenario_is_rejected() {
        let inst = four_scenarios();
        let cfg = SparcaConfig::classic(Ratio64::new(1, 4));
        let err = sparca_run(&inst, &cfg, &mut ScnSource::Fixed(99)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    fn identification_instance(s: u32) -> ScenarioInstance {
        // item j answers "is the scenario j?"; scenario w covers everything
        // once item w is probed
        let obj = coverage(1, s);
        let scenarios: Vec<(Vec<ElemSet>, u64)> = (0..s)
            .map(|w| {
                let vec: Vec<ElemSet> = (0..s)
                    .map(|j| if j == w { set(&[w]) } else { ElemSet::new() })
                    .collect();
                (vec, 1)
            })
            .collect();
        ScenarioInstance::new(obj, alloc::vec![1; s as usize], scenarios).unwrap()
    }

    #[test]
    fn nsc_round_one_equals_single_pass_at_one_over_s() {
        let inst = identification_instance(5);
        for omega in 0..inst.s() {
            let t = nsc_solve(1, &inst, &mut ScnSource::Fixed(omega)).unwrap();
            let cfg = SparcaConfig::classic(Ratio64::new(1, inst.s() as u64));
            let p = sparca_run(&inst, &cfg, &mut ScnSource::Fixed(omega)).unwrap();
            assert_eq!(t.rounds.len(), 1);
            assert_eq!(t.rounds[0].probed, p.probed);
            assert!(t.covered);
        }
    }

    #[test]
    fn nsc_round_one_shrinks_live_set_or_covers() {
        let inst = four_scenarios();
        let r = 2;
        for omega in 0..inst.s() {
            let t = nsc_solve(r, &inst, &mut ScnSource::Fixed(omega)).unwrap();
            assert!(t.covered);
            assert!(t.rounds.len() <= r as usize);
        }
    }

    #[test]
    fn nsc2r_eps_collapses_at_q_one() {
        let inst = identification_instance(6);
        for omega in 0..inst.s() {
            let t = nsc2r_solve(2, &inst, &mut ScnSource::Fixed(omega)).unwrap();
            assert!(t.covered);
            assert!(t.rounds.len() <= 4);
        }
    }

    #[test]
    fn sampled_scenario_source_is_deterministic() {
        let inst = four_scenarios();
        let a = nsc_solve(2, &inst, &mut ScnSource::sampling(ChaCha8Rng::seed_from_u64(11))).unwrap();
        let b = nsc_solve(2, &inst, &mut ScnSource::sampling(ChaCha8Rng::seed_from_u64(11))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exhaustive_expectation_weights_by_prior() {
        let inst = identification_instance(3);
        let mut runner = NscRunner::new(&inst);
        let (mean, transcripts) =
            expected_cost_exhaustive(&inst, |w| runner.solve(1, &mut ScnSource::Fixed(w)))
                .unwrap();
        let hand: Frac = transcripts
            .iter()
            .enumerate()
            .map(|(w, t)| {
                frac(inst.weight(w as u32), inst.weight_total())
                    * Frac::from(BigInt::from(t.total_cost))
            })
            .sum();
        assert_eq!(mean, hand);
    }
}
