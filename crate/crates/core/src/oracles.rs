//! Exact baselines and lower bounds: optimal adaptive cost on tiny
//! instances (memoized recursion plus an independent brute-force
//! enumeration), per-realization offline optima via branch and bound, and
//! entropy bounds for identification instances.

use crate::error::Error;
use crate::instance::{IndependentInstance, ScenarioInstance};
use crate::objective::Objective;
use crate::ratio::{frac_zero, Frac};
use crate::set::ElemSet;
use crate::Result;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use num_bigint::BigInt;

/// Exact minimum expected cost of any fully adaptive policy on a scenario
/// instance, by recursion on (compatible scenarios, probed items) with
/// memoization. Guarded to `s <= 12` and `m <= 12`.
pub fn optimal_adaptive_scenario(inst: &ScenarioInstance) -> Result<Frac> {
    if inst.s() > 12 || inst.m() > 12 {
        return Err(Error::SizeGuard(format!(
            "adaptive optimum needs s <= 12 and m <= 12, got s = {}, m = {}",
            inst.s(),
            inst.m()
        )));
    }
    let q = inst.objective().max_value();
    let all_live: u32 = (1 << inst.s()) - 1;
    let mut memo: BTreeMap<u64, Frac> = BTreeMap::new();
    Ok(scn_value(inst, q, all_live, 0, &ElemSet::new(), &mut memo))
}

fn scn_value(
    inst: &ScenarioInstance,
    q: u64,
    live: u32,
    probed: u32,
    covered: &ElemSet,
    memo: &mut BTreeMap<u64, Frac>,
) -> Frac {
    if inst.objective().eval_unchecked(covered) == q {
        return frac_zero();
    }
    let key = (live as u64) | ((probed as u64) << 32);
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let live_weight: u64 = (0..inst.s())
        .filter(|&w| live >> w & 1 == 1)
        .map(|w| inst.weight(w))
        .sum();
    let mut best: Option<Frac> = None;
    for e in 0..inst.m() {
        if probed >> e & 1 == 1 {
            continue;
        }
        let mut groups: BTreeMap<&ElemSet, (u32, u64)> = BTreeMap::new();
        for w in 0..inst.s() {
            if live >> w & 1 == 0 {
                continue;
            }
            let entry = groups.entry(inst.realization(e, w)).or_insert((0, 0));
            entry.0 |= 1 << w;
            entry.1 += inst.weight(w);
        }
        let mut total = Frac::from(BigInt::from(inst.cost(e)));
        for (outcome, (child_live, child_weight)) in groups {
            let child = scn_value(inst, q, child_live, probed | 1 << e, &covered.union(outcome), memo);
            total += child * Frac::new(BigInt::from(child_weight), BigInt::from(live_weight));
        }
        if best.as_ref().is_none_or(|b| total < *b) {
            best = Some(total);
        }
    }
    let v = best.expect("an unprobed item always exists while uncovered");
    memo.insert(key, v.clone());
    v
}

/// Brute-force reference for [`optimal_adaptive_scenario`]: enumerates the
/// full decision tree with no memoization or state reduction. Guarded to
/// `s <= 8` and `m <= 8`.
pub fn optimal_adaptive_scenario_enumerated(inst: &ScenarioInstance) -> Result<Frac> {
    if inst.s() > 8 || inst.m() > 8 {
        return Err(Error::SizeGuard(format!(
            "tree enumeration needs s <= 8 and m <= 8, got s = {}, m = {}",
            inst.s(),
            inst.m()
        )));
    }
    let q = inst.objective().max_value();
    let live: Vec<u32> = (0..inst.s()).collect();
    let probed: Vec<u32> = Vec::new();
    Ok(scn_tree(inst, q, &live, &probed))
}

fn scn_tree(inst: &ScenarioInstance, q: u64, live: &[u32], probed: &[u32]) -> Frac {
    let mut covered = ElemSet::new();
    for &e in probed {
        covered.union_with(inst.realization(e, live[0]));
    }
    if inst.objective().eval_unchecked(&covered) == q {
        return frac_zero();
    }
    let live_weight = inst.weight_of(live);
    let mut best: Option<Frac> = None;
    for e in 0..inst.m() {
        if probed.contains(&e) {
            continue;
        }
        let mut outcomes: Vec<(&ElemSet, Vec<u32>)> = Vec::new();
        for &w in live {
            let r = inst.realization(e, w);
            match outcomes.iter_mut().find(|(o, _)| *o == r) {
                Some((_, ws)) => ws.push(w),
                None => outcomes.push((r, alloc::vec![w])),
            }
        }
        let mut probed_next = probed.to_vec();
        probed_next.push(e);
        let mut total = Frac::from(BigInt::from(inst.cost(e)));
        for (_, ws) in outcomes {
            let p = Frac::new(
                BigInt::from(inst.weight_of(&ws)),
                BigInt::from(live_weight),
            );
            total += scn_tree(inst, q, &ws, &probed_next) * p;
        }
        if best.as_ref().is_none_or(|b| total < *b) {
            best = Some(total);
        }
    }
    best.expect("an unprobed item always exists while uncovered")
}

/// Exact minimum expected adaptive cost for an independent instance, by
/// recursion on (probed items, realized element set). Guarded to `m <= 6`
/// with a joint support of at most 4096 outcomes.
pub fn optimal_adaptive_independent(inst: &IndependentInstance) -> Result<Frac> {
    let product: u128 = inst
        .items()
        .iter()
        .map(|i| i.support().len() as u128)
        .product();
    if inst.m() > 6 || product > 4096 {
        return Err(Error::SizeGuard(format!(
            "adaptive optimum needs m <= 6 and joint support <= 4096, got m = {}, support = {product}",
            inst.m()
        )));
    }
    let q = inst.objective().max_value();
    let mut memo: BTreeMap<(u32, ElemSet), Frac> = BTreeMap::new();
    Ok(ind_value(inst, q, 0, &ElemSet::new(), &mut memo))
}

fn ind_value(
    inst: &IndependentInstance,
    q: u64,
    probed: u32,
    covered: &ElemSet,
    memo: &mut BTreeMap<(u32, ElemSet), Frac>,
) -> Frac {
    if inst.objective().eval_unchecked(covered) == q {
        return frac_zero();
    }
    let key = (probed, covered.clone());
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let mut best: Option<Frac> = None;
    for e in 0..inst.m() {
        if probed >> e & 1 == 1 {
            continue;
        }
        let item = inst.item(e);
        let mut total = Frac::from(BigInt::from(item.cost));
        for (subset, w) in item.support() {
            let child = ind_value(inst, q, probed | 1 << e, &covered.union(subset), memo);
            total += child * Frac::new(BigInt::from(*w), BigInt::from(item.weight_total()));
        }
        if best.as_ref().is_none_or(|b| total < *b) {
            best = Some(total);
        }
    }
    let v = best.expect("probing every item covers a feasible instance");
    memo.insert(key, v.clone());
    v
}

/// Brute-force reference for [`optimal_adaptive_independent`]: carries the
/// full outcome assignment along every decision path. Guarded to `m <= 4`.
pub fn optimal_adaptive_independent_enumerated(inst: &IndependentInstance) -> Result<Frac> {
    if inst.m() > 4 {
        return Err(Error::SizeGuard(format!(
            "tree enumeration needs m <= 4, got m = {}",
            inst.m()
        )));
    }
    let q = inst.objective().max_value();
    let assignment: Vec<Option<u32>> = alloc::vec![None; inst.m() as usize];
    Ok(ind_tree(inst, q, &assignment))
}

fn ind_tree(inst: &IndependentInstance, q: u64, assignment: &[Option<u32>]) -> Frac {
    let mut covered = ElemSet::new();
    for (i, out) in assignment.iter().enumerate() {
        if let Some(o) = out {
            covered.union_with(&inst.item(i as u32).support()[*o as usize].0);
        }
    }
    if inst.objective().eval_unchecked(&covered) == q {
        return frac_zero();
    }
    let mut best: Option<Frac> = None;
    for e in 0..inst.m() {
        if assignment[e as usize].is_some() {
            continue;
        }
        let item = inst.item(e);
        let mut total = Frac::from(BigInt::from(item.cost));
        for (o, (_, w)) in item.support().iter().enumerate() {
            let mut next = assignment.to_vec();
            next[e as usize] = Some(o as u32);
            total += ind_tree(inst, q, &next)
                * Frac::new(BigInt::from(*w), BigInt::from(item.weight_total()));
        }
        if best.as_ref().is_none_or(|b| total < *b) {
            best = Some(total);
        }
    }
    best.expect("probing every item covers a feasible instance")
}

/// Result of an offline-optimum computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OfflineBound {
    /// Exact minimum cost (branch and bound ran to completion).
    Exact(u64),
    /// Certified lower bound only (instance too large for exact search).
    Lower(u64),
}

impl OfflineBound {
    pub fn value(self) -> u64 {
        match self {
            OfflineBound::Exact(v) | OfflineBound::Lower(v) => v,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, OfflineBound::Exact(_))
    }
}

/// Minimum total cost of a set of items whose known realizations cover the
/// objective. Exact branch and bound up to 40 items; beyond that, a
/// certified lower bound from the greedy cover guarantee.
pub fn offline_optimal(
    costs: &[u64],
    realized: &[ElemSet],
    objective: &Objective,
) -> Result<OfflineBound> {
    assert_eq!(costs.len(), realized.len());
    let q = objective.max_value();
    let mut full = ElemSet::new();
    for r in realized {
        full.union_with(r);
    }
    if objective.eval_unchecked(&full) < q {
        return Err(Error::Infeasible(
            "realization cannot cover the objective".into(),
        ));
    }
    let m = costs.len();
    let greedy = greedy_cover_cost(costs, realized, objective, q);
    if m > 40 {
        // greedy is within H(Q) of optimal, so greedy / H(Q) is a valid bound
        let hq: Frac = (1..=q)
            .map(|i| Frac::new(BigInt::from(1u32), BigInt::from(i)))
            .sum();
        let bound = Frac::from(BigInt::from(greedy)) / hq;
        let v = u64::try_from(bound.ceil().to_integer()).unwrap_or(0);
        return Ok(OfflineBound::Lower(v.max(1)));
    }

    // order items by initial density (gain per cost), descending
    let mut order: Vec<usize> = (0..m).collect();
    let gains: Vec<u64> = realized
        .iter()
        .map(|r| objective.eval_unchecked(r))
        .collect();
    order.sort_by(|&a, &b| {
        // gain_a / cost_a > gain_b / cost_b first, tie by id
        let lhs = gains[a] as u128 * costs[b] as u128;
        let rhs = gains[b] as u128 * costs[a] as u128;
        rhs.cmp(&lhs).then(a.cmp(&b))
    });

    let mut best = greedy;
    let mut chosen = ElemSet::new();
    branch(
        costs, realized, objective, q, &order, 0, &mut chosen, 0, &mut best,
    );
    Ok(OfflineBound::Exact(best))
}

fn greedy_cover_cost(costs: &[u64], realized: &[ElemSet], objective: &Objective, q: u64) -> u64 {
    let mut covered = ElemSet::new();
    let mut cost = 0u64;
    let mut used = alloc::vec![false; costs.len()];
    while objective.eval_unchecked(&covered) < q {
        let value = objective.eval_unchecked(&covered);
        let mut pick: Option<(usize, u64)> = None; // (item, gain)
        for i in 0..costs.len() {
            if used[i] {
                continue;
            }
            let gain = objective.eval_unchecked(&covered.union(&realized[i])) - value;
            if gain == 0 {
                continue;
            }
            let better = match pick {
                None => true,
                Some((j, gj)) => {
                    (gain as u128) * (costs[j] as u128) > (gj as u128) * (costs[i] as u128)
                }
            };
            if better {
                pick = Some((i, gain));
            }
        }
        let (i, _) = pick.expect("feasible realization always has a positive-gain item");
        used[i] = true;
        covered.union_with(&realized[i]);
        cost += costs[i];
    }
    cost
}

#[allow(clippy::too_many_arguments)]
fn branch(
    costs: &[u64],
    realized: &[ElemSet],
    objective: &Objective,
    q: u64,
    order: &[usize],
    idx: usize,
    chosen: &mut ElemSet,
    cost: u64,
    best: &mut u64,
) {
    let value = objective.eval_unchecked(chosen);
    if value == q {
        *best = (*best).min(cost);
        return;
    }
    if cost >= *best || idx == order.len() {
        return;
    }
    // feasibility and density pruning over the remaining items
    let deficit = q - value;
    let mut rest_union = chosen.clone();
    let mut min_ratio: Option<(u64, u64)> = None; // (cost, gain) with minimal cost/gain
    for &i in &order[idx..] {
        rest_union.union_with(&realized[i]);
        let gain = objective.eval_unchecked(&chosen.union(&realized[i])) - value;
        if gain > 0 {
            let better = match min_ratio {
                None => true,
                Some((c, g)) => (costs[i] as u128) * (g as u128) < (c as u128) * (gain as u128),
            };
            if better {
                min_ratio = Some((costs[i], gain));
            }
        }
    }
    if objective.eval_unchecked(&rest_union) < q {
        return; // cannot finish on this branch
    }
    let (c, g) = min_ratio.expect("positive deficit needs a positive-gain item");
    // every remaining unit of coverage costs at least c/g
    let lower = cost + (deficit as u128 * c as u128).div_ceil(g as u128) as u64;
    if lower >= *best {
        return;
    }

    let i = order[idx];
    let gain = objective.eval_unchecked(&chosen.union(&realized[i])) - value;
    if gain > 0 {
        let saved = chosen.clone();
        chosen.union_with(&realized[i]);
        branch(costs, realized, objective, q, order, idx + 1, chosen, cost + costs[i], best);
        *chosen = saved;
    }
    branch(costs, realized, objective, q, order, idx + 1, chosen, cost, best);
}

/// Entropy-style identification bound for a scenario instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBound {
    /// Shannon entropy of the scenario prior, in bits; `log2(s)` for the
    /// uniform prior.
    pub bits: f64,
    /// True when item costs are non-unit, in which case the bound is only a
    /// heuristic reference value.
    pub heuristic: bool,
}

/// Shannon entropy of the scenario prior in bits. For unit costs on a
/// uniform prior this is the `log2(s)` identification bound; with non-unit
/// costs it is flagged as heuristic.
pub fn entropy_lower_bound(inst: &ScenarioInstance) -> EntropyBound {
    let total = inst.weight_total() as f64;
    let mut bits = 0.0;
    for w in 0..inst.s() {
        let p = inst.weight(w) as f64 / total;
        bits -= p * libm::log2(p);
    }
    if bits < 0.0 {
        bits = 0.0; // single scenario rounds to a tiny negative
    }
    EntropyBound {
        bits,
        heuristic: inst.costs().iter().any(|&c| c != 1),
    }
}
