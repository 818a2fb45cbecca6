//! Instance model: items, independent and scenario (correlated) instances,
//! feasibility certification, and realization sources.

use crate::error::Error;
use crate::objective::Objective;
use crate::set::ElemSet;
use crate::Result;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use num_integer::Integer;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// An independent item: a cost and an explicit distribution over subsets of
/// the groundset, stored as integer weights (probability of entry `j` is
/// `weight_j / weight_total`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndItem {
    pub id: u32,
    pub cost: u64,
    support: Vec<(ElemSet, u64)>,
    weight_total: u64,
}

impl IndItem {
    /// Builds an item. Duplicate subsets are merged, weights are reduced by
    /// their gcd, and entries are sorted; the representation is canonical.
    pub fn new(id: u32, cost: u64, support: Vec<(ElemSet, u64)>) -> Result<IndItem> {
        if cost == 0 {
            return Err(Error::InvalidParameter(format!("item {id} has zero cost")));
        }
        if support.is_empty() {
            return Err(Error::InvalidParameter(format!("item {id} has empty support")));
        }
        let mut merged: BTreeMap<ElemSet, u64> = BTreeMap::new();
        for (subset, w) in support {
            if w == 0 {
                return Err(Error::InvalidParameter(format!(
                    "item {id} has a zero-weight outcome"
                )));
            }
            *merged.entry(subset).or_insert(0) += w;
        }
        let g = merged.values().fold(0u64, |acc, &w| acc.gcd(&w));
        let support: Vec<(ElemSet, u64)> =
            merged.into_iter().map(|(s, w)| (s, w / g)).collect();
        let weight_total = support.iter().map(|(_, w)| w).sum();
        Ok(IndItem {
            id,
            cost,
            support,
            weight_total,
        })
    }

    pub fn support(&self) -> &[(ElemSet, u64)] {
        &self.support
    }

    pub fn weight_total(&self) -> u64 {
        self.weight_total
    }

    pub fn is_deterministic(&self) -> bool {
        self.support.len() == 1
    }

    /// Elements present in every outcome of this item.
    pub fn guaranteed(&self) -> ElemSet {
        let first = &self.support[0].0;
        first
            .iter()
            .filter(|&e| self.support.iter().all(|(s, _)| s.contains(e)))
            .collect()
    }

    pub fn sample_outcome(&self, rng: &mut ChaCha8Rng) -> u32 {
        draw_weighted(self.support.iter().map(|(_, w)| *w), self.weight_total, rng)
    }
}

fn draw_weighted(weights: impl Iterator<Item = u64>, total: u64, rng: &mut ChaCha8Rng) -> u32 {
    let mut x = rng.random_range(0..total);
    for (i, w) in weights.enumerate() {
        if x < w {
            return i as u32;
        }
        x -= w;
    }
    unreachable!("weights sum to total")
}

/// How an instance's coverage-with-probability-one property was certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibilityCert {
    /// Every combination of support outcomes was enumerated.
    Exhaustive,
    /// The union of per-item guaranteed elements already attains the target.
    GuaranteedUnion,
    /// Certified only on sampled outcome combinations; callers should warn.
    Sampled { trials: u32 },
}

/// Product distribution instance: independent items over a shared objective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependentInstance {
    objective: Objective,
    items: Vec<IndItem>,
}

impl IndependentInstance {
    pub fn new(objective: Objective, items: Vec<IndItem>) -> Result<IndependentInstance> {
        if items.is_empty() {
            return Err(Error::InvalidParameter("instance has no items".into()));
        }
        for (i, item) in items.iter().enumerate() {
            if item.id != i as u32 {
                return Err(Error::InvalidParameter(format!(
                    "item ids must be 0..m in order, found id {} at position {i}",
                    item.id
                )));
            }
            for (subset, _) in &item.support {
                if subset.span() > objective.groundset_size() {
                    return Err(Error::ElementOutOfRange {
                        element: subset.span() - 1,
                        groundset: objective.groundset_size(),
                    });
                }
            }
        }
        Ok(IndependentInstance { objective, items })
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn items(&self) -> &[IndItem] {
        &self.items
    }

    pub fn item(&self, id: u32) -> &IndItem {
        &self.items[id as usize]
    }

    pub fn m(&self) -> u32 {
        self.items.len() as u32
    }

    pub fn groundset_size(&self) -> u32 {
        self.objective.groundset_size()
    }

    pub fn max_cost(&self) -> u64 {
        self.items.iter().map(|i| i.cost).max().unwrap_or(1)
    }

    /// Certifies that probing all items covers the objective with
    /// probability one. Tries exhaustive enumeration first (joint support up
    /// to 4096 outcomes), then the guaranteed-element union, then sampling.
    pub fn certify_feasible(&self) -> Result<FeasibilityCert> {
        let q = self.objective.max_value();
        let product = self
            .items
            .iter()
            .try_fold(1u128, |acc, it| {
                let p = acc.checked_mul(it.support.len() as u128)?;
                (p <= 4096).then_some(p)
            });
        if product.is_some() {
            if let Some(bad) = self.worst_union_below(q) {
                return Err(Error::Infeasible(format!(
                    "outcome combination realizes value {bad} < {q}"
                )));
            }
            return Ok(FeasibilityCert::Exhaustive);
        }
        let mut guaranteed = ElemSet::new();
        for item in &self.items {
            guaranteed.union_with(&item.guaranteed());
        }
        if self.objective.eval_unchecked(&guaranteed) == q {
            return Ok(FeasibilityCert::GuaranteedUnion);
        }
        let trials = 64u32;
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0x5eed_cafe);
        for _ in 0..trials {
            let outcomes = self.draw_outcomes(&mut rng);
            let union = self.union_of(&outcomes);
            if self.objective.eval_unchecked(&union) != q {
                return Err(Error::Infeasible(
                    "a sampled outcome combination fails to cover".into(),
                ));
            }
        }
        Ok(FeasibilityCert::Sampled { trials })
    }

    fn worst_union_below(&self, q: u64) -> Option<u64> {
        fn rec(inst: &IndependentInstance, i: usize, acc: &ElemSet, q: u64) -> Option<u64> {
            if i == inst.items.len() {
                let v = inst.objective.eval_unchecked(acc);
                return (v < q).then_some(v);
            }
            for (subset, _) in &inst.items[i].support {
                if let Some(v) = rec(inst, i + 1, &acc.union(subset), q) {
                    return Some(v);
                }
            }
            None
        }
        rec(self, 0, &ElemSet::new(), q)
    }

    /// Draws one complete realization: a support index per item.
    pub fn draw_outcomes(&self, rng: &mut ChaCha8Rng) -> Vec<u32> {
        self.items.iter().map(|it| it.sample_outcome(rng)).collect()
    }

    pub fn union_of(&self, outcomes: &[u32]) -> ElemSet {
        let mut u = ElemSet::new();
        for (item, &o) in self.items.iter().zip(outcomes) {
            u.union_with(&item.support[o as usize].0);
        }
        u
    }

    /// Returns a copy with every cost multiplied by `factor`.
    pub fn scale_costs(&self, factor: u64) -> Result<IndependentInstance> {
        if factor == 0 {
            return Err(Error::InvalidParameter("cost factor must be positive".into()));
        }
        let mut out = self.clone();
        for item in &mut out.items {
            item.cost *= factor;
        }
        Ok(out)
    }
}

/// Source of realizations for independent items: either a pre-drawn outcome
/// vector (used to replay one realization across policies) or a seeded
/// sampler that draws outcomes on first probe.
#[derive(Debug, Clone)]
pub enum IndSource<'a> {
    Fixed(&'a [u32]),
    Rng(alloc::boxed::Box<ChaCha8Rng>),
}

impl<'a> IndSource<'a> {
    pub fn sampling(rng: ChaCha8Rng) -> IndSource<'a> {
        IndSource::Rng(alloc::boxed::Box::new(rng))
    }

    pub fn observe(&mut self, item: &IndItem) -> u32 {
        match self {
            IndSource::Fixed(outcomes) => outcomes[item.id as usize],
            IndSource::Rng(rng) => item.sample_outcome(rng),
        }
    }
}

/// Explicit joint distribution instance: each scenario fixes the realization
/// of every item, and a hidden scenario is drawn with probability
/// `weight / weight_total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioInstance {
    objective: Objective,
    costs: Vec<u64>,
    /// `realizations[item][scenario]`
    realizations: Vec<Vec<ElemSet>>,
    weights: Vec<u64>,
    weight_total: u64,
    /// Scenario count before duplicate realization vectors were merged.
    original_s: u32,
}

impl ScenarioInstance {
    /// Builds an instance from per-scenario realization vectors. Scenarios
    /// with identical vectors are merged (weights summed); every surviving
    /// scenario must fully cover the objective.
    pub fn new(
        objective: Objective,
        costs: Vec<u64>,
        scenarios: Vec<(Vec<ElemSet>, u64)>,
    ) -> Result<ScenarioInstance> {
        let m = costs.len();
        if m == 0 {
            return Err(Error::InvalidParameter("instance has no items".into()));
        }
        if let Some(i) = costs.iter().position(|&c| c == 0) {
            return Err(Error::InvalidParameter(format!("item {i} has zero cost")));
        }
        if scenarios.is_empty() {
            return Err(Error::InvalidParameter("instance has no scenarios".into()));
        }
        // merge duplicates, keeping first-occurrence order
        let mut order: Vec<Vec<ElemSet>> = Vec::new();
        let mut merged: BTreeMap<Vec<ElemSet>, u64> = BTreeMap::new();
        let original_s = scenarios.len() as u32;
        for (vector, w) in scenarios {
            if vector.len() != m {
                return Err(Error::InvalidParameter(format!(
                    "scenario realizes {} items, instance has {m}",
                    vector.len()
                )));
            }
            if w == 0 {
                return Err(Error::InvalidParameter("zero-weight scenario".into()));
            }
            for subset in &vector {
                if subset.span() > objective.groundset_size() {
                    return Err(Error::ElementOutOfRange {
                        element: subset.span() - 1,
                        groundset: objective.groundset_size(),
                    });
                }
            }
            match merged.entry(vector.clone()) {
                alloc::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(w);
                    order.push(vector);
                }
                alloc::collections::btree_map::Entry::Occupied(mut e) => {
                    *e.get_mut() += w;
                }
            }
        }
        let weights: Vec<u64> = order.iter().map(|v| merged[v]).collect();
        let g = weights.iter().fold(0u64, |acc, &w| acc.gcd(&w));
        let weights: Vec<u64> = weights.into_iter().map(|w| w / g).collect();
        let weight_total = weights.iter().sum();

        let q = objective.max_value();
        for (omega, vector) in order.iter().enumerate() {
            let mut union = ElemSet::new();
            for subset in vector {
                union.union_with(subset);
            }
            let v = objective.eval_unchecked(&union);
            if v != q {
                return Err(Error::Infeasible(format!(
                    "scenario {omega} attains {v} < {q} even after probing every item"
                )));
            }
        }

        let s = order.len();
        let mut realizations = alloc::vec![Vec::with_capacity(s); m];
        for vector in order {
            for (item, subset) in vector.into_iter().enumerate() {
                realizations[item].push(subset);
            }
        }
        Ok(ScenarioInstance {
            objective,
            costs,
            realizations,
            weights,
            weight_total,
            original_s,
        })
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn s(&self) -> u32 {
        self.weights.len() as u32
    }

    /// Scenario count before duplicates were merged.
    pub fn original_s(&self) -> u32 {
        self.original_s
    }

    /// Overrides the pre-merge scenario count, for generators that
    /// deduplicate before construction.
    pub fn with_original_count(mut self, original_s: u32) -> Self {
        self.original_s = original_s;
        self
    }

    pub fn m(&self) -> u32 {
        self.costs.len() as u32
    }

    pub fn groundset_size(&self) -> u32 {
        self.objective.groundset_size()
    }

    pub fn cost(&self, item: u32) -> u64 {
        self.costs[item as usize]
    }

    pub fn costs(&self) -> &[u64] {
        &self.costs
    }

    pub fn max_cost(&self) -> u64 {
        self.costs.iter().copied().max().unwrap_or(1)
    }

    pub fn realization(&self, item: u32, scenario: u32) -> &ElemSet {
        &self.realizations[item as usize][scenario as usize]
    }

    pub fn weight(&self, scenario: u32) -> u64 {
        self.weights[scenario as usize]
    }

    pub fn weight_total(&self) -> u64 {
        self.weight_total
    }

    pub fn weight_of(&self, scenarios: &[u32]) -> u64 {
        scenarios.iter().map(|&w| self.weight(w)).sum()
    }

    /// Union of all item realizations under one scenario.
    pub fn scenario_union(&self, scenario: u32) -> ElemSet {
        let mut u = ElemSet::new();
        for item in 0..self.m() {
            u.union_with(self.realization(item, scenario));
        }
        u
    }

    pub fn draw_scenario(&self, rng: &mut ChaCha8Rng) -> u32 {
        draw_weighted(self.weights.iter().copied(), self.weight_total, rng)
    }

    /// Draws a scenario from the restriction of the prior to `live`
    /// (weights renormalized implicitly).
    pub fn draw_scenario_among(&self, live: &[u32], rng: &mut ChaCha8Rng) -> u32 {
        let total = self.weight_of(live);
        let idx = draw_weighted(live.iter().map(|&w| self.weight(w)), total, rng);
        live[idx as usize]
    }

    pub fn scale_costs(&self, factor: u64) -> Result<ScenarioInstance> {
        if factor == 0 {
            return Err(Error::InvalidParameter("cost factor must be positive".into()));
        }
        let mut out = self.clone();
        for c in &mut out.costs {
            *c *= factor;
        }
        Ok(out)
    }
}

/// Source of the hidden scenario: fixed (replay) or drawn from the prior.
#[derive(Debug, Clone)]
pub enum ScnSource {
    Fixed(u32),
    Rng(alloc::boxed::Box<ChaCha8Rng>),
}

impl ScnSource {
    pub fn sampling(rng: ChaCha8Rng) -> ScnSource {
        ScnSource::Rng(alloc::boxed::Box::new(rng))
    }

    /// Resolves to a concrete scenario id.
    pub fn resolve(&mut self, instance: &ScenarioInstance) -> Result<u32> {
        match self {
            ScnSource::Fixed(omega) => {
                if *omega >= instance.s() {
                    return Err(Error::InvalidParameter(format!(
                        "scenario {} out of range (s = {})",
                        omega,
                        instance.s()
                    )));
                }
                Ok(*omega)
            }
            ScnSource::Rng(rng) => Ok(instance.draw_scenario(rng)),
        }
    }
}
