//! JSON instance and transcript formats.
//!
//! The canonical instance form uses integer weights for all probabilities
//! and integer costs. Loading accepts two relaxations: `prob` fields
//! (floating point, summing to 1 within 1e-9, converted to weights with
//! denominator 1e9 and then reduced) and fractional costs (rounded to six
//! decimal digits, then all costs are scaled by the least common multiple of
//! their denominators). Saving always emits the canonical form, so
//! load - save - load is byte-stable.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use subcover_core::objective::ObjectiveFamily;
use subcover_core::transcript::PolicyTranscript;
use subcover_core::{ElemSet, IndItem, IndependentInstance, Objective, ScenarioInstance};

pub const PROB_DENOMINATOR: u64 = 1_000_000_000;
pub const COST_DENOMINATOR: u64 = 1_000_000;

/// An instance of either model.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyInstance {
    Independent(IndependentInstance),
    Scenario(ScenarioInstance),
}

impl AnyInstance {
    pub fn model(&self) -> &'static str {
        match self {
            AnyInstance::Independent(_) => "independent",
            AnyInstance::Scenario(_) => "scenario",
        }
    }

    pub fn as_scenario(&self) -> Result<&ScenarioInstance> {
        match self {
            AnyInstance::Scenario(s) => Ok(s),
            AnyInstance::Independent(_) => {
                bail!("this operation needs a scenario-model instance")
            }
        }
    }

    pub fn as_independent(&self) -> Result<&IndependentInstance> {
        match self {
            AnyInstance::Independent(s) => Ok(s),
            AnyInstance::Scenario(_) => {
                bail!("this operation needs an independent-model instance")
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    model: String,
    groundset_size: u32,
    objective: ObjectiveDoc,
    items: Vec<ItemDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenarios: Option<Vec<ScenarioDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    original_scenarios: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum ObjectiveDoc {
    TruncatedCoverage {
        target: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        relevant: Option<Vec<u32>>,
    },
    WeightedTruncatedCoverage {
        target: u64,
        weights: Vec<u64>,
    },
    TruncatedAdditive {
        target: u64,
        values: Vec<u64>,
    },
    FilterEval {
        n_filters: u32,
        queries: Vec<Vec<u32>>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct ItemDoc {
    id: u32,
    cost: serde_json::Number,
    #[serde(skip_serializing_if = "Option::is_none")]
    support: Option<Vec<SupportDoc>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SupportDoc {
    elements: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prob: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prob: Option<f64>,
    /// One element list per item, in item order.
    realizations: Vec<Vec<u32>>,
}

fn family_to_doc(family: &ObjectiveFamily) -> ObjectiveDoc {
    match family {
        ObjectiveFamily::TruncatedCoverage { target, relevant } => ObjectiveDoc::TruncatedCoverage {
            target: *target,
            relevant: relevant.as_ref().map(|r| r.iter().collect()),
        },
        ObjectiveFamily::WeightedTruncatedCoverage { target, weights } => {
            ObjectiveDoc::WeightedTruncatedCoverage {
                target: *target,
                weights: weights.clone(),
            }
        }
        ObjectiveFamily::TruncatedAdditive { target, values } => ObjectiveDoc::TruncatedAdditive {
            target: *target,
            values: values.clone(),
        },
        ObjectiveFamily::FilterEval { n_filters, queries } => ObjectiveDoc::FilterEval {
            n_filters: *n_filters,
            queries: queries.clone(),
        },
    }
}

fn family_from_doc(doc: ObjectiveDoc) -> ObjectiveFamily {
    match doc {
        ObjectiveDoc::TruncatedCoverage { target, relevant } => ObjectiveFamily::TruncatedCoverage {
            target,
            relevant: relevant.map(|r| r.into_iter().collect()),
        },
        ObjectiveDoc::WeightedTruncatedCoverage { target, weights } => {
            ObjectiveFamily::WeightedTruncatedCoverage { target, weights }
        }
        ObjectiveDoc::TruncatedAdditive { target, values } => {
            ObjectiveFamily::TruncatedAdditive { target, values }
        }
        ObjectiveDoc::FilterEval { n_filters, queries } => {
            ObjectiveFamily::FilterEval { n_filters, queries }
        }
    }
}

fn elems(list: &[u32]) -> ElemSet {
    list.iter().copied().collect()
}

/// Parses a cost as an exact fraction with denominator dividing 1e6.
fn cost_fraction(n: &serde_json::Number) -> Result<(u64, u64)> {
    if let Some(c) = n.as_u64() {
        return Ok((c, 1));
    }
    let f = n
        .as_f64()
        .ok_or_else(|| anyhow!("cost {n} is not a number"))?;
    if !(f > 0.0 && f.is_finite()) {
        bail!("cost {f} must be positive and finite");
    }
    let num = (f * COST_DENOMINATOR as f64).round() as u64;
    if num == 0 {
        bail!("cost {f} rounds to zero at six decimal digits");
    }
    let g = gcd(num, COST_DENOMINATOR);
    Ok((num / g, COST_DENOMINATOR / g))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Converts raw cost numbers to integers, scaling all of them by the least
/// common multiple of their (six-decimal-digit) denominators.
fn integer_costs(raw: &[serde_json::Number]) -> Result<Vec<u64>> {
    let fractions: Vec<(u64, u64)> = raw.iter().map(cost_fraction).collect::<Result<_>>()?;
    let scale = fractions.iter().fold(1u64, |acc, &(_, d)| lcm(acc, d));
    Ok(fractions
        .iter()
        .map(|&(n, d)| n * (scale / d))
        .collect())
}

/// Converts a list of weight-or-prob entries to exact weights. Probability
/// entries must sum to 1 within 1e-9; they become weights over a fixed
/// denominator and are reduced afterwards by the instance constructors.
fn to_weights(entries: &[(Option<u64>, Option<f64>)], what: &str) -> Result<Vec<u64>> {
    let n_weights = entries.iter().filter(|e| e.0.is_some()).count();
    let n_probs = entries.iter().filter(|e| e.1.is_some()).count();
    if n_weights == entries.len() && n_probs == 0 {
        return Ok(entries.iter().map(|e| e.0.unwrap()).collect());
    }
    if n_probs == entries.len() && n_weights == 0 {
        let probs: Vec<f64> = entries.iter().map(|e| e.1.unwrap()).collect();
        if probs.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            bail!("{what}: probabilities must lie in (0, 1]");
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            bail!("{what}: probabilities sum to {sum}, expected 1 within 1e-9");
        }
        return Ok(probs
            .iter()
            .map(|&p| ((p * PROB_DENOMINATOR as f64).round() as u64).max(1))
            .collect());
    }
    bail!("{what}: use either `weight` on every entry or `prob` on every entry")
}

pub fn instance_from_json(text: &str) -> Result<AnyInstance> {
    let doc: InstanceDoc = serde_json::from_str(text).context("malformed instance JSON")?;
    let objective = Objective::new(family_from_doc(doc.objective), doc.groundset_size)?;
    let raw_costs: Vec<serde_json::Number> = doc.items.iter().map(|i| i.cost.clone()).collect();
    let costs = integer_costs(&raw_costs)?;
    match doc.model.as_str() {
        "independent" => {
            let mut items = Vec::with_capacity(doc.items.len());
            for (item, cost) in doc.items.iter().zip(&costs) {
                let support = item
                    .support
                    .as_ref()
                    .ok_or_else(|| anyhow!("independent item {} lacks a support", item.id))?;
                let weights = to_weights(
                    &support
                        .iter()
                        .map(|s| (s.weight, s.prob))
                        .collect::<Vec<_>>(),
                    &format!("item {}", item.id),
                )?;
                let entries: Vec<(ElemSet, u64)> = support
                    .iter()
                    .zip(weights)
                    .map(|(s, w)| (elems(&s.elements), w))
                    .collect();
                items.push(IndItem::new(item.id, *cost, entries)?);
            }
            Ok(AnyInstance::Independent(IndependentInstance::new(
                objective, items,
            )?))
        }
        "scenario" => {
            let scenarios = doc
                .scenarios
                .ok_or_else(|| anyhow!("scenario instance lacks a `scenarios` list"))?;
            let weights = to_weights(
                &scenarios
                    .iter()
                    .map(|s| (s.weight, s.prob))
                    .collect::<Vec<_>>(),
                "scenarios",
            )?;
            let rows: Vec<(Vec<ElemSet>, u64)> = scenarios
                .iter()
                .zip(weights)
                .map(|(s, w)| {
                    let vector: Vec<ElemSet> = s.realizations.iter().map(|r| elems(r)).collect();
                    (vector, w)
                })
                .collect();
            let mut inst = ScenarioInstance::new(objective, costs, rows)?;
            if let Some(orig) = doc.original_scenarios {
                inst = inst.with_original_count(orig);
            }
            Ok(AnyInstance::Scenario(inst))
        }
        other => bail!("unknown model {other:?} (expected \"independent\" or \"scenario\")"),
    }
}

pub fn instance_to_json(inst: &AnyInstance) -> String {
    let doc = match inst {
        AnyInstance::Independent(ind) => InstanceDoc {
            model: "independent".into(),
            groundset_size: ind.groundset_size(),
            objective: family_to_doc(ind.objective().family()),
            items: ind
                .items()
                .iter()
                .map(|item| ItemDoc {
                    id: item.id,
                    cost: item.cost.into(),
                    support: Some(
                        item.support()
                            .iter()
                            .map(|(s, w)| SupportDoc {
                                elements: s.iter().collect(),
                                weight: Some(*w),
                                prob: None,
                            })
                            .collect(),
                    ),
                })
                .collect(),
            scenarios: None,
            original_scenarios: None,
        },
        AnyInstance::Scenario(scn) => InstanceDoc {
            model: "scenario".into(),
            groundset_size: scn.groundset_size(),
            objective: family_to_doc(scn.objective().family()),
            items: (0..scn.m())
                .map(|i| ItemDoc {
                    id: i,
                    cost: scn.cost(i).into(),
                    support: None,
                })
                .collect(),
            scenarios: Some(
                (0..scn.s())
                    .map(|w| ScenarioDoc {
                        weight: Some(scn.weight(w)),
                        prob: None,
                        realizations: (0..scn.m())
                            .map(|i| scn.realization(i, w).iter().collect())
                            .collect(),
                    })
                    .collect(),
            ),
            original_scenarios: (scn.original_s() != scn.s()).then_some(scn.original_s()),
        },
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("instance serializes");
    out.push('\n');
    out
}

pub fn load_instance(path: &Path) -> Result<AnyInstance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read instance file {}", path.display()))?;
    instance_from_json(&text).with_context(|| format!("in {}", path.display()))
}

pub fn save_instance(inst: &AnyInstance, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_json(inst))
        .with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TranscriptDoc {
    pub rounds: Vec<TranscriptRoundDoc>,
    pub total_cost: u64,
    pub covered: bool,
    pub final_value: u64,
    pub max_value: u64,
    pub realization_digest: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TranscriptRoundDoc {
    pub probed: Vec<u32>,
    pub observed: Vec<Vec<u32>>,
    pub cost: u64,
    /// Effective partial-cover threshold as a negative power of two.
    pub delta_exp: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_exp: Option<u32>,
}

pub fn transcript_to_json(t: &PolicyTranscript) -> String {
    let doc = TranscriptDoc {
        rounds: t
            .rounds
            .iter()
            .map(|r| TranscriptRoundDoc {
                probed: r.probed.clone(),
                observed: r.observed.iter().map(|s| s.iter().collect()).collect(),
                cost: r.cost,
                delta_exp: r.delta_exp,
                eps_exp: r.eps_exp,
            })
            .collect(),
        total_cost: t.total_cost,
        covered: t.covered,
        final_value: t.final_value,
        max_value: t.max_value,
        realization_digest: format!("{:016x}", t.realization_digest()),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("transcript serializes");
    out.push('\n');
    out
}
