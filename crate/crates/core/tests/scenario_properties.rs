//! Property-style checks for the scenario solver: partition correctness,
//! the halving property of information-gain probes, round budgets,
//! coverage, and dominance against the exact adaptive optimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use subcover_core::objective::{Objective, ObjectiveFamily};
use subcover_core::oracles::{offline_optimal, optimal_adaptive_scenario};
use subcover_core::ratio::{frac, Pow2, Ratio64};
use subcover_core::sparca::{
    expected_cost_exhaustive, nsc2r_solve, nsc_solve, partition_by_prefix, split_by_item,
    sparca_run, NscRunner, SparcaConfig,
};
use subcover_core::{ElemSet, ScenarioInstance, ScnSource};

/// Random feasible instance: the last item's realization is padded so that
/// every scenario covers the objective when everything is probed.
fn random_instance(rng: &mut ChaCha8Rng, max_s: u32, max_m: u32, max_n: u32) -> ScenarioInstance {
    let n = rng.random_range(2..=max_n);
    let m = rng.random_range(2..=max_m);
    let s = rng.random_range(2..=max_s);
    let target = rng.random_range(1..=n as u64);
    let scenarios: Vec<(Vec<ElemSet>, u64)> = (0..s)
        .map(|_| {
            let mut vector: Vec<ElemSet> = (0..m)
                .map(|_| (0..n).filter(|_| rng.random_range(0..3) == 0).collect())
                .collect();
            let mut union = ElemSet::new();
            for v in &vector {
                union.union_with(v);
            }
            for e in 0..n {
                if !union.contains(e) {
                    vector[m as usize - 1].insert(e);
                }
            }
            (vector, rng.random_range(1..4))
        })
        .collect();
    let costs: Vec<u64> = (0..m).map(|_| rng.random_range(1..5)).collect();
    let objective = Objective::new(
        ObjectiveFamily::TruncatedCoverage {
            target,
            relevant: None,
        },
        n,
    )
    .unwrap();
    ScenarioInstance::new(objective, costs, scenarios).unwrap()
}

/// Brute-force partition: group scenarios by their realization vector on
/// the chosen items.
fn brute_force_parts(inst: &ScenarioInstance, chosen: &[u32], live: &[u32]) -> Vec<Vec<u32>> {
    let mut groups: BTreeMap<Vec<ElemSet>, Vec<u32>> = BTreeMap::new();
    for &w in live {
        let key: Vec<ElemSet> = chosen
            .iter()
            .map(|&e| inst.realization(e, w).clone())
            .collect();
        groups.entry(key).or_default().push(w);
    }
    let mut parts: Vec<Vec<u32>> = groups.into_values().collect();
    parts.sort();
    parts
}

#[test]
fn partition_matches_brute_force_grouping() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 10, 6, 5);
        let live: Vec<u32> = (0..inst.s()).collect();
        let k = rng.random_range(0..=inst.m());
        let chosen: Vec<u32> = (0..k).collect();
        let delta = Pow2::from_exp(rng.random_range(0..4));
        let partition =
            partition_by_prefix(&inst, inst.objective(), &chosen, &live, delta, None);
        let mut got: Vec<Vec<u32>> = partition
            .parts()
            .iter()
            .map(|p| p.scenarios.clone())
            .collect();
        got.sort();
        assert_eq!(got, brute_force_parts(&inst, &chosen, &live));
        // cached realizations and weights agree with direct recomputation
        for part in partition.parts() {
            let mut realized = ElemSet::new();
            for &e in &chosen {
                realized.union_with(inst.realization(e, part.scenarios[0]));
            }
            assert_eq!(part.realized, realized);
            assert_eq!(part.weight, inst.weight_of(&part.scenarios));
        }
    }
}

#[test]
fn large_part_count_is_bounded_by_inverse_delta() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 12, 6, 5);
        let live: Vec<u32> = (0..inst.s()).collect();
        let k = rng.random_range(0..=inst.m());
        let chosen: Vec<u32> = (0..k).collect();
        let exp = rng.random_range(0..4);
        let delta = Pow2::from_exp(exp);
        let partition =
            partition_by_prefix(&inst, inst.objective(), &chosen, &live, delta, None);
        let large = partition.large_parts().count() as u64;
        assert!(large <= 1 << exp, "{large} large parts at delta 2^-{exp}");
    }
}

#[test]
fn probing_against_the_minority_halves_the_live_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..40 {
        let inst = random_instance(&mut rng, 12, 6, 5);
        let omega = rng.random_range(0..inst.s());
        let cfg = SparcaConfig::classic(Ratio64::new(1, inst.s() as u64));
        let out = sparca_run(&inst, &cfg, &mut ScnSource::Fixed(omega)).unwrap();
        // replay the probe sequence, checking the halving property and that
        // the live set only shrinks
        let mut live: Vec<u32> = (0..inst.s()).collect();
        for (&e, obs) in out.probed.iter().zip(&out.observed) {
            let split = split_by_item(&inst, &live, e).unwrap();
            let next: Vec<u32> = live
                .iter()
                .copied()
                .filter(|&w| inst.realization(e, w) == obs)
                .collect();
            assert!(next.iter().all(|w| live.contains(w)));
            if split.rest.contains(&omega) {
                assert!(
                    next.len() * 2 <= live.len(),
                    "trial {trial}: minority probe failed to halve ({} -> {})",
                    live.len(),
                    next.len()
                );
            }
            live = next;
        }
        assert_eq!(live, out.live);
    }
}

#[test]
fn round_budgets_and_coverage_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..25 {
        let inst = random_instance(&mut rng, 10, 6, 5);
        for r in 1..=3u32 {
            for omega in 0..inst.s() {
                let t = nsc_solve(r, &inst, &mut ScnSource::Fixed(omega)).unwrap();
                t.validate().unwrap();
                assert!(t.covered);
                assert!(t.rounds.len() <= r as usize);
                let t2 = nsc2r_solve(r, &inst, &mut ScnSource::Fixed(omega)).unwrap();
                t2.validate().unwrap();
                assert!(t2.covered);
                assert!(t2.rounds.len() <= 2 * r as usize);
            }
        }
    }
}

#[test]
fn solver_cost_dominates_adaptive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 6, 5, 4);
        let opt = optimal_adaptive_scenario(&inst).unwrap();
        for r in [1u32, 2] {
            let mut runner = NscRunner::new(&inst);
            let (mean, _) =
                expected_cost_exhaustive(&inst, |w| runner.solve(r, &mut ScnSource::Fixed(w)))
                    .unwrap();
            assert!(mean >= opt, "r {r}: policy {mean} below optimum {opt}");
        }
    }
}

#[test]
fn offline_bound_dominates_nothing_above_adaptive_optimum() {
    // offline <= adaptive optimum <= policy cost, all exactly computable
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 6, 5, 4);
        let opt = optimal_adaptive_scenario(&inst).unwrap();
        let mut offline_mean = frac(0, 1);
        for omega in 0..inst.s() {
            let realized: Vec<ElemSet> = (0..inst.m())
                .map(|e| inst.realization(e, omega).clone())
                .collect();
            let b = offline_optimal(inst.costs(), &realized, inst.objective()).unwrap();
            assert!(b.is_exact());
            offline_mean +=
                frac(b.value(), 1) * frac(inst.weight(omega), inst.weight_total());
        }
        assert!(offline_mean <= opt);
        let mut runner = NscRunner::new(&inst);
        let (mean, transcripts) =
            expected_cost_exhaustive(&inst, |w| runner.solve(2, &mut ScnSource::Fixed(w)))
                .unwrap();
        assert!(opt <= mean);
        // per-scenario dominance of the offline bound
        for (omega, t) in transcripts.iter().enumerate() {
            let realized: Vec<ElemSet> = (0..inst.m())
                .map(|e| inst.realization(e, omega as u32).clone())
                .collect();
            let b = offline_optimal(inst.costs(), &realized, inst.objective()).unwrap();
            assert!(t.total_cost >= b.value());
        }
    }
}

#[test]
fn doubled_round_variant_is_competitive_on_tiny_instances() {
    // frozen comparison: the two-threshold driver stays within twice the
    // plain driver's exact expected cost on a varied tiny corpus
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..10 {
        let inst = random_instance(&mut rng, 6, 5, 4);
        for r in [1u32, 2] {
            let mut a = NscRunner::new(&inst);
            let (nsc_mean, _) =
                expected_cost_exhaustive(&inst, |w| a.solve(r, &mut ScnSource::Fixed(w))).unwrap();
            let mut b = NscRunner::new(&inst);
            let (nsc2r_mean, _) =
                expected_cost_exhaustive(&inst, |w| b.solve_2r(r, &mut ScnSource::Fixed(w)))
                    .unwrap();
            let bound = &nsc_mean * frac(2, 1);
            assert!(
                nsc2r_mean <= bound,
                "trial {trial} r {r}: {nsc2r_mean} vs 2 * {nsc_mean}"
            );
        }
    }
}

#[test]
fn scenario_cost_scaling_preserves_probe_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..15 {
        let inst = random_instance(&mut rng, 8, 5, 4);
        let scaled = inst.scale_costs(3).unwrap();
        for omega in 0..inst.s() {
            let a = nsc_solve(2, &inst, &mut ScnSource::Fixed(omega)).unwrap();
            let b = nsc_solve(2, &scaled, &mut ScnSource::Fixed(omega)).unwrap();
            assert_eq!(b.total_cost, 3 * a.total_cost);
            assert_eq!(
                a.probed_items().collect::<Vec<_>>(),
                b.probed_items().collect::<Vec<_>>()
            );
        }
    }
}
