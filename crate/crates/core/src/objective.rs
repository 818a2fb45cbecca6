//! Integer-valued monotone submodular objectives.
//!
//! Four families cover the applications the solvers are evaluated on:
//! truncated (weighted) coverage, truncated additive value, and the
//! query-resolution function for shared filter evaluation. Solvers only see
//! [`Objective::eval`], [`Objective::marginal`] and [`Objective::residual`],
//! so they work for any family without special cases.

use crate::error::Error;
use crate::set::ElemSet;
use crate::Result;
use alloc::format;
use alloc::vec::Vec;

/// One of the supported objective families, before conditioning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectiveFamily {
    /// `f(S) = min(|S ∩ relevant|, target)`. `relevant = None` means the
    /// whole groundset counts.
    TruncatedCoverage {
        target: u64,
        relevant: Option<ElemSet>,
    },
    /// `f(S) = min(Σ_{e∈S} w_e, target)` with one weight per element.
    WeightedTruncatedCoverage { target: u64, weights: Vec<u64> },
    /// `f(S) = min(Σ_{e∈S} a_e, target)` with one value per element.
    TruncatedAdditive { target: u64, values: Vec<u64> },
    /// Shared filter evaluation over `n_filters` boolean filters. Element
    /// `i` is "filter i true", element `n_filters + i` is "filter i false".
    /// Each query is a conjunction of filters; a query's term saturates at
    /// its size once its value is determined.
    FilterEval {
        n_filters: u32,
        queries: Vec<Vec<u32>>,
    },
}

impl ObjectiveFamily {
    fn raw_eval(&self, s: &ElemSet) -> u64 {
        match self {
            ObjectiveFamily::TruncatedCoverage { target, relevant } => {
                let covered = match relevant {
                    Some(rel) => s.intersection_len(rel),
                    None => s.len(),
                };
                covered.min(*target)
            }
            ObjectiveFamily::WeightedTruncatedCoverage { target, weights } => {
                let sum: u64 = s.iter().map(|e| weights[e as usize]).sum();
                sum.min(*target)
            }
            ObjectiveFamily::TruncatedAdditive { target, values } => {
                let sum: u64 = s.iter().map(|e| values[e as usize]).sum();
                sum.min(*target)
            }
            ObjectiveFamily::FilterEval { n_filters, queries } => queries
                .iter()
                .map(|q| {
                    let size = q.len() as u64;
                    let falses = q.iter().filter(|&&i| s.contains(n_filters + i)).count() as u64;
                    let trues = q.iter().filter(|&&i| s.contains(i)).count() as u64;
                    size.min(size * falses + trues)
                })
                .sum(),
        }
    }

    fn max_attainable(&self, groundset_size: u32) -> u64 {
        let full: ElemSet = (0..groundset_size).collect();
        self.raw_eval(&full)
    }
}

/// An objective function, possibly conditioned on an already-realized set.
///
/// Conditioning on `R` yields `g(S) = f(S ∪ R) − f(R)` with maximal value
/// `Q − f(R)`; it is stored as the union of all conditioning sets rather
/// than as a re-materialized table, so conditioning twice is the same as
/// conditioning on the union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective {
    family: ObjectiveFamily,
    groundset_size: u32,
    base: ElemSet,
    base_value: u64,
    full_value: u64,
}

impl Objective {
    /// Builds an objective and checks `f(∅) = 0` and that the full groundset
    /// attains the declared target.
    pub fn new(family: ObjectiveFamily, groundset_size: u32) -> Result<Objective> {
        match &family {
            ObjectiveFamily::TruncatedCoverage { target, relevant } => {
                if *target == 0 {
                    return Err(Error::InvalidParameter("target must be positive".into()));
                }
                if let Some(rel) = relevant {
                    if rel.span() > groundset_size {
                        return Err(Error::ElementOutOfRange {
                            element: rel.span() - 1,
                            groundset: groundset_size,
                        });
                    }
                }
            }
            ObjectiveFamily::WeightedTruncatedCoverage { target, weights }
            | ObjectiveFamily::TruncatedAdditive { target, values: weights } => {
                if *target == 0 {
                    return Err(Error::InvalidParameter("target must be positive".into()));
                }
                if weights.len() != groundset_size as usize {
                    return Err(Error::InvalidParameter(format!(
                        "expected {} element weights, got {}",
                        groundset_size,
                        weights.len()
                    )));
                }
            }
            ObjectiveFamily::FilterEval { n_filters, queries } => {
                if groundset_size != 2 * n_filters {
                    return Err(Error::InvalidParameter(format!(
                        "filter groundset must have size {}, got {}",
                        2 * n_filters,
                        groundset_size
                    )));
                }
                for q in queries {
                    if q.is_empty() {
                        return Err(Error::InvalidParameter("empty query".into()));
                    }
                    if let Some(&bad) = q.iter().find(|&&i| i >= *n_filters) {
                        return Err(Error::ElementOutOfRange {
                            element: bad,
                            groundset: *n_filters,
                        });
                    }
                }
            }
        }
        let full_value = family.max_attainable(groundset_size);
        let declared = match &family {
            ObjectiveFamily::TruncatedCoverage { target, .. }
            | ObjectiveFamily::WeightedTruncatedCoverage { target, .. }
            | ObjectiveFamily::TruncatedAdditive { target, .. } => Some(*target),
            ObjectiveFamily::FilterEval { .. } => None,
        };
        if let Some(t) = declared {
            if full_value != t {
                return Err(Error::Infeasible(format!(
                    "groundset attains {full_value} but the target is {t}"
                )));
            }
        }
        Ok(Objective {
            family,
            groundset_size,
            base: ElemSet::new(),
            base_value: 0,
            full_value,
        })
    }

    pub fn family(&self) -> &ObjectiveFamily {
        &self.family
    }

    pub fn groundset_size(&self) -> u32 {
        self.groundset_size
    }

    /// The set this objective has been conditioned on (empty if none).
    pub fn conditioned_on(&self) -> &ElemSet {
        &self.base
    }

    /// Maximal value of this (possibly conditioned) objective.
    pub fn max_value(&self) -> u64 {
        self.full_value - self.base_value
    }

    /// Evaluates the objective on `S`.
    pub fn eval(&self, s: &ElemSet) -> Result<u64> {
        if s.span() > self.groundset_size {
            return Err(Error::ElementOutOfRange {
                element: s.span() - 1,
                groundset: self.groundset_size,
            });
        }
        Ok(self.eval_unchecked(s))
    }

    /// Same as [`Objective::eval`] without the range check; inputs produced
    /// by the solvers are always in range.
    pub fn eval_unchecked(&self, s: &ElemSet) -> u64 {
        if self.base.is_empty() {
            self.family.raw_eval(s)
        } else {
            self.family.raw_eval(&s.union(&self.base)) - self.base_value
        }
    }

    /// `f(S ∪ T) − f(S)`, always non-negative for monotone objectives.
    pub fn marginal(&self, s: &ElemSet, t: &ElemSet) -> Result<u64> {
        let with = self.eval(&s.union(t))?;
        let without = self.eval(s)?;
        Ok(with - without)
    }

    /// Conditions on `r`: the result satisfies `g(S) = f(S ∪ r) − f(r)`.
    pub fn residual(&self, r: &ElemSet) -> Objective {
        let base = self.base.union(r);
        let base_value = self.family.raw_eval(&base);
        Objective {
            family: self.family.clone(),
            groundset_size: self.groundset_size,
            base,
            base_value,
            full_value: self.full_value,
        }
    }
}

/// How [`verify_monotone_submodular`] explores the lattice of sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    /// Check every triple `S ⊆ T, e ∉ T`; requires a groundset of at most 10.
    Exhaustive,
    /// Check `n` randomly sampled triples with the given seed.
    Sampled { n: u32, seed: u64 },
}

/// Outcome of a monotonicity + submodularity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: u64,
    /// Witness `(s, t, e)` with `S ⊆ T` violating either monotonicity
    /// (`f(T ∪ e) < f(T)`) or submodularity of the marginal of `e`.
    pub counterexample: Option<(ElemSet, ElemSet, u32)>,
}

/// Verifies that `f` (given as an evaluation closure) is monotone and
/// submodular over a groundset of the given size, and that `f(∅) = 0`.
pub fn verify_monotone_submodular<F>(f: F, groundset_size: u32, mode: VerifyMode) -> Result<VerifyReport>
where
    F: Fn(&ElemSet) -> u64,
{
    if f(&ElemSet::new()) != 0 {
        return Ok(VerifyReport {
            passed: false,
            checks: 1,
            counterexample: Some((ElemSet::new(), ElemSet::new(), 0)),
        });
    }
    let mut checks = 0u64;
    let mut check = |s: &ElemSet, t: &ElemSet, e: u32| -> Option<(ElemSet, ElemSet, u32)> {
        checks += 1;
        let ft = f(t);
        let fte = f(&t.union(&ElemSet::singleton(e)));
        if fte < ft {
            return Some((s.clone(), t.clone(), e)); // monotonicity broken
        }
        let fs = f(s);
        let fse = f(&s.union(&ElemSet::singleton(e)));
        if fse < fs || fse - fs < fte - ft {
            return Some((s.clone(), t.clone(), e));
        }
        None
    };
    let witness = match mode {
        VerifyMode::Exhaustive => {
            if groundset_size > 10 {
                return Err(Error::SizeGuard(format!(
                    "exhaustive verification needs a groundset of at most 10, got {groundset_size}"
                )));
            }
            let n = groundset_size;
            let mut found = None;
            'outer: for t_mask in 0u32..(1 << n) {
                let t: ElemSet = (0..n).filter(|i| t_mask >> i & 1 == 1).collect();
                // iterate over subsets s of t
                let mut s_mask = t_mask;
                loop {
                    let s: ElemSet = (0..n).filter(|i| s_mask >> i & 1 == 1).collect();
                    for e in (0..n).filter(|i| t_mask >> i & 1 == 0) {
                        if let Some(w) = check(&s, &t, e) {
                            found = Some(w);
                            break 'outer;
                        }
                    }
                    if s_mask == 0 {
                        break;
                    }
                    s_mask = (s_mask - 1) & t_mask;
                }
            }
            found
        }
        VerifyMode::Sampled { n, seed } => {
            use rand::Rng;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut found = None;
            for _ in 0..n {
                let mut s = ElemSet::new();
                let mut t = ElemSet::new();
                for e in 0..groundset_size {
                    match rng.random_range(0u8..3) {
                        0 => {}
                        1 => t.insert(e),
                        _ => {
                            s.insert(e);
                            t.insert(e);
                        }
                    }
                }
                let outside: Vec<u32> = (0..groundset_size).filter(|&e| !t.contains(e)).collect();
                if outside.is_empty() {
                    continue;
                }
                let e = outside[rng.random_range(0..outside.len())];
                if let Some(w) = check(&s, &t, e) {
                    found = Some(w);
                    break;
                }
            }
            found
        }
    };
    Ok(VerifyReport {
        passed: witness.is_none(),
        checks,
        counterexample: witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn filter_eval(n_filters: u32, queries: Vec<Vec<u32>>) -> Objective {
        Objective::new(
            ObjectiveFamily::FilterEval { n_filters, queries },
            2 * n_filters,
        )
        .unwrap()
    }

    #[test]
    fn eval_truncated_coverage() {
        let f = coverage(3, 5);
        assert_eq!(f.eval(&ElemSet::new()).unwrap(), 0);
        let s: ElemSet = [0u32, 1, 2, 3].into_iter().collect();
        assert_eq!(f.eval(&s).unwrap(), 3);
        assert_eq!(f.max_value(), 3);
    }

    #[test]
    fn eval_filter_one_false_resolves_query() {
        // one query over filters {0, 1}; seeing a single false filter pins the
        // query's term at its size
        let f = filter_eval(2, vec![vec![0, 1]]);
        let false_0 = ElemSet::singleton(2); // element n_filters + 0
        assert_eq!(f.eval(&false_0).unwrap(), 2);
        assert_eq!(f.max_value(), 2);
    }

    #[test]
    fn eval_weighted_coverage_and_verify() {
        let f = Objective::new(
            ObjectiveFamily::WeightedTruncatedCoverage {
                target: 6,
                weights: vec![4, 1, 3, 2],
            },
            4,
        )
        .unwrap();
        let s: ElemSet = [0u32, 1].into_iter().collect();
        assert_eq!(f.eval(&s).unwrap(), 5);
        let t: ElemSet = [0u32, 2].into_iter().collect();
        assert_eq!(f.eval(&t).unwrap(), 6);
        let report =
            verify_monotone_submodular(|s| f.eval_unchecked(s), 4, VerifyMode::Exhaustive).unwrap();
        assert!(report.passed);
    }

    #[test]
    fn eval_truncated_additive_clamps() {
        let f = Objective::new(
            ObjectiveFamily::TruncatedAdditive {
                target: 5,
                values: vec![3, 4],
            },
            2,
        )
        .unwrap();
        let both: ElemSet = [0u32, 1].into_iter().collect();
        assert_eq!(f.eval(&both).unwrap(), 5);
    }

    #[test]
    fn eval_rejects_out_of_range() {
        let f = coverage(2, 3);
        let s = ElemSet::singleton(7);
        assert!(matches!(
            f.eval(&s),
            Err(Error::ElementOutOfRange { element: 7, .. })
        ));
    }

    #[test]
    fn marginal_examples() {
        let f = coverage(2, 4);
        let s = ElemSet::singleton(0);
        // T ⊆ S gives zero marginal
        assert_eq!(f.marginal(&s, &ElemSet::singleton(0)).unwrap(), 0);
        assert_eq!(f.marginal(&s, &ElemSet::singleton(1)).unwrap(), 1);

        let g = filter_eval(2, vec![vec![0, 1]]);
        let t1 = ElemSet::singleton(0); // filter 0 true
        let t2 = ElemSet::singleton(1); // filter 1 true
        assert_eq!(g.marginal(&t1, &t2).unwrap(), 1);
    }

    #[test]
    fn residual_basics() {
        let f = coverage(3, 6);
        let g = f.residual(&ElemSet::new());
        for mask in 0u32..(1 << 6) {
            let s: ElemSet = (0..6).filter(|i| mask >> i & 1 == 1).collect();
            assert_eq!(f.eval(&s).unwrap(), g.eval(&s).unwrap());
        }
        let r: ElemSet = [0u32, 1].into_iter().collect();
        let h = f.residual(&r);
        assert_eq!(h.max_value(), 1);
    }

    #[test]
    fn residual_of_residual_is_residual_of_union() {
        let f = filter_eval(4, vec![vec![0, 1], vec![2, 3], vec![1, 2]]);
        let r1: ElemSet = [0u32, 5].into_iter().collect();
        let r2: ElemSet = [2u32, 5, 7].into_iter().collect();
        let a = f.residual(&r1).residual(&r2);
        let b = f.residual(&r1.union(&r2));
        let n = f.groundset_size();
        for mask in 0u32..(1 << n) {
            let s: ElemSet = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            assert_eq!(a.eval(&s).unwrap(), b.eval(&s).unwrap());
        }
        assert_eq!(a.max_value(), b.max_value());
    }

    #[test]
    fn verify_passes_for_coverage() {
        let f = coverage(3, 6);
        let report =
            verify_monotone_submodular(|s| f.eval_unchecked(s), 6, VerifyMode::Exhaustive).unwrap();
        assert!(report.passed, "witness: {:?}", report.counterexample);
    }

    #[test]
    fn verify_rejects_supermodular_stub() {
        let report =
            verify_monotone_submodular(|s| s.len() * s.len(), 5, VerifyMode::Exhaustive).unwrap();
        assert!(!report.passed);
        let (s, t, e) = report.counterexample.unwrap();
        // the witness really violates submodularity
        let f = |x: &ElemSet| x.len() * x.len();
        let se = s.union(&ElemSet::singleton(e));
        let te = t.union(&ElemSet::singleton(e));
        assert!(f(&se) - f(&s) < f(&te) - f(&t));
    }

    #[test]
    fn verify_passes_for_filter_eval() {
        let f = filter_eval(4, vec![vec![0, 1, 2], vec![1, 3], vec![0]]);
        let report =
            verify_monotone_submodular(|s| f.eval_unchecked(s), 8, VerifyMode::Exhaustive).unwrap();
        assert!(report.passed, "witness: {:?}", report.counterexample);
    }

    #[test]
    fn verify_residuals_stay_submodular() {
        let f = filter_eval(3, vec![vec![0, 1], vec![1, 2]]);
        let r: ElemSet = [1u32, 3].into_iter().collect();
        let g = f.residual(&r);
        let report =
            verify_monotone_submodular(|s| g.eval_unchecked(s), 6, VerifyMode::Exhaustive).unwrap();
        assert!(report.passed);
    }

    #[test]
    fn sampled_mode_finds_gross_violations() {
        let report = verify_monotone_submodular(
            |s| s.len() * s.len(),
            12,
            VerifyMode::Sampled { n: 500, seed: 7 },
        )
        .unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn infeasible_target_is_rejected() {
        let err = Objective::new(
            ObjectiveFamily::TruncatedCoverage {
                target: 9,
                relevant: None,
            },
            4,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }
}
