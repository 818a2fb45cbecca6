//! Execution records for one policy run.

use crate::error::Error;
use crate::set::ElemSet;
use crate::Result;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

/// One adaptive round: items probed in order, what they realized to, the
/// round's probing cost, and the effective thresholds used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub probed: Vec<u32>,
    pub observed: Vec<ElemSet>,
    pub cost: u64,
    /// Effective partial-cover threshold, `delta = 2^-delta_exp`.
    pub delta_exp: u32,
    /// Effective value threshold for the two-threshold scenario variant,
    /// `epsilon = 2^-eps_exp`; `None` for full-coverage rounds.
    pub eps_exp: Option<u32>,
}

/// Record of a full multi-round execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyTranscript {
    pub rounds: Vec<RoundRecord>,
    pub total_cost: u64,
    pub covered: bool,
    pub final_value: u64,
    pub max_value: u64,
}

impl PolicyTranscript {
    /// Checks the structural invariants: no item probed twice, the total
    /// cost is the sum of round costs, and `covered` agrees with the final
    /// objective value.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for round in &self.rounds {
            if round.probed.len() != round.observed.len() {
                return Err(Error::InvariantViolation(
                    "round has mismatched probe and observation lists".into(),
                ));
            }
            for &item in &round.probed {
                if !seen.insert(item) {
                    return Err(Error::InvariantViolation(format!(
                        "item {item} probed twice"
                    )));
                }
            }
        }
        let sum: u64 = self.rounds.iter().map(|r| r.cost).sum();
        if sum != self.total_cost {
            return Err(Error::InvariantViolation(format!(
                "total cost {} differs from per-round sum {sum}",
                self.total_cost
            )));
        }
        if self.covered != (self.final_value == self.max_value) {
            return Err(Error::InvariantViolation(
                "covered flag disagrees with the final objective value".into(),
            ));
        }
        Ok(())
    }

    pub fn probed_items(&self) -> impl Iterator<Item = u32> + '_ {
        self.rounds.iter().flat_map(|r| r.probed.iter().copied())
    }

    /// Union of everything observed.
    pub fn realized(&self) -> ElemSet {
        let mut u = ElemSet::new();
        for round in &self.rounds {
            for obs in &round.observed {
                u.union_with(obs);
            }
        }
        u
    }

    /// Stable digest of the probe sequence and observations, used to verify
    /// that two runs consumed identical realizations.
    pub fn realization_digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x1000_0000_01b3);
            }
        };
        for round in &self.rounds {
            for (&item, obs) in round.probed.iter().zip(&round.observed) {
                mix(item as u64);
                mix(obs.fingerprint());
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_catches_duplicates_and_bad_totals() {
        let mut t = PolicyTranscript {
            rounds: alloc::vec![RoundRecord {
                probed: alloc::vec![1, 1],
                observed: alloc::vec![ElemSet::new(), ElemSet::new()],
                cost: 2,
                delta_exp: 0,
                eps_exp: None,
            }],
            total_cost: 2,
            covered: false,
            final_value: 0,
            max_value: 1,
        };
        assert!(t.validate().is_err());
        t.rounds[0].probed = alloc::vec![1, 2];
        assert!(t.validate().is_ok());
        t.total_cost = 3;
        assert!(t.validate().is_err());
        t.total_cost = 2;
        t.covered = true;
        assert!(t.validate().is_err());
    }
}
