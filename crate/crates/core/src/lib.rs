//! Solvers for stochastic submodular cover under a limited number of
//! adaptive rounds.
//!
//! An instance consists of probe-able items, each realizing to a subset of a
//! groundset, and an integer-valued monotone submodular objective that must be
//! driven to its maximal value. Items are either independent (each carries an
//! explicit distribution over subsets) or correlated through an explicit list
//! of scenarios. A solution probes items over `r` rounds; within a round the
//! probing order is fixed up front, and only the realizations observed in
//! earlier rounds may influence the ordering.
//!
//! The crate provides:
//! - [`objective`] and [`instance`]: domain types and validation,
//! - [`parca`]: the greedy partial-cover pass and r-round solver for
//!   independent items,
//! - [`sparca`]: the scenario-partition solver for correlated items,
//!   including the two-threshold variant and its 2r-round driver,
//! - [`setbased`]: conversion of permutation-style rounds into batched
//!   (set-based) rounds,
//! - [`oracles`]: exact adaptive optima on tiny instances, offline optima,
//!   and entropy bounds,
//! - [`generators`]: instance families used by the evaluation harness.
//!
//! The crate is `no_std` (with `alloc`); all IO and file formats live in the
//! companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod generators;
pub mod instance;
pub mod objective;
pub mod oracles;
pub mod parca;
pub mod ratio;
pub mod set;
pub mod setbased;
pub mod sparca;
pub mod transcript;

pub use error::Error;
pub use instance::{IndItem, IndSource, IndependentInstance, ScenarioInstance, ScnSource};
pub use objective::{Objective, ObjectiveFamily};
pub use ratio::{Frac, Pow2, Ratio64};
pub use set::ElemSet;
pub use transcript::{PolicyTranscript, RoundRecord};

/// Crate-wide result type.
pub type Result<T> = core::result::Result<T, Error>;
