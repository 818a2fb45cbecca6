//! Error type shared by all modules.

use alloc::string::String;

/// Errors surfaced by instance validation, solvers and oracles.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// An element id is not a member of the groundset.
    #[error("element {element} out of range for groundset of size {groundset}")]
    ElementOutOfRange { element: u32, groundset: u32 },

    /// A parameter violates its documented domain (probabilities, counts,
    /// round budgets and the like).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The instance cannot cover its objective.
    #[error("infeasible instance: {0}")]
    Infeasible(String),

    /// An exact computation was refused because the input exceeds its size
    /// guard.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    /// Exact score evaluation would enumerate too many joint outcomes; use
    /// sampled scoring instead.
    #[error("joint support of the prefix has {product} outcomes (limit {limit}); use sampled scoring")]
    ScoreSupportTooLarge { product: u128, limit: u128 },

    /// An observed realization matches no live scenario.
    #[error("observed realization is incompatible with every live scenario")]
    IncompatibleRealization,

    /// A guarantee the algorithm relies on was violated at run time.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

impl Error {
    /// Process exit code the CLI maps this error to: 2 for input errors,
    /// 3 for infeasibility or invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ElementOutOfRange { .. }
            | Error::InvalidParameter(_)
            | Error::SizeGuard(_)
            | Error::ScoreSupportTooLarge { .. }
            | Error::IncompatibleRealization => 2,
            Error::Infeasible(_) | Error::InvariantViolation(_) => 3,
        }
    }
}
