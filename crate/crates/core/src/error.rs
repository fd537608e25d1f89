use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A scalar argument fell outside the domain of an operation.
    #[error("{name} = {value} is outside its domain ({expected})")]
    OutOfDomain {
        /// Argument name.
        name: &'static str,
        /// Offending value.
        value: f64,
        /// Human-readable domain.
        expected: &'static str,
    },
    /// Vector or matrix lengths disagree.
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        /// What was being checked.
        what: &'static str,
        /// Expected length.
        expected: usize,
        /// Actual length.
        found: usize,
    },
    /// A model parameter violates the model's constraints.
    #[error("invalid parameter {name} = {value} for model {model}: {reason}")]
    InvalidParameter {
        /// Model name.
        model: &'static str,
        /// Parameter name.
        name: &'static str,
        /// Offending value.
        value: f64,
        /// Violated constraint.
        reason: &'static str,
    },
    /// A parameter override names a key the model does not have.
    #[error("unknown parameter `{name}` for model {model}; expected one of: {expected}")]
    UnknownParameter {
        /// Model name.
        model: &'static str,
        /// Key that was given.
        name: String,
        /// Comma separated list of accepted keys.
        expected: String,
    },
    /// No catalog model has this name.
    #[error("unknown model `{name}`; available models: {available}")]
    UnknownModel {
        /// Name that was given.
        name: String,
        /// Comma separated catalog names.
        available: String,
    },
    /// An increment grid cannot be block-summed by the requested factor.
    #[error("cannot coarsen {n_steps} steps by a factor of {factor}")]
    NotDivisible {
        /// Steps in the fine grid.
        n_steps: usize,
        /// Requested factor.
        factor: usize,
    },
}

/// Result alias for this crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;
