use thiserror::Error;

/// Errors produced by the modelling and fitting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical quantity is outside the range where the model is defined.
    #[error("{quantity} = {value} is outside the valid domain ({bound})")]
    Domain {
        quantity: &'static str,
        value: f64,
        bound: String,
    },
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Root search was given a bracket without a sign change.
    #[error("no sign change of the phase mismatch between {lo} °C and {hi} °C")]
    Bracketing { lo: f64, hi: f64 },
    /// Least-squares system has no unique solution.
    #[error("singular fit: {0}")]
    SingularFit(String),
    /// A ratio was requested against a zero or non-finite reference.
    #[error("undefined ratio: reference value is {0}")]
    UndefinedRatio(f64),
    /// A dispersion evaluation failed at a specific temperature of a sweep.
    #[error("at {temperature} °C: {source}")]
    AtTemperature {
        temperature: f64,
        #[source]
        source: Box<Error>,
    },
    /// Malformed tabular input.
    #[error("line {line}: {message}")]
    Data { line: u64, message: String },
    /// Unknown named preset or coefficient set.
    #[error("unknown {kind} '{name}'")]
    UnknownPreset { kind: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
