use core::fmt;

/// Errors raised by parameter validation and degenerate inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A quantity is outside the domain where the model is defined.
    Domain {
        what: &'static str,
        constraint: &'static str,
        value: f64,
    },
    /// Not enough data to compute a metric.
    TooFewSamples { needed: usize, got: usize },
    /// An aggregate over an empty set of strides was requested.
    Empty,
}

impl Error {
    pub(crate) fn domain(what: &'static str, constraint: &'static str, value: f64) -> Self {
        Error::Domain {
            what,
            constraint,
            value,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain {
                what,
                constraint,
                value,
            } => write!(f, "{what} = {value} violates {constraint}"),
            Error::TooFewSamples { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            Error::Empty => f.write_str("no strides to aggregate"),
        }
    }
}

impl core::error::Error for Error {}
