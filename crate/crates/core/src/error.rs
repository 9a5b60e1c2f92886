use thiserror::Error;

/// Errors raised by the interpolation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("unsupported exponent p = {0}")]
    UnsupportedExponent(f64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("range assumption violated: sequence cannot be continued {direction} from k = {k}")]
    RangeAssumptionViolated { direction: Direction, k: i64 },

    #[error("degenerate element: block {block} has zero norm but carries nonzero coordinates")]
    DegenerateElement { block: i64 },

    #[error("hypothesis violation: block e_{0} is empty")]
    HypothesisViolation(i64),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("certification failed at atom {atom}: value {value} exceeds {bound}")]
    Certification { atom: usize, value: f64, bound: f64 },

    #[error("admissibility failure: {0}")]
    Admissibility(String),

    #[error("linear program: {0}")]
    Lp(String),

    #[error("config error: {0}")]
    Config(String),
}

/// Which way a recursively built sequence was being extended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Forward => f.write_str("forward"),
            Direction::Backward => f.write_str("backward"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
