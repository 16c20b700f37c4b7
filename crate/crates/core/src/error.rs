use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The market model failed validation; one entry per violated invariant.
    #[error("model: invalid market model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    #[error("{module}: {message}")]
    InvalidInput {
        module: &'static str,
        message: String,
    },

    /// A backward-induction iterate left the domain `Y > 0`, `Y + U >= 0`.
    #[error(
        "solver: iterate out of domain at step {step}, node {node}, state {state} \
         (Y={y:e}, U={u:e}); grid too coarse or half-width too small"
    )]
    DomainViolation {
        step: usize,
        node: usize,
        state: u8,
        y: f64,
        u: f64,
    },

    #[error("approx: solve failed for k={k}: {source}")]
    AtBound {
        k: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("approx: no convergence after {} doublings; ks={ks:?}, J0={j0s:?}", .ks.len().saturating_sub(1))]
    NonConvergence { ks: Vec<f64>, j0s: Vec<f64> },

    #[error("pricing: {leg} leg failed: {source}")]
    Leg {
        leg: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("oracle: tree needs {required} node evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
}

impl Error {
    pub(crate) fn input(module: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidInput {
            module,
            message: message.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::DomainViolation { .. } | Error::NonConvergence { .. } => true,
            Error::AtBound { source, .. } | Error::Leg { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
