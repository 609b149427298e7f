use thiserror::Error;

use crate::topology::NodeId;

/// Errors raised by the catchment engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("conflicting relationship for edge {a}-{b}")]
    Conflict { a: NodeId, b: NodeId },
    #[error("policy error: {0}")]
    Policy(String),
    #[error("invalid destination spec: {0}")]
    Spec(String),
    #[error("unknown {kind} `{name}`")]
    Lookup { kind: &'static str, name: String },
    #[error("topology generation failed: {0}")]
    Generation(String),
    #[error("simulation did not converge after {rounds} rounds")]
    NonConvergence { rounds: usize },
    #[error("inconsistent simulation result: {0}")]
    Consistency(String),
    #[error("cycle detected in routing graph at node {0}")]
    Cycle(NodeId),
    #[error("capacity guard exceeded: {0}")]
    Capacity(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("oracle {node}▷{ingress} contradicts certain route {existing}")]
    Contradiction {
        node: NodeId,
        ingress: String,
        existing: String,
    },
    #[error("infeasible oracle: {0}")]
    InfeasibleOracle(String),
    #[error("scenario step `{step}`: {source}")]
    Scenario {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn lookup(kind: &'static str, name: impl ToString) -> Self {
        Error::Lookup {
            kind,
            name: name.to_string(),
        }
    }

    /// Attach the scenario step that produced this error.
    pub fn in_step(self, step: &'static str) -> Self {
        Error::Scenario {
            step,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
