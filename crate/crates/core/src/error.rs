use thiserror::Error;

use crate::blocklp::Location;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PresolveError {
    #[error("infeasible at {location}: {reason}")]
    Infeasible { location: Location, reason: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// A reduction referenced data that no longer exists; indicates a sequencing bug.
    #[error("internal error: {0}")]
    Internal(String),
}

impl PresolveError {
    pub fn location(&self) -> Option<&Location> {
        match self {
            PresolveError::Infeasible { location, .. } => Some(location),
            _ => None,
        }
    }
}
