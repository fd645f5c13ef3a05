use std::fmt;

use thiserror::Error;

use crate::operator::Phase;

/// A configuration value that failed validation, tagged with its dotted key path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Prefix the path with a parent section name.
    pub fn within(mut self, parent: &str) -> Self {
        self.path = if self.path.is_empty() {
            parent.to_string()
        } else {
            format!("{parent}.{}", self.path)
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FaultKind {
    NoProgress,
    PhaseTimeout,
    MaxTimeReached,
    NonFinite(&'static str),
    PowerIdentity { residual: f64 },
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultKind::NoProgress => write!(f, "no progress"),
            FaultKind::PhaseTimeout => write!(f, "phase timeout"),
            FaultKind::MaxTimeReached => write!(f, "max_sim_time reached before the cycle ended"),
            FaultKind::NonFinite(what) => write!(f, "non-finite {what}"),
            FaultKind::PowerIdentity { residual } => {
                write!(f, "power accounting residual {residual:e} W")
            }
        }
    }
}

/// Simulation abort diagnostic.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at step {step} (t = {t:.3} s, phase {phase})")]
pub struct SimFault {
    pub kind: FaultKind,
    pub step: u64,
    pub t: f64,
    pub phase: Phase,
}
