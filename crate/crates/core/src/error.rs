use std::fmt;

use thiserror::Error;

/// Where on the grid something went wrong.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeLocation {
    pub index: usize,
    pub theta: f64,
    /// Azimuth; `None` on axisymmetric grids.
    pub xi: Option<f64>,
}

impl fmt::Display for NodeLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.xi {
            Some(xi) => write!(f, "node {} (theta={:.6}, xi={:.6})", self.index, self.theta, xi),
            None => write!(f, "node {} (theta={:.6})", self.index, self.theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("curvature outside the required cone: cone index {cone_index}, need {required}{}", fmt_loc(.location))]
    ConeViolation {
        cone_index: usize,
        required: usize,
        location: Option<NodeLocation>,
    },

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("discrete metric is not positive definite at {0}")]
    DegenerateMetric(NodeLocation),

    #[error("not star-shaped: {0}")]
    NotStarShaped(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("support function non-positive at {0}")]
    LostStarShapedness(NodeLocation),

    #[error("non-finite values after step at t={t}")]
    BlowUp { t: f64 },

    #[error("need at least {need} monitor samples, have {have}")]
    NeedsMoreSamples { have: usize, need: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn fmt_loc(loc: &Option<NodeLocation>) -> String {
    match loc {
        Some(l) => format!(" at {l}"),
        None => String::new(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
