use thiserror::Error;

use crate::fockstate::{Mode, Ports};
use crate::interference::CoincidenceChannel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("states live on different port sets ({0:?} vs {1:?})")]
    PortMismatch(Ports, Ports),

    #[error("mode {0} does not belong to the {1:?} ports")]
    ModeOutsidePorts(Mode, Ports),

    #[error("superposition needs at least one term")]
    EmptySuperposition,

    #[error("cannot normalize the zero state")]
    ZeroState,

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("operation needs a state on the input paths a, b")]
    ExpectedInputPorts,

    #[error("source term ({0}, {1}) does not put exactly one photon in each input arm")]
    NotOnePhotonPerArm(Mode, Mode),

    #[error("element `{0}` is not unitary; loss bookkeeping is not modeled")]
    NonUnitaryElement(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("timestamp stream for {detector} is not strictly increasing at index {index}")]
    UnsortedStream { detector: String, index: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("scan needs at least one setting")]
    EmptyScan,

    #[error("scan settings must be strictly monotone")]
    NonMonotoneSettings,

    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("missing fit for channel {0}")]
    MissingChannel(CoincidenceChannel),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}
