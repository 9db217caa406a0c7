//! Simulation of two-photon (biphoton) entangled light spectroscopy: a
//! polarization-entangled pair source, Jones-matrix elements in each arm, a
//! 50:50 beamsplitter with tunable distinguishability, polarization-resolved
//! coincidence detection, and the fits that turn scans into visibilities,
//! coherence lengths, Bell-state fractions and Verdet constants.

pub mod analysis;
pub mod detection;
pub mod elements;
pub mod error;
pub mod experiment;
pub mod fockstate;
pub mod interference;

pub use error::{Error, Result};
pub use fockstate::{BellFractions, BellKind, Mode, Path, Pol, Ports, TwoPhotonState};
pub use interference::{ChannelProbabilities, CoincidenceChannel, Detector, SpectralFilter};
