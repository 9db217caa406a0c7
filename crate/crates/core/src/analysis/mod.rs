//! Fitting and extraction of physical quantities from scans.

pub mod extract;
pub mod fit;

pub use extract::*;
pub use fit::*;
