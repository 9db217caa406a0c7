//! Configuration, scan tables and the simulate/analyze pipeline behind the
//! `bels` binary.

pub mod config;
pub mod runner;
pub mod table;
