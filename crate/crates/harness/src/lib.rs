//! Experiment runner for vortexlab: scenario files, run directories,
//! ε-sweep reports and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod report;
pub mod runner;
pub mod scenarios;
