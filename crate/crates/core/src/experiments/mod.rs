//! Config-driven experiments: convergence tables of ball-volume differences
//! against the energy at equilibrium, and the property suite.

mod config;
mod runner;
mod suite;

pub use config::{
    ConjugateConfig, DistortionConfig, EnergyConfig, ExperimentConfig, KSchedule, PolytopeConfig, Subsample,
    SuiteConfig, Tolerances,
};
pub use runner::{
    run_conjugate, run_convergence, run_distortion, run_energy, run_polytope, ConvergenceRow, ConvergenceRun,
    ConvergenceSummary, DistortionRun,
};
pub use suite::{run_property_suite, SuiteCheck, SuiteReport, Tag};
