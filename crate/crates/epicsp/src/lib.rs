//! SEInsRD epidemic model with timescale analysis.
//!
//! The library integrates the six-compartment SEInsRD model, decomposes its
//! Jacobian into explosive/dissipative/neutral modes along the trajectory,
//! detects the coalescence and disappearance of the explosive timescales,
//! locates the inflection point of the active cases, ranks the transition
//! paths driving an outbreak, and fits the model to daily epidemic series.

pub mod analyzer;
pub mod csp;
pub mod fit;
pub mod integrate;
pub mod io;
pub mod model;

pub use analyzer::{AnalyzerConfig, OutbreakEvents, TimescaleTimeline};
pub use csp::{CspConfig, CspDiagnostics, EigenAnalysis, ModeClass};
pub use integrate::{Tolerances, Trajectory};
pub use model::{ModelParams, RateVector, StateVector, StoichiometricMatrix};
