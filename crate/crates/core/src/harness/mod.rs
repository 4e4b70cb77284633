//! Experiment presets, convergence studies, file formats and the command line.

pub mod cli;
pub mod convergence;
pub mod io;
pub mod presets;
pub mod selftest;

pub use convergence::{fit_slope, run_convergence, ConvergenceReport, LegResult, RunOptions, SchemeFit};
pub use presets::{preset, ExperimentPreset, FitWindow, InitialData, ReferencePolicy, PRESET_NAMES};
