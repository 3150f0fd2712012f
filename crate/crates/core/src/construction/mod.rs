//! The iteration: schedule, base level, flow maps, cutoffs, amplitudes,
//! perturbations and stress assembly.

pub mod cutoff;
pub mod flow;
pub mod level;
pub mod micro;
pub mod schedule;
pub mod state;
pub mod step;
