//! Experiment drivers.

pub mod condition;
pub mod convergence;
pub mod errors;
pub mod infsup;
pub mod manufactured;
pub mod solve;
pub mod timedomain;
