//! PHEV energy-management laboratory.
//!
//! Simulates a parallel-hybrid powertrain over trips, solves each trip's
//! optimal energy split by backward dynamic programming, learns a
//! position-indexed linear approximation of the optimal value function from
//! a corpus of solved trips, and runs a real-time MPC controller that uses
//! the learned value function as its terminal cost — benchmarked against
//! CD-CS, A-ECMS, and the DP optimum.
//!
//! Module map:
//! - [`powertrain`]: discrete-time plant model (battery, motor, engine,
//!   driveline) as pure transition functions.
//! - [`trip`]: trip data model, CSV ingestion, synthetic drive-cycle
//!   generation, position binning, feature extraction.
//! - [`dp`]: backward Bellman recursion on a (stage × SOC × engine) lattice,
//!   value tables and optimal rollouts.
//! - [`learn`]: per-position-bin ridge regression of the optimal value
//!   function on seven feature states.
//! - [`mpc`]: one-step (configurable-horizon) input enumeration with a
//!   learned terminal cost.
//! - [`baselines`]: CD-CS and A-ECMS reference controllers.
//! - [`sim`]: closed-loop harness, MPGe metrics, controller comparison.
//! - [`cli`]: batch pipeline commands and the workspace manifest.

pub mod baselines;
pub mod cli;
pub mod dp;
pub mod interp;
pub mod learn;
pub mod mpc;
pub mod powertrain;
pub mod sim;
pub mod trip;
pub mod workspace;
