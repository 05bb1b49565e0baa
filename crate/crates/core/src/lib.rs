//! Stationary analysis and event-driven simulation of stochastic service
//! networks whose occupancy distribution is insensitive to workload
//! distributions beyond their means.
//!
//! The crate is organised bottom-up:
//!
//! * [`dist`] — workload distribution families, their analytic CDFs and
//!   samplers, and the stationary residual-life companion of each family.
//! * [`model`] — network descriptions: class counts, transition rate models,
//!   service disciplines, and structural validation.
//! * [`balance`] — closed-form and numerical stationary solvers, the partial
//!   balance verifier, and a dense CTMC oracle for cross-checking.
//! * [`sim`] — an exact event-driven simulator for the piecewise-deterministic
//!   state (occupancy counts plus residual workloads).
//! * [`harness`] — statistical estimators and the experiment drivers that
//!   compare simulated occupancy and residual profiles against analytic
//!   predictions.
//! * [`config`] / [`report`] — TOML front end and deterministic report
//!   rendering shared with the CLI.

pub mod balance;
pub mod config;
pub mod dist;
pub mod harness;
pub mod model;
pub mod report;
pub mod sim;
