//! Desk-scale lane-keeping simulator and imitation-learning library.
//!
//! The crate wires together five pieces:
//!
//! - [`track`]: procedural closed tracks, unicycle car kinematics, rangefinder
//!   observations, and lane-departure detection.
//! - [`expert`]: the reference PID demonstrator with privileged access to the
//!   lateral offset and heading error.
//! - [`policy`]: a small fully connected regression network trained with
//!   minibatch gradient descent on mean squared error, plus gradient checking
//!   and input-gradient saliency.
//! - [`aggregation`]: dataset collection and the aggregation loops — MetaDAgger
//!   (round-robin over a pool of training tracks with meta/low weight hand-off
//!   and mistake-only aggregation) and classic DAgger baselines.
//! - [`harness`]: train/test splits, closed-loop evaluation, replicated
//!   comparisons, and CSV/SVG reports.
//!
//! Everything is deterministic: all randomness flows from a master seed
//! through [`seeds::derive_seed`], and parallel code paths (enabled by the
//! `parallel` feature) reduce in a fixed order so results are bit-identical
//! to the sequential fallback.

pub mod aggregation;
pub mod data;
pub mod exec;
pub mod expert;
pub mod fsutil;
pub mod geometry;
pub mod harness;
pub mod policy;
pub mod rollout;
pub mod seeds;
pub mod track;
