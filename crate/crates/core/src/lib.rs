//! Multimodal optimisation with clustering-based multi-swarm PSO.
//!
//! The crate provides the TImPSO niching algorithm (pervasive-cognitive
//! scouting, silhouette k-means and hill-valley sub-clustering) together with
//! the kPSO, EDHC-PSO and NichePSO baselines, the built-in niching test
//! functions f1–f10 and a peak-ratio benchmark harness.

pub mod cli;
pub mod clustering;
pub mod error;
pub mod harness;
pub mod lds;
pub mod localsearch;
pub mod niching;
pub mod objective;
pub mod swarm;

pub use error::{Error, EvalError, Result};
