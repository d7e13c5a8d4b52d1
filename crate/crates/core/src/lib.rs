//! Detection of social-network usage disorders from multi-source activity logs.
//!
//! The pipeline extracts behavioral features per source ([`features`]),
//! fuses sources with a graph-regularized Tucker factorization ([`stm`]) and
//! classifies users with per-class transductive linear SVMs ([`classify`]).
//! [`synth`] generates planted cohorts and [`analytics`] runs the
//! network-level analyses on classified users.

pub mod activity;
pub mod analytics;
pub mod burst;
pub mod classify;
pub mod cli;
pub mod config;
pub mod error;
pub mod features;
pub mod pipeline;
pub mod stm;
pub mod synth;

pub use error::{Error, Result};
