//! Data-driven movie configuration planning.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`library`] parses a JSONL movie corpus and lays out the binary
//!    configuration space (actors, actresses, directors, writers, genres).
//! 2. [`regress`] fits non-negative Lasso models for budget and gross.
//! 3. [`tensor`] counts historical crew collaborations per genre.
//! 4. [`planner`] maximizes `alpha * gross + beta * acquaintance` under a
//!    budget cap, with greedy and exhaustive baselines.
//!
//! [`harness`] holds the synthetic corpus generator and the evaluation
//! protocols built on top of the pipeline.

pub mod error;
pub mod harness;
pub mod library;
pub mod planner;
pub mod regress;
pub mod store;
pub mod tensor;

pub use error::{Error, Result};
