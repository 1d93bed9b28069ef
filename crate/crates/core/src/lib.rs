//! Cognitive selection of modulation-recognition algorithms and their
//! hyper-parameters.
//!
//! The crate is organized around the two processes of the selection loop:
//!
//! * an online step that extracts meta-features from an (environment, task)
//!   pair, asks a trained [`selector`] for an algorithm and hyper-parameter
//!   point, runs it from the [`pool`], and reports the evaluation value;
//! * an offline pass that revisits stored contexts, tries alternatives in
//!   confidence order, keeps strictly better labels in the case base held by
//!   [`memory`], and retrains the selector.
//!
//! [`workload`] synthesizes the RF environments, [`features`] summarizes them,
//! [`cognition`] wires the loop together and [`experiment`] runs the
//! reproducible experiment schedules.

pub mod cognition;
pub mod error;
pub mod experiment;
pub mod features;
pub mod memory;
pub mod pool;
pub mod rng;
pub mod selector;
pub mod workload;

pub use error::{Error, Result};
