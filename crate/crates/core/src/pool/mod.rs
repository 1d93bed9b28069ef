//! The learning network and its algorithm / hyper-parameter base: the
//! classifier pool, the joint grid, the cost model, evaluation under a task,
//! and the exhaustive oracle.

pub mod classifiers;
mod cost;
mod eval;
mod grid;

pub use cost::{cost, max_cost, min_cost, REFERENCE_CLASSES, REFERENCE_TRAIN_SIZE};
pub use eval::{
    evaluate, evaluation_value, oracle_label, point_seed, train_and_classify, Environment,
    LearningResult, RunOutcome, Sweep, SweepRow,
};
pub use grid::{list_grid, AlgorithmId, GridPoint, HyperParams, GRID_SIZE};
