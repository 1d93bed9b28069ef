use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{MetaFeatures, Priority};
use crate::pool::{GridPoint, LearningResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseOrigin {
    Seed,
    Online,
    OfflineCorrected,
    InjectedMislabel,
}

/// How well a label performed in its context: evaluation value, accuracy and cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub p: f64,
    pub accuracy: f64,
    pub cost: f64,
}

impl From<&LearningResult> for Outcome {
    fn from(r: &LearningResult) -> Self {
        Self { p: r.p, accuracy: r.accuracy, cost: r.cost }
    }
}

/// Total order on labelled outcomes within one context.
///
/// Higher score first (the evaluation value `p` under TimeFirst, raw
/// accuracy under AccuracyFirst), then lower cost, then lower grid index.
/// This is the same ordering the exhaustive oracle uses, so the maximum over
/// the grid is always the oracle label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merit {
    pub score: f64,
    pub cost: f64,
    pub grid_index: usize,
}

impl Merit {
    pub fn new(outcome: &Outcome, label: &GridPoint, priority: Priority) -> Self {
        let score = match priority {
            Priority::TimeFirst => outcome.p,
            Priority::AccuracyFirst => outcome.accuracy,
        };
        Self { score, cost: outcome.cost, grid_index: label.index() }
    }
}

impl Eq for Merit {}

impl PartialOrd for Merit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Merit {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then(other.cost.total_cmp(&self.cost))
            .then(other.grid_index.cmp(&self.grid_index))
    }
}

/// One entry of the cognitive case base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CognitiveCase {
    pub seq: u64,
    /// The stored context this case was observed in.
    pub context_id: u64,
    pub features: MetaFeatures,
    pub label: GridPoint,
    pub outcome: Outcome,
    pub origin: CaseOrigin,
}

impl CognitiveCase {
    pub fn p(&self) -> f64 {
        self.outcome.p
    }

    pub fn priority(&self) -> Priority {
        self.features.priority()
    }

    pub fn merit(&self) -> Merit {
        Merit::new(&self.outcome, &self.label, self.priority())
    }
}

/// A case before the case base assigns its sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseDraft {
    pub context_id: u64,
    pub features: MetaFeatures,
    pub label: GridPoint,
    pub outcome: Outcome,
    pub origin: CaseOrigin,
}

impl CaseDraft {
    pub fn validate(&self) -> Result<()> {
        if self.label.grid_index().is_none() {
            return Err(Error::InvalidLabel(format!("{} is not on the grid", self.label)));
        }
        if !(0.0..=1.0).contains(&self.outcome.p) {
            return Err(Error::InvalidLabel(format!("p = {} outside [0, 1]", self.outcome.p)));
        }
        Ok(())
    }
}
