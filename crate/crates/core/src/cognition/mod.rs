//! The online selection step, cognitive evaluation, the offline
//! self-learning pass, and the test protocol that alternates them.

mod catalog;
mod protocol;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use catalog::{Catalog, Prepared};
pub use protocol::{
    noisy_labels, recognition_score, run_protocol, Baseline, Context, Protocol, ProtocolStep, TestEvent, TestMetrics,
};

use crate::error::Result;
use crate::features::{MetaFeatures, TaskRequirement};
use crate::memory::{
    CaseBase, CaseDraft, CaseOrigin, Memory, Merit, Outcome, StagedObservation, StoredContext, NEIGHBOR_RADIUS,
};
use crate::pool::{list_grid, GridPoint, LearningResult, GRID_SIZE};
use crate::selector::{train_selector, Selection, SelectionMode, SelectorNet, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Best,
    NotBest,
}

/// The result of one online step.
#[derive(Debug, Clone)]
pub struct OnlineOutcome {
    pub selection: Selection,
    pub result: LearningResult,
    pub context: StoredContext,
    pub features: MetaFeatures,
    /// Set when the case base was empty and the first grid point was used.
    pub cold_start: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OfflineReport {
    pub contexts_visited: usize,
    pub trials: usize,
    pub corrections: usize,
    pub insertions: usize,
    /// Evaluation value of the stored case for each visited context.
    pub best_p_per_context: BTreeMap<u64, f64>,
}

/// Compares a fresh result with the stored results in its neighbourhood:
/// `Best` only when it strictly beats all of them.
pub fn cognitive_evaluate(current: &LearningResult, f: &MetaFeatures, ccb: &CaseBase) -> (f64, Verdict) {
    let p = current.p;
    let best_stored = ccb.query_neighbors(f, NEIGHBOR_RADIUS).iter().map(|c| c.p()).fold(f64::NEG_INFINITY, f64::max);
    let verdict = if p > best_stored { Verdict::Best } else { Verdict::NotBest };
    (p, verdict)
}

/// State of the cognitive-learning arm: memory, selector and the prepared
/// environments it acts on.
#[derive(Debug, Clone)]
pub struct Cognition {
    pub mode: SelectionMode,
    pub train: TrainConfig,
    pub memory: Memory,
    catalog: Arc<Catalog>,
    selector: Option<SelectorNet>,
    stale: bool,
}

impl Cognition {
    pub fn new(catalog: Arc<Catalog>, mode: SelectionMode, train: TrainConfig) -> Self {
        Self { mode, train, memory: Memory::new(), catalog, selector: None, stale: false }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn selector(&self) -> Option<&SelectorNet> {
        self.selector.as_ref()
    }

    pub fn ccb_size(&self) -> usize {
        self.memory.ccb.len()
    }

    fn prepared(&self, dataset_id: &str) -> Result<Arc<Prepared>> {
        self.catalog.get(dataset_id).cloned()
    }

    /// Retrains the selector from scratch if the case base changed since the last training.
    pub fn ensure_trained(&mut self) -> Result<()> {
        if self.stale || (self.selector.is_none() && !self.memory.ccb.is_empty()) {
            self.selector = if self.memory.ccb.is_empty() {
                None
            } else {
                Some(train_selector(&self.memory.ccb, self.mode, self.train)?)
            };
            self.stale = false;
        }
        Ok(())
    }

    pub fn select(&self, f: &MetaFeatures) -> (Selection, bool) {
        match &self.selector {
            Some(net) => (net.select(f), false),
            None => (Selection { point: list_grid()[0], confidence: 0.0 }, true),
        }
    }

    /// Extracts features, selects, evaluates, stores the context and stages
    /// the observation. The case base itself is left untouched.
    pub fn online_step(&mut self, dataset_id: &str, x: TaskRequirement) -> Result<OnlineOutcome> {
        x.validate()?;
        let prepared = self.prepared(dataset_id)?;
        let features = prepared.features(&x);
        let (selection, cold_start) = self.select(&features);
        let result = prepared.evaluate(&selection.point, &x);
        let context = self.memory.store_context(&prepared.env.dataset, x);
        self.memory.stage(StagedObservation {
            context_id: context.id,
            features,
            selection: selection.point,
            outcome: Outcome::from(&result),
        });
        Ok(OnlineOutcome { selection, result, context, features, cold_start })
    }

    /// Stores a context and a case for it with the given label.
    pub fn add_case(&mut self, dataset_id: &str, x: TaskRequirement, label: GridPoint, origin: CaseOrigin) -> Result<u64> {
        let prepared = self.prepared(dataset_id)?;
        let context = self.memory.store_context(&prepared.env.dataset, x);
        self.label_context(context.id, label, origin)
    }

    /// Inserts a case for an already stored context.
    pub fn label_context(&mut self, context_id: u64, label: GridPoint, origin: CaseOrigin) -> Result<u64> {
        let ctx = self.memory.context(context_id)?.clone();
        let prepared = self.prepared(&ctx.dataset_id)?;
        let result = prepared.evaluate(&label, &ctx.requirement);
        let seq = self.memory.insert_case(CaseDraft {
            context_id,
            features: prepared.features(&ctx.requirement),
            label,
            outcome: Outcome::from(&result),
            origin,
        })?;
        self.stale = true;
        Ok(seq)
    }

    /// Oracle label of a stored context.
    pub fn oracle(&self, ctx: &StoredContext) -> Result<GridPoint> {
        Ok(self.prepared(&ctx.dataset_id)?.oracle(&ctx.requirement))
    }

    /// Fraction of cases whose label disagrees with the oracle at the
    /// granularity of the selection mode.
    pub fn mislabel_ratio(&self) -> Result<f64> {
        let mode = self.mode;
        self.memory.mislabel_ratio_with(|ctx| self.oracle(ctx), |a, b| mode.matches(a, b))
    }

    /// Revisits `contexts`, trying up to `budget` grid points each in
    /// descending selector confidence. A stored case is relabelled when the
    /// best tried point strictly beats it; a context without a case gains one
    /// when its best point beats its neighbourhood. Staged online
    /// observations are gated the same way first. The selector is retrained
    /// if anything changed.
    pub fn offline_pass(&mut self, contexts: &[u64], budget: usize) -> Result<OfflineReport> {
        let mut report = OfflineReport::default();
        for obs in self.memory.take_staging() {
            if self.memory.ccb.for_context(obs.context_id).is_some() {
                continue;
            }
            let ctx = self.memory.context(obs.context_id)?.clone();
            let result = self.prepared(&ctx.dataset_id)?.evaluate(&obs.selection, &ctx.requirement);
            if cognitive_evaluate(&result, &obs.features, &self.memory.ccb).1 == Verdict::Best {
                self.label_context(obs.context_id, obs.selection, CaseOrigin::Online)?;
                report.insertions += 1;
            }
        }

        let budget = budget.min(GRID_SIZE);
        for &id in contexts {
            let ctx = self.memory.context(id)?.clone();
            let prepared = self.prepared(&ctx.dataset_id)?;
            let f = prepared.features(&ctx.requirement);
            let candidates: Vec<GridPoint> = match &self.selector {
                Some(net) => net.ranking(&f).into_iter().map(|s| s.point).collect(),
                None => list_grid().to_vec(),
            };
            let priority = ctx.requirement.priority;
            let best = candidates[..budget]
                .iter()
                .map(|point| {
                    let outcome = Outcome::from(&prepared.evaluate(point, &ctx.requirement));
                    (Merit::new(&outcome, point, priority), *point, outcome)
                })
                .max_by(|a, b| a.0.cmp(&b.0));
            report.contexts_visited += 1;
            report.trials += budget;
            let Some((merit, point, outcome)) = best else { continue };

            match self.memory.ccb.for_context(id).map(|c| (c.seq, c.merit())) {
                Some((seq, stored)) => {
                    if merit > stored {
                        self.memory.replace_label(seq, point, outcome)?;
                        self.stale = true;
                        report.corrections += 1;
                    }
                }
                None => {
                    let best_stored = self
                        .memory
                        .ccb
                        .query_neighbors(&f, NEIGHBOR_RADIUS)
                        .iter()
                        .map(|c| c.p())
                        .fold(f64::NEG_INFINITY, f64::max);
                    if outcome.p > best_stored {
                        self.label_context(id, point, CaseOrigin::Online)?;
                        report.insertions += 1;
                    }
                }
            }
            if let Some(case) = self.memory.ccb.for_context(id) {
                report.best_p_per_context.insert(id, case.p());
            }
        }
        self.ensure_trained()?;
        Ok(report)
    }

    /// Every stored context that has a case.
    pub fn case_contexts(&self) -> Vec<u64> {
        self.memory.ccb.cases().iter().map(|c| c.context_id).collect()
    }
}
