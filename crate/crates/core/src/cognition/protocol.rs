use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Catalog, Cognition};
use crate::error::{Error, Result};
use crate::features::{Priority, TaskRequirement};
use crate::memory::{CaseOrigin, Merit, Outcome};
use crate::pool::{list_grid, GridPoint, LearningResult};
use crate::rng::SplitMix64;
use crate::selector::{pretrain_mtl, FrozenSelector, SelectionMode, TrainConfig};

/// An (environment, task) pair to select for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub dataset_id: String,
    pub requirement: TaskRequirement,
}

/// One test: a block of contexts evaluated with the current selector and
/// then absorbed into the case base.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolStep {
    pub block: Vec<Context>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub steps: Vec<ProtocolStep>,
    /// Fraction of each absorbed block given a wrong label.
    pub mislabel_ratio: f64,
    pub offline_passes: usize,
    pub offline_budget: usize,
    pub noise_seed: u64,
}

/// Per-test log record. Selections and oracle labels are grid indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEvent {
    pub test_index: usize,
    pub ccb_size: usize,
    pub mislabel_ratio: f64,
    pub context_ids: Vec<u64>,
    pub datasets: Vec<String>,
    pub selections: Vec<usize>,
    pub oracle: Vec<usize>,
    pub p: Vec<f64>,
    pub cold_start: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestMetrics {
    pub test_index: usize,
    /// Share of the block whose selection matches the oracle label.
    pub selection_accuracy: f64,
    /// Mean recognition score of the selected points: the evaluation value
    /// under TimeFirst, the raw accuracy under AccuracyFirst.
    pub recognition_accuracy: f64,
    pub ccb_size: usize,
    pub mislabel_ratio: f64,
    pub event: TestEvent,
}

/// Recognition score of one run, the quantity each priority maximizes.
pub fn recognition_score(result: &LearningResult, priority: Priority) -> f64 {
    Merit::new(&Outcome::from(result), &result.point, priority).score
}

fn summarize(
    mode: SelectionMode,
    test_index: usize,
    ccb_size: usize,
    mislabel_ratio: f64,
    rows: Vec<(u64, &Context, GridPoint, GridPoint, LearningResult)>,
    cold_start: bool,
) -> TestMetrics {
    let n = rows.len().max(1) as f64;
    let matches = rows.iter().filter(|r| mode.matches(&r.2, &r.3)).count();
    let recognition = rows.iter().map(|r| recognition_score(&r.4, r.1.requirement.priority)).sum::<f64>() / n;
    let event = TestEvent {
        test_index,
        ccb_size,
        mislabel_ratio,
        context_ids: rows.iter().map(|r| r.0).collect(),
        datasets: rows.iter().map(|r| r.1.dataset_id.clone()).collect(),
        selections: rows.iter().map(|r| r.2.index()).collect(),
        oracle: rows.iter().map(|r| r.3.index()).collect(),
        p: rows.iter().map(|r| r.4.p).collect(),
        cold_start,
    };
    TestMetrics {
        test_index,
        selection_accuracy: matches as f64 / n,
        recognition_accuracy: recognition,
        ccb_size,
        mislabel_ratio,
        event,
    }
}

/// Labels for a block of oracle labels with `round(ratio * n)` of them,
/// chosen uniformly, replaced by a uniformly drawn point that disagrees with
/// the oracle at the granularity of `mode`. The flag marks injected labels.
pub fn noisy_labels(mode: SelectionMode, oracle: &[GridPoint], ratio: f64, rng: &mut SplitMix64) -> Vec<(GridPoint, bool)> {
    let k = (ratio * oracle.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..oracle.len()).collect();
    rng.shuffle(&mut order);
    let mut out: Vec<(GridPoint, bool)> = oracle.iter().map(|p| (*p, false)).collect();
    for &i in &order[..k.min(oracle.len())] {
        let wrong: Vec<GridPoint> = list_grid().iter().filter(|p| !mode.matches(p, &oracle[i])).copied().collect();
        out[i] = (wrong[rng.below(wrong.len())], true);
    }
    out
}

fn origin(injected: bool, clean: CaseOrigin) -> CaseOrigin {
    if injected {
        CaseOrigin::InjectedMislabel
    } else {
        clean
    }
}

impl Cognition {
    /// Stores `contexts` with oracle labels, a fraction `ratio` of them
    /// replaced by wrong labels, and retrains.
    pub fn seed_cases(&mut self, contexts: &[Context], ratio: f64, rng: &mut SplitMix64) -> Result<()> {
        let oracle: Vec<GridPoint> = contexts
            .iter()
            .map(|c| Ok(self.catalog.get(&c.dataset_id)?.oracle(&c.requirement)))
            .collect::<Result<_>>()?;
        for (c, (label, injected)) in contexts.iter().zip(noisy_labels(self.mode, &oracle, ratio, rng)) {
            self.add_case(&c.dataset_id, c.requirement, label, origin(injected, CaseOrigin::Seed))?;
        }
        self.ensure_trained()
    }
}

/// Runs the alternating test/absorb loop on the cognitive arm.
///
/// Each step evaluates its block through online steps (metrics are taken
/// against the case base as it stood before the block), then absorbs the
/// block with oracle labels, a `mislabel_ratio` share of them replaced by
/// wrong ones, runs the offline passes and retrains. The final block is
/// evaluated but not absorbed.
pub fn run_protocol(protocol: &Protocol, state: &mut Cognition) -> Result<Vec<TestMetrics>> {
    if !(0.0..1.0).contains(&protocol.mislabel_ratio) {
        return Err(Error::Config(format!("mislabel ratio {} outside [0, 1)", protocol.mislabel_ratio)));
    }
    let mut metrics = Vec::with_capacity(protocol.steps.len());
    for (i, step) in protocol.steps.iter().enumerate() {
        state.ensure_trained()?;
        let ccb_size = state.ccb_size();
        let mislabel = state.mislabel_ratio()?;
        let mut rows = Vec::with_capacity(step.block.len());
        let mut cold = false;
        for c in &step.block {
            let out = state.online_step(&c.dataset_id, c.requirement)?;
            let oracle = state.oracle(&out.context)?;
            cold |= out.cold_start;
            rows.push((out.context.id, c, out.selection.point, oracle, out.result));
        }
        let oracle: Vec<GridPoint> = rows.iter().map(|r| r.3).collect();
        let ids: Vec<u64> = rows.iter().map(|r| r.0).collect();
        metrics.push(summarize(state.mode, i + 1, ccb_size, mislabel, rows, cold));

        state.memory.take_staging();
        if i + 1 == protocol.steps.len() {
            break;
        }
        let mut rng = SplitMix64::derive(protocol.noise_seed, i as u64 + 1);
        for (id, (label, injected)) in ids.iter().zip(noisy_labels(state.mode, &oracle, protocol.mislabel_ratio, &mut rng)) {
            state.label_context(*id, label, origin(injected, CaseOrigin::Online))?;
        }
        for _ in 0..protocol.offline_passes {
            let contexts = state.case_contexts();
            state.offline_pass(&contexts, protocol.offline_budget)?;
        }
        state.ensure_trained()?;
    }
    Ok(metrics)
}

/// The static meta-learning arm: a selector trained once on a fixed set of
/// meta examples and never updated.
#[derive(Debug, Clone)]
pub struct Baseline {
    selector: FrozenSelector,
    catalog: Arc<Catalog>,
    mislabel_ratio: f64,
}

impl Baseline {
    /// Labels `examples` like [`Cognition::seed_cases`] and trains once.
    pub fn pretrain(
        catalog: Arc<Catalog>,
        mode: SelectionMode,
        train: TrainConfig,
        examples: &[Context],
        ratio: f64,
        noise_seed: u64,
    ) -> Result<Self> {
        let mut store = Cognition::new(Arc::clone(&catalog), mode, train);
        let mut rng = SplitMix64::new(noise_seed);
        let oracle: Vec<GridPoint> =
            examples.iter().map(|c| Ok(catalog.get(&c.dataset_id)?.oracle(&c.requirement))).collect::<Result<_>>()?;
        for (c, (label, injected)) in examples.iter().zip(noisy_labels(mode, &oracle, ratio, &mut rng)) {
            store.add_case(&c.dataset_id, c.requirement, label, origin(injected, CaseOrigin::Seed))?;
        }
        let selector = pretrain_mtl(&store.memory.ccb, mode, train)?;
        Ok(Self { selector, catalog, mislabel_ratio: store.mislabel_ratio()? })
    }

    pub fn selector(&self) -> &FrozenSelector {
        &self.selector
    }

    pub fn examples(&self) -> usize {
        self.selector.examples()
    }

    pub fn mislabel_ratio(&self) -> f64 {
        self.mislabel_ratio
    }

    /// Evaluates a block; nothing is stored.
    pub fn test(&self, test_index: usize, block: &[Context]) -> Result<TestMetrics> {
        let mode = self.selector.net().mode;
        let mut rows = Vec::with_capacity(block.len());
        for (j, c) in block.iter().enumerate() {
            let prepared = self.catalog.get(&c.dataset_id)?;
            let s = self.selector.select(&prepared.features(&c.requirement));
            let result = prepared.evaluate(&s.point, &c.requirement);
            rows.push((j as u64, c, s.point, prepared.oracle(&c.requirement), result));
        }
        Ok(summarize(mode, test_index, self.examples(), self.mislabel_ratio, rows, false))
    }
}
