use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::contexts::{Family, Workbench};
use super::parallel::parallel_map;
use super::ExperimentConfig;
use crate::cognition::{run_protocol, Baseline, Cognition, Context, Protocol, ProtocolStep, TestEvent, TestMetrics};
use crate::error::{Error, Result};
use crate::features::Priority;
use crate::rng::{derive_seed, derive_seed_str, SplitMix64};
use crate::selector::SelectionMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SelfLearning,
    Dynamic,
    Noise,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Experiment::SelfLearning, Experiment::Dynamic, Experiment::Noise];

    pub fn name(self) -> &'static str {
        match self {
            Self::SelfLearning => "self-learning",
            Self::Dynamic => "dynamic",
            Self::Noise => "noise",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?} (self-learning, dynamic or noise)")))
    }
}

pub const CL_ARM: &str = "CL";

pub fn mtl_arm(examples: usize) -> String {
    format!("MtL-{examples}")
}

/// One line of `results.csv`: one arm on one test block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub arm: String,
    pub selection_mode: SelectionMode,
    #[serde(with = "fixed")]
    pub noise_ratio: f64,
    pub seed: usize,
    pub test_index: usize,
    pub dataset: String,
    /// `time-first`, `accuracy-first` or `mixed`.
    pub requirement: String,
    #[serde(with = "fixed")]
    pub selection_accuracy: f64,
    #[serde(with = "fixed")]
    pub recognition_accuracy: f64,
    pub ccb_size: usize,
    #[serde(with = "fixed")]
    pub mislabel_ratio: f64,
}

/// Fixed six-decimal rendering keeps the CSV stable and readable.
mod fixed {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:.6}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(serde::de::Error::custom)
    }
}

/// A per-test event tagged with the run it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub experiment: Experiment,
    pub arm: String,
    pub selection_mode: SelectionMode,
    pub noise_ratio: f64,
    pub seed: usize,
    pub dataset: String,
    #[serde(flatten)]
    pub event: TestEvent,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub events: Vec<EventRecord>,
}

impl RunOutput {
    fn push(&mut self, tag: &RunTag, arm: &str, dataset: &str, block: &[Context], m: TestMetrics) {
        self.rows.push(ResultRow {
            experiment: tag.experiment,
            arm: arm.to_string(),
            selection_mode: tag.mode,
            noise_ratio: tag.ratio,
            seed: tag.seed,
            test_index: m.test_index,
            dataset: dataset.to_string(),
            requirement: requirement_label(block),
            selection_accuracy: m.selection_accuracy,
            recognition_accuracy: m.recognition_accuracy,
            ccb_size: m.ccb_size,
            mislabel_ratio: m.mislabel_ratio,
        });
        self.events.push(EventRecord {
            experiment: tag.experiment,
            arm: arm.to_string(),
            selection_mode: tag.mode,
            noise_ratio: tag.ratio,
            seed: tag.seed,
            dataset: dataset.to_string(),
            event: m.event,
        });
    }

    fn extend(&mut self, other: RunOutput) {
        self.rows.extend(other.rows);
        self.events.extend(other.events);
    }
}

fn requirement_label(block: &[Context]) -> String {
    let first = block.first().map(|c| c.requirement.priority);
    match first {
        Some(p) if block.iter().all(|c| c.requirement.priority == p) => p.label().to_string(),
        _ => "mixed".to_string(),
    }
}

#[derive(Debug, Clone)]
struct RunTag {
    experiment: Experiment,
    mode: SelectionMode,
    ratio: f64,
    seed: usize,
}

impl RunTag {
    fn seed_base(&self, cfg: &ExperimentConfig) -> u64 {
        derive_seed(cfg.master_seed, self.seed as u64)
    }

    fn stream(&self, cfg: &ExperimentConfig, tag: &str) -> SplitMix64 {
        SplitMix64::new(derive_seed_str(self.seed_base(cfg), tag))
    }

    fn train_seed(&self, cfg: &ExperimentConfig, arm: &str) -> u64 {
        derive_seed_str(self.seed_base(cfg), &format!("selector/{}/{arm}", self.mode.label()))
    }

    fn noise_seed(&self, cfg: &ExperimentConfig, scope: &str) -> u64 {
        derive_seed_str(self.seed_base(cfg), &format!("noise/{scope}/{}/{:.6}", self.mode.label(), self.ratio))
    }
}

/// Test block sizes for a block schedule: the block after the seed block
/// for each test, the last size repeating for the final test.
pub fn test_block_sizes(blocks: &[usize]) -> Vec<usize> {
    (1..=blocks.len()).map(|k| *blocks.get(k).unwrap_or(blocks.last().expect("non-empty schedule"))).collect()
}

pub fn run_experiment(kind: Experiment, cfg: &ExperimentConfig, bench: &Workbench) -> Result<RunOutput> {
    cfg.validate()?;
    let mut tags = Vec::new();
    match kind {
        Experiment::SelfLearning | Experiment::Noise => {
            let ratios = if kind == Experiment::Noise { cfg.noise.ratios.clone() } else { vec![0.0] };
            for &ratio in &ratios {
                for &mode in &cfg.modes {
                    for dataset in &cfg.datasets {
                        for seed in 0..cfg.seeds {
                            tags.push((RunTag { experiment: kind, mode, ratio, seed }, dataset.clone()));
                        }
                    }
                }
            }
        }
        Experiment::Dynamic => {
            for &mode in &cfg.modes {
                for seed in 0..cfg.seeds {
                    tags.push((RunTag { experiment: kind, mode, ratio: 0.0, seed }, cfg.dynamic.initial_dataset.clone()));
                }
            }
        }
    }
    let parts = parallel_map(&tags, cfg.threads, |(tag, dataset)| match kind {
        Experiment::Dynamic => dynamic_run(cfg, bench, tag),
        _ => growth_run(cfg, bench, tag, dataset),
    });
    let mut out = RunOutput::default();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn mtl_baselines(
    cfg: &ExperimentConfig,
    bench: &Workbench,
    tag: &RunTag,
    family: &Family,
    priority: Option<Priority>,
) -> Result<Vec<(String, Baseline)>> {
    let largest = cfg.mtl_examples.iter().copied().max().unwrap_or(0);
    let mut rng = tag.stream(cfg, &format!("meta/{}", family.dataset));
    let examples = family.block(&mut rng, largest, priority, cfg.time_first_share);
    cfg.mtl_examples
        .iter()
        .map(|&n| {
            let arm = mtl_arm(n);
            let train = cfg.train_config(tag.train_seed(cfg, &arm));
            let noise = tag.noise_seed(cfg, &format!("{}/{arm}", family.dataset));
            let b = Baseline::pretrain(Arc::clone(&bench.catalog), tag.mode, train, &examples[..n], tag.ratio, noise)?;
            Ok((arm, b))
        })
        .collect()
}

/// Self-learning and noise schedules: a seed block, then growing test
/// blocks that the cognitive arm absorbs after each test.
fn growth_run(cfg: &ExperimentConfig, bench: &Workbench, tag: &RunTag, dataset: &str) -> Result<RunOutput> {
    let family = bench.family(dataset)?;
    let blocks = if tag.experiment == Experiment::Noise { cfg.noise_blocks() } else { &cfg.blocks };
    let mut rng = tag.stream(cfg, &format!("contexts/{dataset}"));
    let seeds = family.block(&mut rng, blocks[0], None, cfg.time_first_share);
    let steps: Vec<ProtocolStep> = test_block_sizes(blocks)
        .into_iter()
        .map(|n| ProtocolStep { block: family.block(&mut rng, n, None, cfg.time_first_share) })
        .collect();

    let mut out = RunOutput::default();
    let noise = tag.noise_seed(cfg, &format!("{dataset}/{CL_ARM}"));
    let mut cl = Cognition::new(Arc::clone(&bench.catalog), tag.mode, cfg.train_config(tag.train_seed(cfg, CL_ARM)));
    cl.seed_cases(&seeds, tag.ratio, &mut SplitMix64::derive(noise, 0))?;
    let protocol = Protocol {
        steps: steps.clone(),
        mislabel_ratio: tag.ratio,
        offline_passes: cfg.offline_passes,
        offline_budget: cfg.offline_budget,
        noise_seed: noise,
    };
    for (m, step) in run_protocol(&protocol, &mut cl)?.into_iter().zip(&steps) {
        out.push(tag, CL_ARM, dataset, &step.block, m);
    }
    for (arm, baseline) in mtl_baselines(cfg, bench, tag, family, None)? {
        for (i, step) in steps.iter().enumerate() {
            out.push(tag, &arm, dataset, &step.block, baseline.test(i + 1, &step.block)?);
        }
    }
    Ok(out)
}

/// Requirement and dataset change schedule. Both arms are trained on
/// TimeFirst tasks of the initial dataset.
fn dynamic_run(cfg: &ExperimentConfig, bench: &Workbench, tag: &RunTag) -> Result<RunOutput> {
    let d = &cfg.dynamic;
    let before = bench.family(&d.initial_dataset)?;
    let after = bench.family(&d.new_dataset)?;
    let mut rng = tag.stream(cfg, "dynamic/contexts");
    let pretrain = before.block(&mut rng, d.pretrain, Some(Priority::TimeFirst), cfg.time_first_share);
    let steps: Vec<(String, ProtocolStep)> = (1..=d.tests)
        .map(|t| {
            let family = if t >= d.dataset_change { after } else { before };
            let priority = if t >= d.requirement_change { Priority::AccuracyFirst } else { Priority::TimeFirst };
            let block = family.block(&mut rng, d.block, Some(priority), cfg.time_first_share);
            (family.dataset.clone(), ProtocolStep { block })
        })
        .collect();

    let mut out = RunOutput::default();
    let mut cl = Cognition::new(Arc::clone(&bench.catalog), tag.mode, cfg.train_config(tag.train_seed(cfg, CL_ARM)));
    cl.seed_cases(&pretrain, 0.0, &mut SplitMix64::new(0))?;
    let protocol = Protocol {
        steps: steps.iter().map(|s| s.1.clone()).collect(),
        mislabel_ratio: 0.0,
        offline_passes: cfg.offline_passes,
        offline_budget: cfg.offline_budget,
        noise_seed: 0,
    };
    for (m, (dataset, step)) in run_protocol(&protocol, &mut cl)?.into_iter().zip(&steps) {
        out.push(tag, CL_ARM, dataset, &step.block, m);
    }
    for (arm, baseline) in mtl_baselines(cfg, bench, tag, before, Some(Priority::TimeFirst))? {
        for (i, (dataset, step)) in steps.iter().enumerate() {
            out.push(tag, &arm, dataset, &step.block, baseline.test(i + 1, &step.block)?);
        }
    }
    Ok(out)
}
