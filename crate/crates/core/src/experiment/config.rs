use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selector::{SelectionMode, TrainConfig};
use crate::workload::builtin_dataset_specs;

/// Configuration shared by the three experiment schedules. Every field has a
/// default, so `{}` is a valid config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// Number of independent seeds; results are averaged over them.
    pub seeds: usize,
    pub datasets: Vec<String>,
    pub modes: Vec<SelectionMode>,
    /// Training-set sizes a dataset's contexts draw from, as fractions of
    /// its samples per class.
    pub size_fractions: Vec<f64>,
    /// Case-base growth: the first block seeds the case base, each later
    /// block is the test block absorbed after the previous test.
    pub blocks: Vec<usize>,
    pub mtl_examples: Vec<usize>,
    /// Share of TimeFirst tasks in mixed-priority streams.
    pub time_first_share: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub offline_passes: usize,
    pub offline_budget: usize,
    pub dynamic: DynamicConfig,
    pub noise: NoiseConfig,
    /// Worker threads; 0 uses every available core. Does not affect results.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicConfig {
    pub tests: usize,
    pub block: usize,
    /// Cases the cognitive arm is seeded with before the first test.
    pub pretrain: usize,
    /// First test run under AccuracyFirst.
    pub requirement_change: usize,
    /// First test run on `new_dataset`.
    pub dataset_change: usize,
    pub initial_dataset: String,
    pub new_dataset: String,
    /// Selection accuracy the cognitive arm should regain after the requirement change.
    pub plateau_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub ratios: Vec<f64>,
    /// Block schedule for the noise runs; empty means the shared `blocks`.
    pub blocks: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 42,
            seeds: 10,
            datasets: (1..=5).map(|i| format!("dataset{i}")).collect(),
            modes: SelectionMode::ALL.to_vec(),
            size_fractions: vec![0.1, 0.3, 1.0],
            blocks: vec![10, 10, 30, 40, 200, 200],
            mtl_examples: vec![10, 20, 100],
            time_first_share: 0.5,
            learning_rate: TrainConfig::default().learning_rate,
            epochs: TrainConfig::default().epochs,
            offline_passes: 1,
            offline_budget: 15,
            dynamic: DynamicConfig::default(),
            noise: NoiseConfig::default(),
            threads: 0,
        }
    }
}

impl Default for DynamicConfig {
    fn default() -> Self {
        Self {
            tests: 20,
            block: 10,
            pretrain: 10,
            requirement_change: 3,
            dataset_change: 11,
            initial_dataset: "dataset1".into(),
            new_dataset: "dataset3".into(),
            plateau_target: 0.80,
        }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { ratios: vec![0.1, 0.3], blocks: Vec::new() }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let known: Vec<String> = builtin_dataset_specs(self.master_seed).into_iter().map(|(id, _)| id).collect();
        let d = &self.dynamic;
        for id in self.datasets.iter().chain([&d.initial_dataset, &d.new_dataset]) {
            if !known.contains(id) {
                return bad(format!("unknown dataset {id:?}"));
            }
        }
        if self.seeds == 0 || self.datasets.is_empty() || self.modes.is_empty() {
            return bad("seeds, datasets and modes must be non-empty".into());
        }
        if self.size_fractions.is_empty() || self.size_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return bad("size fractions must lie in (0, 1]".into());
        }
        if self.blocks.len() < 2 || self.blocks.contains(&0) {
            return bad("blocks needs a seed block and at least one test block, all non-empty".into());
        }
        if !self.noise.blocks.is_empty() && (self.noise.blocks.len() < 2 || self.noise.blocks.contains(&0)) {
            return bad("noise blocks must be empty or like blocks".into());
        }
        if self.mtl_examples.contains(&0) {
            return bad("meta example counts must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.time_first_share) {
            return bad("time_first_share must lie in [0, 1]".into());
        }
        if !(self.learning_rate > 0.0) || self.epochs == 0 {
            return bad("learning rate and epochs must be positive".into());
        }
        if d.tests == 0 || d.block == 0 || d.pretrain == 0 {
            return bad("dynamic tests, block and pretrain must be positive".into());
        }
        if !(1..=d.tests).contains(&d.requirement_change) || !(1..=d.tests).contains(&d.dataset_change) {
            return bad("dynamic change points must lie within the schedule".into());
        }
        if self.noise.ratios.iter().any(|r| !(0.0..1.0).contains(r)) {
            return bad("mislabel ratios must lie in [0, 1)".into());
        }
        Ok(())
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig { learning_rate: self.learning_rate, epochs: self.epochs, seed }
    }

    pub fn noise_blocks(&self) -> &[usize] {
        if self.noise.blocks.is_empty() {
            &self.blocks
        } else {
            &self.noise.blocks
        }
    }

    /// CCB size at each test: the running sum of the block schedule.
    pub fn ccb_sizes(blocks: &[usize]) -> Vec<usize> {
        blocks.iter().scan(0, |acc, b| {
            *acc += b;
            Some(*acc)
        })
        .collect()
    }
}
