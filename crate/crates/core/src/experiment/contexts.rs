use std::collections::BTreeMap;
use std::sync::Arc;

use super::parallel::parallel_map;
use super::run::Experiment;
use super::ExperimentConfig;
use crate::cognition::{Catalog, Context, Prepared};
use crate::error::{Error, Result};
use crate::features::{Priority, TaskRequirement};
use crate::rng::{derive_seed_str, SplitMix64};
use crate::workload::{build_dataset, builtin_dataset_specs};

/// Budgets are drawn this far beyond a variant's cheapest and dearest grid
/// point, so some tasks are infeasible and some are unconstrained.
pub const BUDGET_SPAN: (f64, f64) = (0.8, 1.25);
pub const REQUIRED_ACCURACY: (f64, f64) = (0.5, 0.95);

/// The prepared environments an experiment draws from, grouped by the
/// dataset they were cut from.
#[derive(Debug, Clone)]
pub struct Workbench {
    pub catalog: Arc<Catalog>,
    families: BTreeMap<String, Family>,
}

/// Train-size variants of one dataset with their budget ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub dataset: String,
    pub variants: Vec<(String, (f64, f64))>,
}

/// `{dataset}-n{per_class}` for each distinct size the fractions give.
pub fn variant_sizes(dataset: &str, samples_per_class: usize, fractions: &[f64]) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = Vec::new();
    for f in fractions {
        let n = ((samples_per_class as f64 * f).round() as usize).max(1);
        if !out.iter().any(|(_, m)| *m == n) {
            out.push((format!("{dataset}-n{n}"), n));
        }
    }
    out
}

impl Workbench {
    /// Builds and sweeps every variant of every dataset `cfg` mentions.
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let mut wanted = cfg.datasets.clone();
        wanted.extend([cfg.dynamic.initial_dataset.clone(), cfg.dynamic.new_dataset.clone()]);
        Self::build_datasets(cfg, &wanted)
    }

    /// Builds only what `kind` draws from.
    pub fn for_experiment(kind: Experiment, cfg: &ExperimentConfig) -> Result<Self> {
        match kind {
            Experiment::Dynamic => {
                Self::build_datasets(cfg, &[cfg.dynamic.initial_dataset.clone(), cfg.dynamic.new_dataset.clone()])
            }
            _ => Self::build_datasets(cfg, &cfg.datasets),
        }
    }

    pub fn build_datasets(cfg: &ExperimentConfig, wanted: &[String]) -> Result<Self> {
        let specs: Vec<_> = builtin_dataset_specs(cfg.master_seed).into_iter().filter(|(id, _)| wanted.contains(id)).collect();

        let mut jobs = Vec::new();
        for (id, spec) in &specs {
            for (variant, n) in variant_sizes(id, spec.samples_per_class, &cfg.size_fractions) {
                jobs.push((id.clone(), variant, n, spec.clone()));
            }
        }
        let prepared = parallel_map(&jobs, cfg.threads, |(_, variant, n, spec)| {
            let full = build_dataset(variant.clone(), spec.clone())?;
            let dataset = if *n == spec.samples_per_class { full } else { full.truncated(variant.clone(), *n)? };
            Prepared::new(dataset, derive_seed_str(cfg.master_seed, variant))
        });

        let mut catalog = Catalog::new();
        let mut families: BTreeMap<String, Family> = BTreeMap::new();
        for ((id, variant, _, _), p) in jobs.iter().zip(prepared) {
            let p = catalog.insert(p?);
            families
                .entry(id.clone())
                .or_insert_with(|| Family { dataset: id.clone(), variants: Vec::new() })
                .variants
                .push((variant.clone(), p.cost_range()));
        }
        Ok(Self { catalog: Arc::new(catalog), families })
    }

    pub fn family(&self, dataset: &str) -> Result<&Family> {
        self.families.get(dataset).ok_or_else(|| Error::Config(format!("dataset {dataset:?} was not prepared")))
    }
}

impl Family {
    /// One context: a uniformly drawn variant, a log-uniform budget around
    /// its cost range and a uniform accuracy target. With `priority` unset
    /// the priority is TimeFirst with probability `time_first_share`.
    pub fn draw(&self, rng: &mut SplitMix64, priority: Option<Priority>, time_first_share: f64) -> Context {
        let (id, (lo, hi)) = &self.variants[rng.below(self.variants.len())];
        let budget = rng.uniform((lo * BUDGET_SPAN.0).ln(), (hi * BUDGET_SPAN.1).ln()).exp();
        let required_accuracy = rng.uniform(REQUIRED_ACCURACY.0, REQUIRED_ACCURACY.1);
        let priority = priority.unwrap_or_else(|| {
            if rng.bernoulli(time_first_share) {
                Priority::TimeFirst
            } else {
                Priority::AccuracyFirst
            }
        });
        Context { dataset_id: id.clone(), requirement: TaskRequirement { required_accuracy, time_budget: budget, priority } }
    }

    pub fn block(&self, rng: &mut SplitMix64, n: usize, priority: Option<Priority>, time_first_share: f64) -> Vec<Context> {
        (0..n).map(|_| self.draw(rng, priority, time_first_share)).collect()
    }
}
