use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::features::{meta_features_from_profile, MetaFeatures, TaskRequirement};
use crate::pool::{Environment, GridPoint, LearningResult, Sweep};
use crate::workload::SignalDataset;

/// An environment with its features extracted and every grid point run once.
#[derive(Debug)]
pub struct Prepared {
    pub env: Environment,
    pub sweep: Sweep,
}

impl Prepared {
    pub fn new(dataset: SignalDataset, sweep_seed: u64) -> Result<Self> {
        let env = Environment::new(Arc::new(dataset))?;
        let sweep = Sweep::run(&env, sweep_seed)?;
        Ok(Self { env, sweep })
    }

    pub fn features(&self, x: &TaskRequirement) -> MetaFeatures {
        meta_features_from_profile(&self.env.profile, x)
    }

    pub fn evaluate(&self, point: &GridPoint, x: &TaskRequirement) -> LearningResult {
        self.sweep.result(point, x)
    }

    pub fn oracle(&self, x: &TaskRequirement) -> GridPoint {
        self.sweep.oracle(x)
    }

    /// Cheapest and most expensive grid point on this environment.
    pub fn cost_range(&self) -> (f64, f64) {
        let costs = self.sweep.runs().iter().map(|r| r.cost);
        let lo = costs.clone().fold(f64::INFINITY, f64::min);
        (lo, costs.fold(0.0, f64::max))
    }
}

/// Prepared environments by dataset id.
///
/// Training runs are pure given their seed, so one sweep per environment
/// answers every evaluation and oracle query an experiment makes.
#[derive(Debug, Default, Clone)]
pub struct Catalog {
    entries: BTreeMap<String, Arc<Prepared>>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prepared: Prepared) -> Arc<Prepared> {
        let p = Arc::new(prepared);
        self.entries.insert(p.env.id().to_string(), Arc::clone(&p));
        p
    }

    pub fn get(&self, id: &str) -> Result<&Arc<Prepared>> {
        self.entries.get(id).ok_or_else(|| Error::Config(format!("dataset {id:?} is not in the catalog")))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
