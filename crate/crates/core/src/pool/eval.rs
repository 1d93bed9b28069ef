//! Running grid points, the evaluation value, and the exhaustive oracle.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::classifiers::{knn_predict, DecisionTree, GaussianNb, MlpClassifier, Row, Standardizer};
use super::cost::cost;
use super::grid::{list_grid, GridPoint, HyperParams, GRID_SIZE};
use crate::error::{Error, Result};
use crate::features::{DatasetFeatures, EnvironmentProfile, Priority, TaskRequirement};
use crate::rng::{derive_seed, SplitMix64};
use crate::workload::{ModClass, SignalDataset};

/// A dataset with its features extracted and standardized once.
#[derive(Debug, Clone)]
pub struct Environment {
    pub dataset: Arc<SignalDataset>,
    pub features: DatasetFeatures,
    pub profile: EnvironmentProfile,
    train_rows: Vec<Row>,
    test_rows: Vec<Row>,
}

impl Environment {
    pub fn new(dataset: Arc<SignalDataset>) -> Result<Self> {
        let features = DatasetFeatures::extract(&dataset)?;
        let profile = EnvironmentProfile::new(&dataset, &features)?;
        let raw_train: Vec<Row> = features.train.iter().map(|f| f.0).collect();
        let raw_test: Vec<Row> = features.test.iter().map(|f| f.0).collect();
        let scaler = Standardizer::fit(&raw_train);
        Ok(Self {
            train_rows: scaler.transform(&raw_train),
            test_rows: scaler.transform(&raw_test),
            dataset,
            features,
            profile,
        })
    }

    pub fn id(&self) -> &str {
        &self.dataset.id
    }

    pub fn train_size(&self) -> usize {
        self.dataset.train.len()
    }

    pub fn num_classes(&self) -> usize {
        self.dataset.num_classes()
    }

    pub fn cost_of(&self, point: &GridPoint) -> f64 {
        cost(point, self.train_size(), self.num_classes())
    }
}

/// Outcome of one training run before the task's budget is applied.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub point: GridPoint,
    pub predictions: Arc<[ModClass]>,
    pub accuracy: f64,
    pub cost: f64,
}

/// A run judged against a task: `p` is the accuracy, or zero when the run
/// overshoots the time budget.
#[derive(Debug, Clone)]
pub struct LearningResult {
    pub point: GridPoint,
    pub predictions: Arc<[ModClass]>,
    pub accuracy: f64,
    pub cost: f64,
    pub p: f64,
}

/// The zero rule. `cost == budget` is feasible.
pub fn evaluation_value(accuracy: f64, cost: f64, budget: f64) -> f64 {
    if cost <= budget {
        accuracy
    } else {
        0.0
    }
}

impl RunOutcome {
    pub fn judge(&self, x: &TaskRequirement) -> LearningResult {
        LearningResult {
            point: self.point,
            predictions: Arc::clone(&self.predictions),
            accuracy: self.accuracy,
            cost: self.cost,
            p: evaluation_value(self.accuracy, self.cost, x.time_budget),
        }
    }
}

/// Trains `point` on the environment's training split and classifies its test split.
pub fn train_and_classify(point: GridPoint, env: &Environment, seed: u64) -> Result<RunOutcome> {
    point.validate()?;
    let (train, labels, k) = (&env.train_rows, &env.features.train_labels, env.num_classes());
    if train.is_empty() || env.test_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let test = &env.test_rows;
    let predicted: Vec<usize> = match point.params {
        HyperParams::Knn { k: neighbours } => knn_predict(train, labels, k, neighbours, test),
        HyperParams::Tree { max_depth } => {
            let tree = DecisionTree::fit(train, labels, k, max_depth);
            test.iter().map(|r| tree.predict_one(r)).collect()
        }
        HyperParams::MlpClf { hidden_units, epochs } => {
            let mut rng = SplitMix64::new(seed);
            let net = MlpClassifier::fit(train, labels, k, hidden_units, epochs, &mut rng);
            test.iter().map(|r| net.predict_one(r)).collect()
        }
        HyperParams::Gnb { var_floor } => {
            let nb = GaussianNb::fit(train, labels, k, var_floor);
            test.iter().map(|r| nb.predict_one(r)).collect()
        }
    };
    let truth = &env.features.test_labels;
    let correct = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    let classes = &env.dataset.spec.classes;
    Ok(RunOutcome {
        point,
        predictions: predicted.iter().map(|&c| classes[c]).collect(),
        accuracy: correct as f64 / truth.len() as f64,
        cost: env.cost_of(&point),
    })
}

pub fn evaluate(point: GridPoint, env: &Environment, x: &TaskRequirement, seed: u64) -> Result<LearningResult> {
    Ok(train_and_classify(point, env, seed)?.judge(x))
}

/// Sub-seed used for grid point `index` under a sweep seed.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64)
}

/// Accuracy and cost of every grid point on one environment.
///
/// Runs are pure given their seed, so a sweep computed once answers every
/// later evaluation of the same (environment, point) exactly.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub dataset_id: String,
    pub seed: u64,
    runs: Vec<RunOutcome>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub point: GridPoint,
    pub accuracy: f64,
    pub cost: f64,
    pub p: f64,
}

impl Sweep {
    pub fn run(env: &Environment, seed: u64) -> Result<Self> {
        let runs = list_grid()
            .iter()
            .enumerate()
            .map(|(i, p)| train_and_classify(*p, env, point_seed(seed, i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dataset_id: env.id().to_string(), seed, runs })
    }

    /// A sweep from externally supplied (accuracy, cost) pairs in grid order.
    pub fn from_scores(dataset_id: &str, scores: &[(f64, f64)]) -> Self {
        assert_eq!(scores.len(), GRID_SIZE);
        let runs = list_grid()
            .iter()
            .zip(scores)
            .map(|(p, &(accuracy, cost))| RunOutcome { point: *p, predictions: Arc::from(vec![]), accuracy, cost })
            .collect();
        Self { dataset_id: dataset_id.to_string(), seed: 0, runs }
    }

    pub fn runs(&self) -> &[RunOutcome] {
        &self.runs
    }

    pub fn run_at(&self, index: usize) -> &RunOutcome {
        &self.runs[index]
    }

    pub fn result(&self, point: &GridPoint, x: &TaskRequirement) -> LearningResult {
        self.runs[point.index()].judge(x)
    }

    pub fn rows(&self, x: &TaskRequirement) -> Vec<SweepRow> {
        self.runs
            .iter()
            .enumerate()
            .map(|(index, r)| SweepRow {
                index,
                point: r.point,
                accuracy: r.accuracy,
                cost: r.cost,
                p: evaluation_value(r.accuracy, r.cost, x.time_budget),
            })
            .collect()
    }

    /// The most appropriate point for `x`.
    ///
    /// TimeFirst: highest accuracy among points within budget, or the cheapest
    /// point when none fits. AccuracyFirst: highest accuracy overall. Ties go
    /// to lower cost, then lower grid index.
    pub fn oracle(&self, x: &TaskRequirement) -> GridPoint {
        let by_accuracy = |a: &&RunOutcome, b: &&RunOutcome| {
            a.accuracy
                .total_cmp(&b.accuracy)
                .then(b.cost.total_cmp(&a.cost))
                .then(b.point.index().cmp(&a.point.index()))
        };
        let chosen = match x.priority {
            Priority::TimeFirst => {
                let feasible = self.runs.iter().filter(|r| r.cost <= x.time_budget);
                match feasible.max_by(by_accuracy) {
                    Some(r) => r,
                    None => self
                        .runs
                        .iter()
                        .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.point.index().cmp(&b.point.index())))
                        .expect("grid is non-empty"),
                }
            }
            Priority::AccuracyFirst => self.runs.iter().max_by(by_accuracy).expect("grid is non-empty"),
        };
        chosen.point
    }
}

pub fn oracle_label(env: &Environment, x: &TaskRequirement, seed: u64) -> Result<GridPoint> {
    Ok(Sweep::run(env, seed)?.oracle(x))
}
