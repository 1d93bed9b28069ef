//! Meta-features of an (environment, task) pair.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::signal::{SignalFeatureExtractor, SignalFeatures, SIGNAL_FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::workload::{Frame, ModClass, SignalDataset};

pub const META_FEATURE_COUNT: usize = 8;

pub const META_FEATURE_NAMES: [&str; META_FEATURE_COUNT] = [
    "snr",
    "train_size",
    "class_count",
    "centroid_distance",
    "intra_variance",
    "required_accuracy",
    "time_budget",
    "priority",
];

pub const SNR_RANGE_DB: (f64, f64) = (-20.0, 18.0);
pub const SAMPLE_COUNT_CEILING: f64 = 20_000.0;
/// Budgets are mapped logarithmically over this many decades of cost-units.
pub const BUDGET_DECADES: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Priority {
    AccuracyFirst,
    TimeFirst,
}

impl Priority {
    pub fn flag(self) -> f64 {
        match self {
            Priority::AccuracyFirst => 0.0,
            Priority::TimeFirst => 1.0,
        }
    }

    pub fn from_flag(flag: f64) -> Self {
        if flag >= 0.5 {
            Priority::TimeFirst
        } else {
            Priority::AccuracyFirst
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Priority::AccuracyFirst => "accuracy-first",
            Priority::TimeFirst => "time-first",
        }
    }
}

/// A task: what the recognition run must achieve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskRequirement {
    pub required_accuracy: f64,
    /// In cost-units of the pool's cost model.
    pub time_budget: f64,
    pub priority: Priority,
}

impl TaskRequirement {
    pub fn new(required_accuracy: f64, time_budget: f64, priority: Priority) -> Result<Self> {
        let task = Self { required_accuracy, time_budget, priority };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_budget > 0.0) {
            return Err(Error::Config(format!("time budget must be positive, got {}", self.time_budget)));
        }
        if !(0.0..=1.0).contains(&self.required_accuracy) {
            return Err(Error::Config(format!(
                "required accuracy must lie in [0, 1], got {}",
                self.required_accuracy
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaFeatures(pub [f64; META_FEATURE_COUNT]);

impl MetaFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn priority(&self) -> Priority {
        Priority::from_flag(self.0[7])
    }

    pub fn linf_distance(&self, other: &MetaFeatures) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-frame features of both splits plus dense label indices.
#[derive(Debug, Clone)]
pub struct DatasetFeatures {
    pub num_classes: usize,
    pub train: Vec<SignalFeatures>,
    pub train_labels: Vec<usize>,
    pub test: Vec<SignalFeatures>,
    pub test_labels: Vec<usize>,
}

impl DatasetFeatures {
    pub fn extract(e: &SignalDataset) -> Result<Self> {
        if e.train.is_empty() || e.test.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let ex = SignalFeatureExtractor::default();
        let index = |c: ModClass| e.class_index(c).ok_or_else(|| Error::Format(format!("{c} not in class set")));
        let split = |frames: &[Frame]| -> Result<(Vec<SignalFeatures>, Vec<usize>)> {
            let mut feats = Vec::with_capacity(frames.len());
            let mut labels = Vec::with_capacity(frames.len());
            for f in frames {
                feats.push(ex.extract(f)?);
                labels.push(index(f.label)?);
            }
            Ok((feats, labels))
        };
        let (train, train_labels) = split(&e.train)?;
        let (test, test_labels) = split(&e.test)?;
        Ok(Self { num_classes: e.num_classes(), train, train_labels, test, test_labels })
    }
}

/// The environment half of the meta-features, computed once per dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentProfile {
    pub snr_db_estimate: f64,
    pub train_size: usize,
    pub num_classes: usize,
    pub centroid_distance: f64,
    pub intra_variance: f64,
}

impl EnvironmentProfile {
    pub fn new(e: &SignalDataset, feats: &DatasetFeatures) -> Result<Self> {
        if e.train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (centroid_distance, intra_variance) = class_geometry(feats);
        Ok(Self {
            snr_db_estimate: estimate_snr_db(&e.train),
            train_size: e.train.len(),
            num_classes: e.num_classes(),
            centroid_distance,
            intra_variance,
        })
    }
}

/// SNR estimate from second-order moments pooled over `frames`.
///
/// White noise contributes only to the lag-0 autocorrelation, while the
/// oversampled signal's autocorrelation is smooth and even in the lag. The
/// signal power is the lag-0 value of the quadratic-in-lag² interpolant
/// through lags 1, 2, 3: `S = 1.5 R1 - 0.6 R2 + 0.1 R3`. Noise is `R0 - S`.
pub fn estimate_snr_db(frames: &[Frame]) -> f64 {
    let mut r = [0.0f64; 4];
    for f in frames {
        for (lag, acc) in r.iter_mut().enumerate() {
            let n = f.iq.len() - lag;
            let s: Complex64 = (0..n).map(|i| f.iq[i + lag] * f.iq[i].conj()).sum();
            *acc += s.re / n as f64;
        }
    }
    let signal = 1.5 * r[1] - 0.6 * r[2] + 0.1 * r[3];
    let noise = r[0] - signal;
    const CAP_DB: f64 = 60.0;
    if signal <= 0.0 {
        return -CAP_DB;
    }
    if noise <= 0.0 {
        return CAP_DB;
    }
    (10.0 * (signal / noise).log10()).clamp(-CAP_DB, CAP_DB)
}

/// Mean pairwise centroid distance (RMS per standardized dimension) and the
/// mean within-class share of variance.
fn class_geometry(feats: &DatasetFeatures) -> (f64, f64) {
    let n = feats.train.len() as f64;
    let d = SIGNAL_FEATURE_COUNT;
    let mut mean = [0.0; SIGNAL_FEATURE_COUNT];
    for f in &feats.train {
        for j in 0..d {
            mean[j] += f.0[j] / n;
        }
    }
    let mut sd = [0.0; SIGNAL_FEATURE_COUNT];
    for f in &feats.train {
        for j in 0..d {
            sd[j] += (f.0[j] - mean[j]).powi(2) / n;
        }
    }
    let sd: Vec<f64> = sd.iter().map(|v| v.sqrt().max(1e-12)).collect();
    let z = |f: &SignalFeatures, j: usize| (f.0[j] - mean[j]) / sd[j];

    let k = feats.num_classes;
    let mut centroids = vec![[0.0; SIGNAL_FEATURE_COUNT]; k];
    let mut counts = vec![0usize; k];
    for (f, &c) in feats.train.iter().zip(&feats.train_labels) {
        counts[c] += 1;
        for j in 0..d {
            centroids[c][j] += z(f, j);
        }
    }
    for (c, cnt) in centroids.iter_mut().zip(&counts) {
        for v in c.iter_mut() {
            *v /= (*cnt).max(1) as f64;
        }
    }
    let mut within = 0.0;
    for (f, &c) in feats.train.iter().zip(&feats.train_labels) {
        for j in 0..d {
            within += (z(f, j) - centroids[c][j]).powi(2);
        }
    }
    let intra = within / (n * d as f64);

    let (mut dist, mut pairs) = (0.0, 0usize);
    for a in 0..k {
        for b in a + 1..k {
            let sq: f64 = (0..d).map(|j| (centroids[a][j] - centroids[b][j]).powi(2)).sum();
            dist += (sq / d as f64).sqrt();
            pairs += 1;
        }
    }
    let dist = if pairs > 0 { dist / pairs as f64 } else { 0.0 };
    (dist, intra)
}

pub fn normalize_snr(snr_db: f64) -> f64 {
    ((snr_db - SNR_RANGE_DB.0) / (SNR_RANGE_DB.1 - SNR_RANGE_DB.0)).clamp(0.0, 1.0)
}

pub fn normalize_train_size(n: usize) -> f64 {
    ((n.max(1) as f64).log10() / SAMPLE_COUNT_CEILING.log10()).clamp(0.0, 1.0)
}

pub fn normalize_budget(budget: f64) -> f64 {
    (budget.max(1e-300).log10() / BUDGET_DECADES).clamp(0.0, 1.0)
}

pub fn meta_features_from_profile(env: &EnvironmentProfile, x: &TaskRequirement) -> MetaFeatures {
    MetaFeatures([
        normalize_snr(env.snr_db_estimate),
        normalize_train_size(env.train_size),
        env.num_classes as f64 / ModClass::COUNT as f64,
        env.centroid_distance / (1.0 + env.centroid_distance),
        env.intra_variance.clamp(0.0, 1.0),
        x.required_accuracy.clamp(0.0, 1.0),
        normalize_budget(x.time_budget),
        x.priority.flag(),
    ])
}

pub fn meta_features(e: &SignalDataset, x: &TaskRequirement) -> Result<MetaFeatures> {
    let feats = DatasetFeatures::extract(e)?;
    let env = EnvironmentProfile::new(e, &feats)?;
    Ok(meta_features_from_profile(&env, x))
}
