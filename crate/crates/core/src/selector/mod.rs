//! The cognitive-control network mapping meta-features to an algorithm or
//! a joint grid point, and the frozen meta-learning baseline built on it.

mod net;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{MetaFeatures, META_FEATURE_COUNT};
use crate::memory::{CaseBase, CognitiveCase};
use crate::pool::{GridPoint, GRID_SIZE};
use crate::rng::SplitMix64;

pub use net::{softmax_in_place, Params, SelectionMode, HIDDEN_UNITS, WEIGHTS_VERSION};
use net::WeightsFile;

pub const FD_STEP: f64 = 1e-3;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, epochs: 2000, seed: 0 }
    }
}

/// A chosen grid point and the network's probability for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub point: GridPoint,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorNet {
    pub mode: SelectionMode,
    pub config: TrainConfig,
    pub params: Params,
}

pub type Example = ([f64; META_FEATURE_COUNT], usize);

impl SelectorNet {
    /// An untrained net with the deterministic initial weights of `config.seed`.
    pub fn init(mode: SelectionMode, config: TrainConfig) -> Self {
        let mut rng = SplitMix64::derive(config.seed, 0x5e1ec7);
        Self { mode, config, params: Params::uniform(mode.outputs(), &mut rng) }
    }

    pub fn from_params(mode: SelectionMode, params: Params) -> Result<Self> {
        if params.outputs() != mode.outputs() {
            return Err(Error::Format(format!("{} outputs for mode {mode:?}", params.outputs())));
        }
        Ok(Self { mode, config: TrainConfig::default(), params })
    }

    pub fn probabilities(&self, f: &MetaFeatures) -> Vec<f64> {
        self.params.probabilities(&f.0)
    }

    /// Argmax class; ties go to the lowest index.
    pub fn select(&self, f: &MetaFeatures) -> Selection {
        let probs = self.probabilities(f);
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate().skip(1) {
            if p > probs[best] {
                best = i;
            }
        }
        Selection { point: self.mode.point_of(best), confidence: probs[best] }
    }

    /// Every grid point in descending confidence. Under algorithm selection a
    /// point inherits its algorithm's probability; ties keep grid order.
    pub fn ranking(&self, f: &MetaFeatures) -> Vec<Selection> {
        let probs = self.probabilities(f);
        let mut all: Vec<Selection> = (0..GRID_SIZE)
            .map(|i| {
                let point = GridPoint::from_index(i).expect("index within grid");
                Selection { point, confidence: probs[self.mode.class_of(&point)] }
            })
            .collect();
        all.sort_by(|a, b| {
            b.confidence
                .partial_cmp(&a.confidence)
                .unwrap_or(Ordering::Equal)
                .then(a.point.index().cmp(&b.point.index()))
        });
        all
    }

    pub fn examples<'a>(&self, cases: impl IntoIterator<Item = &'a CognitiveCase>) -> Vec<Example> {
        examples(self.mode, cases)
    }

    /// Full-batch Adam on mean cross-entropy. A step that raises the loss
    /// is undone, the learning rate halved and the moment estimates reset,
    /// so the recorded loss curve never increases. Returns the loss after every epoch.
    pub fn fit(&mut self, data: &[Example]) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::EmptyCaseBase);
        }
        let k = self.mode.outputs();
        let mut grad = Params::zeros(k);
        let mut loss = self.params.loss_and_grad(data, &mut grad);
        let (mut m, mut v) = (Params::zeros(k), Params::zeros(k));
        let (mut trial, mut trial_m, mut trial_v) = (self.params.clone(), m.clone(), v.clone());
        let mut trial_grad = grad.clone();
        let mut lr = self.config.learning_rate;
        let mut step = 0;
        let mut curve = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            let t = step + 1;
            let c1 = 1.0 - ADAM_BETA1.powi(t);
            let c2 = 1.0 - ADAM_BETA2.powi(t);
            let state = m.iter().zip(v.iter()).zip(grad.iter().zip(self.params.iter()));
            let out = trial.iter_mut().zip(trial_m.iter_mut().zip(trial_v.iter_mut()));
            for ((w, (tm, tv)), ((mi, vi), (g, w0))) in out.zip(state) {
                *tm = ADAM_BETA1 * mi + (1.0 - ADAM_BETA1) * g;
                *tv = ADAM_BETA2 * vi + (1.0 - ADAM_BETA2) * g * g;
                *w = w0 - lr * (*tm / c1) / ((*tv / c2).sqrt() + ADAM_EPS);
            }
            let trial_loss = trial.loss_and_grad(data, &mut trial_grad);
            if trial_loss <= loss {
                std::mem::swap(&mut self.params, &mut trial);
                std::mem::swap(&mut m, &mut trial_m);
                std::mem::swap(&mut v, &mut trial_v);
                std::mem::swap(&mut grad, &mut trial_grad);
                loss = trial_loss;
                step = t;
            } else {
                // Momentum can point uphill; restart from the plain gradient.
                lr *= 0.5;
                m.iter_mut().chain(v.iter_mut()).for_each(|x| *x = 0.0);
                step = 0;
            }
            curve.push(loss);
        }
        Ok(curve)
    }

    pub fn loss(&self, data: &[Example]) -> f64 {
        let mut grad = Params::zeros(self.mode.outputs());
        self.params.loss_and_grad(data, &mut grad)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = WeightsFile {
            version: WEIGHTS_VERSION,
            mode: self.mode,
            dims: [META_FEATURE_COUNT, HIDDEN_UNITS, self.mode.outputs()],
            config: self.config,
            params: self.params.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: WeightsFile<TrainConfig> = serde_json::from_str(s)?;
        file.check()?;
        Ok(Self { mode: file.mode, config: file.config, params: file.params })
    }
}

pub fn examples<'a>(mode: SelectionMode, cases: impl IntoIterator<Item = &'a CognitiveCase>) -> Vec<Example> {
    cases.into_iter().map(|c| (c.features.0, mode.class_of(&c.label))).collect()
}

/// Trains a fresh net from scratch on every case in `cases`.
pub fn train_selector(cases: &CaseBase, mode: SelectionMode, config: TrainConfig) -> Result<SelectorNet> {
    let mut net = SelectorNet::init(mode, config);
    net.fit(&examples(mode, cases.cases()))?;
    Ok(net)
}

/// A selector trained once and then fixed. It exposes queries only.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenSelector {
    net: SelectorNet,
    examples: usize,
}

impl FrozenSelector {
    pub fn net(&self) -> &SelectorNet {
        &self.net
    }

    /// Number of meta examples it was trained on.
    pub fn examples(&self) -> usize {
        self.examples
    }

    pub fn select(&self, f: &MetaFeatures) -> Selection {
        self.net.select(f)
    }

    pub fn probabilities(&self, f: &MetaFeatures) -> Vec<f64> {
        self.net.probabilities(f)
    }
}

pub fn pretrain_mtl(meta_examples: &CaseBase, mode: SelectionMode, config: TrainConfig) -> Result<FrozenSelector> {
    Ok(FrozenSelector { net: train_selector(meta_examples, mode, config)?, examples: meta_examples.len() })
}

/// Largest relative difference between the analytic gradient and
/// Richardson-extrapolated central differences, over every parameter.
pub fn gradient_check(net: &SelectorNet, data: &[Example]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyCaseBase);
    }
    let k = net.mode.outputs();
    let mut analytic = Params::zeros(k);
    net.params.loss_and_grad(data, &mut analytic);
    let mut scratch = Params::zeros(k);
    let mut probe = net.params.clone();
    let mut worst: f64 = 0.0;
    for (i, g) in analytic.iter().enumerate() {
        let orig = *probe.iter().nth(i).expect("index within params");
        let mut central = |h: f64| {
            set_nth(&mut probe, i, orig + h);
            let up = probe.loss_and_grad(data, &mut scratch);
            set_nth(&mut probe, i, orig - h);
            let down = probe.loss_and_grad(data, &mut scratch);
            set_nth(&mut probe, i, orig);
            (up - down) / (2.0 * h)
        };
        let numeric = (4.0 * central(FD_STEP / 2.0) - central(FD_STEP)) / 3.0;
        let denom = g.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((g - numeric).abs() / denom);
    }
    Ok(worst)
}

fn set_nth(p: &mut Params, i: usize, v: f64) {
    *p.iter_mut().nth(i).expect("index within params") = v;
}
