use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::META_FEATURE_COUNT;
use crate::pool::{AlgorithmId, GridPoint, GRID_SIZE};
use crate::rng::SplitMix64;

pub const HIDDEN_UNITS: usize = 32;
pub const WEIGHTS_VERSION: u32 = 1;
const INIT_SCALE: f64 = 0.1;

/// What the network's output layer ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SelectionMode {
    /// One output per algorithm; the hyper-parameters are the algorithm's first grid point.
    #[serde(rename = "algorithm")]
    AlgorithmSelect,
    /// One output per joint grid point.
    #[serde(rename = "hyperparameter")]
    HpSelect,
}

impl SelectionMode {
    pub const ALL: [SelectionMode; 2] = [SelectionMode::AlgorithmSelect, SelectionMode::HpSelect];

    pub fn outputs(self) -> usize {
        match self {
            Self::AlgorithmSelect => AlgorithmId::ALL.len(),
            Self::HpSelect => GRID_SIZE,
        }
    }

    /// Output class a grid label trains.
    pub fn class_of(self, label: &GridPoint) -> usize {
        match self {
            Self::AlgorithmSelect => label.algorithm.index(),
            Self::HpSelect => label.index(),
        }
    }

    /// Grid point an output class stands for.
    pub fn point_of(self, class: usize) -> GridPoint {
        match self {
            Self::AlgorithmSelect => GridPoint::default_for(AlgorithmId::ALL[class]),
            Self::HpSelect => list_point(class),
        }
    }

    /// Whether a selection counts as a match for an oracle label.
    pub fn matches(self, selected: &GridPoint, oracle: &GridPoint) -> bool {
        self.class_of(selected) == self.class_of(oracle)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::AlgorithmSelect => "algorithm",
            Self::HpSelect => "hyperparameter",
        }
    }
}

fn list_point(i: usize) -> GridPoint {
    GridPoint::from_index(i).expect("class index within grid")
}

/// Parameters of an 8 → 32 → K tanh/softmax network, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Params {
    pub fn zeros(outputs: usize) -> Self {
        Self {
            w1: vec![0.0; HIDDEN_UNITS * META_FEATURE_COUNT],
            b1: vec![0.0; HIDDEN_UNITS],
            w2: vec![0.0; outputs * HIDDEN_UNITS],
            b2: vec![0.0; outputs],
        }
    }

    pub fn uniform(outputs: usize, rng: &mut SplitMix64) -> Self {
        let mut p = Self::zeros(outputs);
        for v in p.iter_mut() {
            *v = rng.uniform(-INIT_SCALE, INIT_SCALE);
        }
        p
    }

    pub fn outputs(&self) -> usize {
        self.b2.len()
    }

    pub fn len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1.iter_mut().chain(&mut self.b1).chain(&mut self.w2).chain(&mut self.b2)
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    fn check_shape(&self) -> Result<()> {
        let k = self.outputs();
        let ok = self.w1.len() == HIDDEN_UNITS * META_FEATURE_COUNT
            && self.b1.len() == HIDDEN_UNITS
            && self.w2.len() == k * HIDDEN_UNITS
            && k > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Format("selector weight arrays do not match 8-32-K layout".into()))
        }
    }

    /// Hidden activations and output logits for one input.
    pub fn forward(&self, x: &[f64; META_FEATURE_COUNT], hidden: &mut [f64; HIDDEN_UNITS], logits: &mut [f64]) {
        for ((h, row), b) in hidden.iter_mut().zip(self.w1.chunks_exact(META_FEATURE_COUNT)).zip(&self.b1) {
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
            *h = tanh(z);
        }
        for ((l, row), b) in logits.iter_mut().zip(self.w2.chunks_exact(HIDDEN_UNITS)).zip(&self.b2) {
            *l = row.iter().zip(hidden.iter()).map(|(w, h)| w * h).sum::<f64>() + b;
        }
    }

    pub fn probabilities(&self, x: &[f64; META_FEATURE_COUNT]) -> Vec<f64> {
        let mut hidden = [0.0; HIDDEN_UNITS];
        let mut out = vec![0.0; self.outputs()];
        self.forward(x, &mut hidden, &mut out);
        softmax_in_place(&mut out);
        out
    }

    /// Mean cross-entropy over `(input, class)` pairs and its gradient.
    pub fn loss_and_grad(&self, data: &[([f64; META_FEATURE_COUNT], usize)], grad: &mut Params) -> f64 {
        for g in grad.iter_mut() {
            *g = 0.0;
        }
        let k = self.outputs();
        let scale = 1.0 / data.len() as f64;
        let mut hidden = [0.0; HIDDEN_UNITS];
        let mut delta_h = [0.0; HIDDEN_UNITS];
        let mut out = vec![0.0; k];
        let mut loss = 0.0;
        for (x, y) in data {
            self.forward(x, &mut hidden, &mut out);
            let log_z = log_sum_exp(&out);
            loss -= out[*y] - log_z;
            for o in out.iter_mut() {
                *o = (*o - log_z).exp() * scale;
            }
            out[*y] -= scale;

            delta_h.fill(0.0);
            let rows = self.w2.chunks_exact(HIDDEN_UNITS).zip(grad.w2.chunks_exact_mut(HIDDEN_UNITS));
            for ((&d, gb), (w_row, g_row)) in out.iter().zip(grad.b2.iter_mut()).zip(rows) {
                *gb += d;
                for (((g, w), h), dh) in g_row.iter_mut().zip(w_row).zip(&hidden).zip(delta_h.iter_mut()) {
                    *g += d * h;
                    *dh += d * w;
                }
            }
            let rows = grad.w1.chunks_exact_mut(META_FEATURE_COUNT);
            for (((dh, h), gb), g_row) in delta_h.iter().zip(&hidden).zip(grad.b1.iter_mut()).zip(rows) {
                let d = dh * (1.0 - h * h);
                *gb += d;
                for (g, v) in g_row.iter_mut().zip(x) {
                    *g += d * v;
                }
            }
        }
        loss * scale
    }
}

/// `tanh` through a single `exp`: about twice as fast as `f64::tanh` and
/// within 1e-15 of it in absolute terms.
fn tanh(z: f64) -> f64 {
    1.0 - 2.0 / ((2.0 * z).exp() + 1.0)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn softmax_in_place(v: &mut [f64]) {
    let lse = log_sum_exp(v);
    for x in v.iter_mut() {
        *x = (*x - lse).exp();
    }
}

/// Serialized form: layer dims plus row-major arrays.
#[derive(Serialize, Deserialize)]
pub(super) struct WeightsFile<C> {
    pub version: u32,
    pub mode: SelectionMode,
    pub dims: [usize; 3],
    pub config: C,
    #[serde(flatten)]
    pub params: Params,
}

impl<C> WeightsFile<C> {
    pub fn check(&self) -> Result<()> {
        if self.version != WEIGHTS_VERSION {
            return Err(Error::Format(format!("unsupported selector weights version {}", self.version)));
        }
        self.params.check_shape()?;
        let expected = [META_FEATURE_COUNT, HIDDEN_UNITS, self.mode.outputs()];
        if self.dims != expected || self.params.outputs() != self.mode.outputs() {
            return Err(Error::Format(format!("selector dims {:?} do not match mode {:?}", self.dims, self.mode)));
        }
        if !self.params.is_finite() {
            return Err(Error::Format("selector weights are not finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_tanh_tracks_std() {
        for i in -4000..=4000 {
            let z = i as f64 * 0.005;
            assert!((tanh(z) - z.tanh()).abs() < 1e-15, "{z}");
        }
        assert_eq!(tanh(1e3), 1.0);
        assert_eq!(tanh(-1e3), -1.0);
    }
}
