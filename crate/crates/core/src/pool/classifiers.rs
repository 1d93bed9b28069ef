//! The four modulation classifiers of the pool, all operating on
//! standardized [`SignalFeatures`](crate::features::SignalFeatures).

use crate::features::SIGNAL_FEATURE_COUNT;
use crate::rng::SplitMix64;

pub type Row = [f64; SIGNAL_FEATURE_COUNT];

/// Z-score scaling fitted on the training rows.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Row,
    scale: Row,
}

impl Standardizer {
    pub fn fit(rows: &[Row]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = [0.0; SIGNAL_FEATURE_COUNT];
        for r in rows {
            for j in 0..SIGNAL_FEATURE_COUNT {
                mean[j] += r[j] / n;
            }
        }
        let mut var = [0.0; SIGNAL_FEATURE_COUNT];
        for r in rows {
            for j in 0..SIGNAL_FEATURE_COUNT {
                var[j] += (r[j] - mean[j]).powi(2) / n;
            }
        }
        let scale = var.map(|v| if v > 1e-24 { 1.0 / v.sqrt() } else { 1.0 });
        Self { mean, scale }
    }

    pub fn transform(&self, rows: &[Row]) -> Vec<Row> {
        rows.iter()
            .map(|r| std::array::from_fn(|j| (r[j] - self.mean[j]) * self.scale[j]))
            .collect()
    }
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn sq_dist(a: &Row, b: &Row) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

// ---------------------------------------------------------------------------
// k-nearest neighbours
// ---------------------------------------------------------------------------

/// Majority vote over the `k` nearest training rows (Euclidean). Vote ties go
/// to the tied class whose member appears first in distance order; distance
/// ties keep the lower training index.
pub fn knn_predict(train: &[Row], labels: &[usize], num_classes: usize, k: usize, test: &[Row]) -> Vec<usize> {
    let k = k.min(train.len()).max(1);
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    let mut votes = vec![0usize; num_classes];
    test.iter()
        .map(|q| {
            best.clear();
            for (i, r) in train.iter().enumerate() {
                let d = sq_dist(q, r);
                if best.len() < k || d < best[best.len() - 1].0 {
                    let pos = best.partition_point(|&(bd, _)| bd <= d);
                    best.insert(pos, (d, i));
                    best.truncate(k);
                }
            }
            votes.iter_mut().for_each(|v| *v = 0);
            for &(_, i) in &best {
                votes[labels[i]] += 1;
            }
            let top = *votes.iter().max().unwrap();
            best.iter().map(|&(_, i)| labels[i]).find(|&c| votes[c] == top).unwrap()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Decision tree (CART, Gini impurity)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Node {
    Leaf(usize),
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
}

#[derive(Debug, Clone)]
pub struct DecisionTree {
    root: Node,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

impl DecisionTree {
    pub fn fit(rows: &[Row], labels: &[usize], num_classes: usize, max_depth: usize) -> Self {
        let idx: Vec<usize> = (0..rows.len()).collect();
        Self { root: Self::grow(rows, labels, num_classes, idx, max_depth) }
    }

    fn grow(rows: &[Row], labels: &[usize], k: usize, idx: Vec<usize>, depth: usize) -> Node {
        let mut counts = vec![0usize; k];
        for &i in &idx {
            counts[labels[i]] += 1;
        }
        let n = idx.len();
        let parent = gini(&counts, n);
        if depth == 0 || parent == 0.0 || n < 2 {
            return Node::Leaf(majority(&counts));
        }

        // (impurity, feature, threshold)
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = idx.clone();
        let mut left = vec![0usize; k];
        for f in 0..SIGNAL_FEATURE_COUNT {
            sorted.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
            left.iter_mut().for_each(|c| *c = 0);
            for pos in 0..n - 1 {
                let i = sorted[pos];
                left[labels[i]] += 1;
                let (v, next) = (rows[i][f], rows[sorted[pos + 1]][f]);
                if next <= v {
                    continue;
                }
                let nl = pos + 1;
                let nr = n - nl;
                let right: Vec<usize> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let imp = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                if best.is_none_or(|(b, _, _)| imp < b - 1e-15) {
                    best = Some((imp, f, 0.5 * (v + next)));
                }
            }
        }
        match best {
            Some((imp, feature, threshold)) if imp < parent - 1e-15 => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| rows[i][feature] <= threshold);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(Self::grow(rows, labels, k, l, depth - 1)),
                    right: Box::new(Self::grow(rows, labels, k, r, depth - 1)),
                }
            }
            _ => Node::Leaf(majority(&counts)),
        }
    }

    pub fn predict_one(&self, row: &Row) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(c) => return *c,
                Node::Split { feature, threshold, left, right } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn d(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GaussianNb {
    log_prior: Vec<f64>,
    mean: Vec<Row>,
    var: Vec<Row>,
}

impl GaussianNb {
    /// `var_floor` is added to every per-class variance.
    pub fn fit(rows: &[Row], labels: &[usize], num_classes: usize, var_floor: f64) -> Self {
        let mut count = vec![0usize; num_classes];
        let mut mean = vec![[0.0; SIGNAL_FEATURE_COUNT]; num_classes];
        for (r, &c) in rows.iter().zip(labels) {
            count[c] += 1;
            for j in 0..SIGNAL_FEATURE_COUNT {
                mean[c][j] += r[j];
            }
        }
        for (m, &n) in mean.iter_mut().zip(&count) {
            m.iter_mut().for_each(|v| *v /= n.max(1) as f64);
        }
        let mut var = vec![[0.0; SIGNAL_FEATURE_COUNT]; num_classes];
        for (r, &c) in rows.iter().zip(labels) {
            for j in 0..SIGNAL_FEATURE_COUNT {
                var[c][j] += (r[j] - mean[c][j]).powi(2);
            }
        }
        for (v, &n) in var.iter_mut().zip(&count) {
            v.iter_mut().for_each(|x| *x = *x / n.max(1) as f64 + var_floor);
        }
        let total = rows.len().max(1) as f64;
        let log_prior = count
            .iter()
            .map(|&n| if n > 0 { (n as f64 / total).ln() } else { f64::NEG_INFINITY })
            .collect();
        Self { log_prior, mean, var }
    }

    pub fn predict_one(&self, row: &Row) -> usize {
        let scores: Vec<f64> = (0..self.log_prior.len())
            .map(|c| {
                self.log_prior[c]
                    - 0.5
                        * (0..SIGNAL_FEATURE_COUNT)
                            .map(|j| {
                                let v = self.var[c][j];
                                v.ln() + (row[j] - self.mean[c][j]).powi(2) / v
                            })
                            .sum::<f64>()
            })
            .collect();
        argmax_first(&scores)
    }
}

// ---------------------------------------------------------------------------
// Small feed-forward classifier
// ---------------------------------------------------------------------------

/// One tanh hidden layer, softmax output, mini-batch SGD with momentum.
#[derive(Debug, Clone)]
pub struct MlpClassifier {
    hidden: usize,
    classes: usize,
    w1: Vec<f64>, // hidden x input
    b1: Vec<f64>,
    w2: Vec<f64>, // classes x hidden
    b2: Vec<f64>,
}

const MLP_LEARNING_RATE: f64 = 0.05;
const MLP_MOMENTUM: f64 = 0.9;
const MLP_BATCH: usize = 32;

impl MlpClassifier {
    pub fn fit(
        rows: &[Row],
        labels: &[usize],
        num_classes: usize,
        hidden: usize,
        epochs: usize,
        rng: &mut SplitMix64,
    ) -> Self {
        let d = SIGNAL_FEATURE_COUNT;
        let init = |n: usize, fan_in: usize, rng: &mut SplitMix64| -> Vec<f64> {
            let r = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| rng.uniform(-r, r)).collect()
        };
        let mut net = Self {
            hidden,
            classes: num_classes,
            w1: init(hidden * d, d, rng),
            b1: vec![0.0; hidden],
            w2: init(num_classes * hidden, hidden, rng),
            b2: vec![0.0; num_classes],
        };
        let mut vel = [
            vec![0.0; net.w1.len()],
            vec![0.0; hidden],
            vec![0.0; net.w2.len()],
            vec![0.0; num_classes],
        ];
        let mut grad = vel.clone();
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut h = vec![0.0; hidden];
        let mut out = vec![0.0; num_classes];
        let mut dh = vec![0.0; hidden];
        for _ in 0..epochs {
            rng.shuffle(&mut order);
            for batch in order.chunks(MLP_BATCH) {
                grad.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
                for &i in batch {
                    let x = &rows[i];
                    net.forward(x, &mut h, &mut out);
                    out[labels[i]] -= 1.0; // dL/dz for softmax + cross-entropy
                    dh.iter_mut().for_each(|v| *v = 0.0);
                    for c in 0..num_classes {
                        let g = out[c];
                        grad[3][c] += g;
                        for u in 0..hidden {
                            grad[2][c * hidden + u] += g * h[u];
                            dh[u] += g * net.w2[c * hidden + u];
                        }
                    }
                    for u in 0..hidden {
                        let g = dh[u] * (1.0 - h[u] * h[u]);
                        grad[1][u] += g;
                        for j in 0..d {
                            grad[0][u * d + j] += g * x[j];
                        }
                    }
                }
                let scale = MLP_LEARNING_RATE / batch.len() as f64;
                let params = [&mut net.w1, &mut net.b1, &mut net.w2, &mut net.b2];
                for ((p, v), g) in params.into_iter().zip(vel.iter_mut()).zip(&grad) {
                    for ((w, vi), gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                        *vi = MLP_MOMENTUM * *vi - scale * gi;
                        *w += *vi;
                    }
                }
            }
        }
        net
    }

    /// Hidden activations into `h`, class probabilities into `out`.
    fn forward(&self, x: &Row, h: &mut [f64], out: &mut [f64]) {
        let d = SIGNAL_FEATURE_COUNT;
        for u in 0..self.hidden {
            let w = &self.w1[u * d..(u + 1) * d];
            h[u] = (self.b1[u] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).tanh();
        }
        for c in 0..self.classes {
            let w = &self.w2[c * self.hidden..(c + 1) * self.hidden];
            out[c] = self.b2[c] + w.iter().zip(h.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        let m = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for o in out.iter_mut() {
            *o = (*o - m).exp();
            z += *o;
        }
        out.iter_mut().for_each(|o| *o /= z);
    }

    pub fn predict_one(&self, row: &Row) -> usize {
        let mut h = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.classes];
        self.forward(row, &mut h, &mut out);
        argmax_first(&out)
    }
}
