//! Per-frame features for the classifier pool.
//!
//! Cumulants are computed exactly from sample moments through the
//! moment-to-cumulant partition formula, so any order and conjugation
//! pattern is available without hand-expanded identities.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workload::{Frame, FRAME_LEN};

pub const SIGNAL_FEATURE_COUNT: usize = 12;

pub const SIGNAL_FEATURE_NAMES: [&str; SIGNAL_FEATURE_COUNT] = [
    "c20",
    "c21",
    "c40",
    "c41",
    "c42",
    "c63",
    "amp_mean",
    "amp_var",
    "phase_var",
    "spec_symmetry",
    "spec_peak",
    "freq_zcr",
];

const DEGENERATE_POWER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalFeatures(pub [f64; SIGNAL_FEATURE_COUNT]);

impl SignalFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn c40(&self) -> f64 {
        self.0[2]
    }
}

/// Reusable extractor holding the FFT plan.
#[derive(Clone)]
pub struct SignalFeatureExtractor {
    fft: Arc<dyn Fft<f64>>,
}

impl Default for SignalFeatureExtractor {
    fn default() -> Self {
        Self { fft: FftPlanner::new().plan_fft_forward(FRAME_LEN) }
    }
}

impl SignalFeatureExtractor {
    pub fn extract(&self, frame: &Frame) -> Result<SignalFeatures> {
        self.extract_samples(&frame.iq)
    }

    pub fn extract_samples(&self, iq: &[Complex64]) -> Result<SignalFeatures> {
        let n = iq.len() as f64;
        let power = iq.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        if !(power >= DEGENERATE_POWER) {
            return Err(Error::DegenerateFrame(power));
        }

        let mean = iq.iter().sum::<Complex64>() / n;
        let centered: Vec<Complex64> = iq.iter().map(|z| z - mean).collect();
        let moments = Moments::new(&centered);
        let c21 = moments.cumulant(1, 1).re.max(DEGENERATE_POWER);

        let amp: Vec<f64> = iq.iter().map(|z| z.norm() / power.sqrt()).collect();
        let amp_mean = amp.iter().sum::<f64>() / n;
        let amp_var = amp.iter().map(|a| (a - amp_mean).powi(2)).sum::<f64>() / n;

        let mut spectrum = iq.to_vec();
        if spectrum.len() == FRAME_LEN {
            self.fft.process(&mut spectrum);
        } else {
            FftPlanner::new().plan_fft_forward(spectrum.len()).process(&mut spectrum);
        }
        let psd: Vec<f64> = spectrum.iter().map(|z| z.norm_sqr()).collect();
        let half = psd.len() / 2;
        let pos: f64 = psd[1..half].iter().sum();
        let neg: f64 = psd[half + 1..].iter().sum();
        let total: f64 = psd.iter().sum();
        let symmetry = if pos + neg > 0.0 { (pos - neg) / (pos + neg) } else { 0.0 };
        let peak = psd.iter().cloned().fold(0.0, f64::max) / total;

        Ok(SignalFeatures([
            moments.cumulant(2, 0).norm() / c21,
            1.0 / (amp_mean * amp_mean),
            moments.cumulant(4, 0).norm() / (c21 * c21),
            moments.cumulant(3, 1).norm() / (c21 * c21),
            moments.cumulant(2, 2).norm() / (c21 * c21),
            moments.cumulant(3, 3).norm() / (c21 * c21 * c21),
            amp_mean,
            amp_var,
            nonlinear_phase_variance(iq),
            symmetry,
            peak,
            frequency_zero_crossing_rate(iq),
        ]))
    }
}

pub fn signal_features(frame: &Frame) -> Result<SignalFeatures> {
    SignalFeatureExtractor::default().extract(frame)
}

/// Sample moments `E[x^p conj(x)^q]` for `p + q <= 6`.
pub struct Moments {
    m: [[Complex64; 7]; 7],
}

impl Moments {
    pub fn new(x: &[Complex64]) -> Self {
        let mut m = [[Complex64::default(); 7]; 7];
        let n = x.len() as f64;
        for z in x {
            let zc = z.conj();
            let mut pz = Complex64::new(1.0, 0.0);
            for p in 0..=6 {
                let mut term = pz;
                for q in 0..=(6 - p) {
                    m[p][q] += term;
                    term *= zc;
                }
                pz *= z;
            }
        }
        for row in &mut m {
            for v in row.iter_mut() {
                *v /= n;
            }
        }
        Self { m }
    }

    pub fn moment(&self, p: usize, q: usize) -> Complex64 {
        self.m[p][q]
    }

    /// Joint cumulant of `p` copies of x and `q` copies of conj(x).
    pub fn cumulant(&self, p: usize, q: usize) -> Complex64 {
        let order = p + q;
        assert!((1..=6).contains(&order));
        let conj: Vec<bool> = (0..order).map(|i| i >= p).collect();
        let mut total = Complex64::default();
        let mut blocks = vec![0usize; order];
        for_each_partition(order, &mut blocks, 0, 0, &mut |assign, nblocks| {
            let mut prod = Complex64::new(1.0, 0.0);
            for b in 0..nblocks {
                let (mut bp, mut bq) = (0, 0);
                for (i, &blk) in assign.iter().enumerate() {
                    if blk == b {
                        if conj[i] {
                            bq += 1;
                        } else {
                            bp += 1;
                        }
                    }
                }
                prod *= self.m[bp][bq];
            }
            let k = nblocks as i32 - 1;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            total += prod * (sign * factorial(k as u32));
        });
        total
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Enumerates set partitions as restricted growth strings.
fn for_each_partition(
    n: usize,
    assign: &mut Vec<usize>,
    i: usize,
    used: usize,
    f: &mut dyn FnMut(&[usize], usize),
) {
    if i == n {
        f(assign, used);
        return;
    }
    for b in 0..=used {
        assign[i] = b;
        for_each_partition(n, assign, i + 1, used.max(b + 1), f);
    }
}

/// Variance of the unwrapped phase after removing its least-squares linear trend.
fn nonlinear_phase_variance(iq: &[Complex64]) -> f64 {
    let mut phase = Vec::with_capacity(iq.len());
    let mut acc = iq[0].arg();
    phase.push(acc);
    for w in iq.windows(2) {
        acc += (w[1] * w[0].conj()).arg();
        phase.push(acc);
    }
    let n = phase.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let p_mean = phase.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, p) in phase.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sxy += dt * (p - p_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    phase
        .iter()
        .enumerate()
        .map(|(i, p)| (p - p_mean - slope * (i as f64 - t_mean)).powi(2))
        .sum::<f64>()
        / n
}

fn frequency_zero_crossing_rate(iq: &[Complex64]) -> f64 {
    let freq: Vec<f64> = iq.windows(2).map(|w| (w[1] * w[0].conj()).arg()).collect();
    let mean = freq.iter().sum::<f64>() / freq.len() as f64;
    let crossings = freq
        .windows(2)
        .filter(|w| (w[0] - mean).signum() != (w[1] - mean).signum())
        .count();
    crossings as f64 / (freq.len() - 1) as f64
}
