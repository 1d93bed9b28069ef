//! Baseband waveform synthesis for the eleven modulation classes.
//!
//! Linear digital classes use root-raised-cosine pulses (roll-off 0.35,
//! 8 samples per symbol). GFSK uses a Gaussian frequency pulse with BT = 0.3,
//! CPFSK a rectangular one with modulation index 0.5. Analog classes modulate
//! a band-limited mixture of four tones. Every waveform is scaled to unit
//! average power over the 128 retained samples before AWGN is added.

use rustfft::num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use super::modulation::ModClass;
use crate::rng::SplitMix64;

pub const FRAME_LEN: usize = 128;
pub const SAMPLES_PER_SYMBOL: usize = 8;
pub const RRC_ROLLOFF: f64 = 0.35;
pub const RRC_SPAN_SYMBOLS: usize = 8;
pub const GFSK_BT: f64 = 0.3;
pub const GFSK_INDEX: f64 = 0.35;
pub const CPFSK_INDEX: f64 = 0.5;

const AM_DEPTH: f64 = 0.8;
const FM_DEVIATION: f64 = 0.06;

/// One labeled IQ frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub iq: Vec<Complex64>,
    pub label: ModClass,
    pub snr_db: f64,
}

impl Frame {
    pub fn power(&self) -> f64 {
        mean_power(&self.iq)
    }

    pub fn is_valid(&self) -> bool {
        self.iq.len() == FRAME_LEN && self.iq.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len().max(1) as f64
}

/// Noise power for a unit-power signal at `snr_db`; zero when `snr_db` is +inf.
pub fn noise_power(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Unit-power noiseless waveform of `class`.
pub fn synthesize_waveform(class: ModClass, rng: &mut SplitMix64) -> Vec<Complex64> {
    let mut s = match class {
        ModClass::Bpsk
        | ModClass::Qpsk
        | ModClass::Psk8
        | ModClass::Pam4
        | ModClass::Qam16
        | ModClass::Qam64 => linear(constellation(class), rng),
        ModClass::Gfsk => frequency_shift(GFSK_INDEX, &gaussian_taps(), rng),
        ModClass::Cpfsk => frequency_shift(CPFSK_INDEX, &[1.0], rng),
        ModClass::AmDsb => {
            let m = tone_mixture(rng);
            m.iter().map(|&v| Complex64::new(1.0 + AM_DEPTH * v, 0.0)).collect()
        }
        ModClass::AmSsb => analytic_tone_mixture(rng),
        ModClass::Wbfm => {
            let m = tone_mixture(rng);
            let mut phase = rng.uniform(0.0, TAU);
            m.iter()
                .map(|&v| {
                    phase += TAU * FM_DEVIATION * v;
                    Complex64::from_polar(1.0, phase)
                })
                .collect()
        }
    };
    let scale = 1.0 / mean_power(&s).sqrt();
    for z in &mut s {
        *z *= scale;
    }
    s
}

/// Noiseless waveform and the AWGN realization that [`synthesize_frame`] adds to it.
pub fn synthesize_parts(
    class: ModClass,
    snr_db: f64,
    rng: &mut SplitMix64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let signal = synthesize_waveform(class, rng);
    let sigma = (noise_power(snr_db) / 2.0).sqrt();
    let noise = (0..FRAME_LEN)
        .map(|_| {
            let re = rng.gaussian();
            let im = rng.gaussian();
            Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    (signal, noise)
}

/// A frame of `class` at `snr_db` (pass `f64::INFINITY` to disable noise).
pub fn synthesize_frame(class: ModClass, snr_db: f64, rng: &mut SplitMix64) -> Frame {
    let (signal, noise) = synthesize_parts(class, snr_db, rng);
    let iq = signal.iter().zip(&noise).map(|(s, n)| s + n).collect();
    Frame { iq, label: class, snr_db }
}

/// Unit-average-power constellation points.
pub fn constellation(class: ModClass) -> Vec<Complex64> {
    let pts: Vec<Complex64> = match class {
        ModClass::Bpsk => vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
        ModClass::Qpsk => (0..4)
            .map(|k| Complex64::from_polar(1.0, PI / 4.0 + k as f64 * PI / 2.0))
            .collect(),
        ModClass::Psk8 => (0..8).map(|k| Complex64::from_polar(1.0, k as f64 * PI / 4.0)).collect(),
        ModClass::Pam4 => [-3.0, -1.0, 1.0, 3.0].iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        ModClass::Qam16 => square_qam(4),
        ModClass::Qam64 => square_qam(8),
        other => panic!("{other} has no linear constellation"),
    };
    let scale = 1.0 / mean_power(&pts).sqrt();
    pts.into_iter().map(|z| z * scale).collect()
}

fn square_qam(side: usize) -> Vec<Complex64> {
    let levels: Vec<f64> = (0..side).map(|i| 2.0 * i as f64 - (side as f64 - 1.0)).collect();
    levels
        .iter()
        .flat_map(|&i| levels.iter().map(move |&q| Complex64::new(i, q)))
        .collect()
}

/// Root-raised-cosine taps, normalized to unit energy.
pub fn rrc_taps(rolloff: f64, sps: usize, span: usize) -> Vec<f64> {
    let half = (span * sps / 2) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|n| {
            let t = n as f64 / sps as f64;
            if n == 0 {
                1.0 - rolloff + 4.0 * rolloff / PI
            } else if ((4.0 * rolloff * t).abs() - 1.0).abs() < 1e-12 {
                rolloff * FRAC_1_SQRT_2
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * rolloff)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * rolloff)).cos())
            } else {
                ((PI * t * (1.0 - rolloff)).sin()
                    + 4.0 * rolloff * t * (PI * t * (1.0 + rolloff)).cos())
                    / (PI * t * (1.0 - (4.0 * rolloff * t).powi(2)))
            }
        })
        .collect();
    let energy = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    for h in &mut taps {
        *h /= energy;
    }
    taps
}

/// Gaussian smoothing taps for GFSK (unit DC gain, 4-symbol span).
fn gaussian_taps() -> Vec<f64> {
    let sps = SAMPLES_PER_SYMBOL as f64;
    let half = (2 * SAMPLES_PER_SYMBOL) as isize;
    let k = 2.0 * PI * PI * GFSK_BT * GFSK_BT / std::f64::consts::LN_2;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|n| {
            let t = n as f64 / sps;
            (-k * t * t).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for h in &mut taps {
        *h /= sum;
    }
    taps
}

/// Number of symbols generated so the retained window is free of filter edge effects.
fn symbols_needed(filter_len: usize) -> (usize, usize) {
    let pad = filter_len / SAMPLES_PER_SYMBOL + 2;
    (FRAME_LEN / SAMPLES_PER_SYMBOL + 2 * pad, pad * SAMPLES_PER_SYMBOL)
}

fn convolve_same_start<T>(x: &[T], taps: &[f64]) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let half = taps.len() / 2;
    (0..x.len())
        .map(|n| {
            let mut acc = T::default();
            for (k, &h) in taps.iter().enumerate() {
                let idx = n as isize + half as isize - k as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc = acc + x[idx as usize] * h;
                }
            }
            acc
        })
        .collect()
}

fn linear(points: Vec<Complex64>, rng: &mut SplitMix64) -> Vec<Complex64> {
    let taps = rrc_taps(RRC_ROLLOFF, SAMPLES_PER_SYMBOL, RRC_SPAN_SYMBOLS);
    let (nsym, lead) = symbols_needed(taps.len());
    let mut up = vec![Complex64::default(); nsym * SAMPLES_PER_SYMBOL];
    for k in 0..nsym {
        up[k * SAMPLES_PER_SYMBOL] = points[rng.below(points.len())];
    }
    let shaped = convolve_same_start(&up, &taps);
    let start = lead + rng.below(SAMPLES_PER_SYMBOL);
    shaped[start..start + FRAME_LEN].to_vec()
}

fn frequency_shift(index: f64, taps: &[f64], rng: &mut SplitMix64) -> Vec<Complex64> {
    let (nsym, lead) = symbols_needed(taps.len().max(SAMPLES_PER_SYMBOL));
    let nrz: Vec<f64> = (0..nsym)
        .flat_map(|_| {
            let s = if rng.below(2) == 0 { -1.0 } else { 1.0 };
            std::iter::repeat_n(s, SAMPLES_PER_SYMBOL)
        })
        .collect();
    let freq = convolve_same_start(&nrz, taps);
    let step = PI * index / SAMPLES_PER_SYMBOL as f64;
    let mut phase = 0.0;
    let full: Vec<Complex64> = freq
        .iter()
        .map(|&f| {
            phase += step * f;
            Complex64::from_polar(1.0, phase)
        })
        .collect();
    let start = lead + rng.below(SAMPLES_PER_SYMBOL);
    full[start..start + FRAME_LEN].to_vec()
}

struct Tone {
    amp: f64,
    freq: f64,
    phase: f64,
}

fn draw_tones(rng: &mut SplitMix64) -> Vec<Tone> {
    (0..4)
        .map(|i| Tone {
            amp: rng.uniform(0.4, 1.0) / (1.0 + i as f64),
            freq: rng.uniform(0.004, 0.035),
            phase: rng.uniform(0.0, TAU),
        })
        .collect()
}

/// Real pseudo-speech message scaled to peak magnitude 1.
fn tone_mixture(rng: &mut SplitMix64) -> Vec<f64> {
    let tones = draw_tones(rng);
    let m: Vec<f64> = (0..FRAME_LEN)
        .map(|n| {
            tones
                .iter()
                .map(|t| t.amp * (TAU * t.freq * n as f64 + t.phase).cos())
                .sum()
        })
        .collect();
    let peak = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    m.into_iter().map(|v| v / peak).collect()
}

/// Upper-sideband (analytic) form of the tone mixture, carrier suppressed.
fn analytic_tone_mixture(rng: &mut SplitMix64) -> Vec<Complex64> {
    let tones = draw_tones(rng);
    (0..FRAME_LEN)
        .map(|n| {
            tones
                .iter()
                .map(|t| Complex64::from_polar(t.amp, TAU * t.freq * n as f64 + t.phase))
                .sum()
        })
        .collect()
}
