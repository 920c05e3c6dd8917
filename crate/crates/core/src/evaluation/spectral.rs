use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const STFT_WINDOW: usize = 16;
pub const STFT_HOP: usize = 4;

/// One-sided magnitude spectra of Hann-windowed frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    /// Centre time of each frame, measured from the first sample.
    pub times: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// `frames x frequencies`, row-major.
    pub magnitudes: Vec<f64>,
    pub window_len: usize,
    pub hop: usize,
}

impl Spectrogram {
    pub fn frame(&self, i: usize) -> &[f64] {
        let b = self.frequencies.len();
        &self.magnitudes[i * b..(i + 1) * b]
    }

    pub fn n_frames(&self) -> usize {
        self.times.len()
    }

    /// Frequency of the strongest oscillatory bin of frame `i`. The 0 Hz
    /// bin holds the frame mean and is skipped unless it is the only bin.
    pub fn peak_frequency(&self, i: usize) -> f64 {
        let f = self.frame(i);
        let k = (1..f.len()).fold(1.min(f.len() - 1), |b, k| if f[k] > f[b] { k } else { b });
        self.frequencies[k]
    }

    /// Frequency of the largest bin after summing power over frames, with
    /// the 0 Hz bin excluded.
    pub fn dominant_frequency(&self) -> f64 {
        let b = self.frequencies.len();
        let power: Vec<f64> = (0..b).map(|k| (0..self.n_frames()).map(|i| self.frame(i)[k].powi(2)).sum()).collect();
        let k = (1..b).fold(1.min(b - 1), |best, k| if power[k] > power[best] { k } else { best });
        self.frequencies[k]
    }

    /// Whitespace-separated matrix, one frame per line.
    pub fn to_matrix_text(&self) -> String {
        (0..self.n_frames())
            .map(|i| self.frame(i).iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Periodic Hann window, the usual choice for spectral analysis: its DFT
/// is nonzero only at bins 0 and +-1.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len).map(|n| 0.5 * (1.0 - (std::f64::consts::TAU * n as f64 / len as f64).cos())).collect()
}

pub fn stft_spectrogram(signal: &[f64], dt: f64, window_len: usize, hop: usize) -> Result<Spectrogram> {
    if window_len == 0 || hop == 0 {
        return Err(Error::Config("STFT window and hop must be positive".into()));
    }
    if window_len > signal.len() {
        return Err(Error::Config(format!("STFT window of {window_len} samples exceeds the {}-sample signal", signal.len())));
    }
    let w = hann(window_len);
    let fft = FftPlanner::new().plan_fft_forward(window_len);
    let bins = window_len / 2 + 1;
    let n_frames = 1 + (signal.len() - window_len) / hop;
    let mut magnitudes = Vec::with_capacity(n_frames * bins);
    let mut times = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let start = f * hop;
        let mut buf: Vec<Complex<f64>> = (0..window_len).map(|n| Complex::new(signal[start + n] * w[n], 0.0)).collect();
        fft.process(&mut buf);
        magnitudes.extend(buf[..bins].iter().map(|c| c.norm()));
        times.push((start as f64 + 0.5 * (window_len - 1) as f64) * dt);
    }
    let frequencies = (0..bins).map(|k| k as f64 / (window_len as f64 * dt)).collect();
    Ok(Spectrogram { times, frequencies, magnitudes, window_len, hop })
}
