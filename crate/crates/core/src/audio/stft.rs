//! One-sided short-time Fourier transform and weighted overlap-add inverse.
//!
//! Frames are unnormalised DFTs of windowed segments: `X[k] = sum_n w[n] x[n] e^{-2 pi i k n / N}`.
//! With `center` the signal is reflect-padded by `N/2` on both sides so frame `tau`
//! is centred on sample `tau * hop`. The inverse divides the overlap-added,
//! re-windowed frames by the summed squared window, which is exact whenever
//! that sum is constant (checked by [`StftConfig::is_cola`]).

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::buffer::AudioBuffer;
use super::window::{periodic_window, WindowKind};
use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_size: usize,
    pub hop: usize,
    pub window: WindowKind,
    #[serde(default = "default_center")]
    pub center: bool,
}

fn default_center() -> bool {
    true
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { window_size: 1024, hop: 256, window: WindowKind::Hann, center: true }
    }
}

impl StftConfig {
    pub fn new(window_size: usize, hop: usize, window: WindowKind) -> Result<Self> {
        let cfg = Self { window_size, hop, window, center: true };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_center(mut self, center: bool) -> Self {
        self.center = center;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size < 2 {
            return Err(invalid(format!("window size must be >= 2, got {}", self.window_size)));
        }
        if self.hop == 0 || self.hop > self.window_size {
            return Err(invalid(format!(
                "hop must satisfy 0 < hop <= window ({}), got {}",
                self.window_size, self.hop
            )));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.window_size / 2 + 1
    }

    fn pad(&self) -> usize {
        if self.center {
            self.window_size / 2
        } else {
            0
        }
    }

    pub fn num_frames(&self, signal_len: usize) -> usize {
        let padded = signal_len + 2 * self.pad();
        if padded < self.window_size {
            0
        } else {
            1 + (padded - self.window_size) / self.hop
        }
    }

    /// True when the squared window overlap-adds to a constant at this hop,
    /// the condition under which [`istft`] reconstructs exactly.
    pub fn is_cola(&self) -> bool {
        let w = periodic_window::<f64>(self.window, self.window_size);
        let sums: Vec<f64> = (0..self.hop)
            .map(|n| w.iter().skip(n).step_by(self.hop).map(|v| v * v).sum())
            .collect();
        let max = sums.iter().cloned().fold(0.0, f64::max);
        let min = sums.iter().cloned().fold(f64::INFINITY, f64::min);
        max > 0.0 && (max - min) <= 1e-9 * max
    }
}

/// Complex one-sided spectrogram, `channels x frames x bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    data: Vec<Complex<T>>,
    channels: usize,
    frames: usize,
    bins: usize,
    config: StftConfig,
    sample_rate: u32,
    signal_len: usize,
}

impl<T: Real> Spectrogram<T> {
    pub fn zeros(channels: usize, config: StftConfig, sample_rate: u32, signal_len: usize) -> Self {
        let frames = config.num_frames(signal_len);
        let bins = config.num_bins();
        Self {
            data: vec![Complex::new(T::zero(), T::zero()); channels * frames * bins],
            channels,
            frames,
            bins,
            config,
            sample_rate,
            signal_len,
        }
    }

    /// Builds a spectrogram from raw values laid out `[channel][frame][bin]`.
    pub fn from_parts(
        data: Vec<Complex<T>>,
        channels: usize,
        config: StftConfig,
        sample_rate: u32,
        signal_len: usize,
    ) -> Result<Self> {
        let mut s = Self::zeros(0, config, sample_rate, signal_len);
        if data.len() != channels * s.frames * s.bins {
            return Err(invalid(format!(
                "spectrogram data has {} values, expected {channels} x {} x {}",
                data.len(),
                s.frames,
                s.bins
            )));
        }
        s.channels = channels;
        s.data = data;
        Ok(s)
    }

    pub fn num_channels(&self) -> usize {
        self.channels
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    pub fn num_bins(&self) -> usize {
        self.bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    /// Centre frequency of bin `f` in Hz.
    pub fn bin_frequency(&self, f: usize) -> T {
        T::from_usize_lossy(f) * T::from_usize_lossy(self.sample_rate as usize)
            / T::from_usize_lossy(self.config.window_size)
    }

    #[inline]
    fn idx(&self, c: usize, tau: usize, f: usize) -> usize {
        (c * self.frames + tau) * self.bins + f
    }

    pub fn get(&self, c: usize, tau: usize, f: usize) -> Complex<T> {
        self.data[self.idx(c, tau, f)]
    }

    pub fn set(&mut self, c: usize, tau: usize, f: usize, v: Complex<T>) {
        let i = self.idx(c, tau, f);
        self.data[i] = v;
    }

    pub fn frame(&self, c: usize, tau: usize) -> &[Complex<T>] {
        let start = self.idx(c, tau, 0);
        &self.data[start..start + self.bins]
    }

    pub fn frame_mut(&mut self, c: usize, tau: usize) -> &mut [Complex<T>] {
        let start = self.idx(c, tau, 0);
        &mut self.data[start..start + self.bins]
    }

    pub fn channel_data(&self, c: usize) -> &[Complex<T>] {
        let n = self.frames * self.bins;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if (self.channels, self.frames, self.bins) != (other.channels, other.frames, other.bins) {
            return Err(invalid(format!(
                "spectrogram shape mismatch: {}x{}x{} vs {}x{}x{}",
                self.channels, self.frames, self.bins, other.channels, other.frames, other.bins
            )));
        }
        Ok(())
    }
}

fn reflect_index(i: isize, len: usize) -> usize {
    // single reflection is enough because pad < len
    let n = len as isize;
    let j = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    j as usize
}

struct Plans<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

fn plans<T: Real>(n: usize) -> Plans<T> {
    let mut planner = FftPlanner::new();
    Plans { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
}

/// Forward STFT of every channel of `buf`.
pub fn stft<T: Real>(buf: &AudioBuffer<T>, cfg: &StftConfig) -> Result<Spectrogram<T>> {
    cfg.validate()?;
    let n = cfg.window_size;
    if buf.len() < n {
        return Err(invalid(format!(
            "signal of {} samples is shorter than the {n}-sample window",
            buf.len()
        )));
    }
    let len = buf.len();
    let pad = cfg.pad();
    let window = periodic_window::<T>(cfg.window, n);
    let fft = plans::<T>(n).forward;
    let mut spec = Spectrogram::zeros(buf.num_channels(), *cfg, buf.sample_rate(), len);
    let bins = spec.bins;
    let frames = spec.frames;

    spec.data.par_chunks_mut(bins).enumerate().for_each(|(row, out)| {
        let c = row / frames;
        let tau = row % frames;
        let x = buf.channel(c);
        let start = (tau * cfg.hop) as isize - pad as isize;
        let mut frame: Vec<Complex<T>> = (0..n)
            .map(|k| {
                let s = x[reflect_index(start + k as isize, len)];
                Complex::new(s * window[k], T::zero())
            })
            .collect();
        fft.process(&mut frame);
        out.copy_from_slice(&frame[..bins]);
    });
    Ok(spec)
}

/// Inverse STFT by weighted overlap-add; the output has the original signal length.
pub fn istft<T: Real>(spec: &Spectrogram<T>) -> Result<AudioBuffer<T>> {
    let cfg = spec.config;
    cfg.validate()?;
    if !cfg.is_cola() {
        return Err(invalid(format!(
            "{:?} window with size {} and hop {} does not overlap-add to a constant",
            cfg.window, cfg.window_size, cfg.hop
        )));
    }
    let n = cfg.window_size;
    let pad = cfg.pad();
    let len = spec.signal_len;
    let window = periodic_window::<T>(cfg.window, n);
    let ifft = plans::<T>(n).inverse;
    let scale = T::one() / T::from_usize_lossy(n);
    let padded_len = len + 2 * pad + n;

    let channels: Vec<Vec<T>> = (0..spec.channels)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![T::zero(); padded_len];
            let mut norm = vec![T::zero(); padded_len];
            let mut full = vec![Complex::new(T::zero(), T::zero()); n];
            for tau in 0..spec.frames {
                let half = spec.frame(c, tau);
                full[0] = Complex::new(half[0].re, T::zero());
                for k in 1..spec.bins {
                    full[k] = half[k];
                }
                if n % 2 == 0 {
                    full[n / 2] = Complex::new(half[n / 2].re, T::zero());
                }
                for k in 1..(n + 1) / 2 {
                    full[n - k] = half[k].conj();
                }
                ifft.process(&mut full);
                let start = tau * cfg.hop;
                for k in 0..n {
                    acc[start + k] = acc[start + k] + full[k].re * scale * window[k];
                    norm[start + k] = norm[start + k] + window[k] * window[k];
                }
            }
            let floor = T::epsilon();
            (0..len)
                .map(|t| {
                    let d = norm[t + pad];
                    if d > floor {
                        acc[t + pad] / d
                    } else {
                        T::zero()
                    }
                })
                .collect()
        })
        .collect();
    AudioBuffer::new(channels, spec.sample_rate)
}
