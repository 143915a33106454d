//! Training objectives as plain evaluation kernels.
//!
//! # shift-l2
//!
//! The clip is cut into segments of `L` samples. For segment `n` and every
//! offset `tau` in `[-L, L]`
//!
//! ```text
//! l2(tau) = 1/L * sum_t ((est[nL+t] - ref[nL+t+tau]) / (sqrt(s_ref * min(s_ref, s_est)) + delta))^2
//! ```
//!
//! where `s_ref`, `s_est` are standard deviations and reads outside the
//! reference are zero. Offsets are penalised with `W = alpha * (1 - blackman(2L+1))`
//! and the segment score is `min_tau (l2 + 1)(W + 1) - 1`. The loss is the mean
//! score over complete segments and channels; a trailing partial segment is ignored.
//!
//! # Multiscale STFT
//!
//! Spectral convergence `||R| - |E||_F / ||R||_F` plus the mean absolute log
//! magnitude difference, Hann window, hop = window / 4, averaged over resolutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{blackman, stft, AudioBuffer, Spectrogram, StftConfig, WindowKind};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Where the shift-l2 standard deviations are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaScope {
    /// Over the compared segment (reference at zero offset).
    #[default]
    Segment,
    /// Over each whole channel.
    Clip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftL2Config {
    pub segment_len: usize,
    pub alpha: f64,
    pub delta: f64,
    #[serde(default)]
    pub sigma_scope: SigmaScope,
}

impl Default for ShiftL2Config {
    fn default() -> Self {
        Self { segment_len: 128, alpha: 100.0, delta: 0.001, sigma_scope: SigmaScope::Segment }
    }
}

impl ShiftL2Config {
    pub fn validate(&self) -> Result<()> {
        if self.segment_len == 0 {
            return Err(invalid("segment length must be >= 1"));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(invalid(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(invalid(format!("delta must be finite and > 0, got {}", self.delta)));
        }
        Ok(())
    }

    /// Offset penalty `alpha * (1 - blackman(2L+1))`, indexed by `tau + L`.
    pub fn penalty<T: Real>(&self) -> Result<Vec<T>> {
        let a = T::lit(self.alpha);
        Ok(blackman::<T>(2 * self.segment_len + 1)?.into_iter().map(|w| a * (T::one() - w)).collect())
    }
}

/// Population standard deviation.
pub fn std_dev<T: Real>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let n = T::from_usize_lossy(x.len());
    let mut sum = T::zero();
    for &v in x {
        sum = sum + v;
    }
    let mean = sum / n;
    let mut var = T::zero();
    for &v in x {
        let d = v - mean;
        var = var + d * d;
    }
    (var / n).sqrt()
}

fn check_pair<T: Real>(est: &AudioBuffer<T>, reference: &AudioBuffer<T>) -> Result<()> {
    est.check_same_shape(reference)
}

/// Per-segment shift-l2 scores, channel-major.
pub fn shift_l2_segments<T: Real>(
    est: &AudioBuffer<T>,
    reference: &AudioBuffer<T>,
    cfg: &ShiftL2Config,
) -> Result<Vec<T>> {
    cfg.validate()?;
    check_pair(est, reference)?;
    let l = cfg.segment_len;
    if est.len() < l {
        return Err(invalid(format!("signal length {} is shorter than one segment ({l})", est.len())));
    }
    let w = cfg.penalty::<T>()?;
    let delta = T::lit(cfg.delta);
    let lt = T::from_usize_lossy(l);
    let segments = est.len() / l;
    let per_channel: Vec<Vec<T>> = (0..est.num_channels())
        .into_par_iter()
        .map(|c| {
            let e = est.channel(c);
            let r = reference.channel(c);
            let clip_sigma = match cfg.sigma_scope {
                SigmaScope::Clip => Some((std_dev(r), std_dev(e))),
                SigmaScope::Segment => None,
            };
            (0..segments)
                .map(|n| {
                    let start = n * l;
                    let (sa, se) =
                        clip_sigma.unwrap_or_else(|| (std_dev(&r[start..start + l]), std_dev(&e[start..start + l])));
                    let denom = (sa * sa.min(se)).sqrt() + delta;
                    segment_score(e, r, start, l, denom, lt, &w)
                })
                .collect()
        })
        .collect();
    Ok(per_channel.into_iter().flatten().collect())
}

fn segment_score<T: Real>(e: &[T], r: &[T], start: usize, l: usize, denom: T, lt: T, w: &[T]) -> T {
    let len = r.len() as i64;
    let mut best = T::infinity();
    for (k, &wk) in w.iter().enumerate() {
        let tau = k as i64 - l as i64;
        let mut acc = T::zero();
        for t in 0..l {
            let j = (start + t) as i64 + tau;
            let rv = if j < 0 || j >= len { T::zero() } else { r[j as usize] };
            let d = (e[start + t] - rv) / denom;
            acc = acc + d * d;
        }
        let l2 = acc / lt;
        let v = (l2 + T::one()) * (wk + T::one()) - T::one();
        if v < best {
            best = v;
        }
    }
    best
}

/// Mean shift-l2 score over complete segments and channels.
pub fn shift_l2<T: Real>(est: &AudioBuffer<T>, reference: &AudioBuffer<T>, cfg: &ShiftL2Config) -> Result<T> {
    let seg = shift_l2_segments(est, reference, cfg)?;
    let mut sum = T::zero();
    for &v in &seg {
        sum = sum + v;
    }
    Ok(sum / T::from_usize_lossy(seg.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsStftConfig {
    pub windows: Vec<usize>,
    /// Weight applied to the multiscale term in [`combined_loss`].
    pub weight: f64,
}

impl Default for MsStftConfig {
    fn default() -> Self {
        Self { windows: vec![256, 128, 64, 32], weight: 100.0 }
    }
}

/// Floor under squared magnitudes before the square root and log.
pub const MAG_EPS: f64 = 1e-7;

impl MsStftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() {
            return Err(invalid("at least one STFT resolution is required"));
        }
        if self.windows.iter().any(|&w| w < 8) {
            return Err(invalid("STFT windows must be >= 8"));
        }
        let mut sorted = self.windows.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.windows.len() {
            return Err(invalid("STFT windows must be unique"));
        }
        if !(self.weight >= 0.0) || !self.weight.is_finite() {
            return Err(invalid("multiscale STFT weight must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn stft_config(window: usize) -> StftConfig {
        StftConfig { window_size: window, hop: (window / 4).max(1), window: WindowKind::Hann, center: true }
    }
}

fn floored_mag<T: Real>(z: num_complex::Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).max(T::lit(MAG_EPS)).sqrt()
}

/// Spectral convergence plus mean log-magnitude distance for one resolution.
pub fn stft_magnitude_loss<T: Real>(est: &Spectrogram<T>, reference: &Spectrogram<T>) -> Result<T> {
    est.check_same_shape(reference)?;
    let (mut num, mut den, mut log_sum) = (T::zero(), T::zero(), T::zero());
    for (e, r) in est.data().iter().zip(reference.data()) {
        let (me, mr) = (floored_mag(*e), floored_mag(*r));
        num = num + (mr - me) * (mr - me);
        den = den + mr * mr;
        log_sum = log_sum + (mr.ln() - me.ln()).abs();
    }
    let count = est.data().len();
    if count == 0 {
        return Err(invalid("empty spectrogram"));
    }
    Ok(num.sqrt() / den.sqrt() + log_sum / T::from_usize_lossy(count))
}

/// Mean over resolutions of [`stft_magnitude_loss`].
pub fn multiscale_stft_loss<T: Real>(est: &AudioBuffer<T>, reference: &AudioBuffer<T>, cfg: &MsStftConfig) -> Result<T> {
    cfg.validate()?;
    check_pair(est, reference)?;
    if reference.channels().iter().all(|c| c.iter().all(|v| *v == T::zero())) {
        return Err(Error::DegenerateReference("reference is silent; spectral convergence is undefined".into()));
    }
    let per_res: Vec<T> = cfg
        .windows
        .iter()
        .map(|&w| {
            let sc = MsStftConfig::stft_config(w);
            stft_magnitude_loss(&stft(est, &sc)?, &stft(reference, &sc)?)
        })
        .collect::<Result<_>>()?;
    let mut sum = T::zero();
    for v in &per_res {
        sum = sum + *v;
    }
    Ok(sum / T::from_usize_lossy(per_res.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub shift_l2: f64,
    pub ms_stft: f64,
    pub ms_stft_weight: f64,
    pub combined: f64,
}

/// `shift_l2 + weight * multiscale_stft`, with both terms reported.
pub fn combined_loss<T: Real>(
    est: &AudioBuffer<T>,
    reference: &AudioBuffer<T>,
    shift: &ShiftL2Config,
    ms: &MsStftConfig,
) -> Result<LossReport> {
    let s = shift_l2(est, reference, shift)?.to_f64_lossy();
    let m = multiscale_stft_loss(est, reference, ms)?.to_f64_lossy();
    Ok(LossReport { shift_l2: s, ms_stft: m, ms_stft_weight: ms.weight, combined: s + ms.weight * m })
}
