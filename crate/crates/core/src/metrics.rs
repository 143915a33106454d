//! Evaluation metrics: SDR, amplitude-spectrogram error and phase error.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::audio::{stft, AudioBuffer, Spectrogram, StftConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Reported when the residual is exactly zero.
pub const SDR_CAP_DB: f64 = 100.0;
pub const AMPLITUDE_SCALE: f64 = 1000.0;
/// Bins quieter than this fraction of the loudest reference bin carry no phase weight.
pub const PHASE_FLOOR_REL: f64 = 1e-8;

fn sdr_from_slices<T: Real>(est: &[&[T]], reference: &[&[T]]) -> Result<f64> {
    let (mut sig, mut res) = (0.0f64, 0.0f64);
    for (e, r) in est.iter().zip(reference) {
        for (&a, &b) in e.iter().zip(r.iter()) {
            let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
            sig += b * b;
            res += (b - a) * (b - a);
        }
    }
    if sig == 0.0 {
        return Err(Error::DegenerateReference("reference is silent".into()));
    }
    if res == 0.0 {
        return Ok(SDR_CAP_DB);
    }
    Ok((10.0 * (sig / res).log10()).min(SDR_CAP_DB))
}

/// `10 log10(sum ref^2 / sum (ref - est)^2)` over all channels, capped at 100 dB.
pub fn sdr<T: Real>(est: &AudioBuffer<T>, reference: &AudioBuffer<T>) -> Result<f64> {
    est.check_same_shape(reference)?;
    let e: Vec<&[T]> = est.channels().iter().map(|c| c.as_slice()).collect();
    let r: Vec<&[T]> = reference.channels().iter().map(|c| c.as_slice()).collect();
    sdr_from_slices(&e, &r)
}

/// `1000 * mean (|E| - |R|)^2` over every bin of two spectrograms.
pub fn amplitude_error_spec<T: Real>(est: &Spectrogram<T>, reference: &Spectrogram<T>) -> Result<f64> {
    est.check_same_shape(reference)?;
    let n = est.data().len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty spectrogram".into()));
    }
    let mut acc = 0.0f64;
    for (e, r) in est.data().iter().zip(reference.data()) {
        let d = e.norm().to_f64_lossy() - r.norm().to_f64_lossy();
        acc += d * d;
    }
    Ok(AMPLITUDE_SCALE * acc / n as f64)
}

pub fn amplitude_error<T: Real>(est: &AudioBuffer<T>, reference: &AudioBuffer<T>, cfg: &StftConfig) -> Result<f64> {
    est.check_same_shape(reference)?;
    amplitude_error_spec(&stft(est, cfg)?, &stft(reference, cfg)?)
}

/// Absolute wrapped phase difference of two complex values, in `[0, pi]`.
pub fn phase_distance<T: Real>(e: Complex<T>, r: Complex<T>) -> f64 {
    let z = Complex::new(e.re.to_f64_lossy(), e.im.to_f64_lossy())
        * Complex::new(r.re.to_f64_lossy(), -r.im.to_f64_lossy());
    z.im.atan2(z.re).abs()
}

/// `|R|`-weighted mean of the absolute phase difference, radians.
pub fn phase_error_spec<T: Real>(est: &Spectrogram<T>, reference: &Spectrogram<T>) -> Result<f64> {
    est.check_same_shape(reference)?;
    let max = reference.data().iter().map(|r| r.norm().to_f64_lossy()).fold(0.0, f64::max);
    let floor = PHASE_FLOOR_REL * max;
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (e, r) in est.data().iter().zip(reference.data()) {
        let w = r.norm().to_f64_lossy();
        if w > 0.0 && w >= floor {
            num += w * phase_distance(*e, *r);
            den += w;
        }
    }
    if den == 0.0 {
        return Err(Error::DegenerateReference("every reference bin is below the phase floor".into()));
    }
    Ok(num / den)
}

pub fn phase_error<T: Real>(est: &AudioBuffer<T>, reference: &AudioBuffer<T>, cfg: &StftConfig) -> Result<f64> {
    est.check_same_shape(reference)?;
    phase_error_spec(&stft(est, cfg)?, &stft(reference, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub sdr_db: f64,
    pub amplitude_x1000: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub channels: Vec<MetricSet>,
    pub mean: MetricSet,
}

/// All three metrics per channel, plus their means.
pub fn evaluate<T: Real>(est: &AudioBuffer<T>, reference: &AudioBuffer<T>, cfg: &StftConfig) -> Result<EvalReport> {
    est.check_same_shape(reference)?;
    let mut channels = Vec::with_capacity(est.num_channels());
    for c in 0..est.num_channels() {
        let e = est.extract_channel(c)?;
        let r = reference.extract_channel(c)?;
        let (se, sr) = (stft(&e, cfg)?, stft(&r, cfg)?);
        channels.push(MetricSet {
            sdr_db: sdr(&e, &r)?,
            amplitude_x1000: amplitude_error_spec(&se, &sr)?,
            phase_rad: phase_error_spec(&se, &sr)?,
        });
    }
    let n = channels.len().max(1) as f64;
    let mean = MetricSet {
        sdr_db: channels.iter().map(|m| m.sdr_db).sum::<f64>() / n,
        amplitude_x1000: channels.iter().map(|m| m.amplitude_x1000).sum::<f64>() / n,
        phase_rad: channels.iter().map(|m| m.phase_rad).sum::<f64>() / n,
    };
    Ok(EvalReport { channels, mean })
}
