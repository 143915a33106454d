use crate::error::{invalid, Result};
use crate::scalar::Real;

pub const DEFAULT_SAMPLE_RATE: u32 = 48_000;

/// Multichannel real-valued audio, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    channels: Vec<Vec<T>>,
    sample_rate: u32,
}

impl<T: Real> AudioBuffer<T> {
    pub fn new(channels: Vec<Vec<T>>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(invalid("sample rate must be positive"));
        }
        if channels.is_empty() {
            return Err(invalid("audio buffer needs at least one channel"));
        }
        let len = channels[0].len();
        if let Some((c, ch)) = channels.iter().enumerate().find(|(_, ch)| ch.len() != len) {
            return Err(invalid(format!(
                "channel {c} has {} samples, channel 0 has {len}",
                ch.len()
            )));
        }
        Ok(Self { channels, sample_rate })
    }

    pub fn mono(samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn silence(num_channels: usize, len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![vec![T::zero(); len]; num_channels.max(1)], sample_rate)
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel(&self, c: usize) -> &[T] {
        &self.channels[c]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<T>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<T>> {
        self.channels
    }

    /// Single channel `c` as its own buffer.
    pub fn extract_channel(&self, c: usize) -> Result<Self> {
        let ch = self
            .channels
            .get(c)
            .ok_or_else(|| invalid(format!("channel {c} out of range")))?;
        Self::mono(ch.clone(), self.sample_rate)
    }

    /// Stacks the channels of several buffers (same rate and length).
    pub fn concat_channels(parts: &[Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| invalid("nothing to concatenate"))?;
        if parts.iter().any(|p| p.sample_rate != first.sample_rate) {
            return Err(invalid("sample rates differ"));
        }
        Self::new(parts.iter().flat_map(|p| p.channels.iter().cloned()).collect(), first.sample_rate)
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().flatten().all(|x| x.is_finite())
    }

    pub fn scaled(&self, gain: T) -> Self {
        let channels = self.channels.iter().map(|ch| ch.iter().map(|&x| x * gain).collect()).collect();
        Self { channels, sample_rate: self.sample_rate }
    }

    /// Errors unless `other` has the same shape and sample rate.
    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.num_channels() != other.num_channels() {
            return Err(invalid(format!(
                "channel count mismatch: {} vs {}",
                self.num_channels(),
                other.num_channels()
            )));
        }
        if self.len() != other.len() {
            return Err(invalid(format!("length mismatch: {} vs {}", self.len(), other.len())));
        }
        if self.sample_rate != other.sample_rate {
            return Err(invalid(format!(
                "sample rate mismatch: {} vs {}",
                self.sample_rate, other.sample_rate
            )));
        }
        Ok(())
    }

    pub fn energy(&self) -> T {
        self.channels.iter().flatten().map(|&x| x * x).sum()
    }

    pub fn cast<U: Real>(&self) -> AudioBuffer<U> {
        AudioBuffer {
            channels: self
                .channels
                .iter()
                .map(|ch| ch.iter().map(|x| U::lit(x.to_f64_lossy())).collect())
                .collect(),
            sample_rate: self.sample_rate,
        }
    }
}
