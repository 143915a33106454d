//! Geometric time warping of a body-worn microphone toward a target position.
//!
//! For a candidate source joint `p_src`, input microphone joint `p_in` and target
//! `x`, sound reaches the target `dt = (d1 - d2) / v` seconds after it reaches the
//! input microphone, with `d1 = |x - p_src|` and `d2 = |p_in - p_src|`. The
//! warpfield reads the input signal that much earlier:
//!
//! `rho_t = max(rho_{t-1}, t - (d1 - d2) * sr / v)`
//!
//! Negative lags (target closer to the source than the input mic) give
//! `rho_t > t`, i.e. a non-causal read, which is allowed.

use rayon::prelude::*;

use crate::audio::AudioBuffer;
use crate::error::{invalid, Result};
use crate::geometry::{joints, PoseTrack, Vec3};
use crate::scalar::Real;

/// Per-sample fractional read positions, non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Warpfield<T> {
    rho: Vec<T>,
    sample_rate: u32,
}

impl<T: Real> Warpfield<T> {
    pub fn new(rho: Vec<T>, sample_rate: u32) -> Result<Self> {
        if rho.iter().any(|v| !v.is_finite()) {
            return Err(invalid("warpfield values must be finite"));
        }
        if let Some(i) = rho.windows(2).position(|w| w[1] < w[0]) {
            return Err(invalid(format!("warpfield decreases at sample {}", i + 1)));
        }
        Ok(Self { rho, sample_rate })
    }

    pub fn identity(len: usize, sample_rate: u32) -> Self {
        Self { rho: (0..len).map(T::from_usize_lossy).collect(), sample_rate }
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }
}

/// Ordered candidate source joints used by [`warp_stack`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarpJointSet {
    joints: Vec<String>,
}

impl Default for WarpJointSet {
    fn default() -> Self {
        Self::new(
            [joints::LEFT_HAND, joints::RIGHT_HAND, joints::LEFT_FOOT, joints::RIGHT_FOOT, joints::NOSE, joints::HIP]
                .map(String::from)
                .to_vec(),
        )
    }
}

impl WarpJointSet {
    /// An empty set is allowed and makes [`warp_stack`] a passthrough.
    pub fn new(joints: Vec<String>) -> Self {
        Self { joints }
    }

    pub fn names(&self) -> &[String] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn resolve<T: Real>(&self, pose: &PoseTrack<T>) -> Result<Vec<usize>> {
        self.joints.iter().map(|j| pose.joint_index(j)).collect()
    }
}

/// Warpfield of length `len` moving the `input_mic_joint` recording toward `target`
/// for sound emitted at `src_joint`.
pub fn compute_warpfield<T: Real>(
    pose: &PoseTrack<T>,
    src_joint: &str,
    input_mic_joint: &str,
    target: Vec3<T>,
    v_sound: T,
    sample_rate: u32,
    len: usize,
) -> Result<Warpfield<T>> {
    let src = pose.joint_index(src_joint)?;
    let inp = pose.joint_index(input_mic_joint)?;
    if len == 0 {
        return Err(invalid("warpfield length must be >= 1"));
    }
    if !(v_sound > T::zero()) {
        return Err(invalid(format!("speed of sound must be > 0, got {v_sound}")));
    }
    if sample_rate == 0 {
        return Err(invalid("sample rate must be > 0"));
    }
    let sr = T::from_usize_lossy(sample_rate as usize);
    // lag in samples, constant within a pose frame
    let lags: Vec<T> = (0..pose.num_frames())
        .map(|s| {
            let p = pose.position(s, src);
            let d1 = target.dist(p);
            let d2 = pose.position(s, inp).dist(p);
            (d1 - d2) / v_sound * sr
        })
        .collect();
    let mut rho = Vec::with_capacity(len);
    let mut prev = T::zero();
    for t in 0..len {
        let lag = lags[pose.frame_at_sample(t, sample_rate)];
        let want = T::from_usize_lossy(t) - lag;
        let r = if t == 0 { want.max(T::zero()) } else { want.max(prev) };
        rho.push(r);
        prev = r;
    }
    Ok(Warpfield { rho, sample_rate })
}

/// Linear interpolation of `x` at fractional index `pos`; reads past either end clamp.
#[inline]
pub(crate) fn interp_clamped<T: Real>(x: &[T], pos: T) -> T {
    let last = x.len() - 1;
    if !(pos > T::zero()) {
        return x[0];
    }
    let i = pos.floor();
    let frac = pos - i;
    let i = i.to_usize().unwrap_or(usize::MAX);
    if i >= last {
        return x[last];
    }
    (T::one() - frac) * x[i] + frac * x[i + 1]
}

/// Resamples a single-channel signal along `wf`.
pub fn apply_warp<T: Real>(signal: &AudioBuffer<T>, wf: &Warpfield<T>) -> Result<AudioBuffer<T>> {
    if signal.num_channels() != 1 {
        return Err(invalid(format!("apply_warp expects one channel, got {}", signal.num_channels())));
    }
    if signal.len() != wf.len() {
        return Err(invalid(format!("signal has {} samples, warpfield {}", signal.len(), wf.len())));
    }
    let x = signal.channel(0);
    let out = if x.is_empty() { Vec::new() } else { wf.rho.iter().map(|&r| interp_clamped(x, r)).collect() };
    AudioBuffer::mono(out, signal.sample_rate())
}

/// For every input channel, emits the original followed by one warp per joint
/// (source = joint, input microphone = `input_mic_joint`).
pub fn warp_stack_with<T: Real>(
    input: &AudioBuffer<T>,
    pose: &PoseTrack<T>,
    joint_set: &WarpJointSet,
    input_mic_joint: &str,
    target: Vec3<T>,
    v_sound: T,
) -> Result<AudioBuffer<T>> {
    joint_set.resolve(pose)?;
    pose.joint_index(input_mic_joint)?;
    let fields: Vec<Warpfield<T>> = if input.is_empty() {
        Vec::new()
    } else {
        joint_set
            .names()
            .par_iter()
            .map(|j| compute_warpfield(pose, j, input_mic_joint, target, v_sound, input.sample_rate(), input.len()))
            .collect::<Result<_>>()?
    };
    let per_channel: Vec<Vec<Vec<T>>> = (0..input.num_channels())
        .into_par_iter()
        .map(|c| {
            let x = input.channel(c);
            let mut out = vec![x.to_vec()];
            for wf in &fields {
                out.push(wf.rho.iter().map(|&r| interp_clamped(x, r)).collect());
            }
            out
        })
        .collect();
    AudioBuffer::new(per_channel.into_iter().flatten().collect(), input.sample_rate())
}

/// [`warp_stack_with`] using the nose as the input microphone position.
pub fn warp_stack<T: Real>(
    input: &AudioBuffer<T>,
    pose: &PoseTrack<T>,
    joint_set: &WarpJointSet,
    target: Vec3<T>,
    v_sound: T,
) -> Result<AudioBuffer<T>> {
    warp_stack_with(input, pose, joint_set, joints::NOSE, target, v_sound)
}
