//! Non-learned reference renderer: the head-worn microphone signal, delayed by the
//! nose-to-target travel time and attenuated with `1/d`.

use rayon::prelude::*;

use crate::audio::AudioBuffer;
use crate::error::{invalid, Result};
use crate::geometry::{joints, MicArrayGeometry, PoseTrack, Vec3};
use crate::scalar::Real;
use crate::timewarp::{apply_warp, compute_warpfield};

/// Lower bound on the head-to-target distance used for the gain, meters.
pub const MIN_GAIN_DISTANCE: f64 = 0.05;

/// Renders `input` (recorded at the nose) at `target`, assuming the sound is emitted at the nose.
pub fn naive_spatialize<T: Real>(
    input: &AudioBuffer<T>,
    pose: &PoseTrack<T>,
    target: Vec3<T>,
    v_sound: T,
    reference_distance: T,
) -> Result<AudioBuffer<T>> {
    if input.num_channels() != 1 {
        return Err(invalid(format!("baseline input must be mono, got {} channels", input.num_channels())));
    }
    if !(reference_distance > T::zero()) {
        return Err(invalid("reference distance must be positive"));
    }
    if input.is_empty() {
        pose.joint_index(joints::NOSE)?;
        return Ok(input.clone());
    }
    let nose = pose.joint_index(joints::NOSE)?;
    let wf = compute_warpfield(pose, joints::NOSE, joints::NOSE, target, v_sound, input.sample_rate(), input.len())?;
    let mut out = apply_warp(input, &wf)?;
    let gains: Vec<T> = (0..pose.num_frames())
        .map(|s| reference_distance / target.dist(pose.position(s, nose)).max(T::lit(MIN_GAIN_DISTANCE)))
        .collect();
    let sr = input.sample_rate();
    for (t, y) in out.channel_mut(0).iter_mut().enumerate() {
        *y = *y * gains[pose.frame_at_sample(t, sr)];
    }
    Ok(out)
}

/// One channel per microphone of `geom`, in geometry order.
pub fn naive_spatialize_array<T: Real>(
    input: &AudioBuffer<T>,
    pose: &PoseTrack<T>,
    geom: &MicArrayGeometry<T>,
    v_sound: T,
    reference_distance: T,
) -> Result<AudioBuffer<T>> {
    let targets: Vec<Vec3<T>> = geom.positions().collect();
    let chans: Vec<Vec<T>> = targets
        .par_iter()
        .map(|&p| naive_spatialize(input, pose, p, v_sound, reference_distance).map(|b| b.into_channels().remove(0)))
        .collect::<Result<_>>()?;
    AudioBuffer::new(chans, input.sample_rate())
}
