//! Free-field point-source simulator.
//!
//! A receiver at distance `d` hears each source delayed by `d / v` seconds and
//! scaled by `reference_distance / d`. Moving sources hold their position for a
//! whole pose frame. Samples before a signal's start or after its end are zero.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::audio::{read_wav, AudioBuffer};
use crate::error::{invalid, Error, Result};
use crate::geometry::{MicArrayGeometry, PoseTrack, Vec3};
use crate::scalar::Real;

pub const DEFAULT_REFERENCE_DISTANCE: f64 = 1.0;
pub const DEFAULT_SINC_HALF_WIDTH: usize = 32;
/// Minimum source-receiver distance, meters.
pub const MIN_DISTANCE: f64 = 1e-3;

/// Fractional delay method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayInterp {
    #[default]
    Linear,
    /// Blackman-windowed sinc with `half_width` taps on each side.
    WindowedSinc { half_width: usize },
}

impl DelayInterp {
    pub fn sinc() -> Self {
        DelayInterp::WindowedSinc { half_width: DEFAULT_SINC_HALF_WIDTH }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourcePath<T> {
    Static(Vec3<T>),
    /// One position per pose frame at `fps`.
    Track { fps: f64, positions: Vec<Vec3<T>> },
}

impl<T: Real> SourcePath<T> {
    pub fn from_pose(pose: &PoseTrack<T>, joint: &str) -> Result<Self> {
        let j = pose.joint_index(joint)?;
        let positions = (0..pose.num_frames()).map(|s| pose.position(s, j)).collect();
        Ok(SourcePath::Track { fps: pose.fps(), positions })
    }

    fn positions(&self) -> &[Vec3<T>] {
        match self {
            SourcePath::Static(p) => std::slice::from_ref(p),
            SourcePath::Track { positions, .. } => positions,
        }
    }

    fn frame_at(&self, t: usize, sample_rate: u32) -> usize {
        match self {
            SourcePath::Static(_) => 0,
            SourcePath::Track { fps, positions } => {
                let s = (t as f64 * fps / sample_rate as f64).floor() as usize;
                s.min(positions.len() - 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSource<T> {
    pub path: SourcePath<T>,
    /// Single channel.
    pub signal: AudioBuffer<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScene<T> {
    pub sources: Vec<SimSource<T>>,
    pub v_sound: T,
    pub reference_distance: T,
    pub interp: DelayInterp,
}

impl<T: Real> SimScene<T> {
    pub fn new(sources: Vec<SimSource<T>>, v_sound: T) -> Result<Self> {
        let scene = Self {
            sources,
            v_sound,
            reference_distance: T::lit(DEFAULT_REFERENCE_DISTANCE),
            interp: DelayInterp::Linear,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn with_interp(mut self, interp: DelayInterp) -> Self {
        self.interp = interp;
        self
    }

    pub fn with_reference_distance(mut self, d: T) -> Self {
        self.reference_distance = d;
        self
    }

    /// One static source.
    pub fn point(position: Vec3<T>, signal: AudioBuffer<T>, v_sound: T) -> Result<Self> {
        Self::new(vec![SimSource { path: SourcePath::Static(position), signal }], v_sound)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(invalid("scene has no sources"));
        }
        if !(self.v_sound > T::zero()) || !self.v_sound.is_finite() {
            return Err(invalid(format!("speed of sound must be positive, got {}", self.v_sound)));
        }
        if !(self.reference_distance > T::zero()) || !self.reference_distance.is_finite() {
            return Err(invalid("reference distance must be positive"));
        }
        if let DelayInterp::WindowedSinc { half_width: 0 } = self.interp {
            return Err(invalid("windowed-sinc half width must be >= 1"));
        }
        let sr = self.sources[0].signal.sample_rate();
        for (i, s) in self.sources.iter().enumerate() {
            if s.signal.num_channels() != 1 {
                return Err(invalid(format!("source {i} signal must be mono")));
            }
            if s.signal.sample_rate() != sr {
                return Err(invalid(format!("source {i} sample rate differs from source 0")));
            }
            if !s.signal.is_finite() {
                return Err(invalid(format!("source {i} signal is not finite")));
            }
            let ps = s.path.positions();
            if ps.is_empty() || ps.iter().any(|p| !p.is_finite()) {
                return Err(invalid(format!("source {i} positions must be finite and non-empty")));
            }
            if let SourcePath::Track { fps, .. } = s.path {
                if !(fps > 0.0) || !fps.is_finite() {
                    return Err(invalid(format!("source {i} track fps must be positive")));
                }
            }
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> u32 {
        self.sources[0].signal.sample_rate()
    }

    /// Length of the longest source signal.
    pub fn len(&self) -> usize {
        self.sources.iter().map(|s| s.signal.len()).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn sinc_kernel<T: Real>(u: T, half_width: T) -> T {
    let w = T::PI() * u / half_width;
    let win = T::lit(0.42) + T::lit(0.5) * w.cos() + T::lit(0.08) * (w + w).cos();
    if u == T::zero() {
        return T::one();
    }
    let x = T::PI() * u;
    x.sin() / x * win
}

/// Value of `x` at fractional position `pos`, zero outside the signal.
fn read_delayed<T: Real>(x: &[T], pos: T, interp: DelayInterp) -> T {
    let n = x.len() as i64;
    let at = |i: i64| if i < 0 || i >= n { T::zero() } else { x[i as usize] };
    let base = pos.floor();
    let frac = pos - base;
    let i0 = base.to_i64().unwrap_or(i64::MIN / 2);
    match interp {
        DelayInterp::Linear => (T::one() - frac) * at(i0) + frac * at(i0 + 1),
        DelayInterp::WindowedSinc { half_width } => {
            let hw = half_width as i64;
            if i0 + hw < 0 || i0 - hw >= n {
                return T::zero();
            }
            let hwt = T::from_usize_lossy(half_width);
            let mut acc = T::zero();
            for j in (1 - hw)..=hw {
                let v = at(i0 + j);
                if v != T::zero() {
                    acc = acc + v * sinc_kernel(frac - T::lit(j as f64), hwt);
                }
            }
            acc
        }
    }
}

/// Signal heard at `receiver`.
pub fn simulate_receiver<T: Real>(scene: &SimScene<T>, receiver: Vec3<T>) -> Result<AudioBuffer<T>> {
    scene.validate()?;
    if !receiver.is_finite() {
        return Err(invalid("receiver position must be finite"));
    }
    let sr = scene.sample_rate();
    let srt = T::from_usize_lossy(sr as usize);
    let len = scene.len();
    let mut out = vec![T::zero(); len];
    for (si, src) in scene.sources.iter().enumerate() {
        let frames: Vec<(T, T)> = src
            .path
            .positions()
            .iter()
            .enumerate()
            .map(|(s, p)| {
                let d = p.dist(receiver);
                if !(d >= T::lit(MIN_DISTANCE)) {
                    return Err(Error::DegenerateInput(format!(
                        "receiver within 1 mm of source {si} at frame {s} (d = {d} m)"
                    )));
                }
                Ok((d / scene.v_sound * srt, scene.reference_distance / d))
            })
            .collect::<Result<_>>()?;
        let x = src.signal.channel(0);
        for (t, y) in out.iter_mut().enumerate() {
            let (delay, gain) = frames[src.path.frame_at(t, sr)];
            *y = *y + gain * read_delayed(x, T::from_usize_lossy(t) - delay, scene.interp);
        }
    }
    AudioBuffer::mono(out, sr)
}

/// One channel per microphone, in geometry order.
pub fn simulate_array<T: Real>(scene: &SimScene<T>, geom: &MicArrayGeometry<T>) -> Result<AudioBuffer<T>> {
    let positions: Vec<Vec3<T>> = geom.positions().collect();
    simulate_receivers(scene, &positions)
}

pub fn simulate_receivers<T: Real>(scene: &SimScene<T>, receivers: &[Vec3<T>]) -> Result<AudioBuffer<T>> {
    let chans: Vec<Vec<T>> = receivers
        .par_iter()
        .map(|&r| simulate_receiver(scene, r).map(|b| b.into_channels().remove(0)))
        .collect::<Result<_>>()?;
    AudioBuffer::new(chans, scene.sample_rate())
}

// ---------------------------------------------------------------------------
// Scene files

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    #[serde(default = "default_v")]
    v_sound: f64,
    #[serde(default = "default_ref")]
    reference_distance_m: f64,
    #[serde(default)]
    interp: InterpName,
    #[serde(default = "default_hw")]
    sinc_half_width: usize,
    sources: Vec<SourceEntry>,
}

fn default_v() -> f64 {
    crate::codec::DEFAULT_SPEED_OF_SOUND
}

fn default_ref() -> f64 {
    DEFAULT_REFERENCE_DISTANCE
}

fn default_hw() -> usize {
    DEFAULT_SINC_HALF_WIDTH
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InterpName {
    #[default]
    Linear,
    Sinc,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceEntry {
    wav: PathBuf,
    #[serde(default)]
    position: Option<[f64; 3]>,
    #[serde(default)]
    joint_track: Option<JointTrackRef>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum JointTrackRef {
    /// `"pose.json#left_hand"`
    Combined(String),
    Split { pose: PathBuf, joint: String },
}

impl<T: Real> SimScene<T> {
    /// Parses a scene file; relative paths resolve against `base_dir`.
    pub fn from_json_str(s: &str, base_dir: &Path) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(s).map_err(|e| Error::Config(format!("scene: {e}")))?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
        let mut sources = Vec::with_capacity(file.sources.len());
        for (i, entry) in file.sources.iter().enumerate() {
            let signal: AudioBuffer<T> = read_wav(resolve(&entry.wav))
                .map_err(|e| Error::Config(format!("scene: sources[{i}].wav: {e}")))?;
            let signal = if signal.num_channels() == 1 {
                signal
            } else {
                return Err(Error::Config(format!("scene: sources[{i}].wav must be mono")));
            };
            let path = match (&entry.position, &entry.joint_track) {
                (Some(p), None) => SourcePath::Static(Vec3::from_array(*p)),
                (None, Some(track)) => {
                    let (pose_path, joint) = match track {
                        JointTrackRef::Combined(s) => {
                            let (p, j) = s.rsplit_once('#').ok_or_else(|| {
                                Error::Config(format!("scene: sources[{i}].joint_track must be \"file#joint\""))
                            })?;
                            (PathBuf::from(p), j.to_string())
                        }
                        JointTrackRef::Split { pose, joint } => (pose.clone(), joint.clone()),
                    };
                    let pose = PoseTrack::load(resolve(&pose_path))
                        .map_err(|e| Error::Config(format!("scene: sources[{i}].joint_track: {e}")))?;
                    SourcePath::from_pose(&pose, &joint)
                        .map_err(|e| Error::Config(format!("scene: sources[{i}].joint_track: {e}")))?
                }
                _ => {
                    return Err(Error::Config(format!(
                        "scene: sources[{i}] needs exactly one of \"position\" or \"joint_track\""
                    )))
                }
            };
            sources.push(SimSource { path, signal });
        }
        let interp = match file.interp {
            InterpName::Linear => DelayInterp::Linear,
            InterpName::Sinc => DelayInterp::WindowedSinc { half_width: file.sinc_half_width },
        };
        let scene = SimScene {
            sources,
            v_sound: T::lit(file.v_sound),
            reference_distance: T::lit(file.reference_distance_m),
            interp,
        };
        scene.validate().map_err(|e| Error::Config(format!("scene: {e}")))?;
        Ok(scene)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s, path.parent().unwrap_or(Path::new(".")))
    }
}
