//! Coordinate conventions, microphone arrays and pose tracks.
//!
//! Spherical positions use the physics convention: `azimuth` is measured in
//! the x-y plane from +x, `polar` is the colatitude measured from +z, so that
//! the unit direction is `(cos az sin pol, sin az sin pol, cos pol)`. Note the
//! polar angle is *not* an elevation above the horizon.

use std::collections::HashSet;
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    /// Euclidean distance to `other`.
    pub fn dist(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x.to_f64_lossy(), self.y.to_f64_lossy(), self.z.to_f64_lossy()]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(T::lit(a[0]), T::lit(a[1]), T::lit(a[2]))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Euclidean distance between two points.
pub fn euclidean_dist<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a.dist(b)
}

/// A point in spherical coordinates (azimuth, polar angle, radius).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPos<T> {
    azimuth: T,
    polar: T,
    radius: T,
}

impl<T: Real> SphericalPos<T> {
    /// Validates `radius > 0` and `polar` in `[0, pi]`; the azimuth is wrapped
    /// into `[0, 2pi)`.
    pub fn new(azimuth: T, polar: T, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(invalid(format!("radius must be positive and finite, got {radius}")));
        }
        if !(polar >= T::zero() && polar <= T::PI()) {
            return Err(invalid(format!("polar angle must lie in [0, pi], got {polar}")));
        }
        if !azimuth.is_finite() {
            return Err(invalid("azimuth must be finite"));
        }
        Ok(Self { azimuth: wrap_azimuth(azimuth), polar, radius })
    }

    pub fn azimuth(&self) -> T {
        self.azimuth
    }

    pub fn polar(&self) -> T {
        self.polar
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn with_radius(self, radius: T) -> Result<Self> {
        Self::new(self.azimuth, self.polar, radius)
    }

    pub fn unit_vector(&self) -> Vec3<T> {
        let (sa, ca) = self.azimuth.sin_cos();
        let (sp, cp) = self.polar.sin_cos();
        Vec3::new(ca * sp, sa * sp, cp)
    }

    pub fn to_cartesian(&self) -> Vec3<T> {
        self.unit_vector() * self.radius
    }
}

fn wrap_azimuth<T: Real>(az: T) -> T {
    let two_pi = T::TAU();
    let mut a = az % two_pi;
    if a < T::zero() {
        a = a + two_pi;
    }
    // `-tiny + 2pi` can round up to exactly 2pi
    if a >= two_pi {
        a = T::zero();
    }
    a
}

/// Spherical to Cartesian conversion; with `unit` the radius is ignored.
pub fn sph_to_cart<T: Real>(p: &SphericalPos<T>, unit: bool) -> Vec3<T> {
    if unit {
        p.unit_vector()
    } else {
        p.to_cartesian()
    }
}

/// Cartesian to spherical conversion. Points on the z axis get azimuth 0.
pub fn cart_to_sph<T: Real>(v: Vec3<T>) -> Result<SphericalPos<T>> {
    if !v.is_finite() {
        return Err(Error::DegenerateInput("non-finite vector".into()));
    }
    let r = v.norm();
    if r <= T::zero() {
        return Err(Error::DegenerateInput("zero vector has no direction".into()));
    }
    let rho = v.x.hypot(v.y);
    let polar = rho.atan2(v.z);
    let azimuth = if rho == T::zero() { T::zero() } else { v.y.atan2(v.x) };
    SphericalPos::new(azimuth, polar, r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mic<T> {
    pub id: String,
    pub pos: SphericalPos<T>,
}

/// Ordered microphone positions on (or near) a sphere centred at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct MicArrayGeometry<T> {
    mics: Vec<Mic<T>>,
    nominal_radius: T,
}

#[derive(Debug, Serialize, Deserialize)]
struct MicArrayFile {
    nominal_radius_m: f64,
    mics: Vec<MicEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MicEntry {
    id: String,
    azimuth_rad: f64,
    polar_rad: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius_m: Option<f64>,
}

impl<T: Real> MicArrayGeometry<T> {
    pub fn new(mics: Vec<Mic<T>>, nominal_radius: T) -> Result<Self> {
        if mics.is_empty() {
            return Err(invalid("microphone array is empty"));
        }
        if !(nominal_radius > T::zero()) {
            return Err(invalid("nominal radius must be positive"));
        }
        let mut seen = HashSet::new();
        for m in &mics {
            if !seen.insert(m.id.as_str()) {
                return Err(invalid(format!("duplicate microphone id {:?}", m.id)));
            }
        }
        Ok(Self { mics, nominal_radius })
    }

    /// Quasi-uniform layout on a sphere (golden-angle spiral). Ids are `mic000`, `mic001`, ...
    pub fn fibonacci(n: usize, radius: T) -> Result<Self> {
        Self::fibonacci_rotated(n, radius, T::zero())
    }

    /// Same spiral with every azimuth offset by `azimuth_offset`; useful for
    /// held-out positions that interleave an existing array.
    pub fn fibonacci_rotated(n: usize, radius: T, azimuth_offset: T) -> Result<Self> {
        let golden = std::f64::consts::PI * (1.0 + 5f64.sqrt());
        let mics = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                let polar = (1.0 - 2.0 * u).clamp(-1.0, 1.0).acos();
                let az = golden * (i as f64 + 0.5);
                SphericalPos::new(T::lit(az) + azimuth_offset, T::lit(polar), radius)
                    .map(|pos| Mic { id: format!("mic{i:03}"), pos })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mics, radius)
    }

    pub fn mics(&self) -> &[Mic<T>] {
        &self.mics
    }

    pub fn len(&self) -> usize {
        self.mics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mics.is_empty()
    }

    pub fn nominal_radius(&self) -> T {
        self.nominal_radius
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3<T>> + '_ {
        self.mics.iter().map(|m| m.pos.to_cartesian())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: MicArrayFile =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("mic array: {e}")))?;
        let nominal = T::lit(file.nominal_radius_m);
        let mics = file
            .mics
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let r = e.radius_m.map(T::lit).unwrap_or(nominal);
                SphericalPos::new(T::lit(e.azimuth_rad), T::lit(e.polar_rad), r)
                    .map(|pos| Mic { id: e.id, pos })
                    .map_err(|err| Error::Config(format!("mic array: mics[{i}]: {err}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mics, nominal).map_err(|e| Error::Config(format!("mic array: {e}")))
    }

    pub fn to_json_string(&self) -> String {
        let file = MicArrayFile {
            nominal_radius_m: self.nominal_radius.to_f64_lossy(),
            mics: self
                .mics
                .iter()
                .map(|m| MicEntry {
                    id: m.id.clone(),
                    azimuth_rad: m.pos.azimuth().to_f64_lossy(),
                    polar_rad: m.pos.polar().to_f64_lossy(),
                    radius_m: Some(m.pos.radius().to_f64_lossy()),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("mic array serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }
}

/// Joint names used by the warping and baseline modules.
pub mod joints {
    pub const NOSE: &str = "nose";
    pub const LEFT_HAND: &str = "left_hand";
    pub const RIGHT_HAND: &str = "right_hand";
    pub const LEFT_FOOT: &str = "left_foot";
    pub const RIGHT_FOOT: &str = "right_foot";
    pub const HIP: &str = "hip";
}

/// Body joint positions over time, sampled at `fps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrack<T> {
    fps: f64,
    joints: Vec<String>,
    frames: Vec<Vec<Vec3<T>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PoseFile {
    #[serde(default = "default_fps")]
    fps: f64,
    joints: Vec<String>,
    frames: Vec<Vec<[f64; 3]>>,
}

fn default_fps() -> f64 {
    30.0
}

impl<T: Real> PoseTrack<T> {
    pub fn new(fps: f64, joints: Vec<String>, frames: Vec<Vec<Vec3<T>>>) -> Result<Self> {
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(invalid(format!("fps must be positive, got {fps}")));
        }
        if joints.is_empty() {
            return Err(invalid("pose track has no joints"));
        }
        let mut seen = HashSet::new();
        for j in &joints {
            if !seen.insert(j.as_str()) {
                return Err(invalid(format!("duplicate joint name {j:?}")));
            }
        }
        if frames.is_empty() {
            return Err(invalid("pose track has no frames"));
        }
        for (s, f) in frames.iter().enumerate() {
            if f.len() != joints.len() {
                return Err(invalid(format!(
                    "frame {s} has {} joints, expected {}",
                    f.len(),
                    joints.len()
                )));
            }
            if f.iter().any(|p| !p.is_finite()) {
                return Err(invalid(format!("frame {s} has non-finite coordinates")));
            }
        }
        Ok(Self { fps, joints, frames })
    }

    /// A single-frame pose held for the whole signal.
    pub fn stationary(fps: f64, named: &[(&str, Vec3<T>)]) -> Result<Self> {
        let joints = named.iter().map(|(n, _)| n.to_string()).collect();
        let frame = named.iter().map(|(_, p)| *p).collect();
        Self::new(fps, joints, vec![frame])
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joints
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[Vec<Vec3<T>>] {
        &self.frames
    }

    pub fn joint_index(&self, name: &str) -> Result<usize> {
        self.joints
            .iter()
            .position(|j| j == name)
            .ok_or_else(|| invalid(format!("unknown joint {name:?}")))
    }

    pub fn position(&self, frame: usize, joint: usize) -> Vec3<T> {
        self.frames[frame][joint]
    }

    /// Pose frame in effect at audio sample `t`: `floor(t * fps / sample_rate)`,
    /// clamped to the last frame. At 48 kHz and 30 fps that is one frame per
    /// 1600 samples.
    pub fn frame_at_sample(&self, t: usize, sample_rate: u32) -> usize {
        let s = (t as f64 * self.fps / sample_rate as f64).floor() as usize;
        s.min(self.frames.len() - 1)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: PoseFile =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("pose track: {e}")))?;
        let frames = file
            .frames
            .into_iter()
            .map(|f| f.into_iter().map(Vec3::from_array).collect())
            .collect();
        Self::new(file.fps, file.joints, frames)
            .map_err(|e| Error::Config(format!("pose track: {e}")))
    }

    pub fn to_json_string(&self) -> String {
        let file = PoseFile {
            fps: self.fps,
            joints: self.joints.clone(),
            frames: self
                .frames
                .iter()
                .map(|f| f.iter().map(|p| p.to_array()).collect())
                .collect(),
        };
        serde_json::to_string(&file).expect("pose track serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }
}
