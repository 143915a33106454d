//! Sound field capture and rendering toolkit for spherical microphone arrays.
//!
//! The pipeline: simulate or record microphone signals ([`sim`], [`audio`]),
//! encode them into spherical-harmonic coefficients ([`codec`]), and render the
//! pressure anywhere outside the array. [`timewarp`] and [`baseline`] cover the
//! geometric warping of body-worn recordings, [`losses`] and [`metrics`] the
//! objectives and evaluation numbers.
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what the command-line tool uses.

pub mod audio;
pub mod baseline;
pub mod cli;
pub mod codec;
pub mod error;
pub mod geometry;
pub mod harmonics;
pub mod losses;
pub mod metrics;
pub mod scalar;
pub mod sim;
pub mod timewarp;

pub use error::{Error, Result};
pub use scalar::Real;

pub type AudioBufferF64 = audio::AudioBuffer<f64>;
pub type SpectrogramF64 = audio::Spectrogram<f64>;
pub type Vec3F64 = geometry::Vec3<f64>;
pub type SphericalPosF64 = geometry::SphericalPos<f64>;
pub type MicArrayGeometryF64 = geometry::MicArrayGeometry<f64>;
pub type PoseTrackF64 = geometry::PoseTrack<f64>;
pub type SoundFieldCoeffsF64 = codec::SoundFieldCoeffs<f64>;
pub type WarpfieldF64 = timewarp::Warpfield<f64>;
pub type SimSceneF64 = sim::SimScene<f64>;

pub type AudioBufferF32 = audio::AudioBuffer<f32>;
pub type SpectrogramF32 = audio::Spectrogram<f32>;
pub type Vec3F32 = geometry::Vec3<f32>;
pub type SoundFieldCoeffsF32 = codec::SoundFieldCoeffs<f32>;
