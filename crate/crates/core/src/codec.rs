//! Harmonic sound field encoder and decoder.
//!
//! The field outside the array is modelled per STFT bin as
//! `p(r, theta, phi) = sum_nm beta_nm R_n(k r) Y_nm(theta, phi)` where `R_n` is the
//! outgoing spherical Hankel function. Under the forward DFT kernel
//! `e^{-2 pi i f t}` an outgoing wave is `h_n^(2) = conj(h_n^(1))`, so that is the
//! radial term used throughout.
//!
//! Encoding solves `T(f) beta = S(tau, f)` per bin with a Tikhonov-filtered
//! pseudo-inverse computed from the SVD of `T(f)`:
//! `beta = V diag(s / (s^2 + lambda)) U^H S`, `lambda = tikhonov_rel * s_max^2`.
//! `tikhonov_rel = 0` gives the exact Moore-Penrose inverse.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;
use num_traits::Float;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{istft, AudioBuffer, Spectrogram, StftConfig, WindowKind};
use crate::error::{invalid, Error, Result};
use crate::geometry::{MicArrayGeometry, SphericalPos};
use crate::harmonics::{sph_hankel_upto, sph_harmonics_upto, HarmonicIndex, MAX_ORDER};
use crate::scalar::Real;

/// Speed of sound in air at 20 degrees C, m/s.
pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;
pub const DEFAULT_TIKHONOV_REL: f64 = 1e-6;

/// Highest order a set of `n_mics` microphones can resolve: `floor(sqrt(N)) - 1`.
pub fn max_order(n_mics: usize) -> usize {
    n_mics.isqrt().saturating_sub(1)
}

/// What to do with the 0 Hz bin, where `k = 0` makes the Hankel term singular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcPolicy {
    /// DC coefficients and decoded DC are zero.
    #[default]
    Zero,
    /// Encode and decode DC with the first non-zero bin's matrices, keeping the real part.
    CopyBin1,
}

impl DcPolicy {
    fn code(self) -> u8 {
        match self {
            DcPolicy::Zero => 0,
            DcPolicy::CopyBin1 => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(DcPolicy::Zero),
            1 => Some(DcPolicy::CopyBin1),
            _ => None,
        }
    }
}

impl std::str::FromStr for DcPolicy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "zero" => Ok(DcPolicy::Zero),
            "copy_bin1" => Ok(DcPolicy::CopyBin1),
            other => Err(format!("unknown dc policy {other:?} (zero, copy_bin1)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub order: usize,
    #[serde(default = "default_tikhonov")]
    pub tikhonov_rel: f64,
    #[serde(default)]
    pub dc_policy: DcPolicy,
}

fn default_tikhonov() -> f64 {
    DEFAULT_TIKHONOV_REL
}

impl EncoderConfig {
    pub fn new(order: usize) -> Self {
        Self { order, tikhonov_rel: DEFAULT_TIKHONOV_REL, dc_policy: DcPolicy::Zero }
    }

    /// Unregularized pseudo-inverse.
    pub fn exact(order: usize) -> Self {
        Self { tikhonov_rel: 0.0, ..Self::new(order) }
    }

    pub fn validate(&self, n_mics: usize) -> Result<()> {
        let max = max_order(n_mics);
        if self.order > max || self.order > MAX_ORDER {
            return Err(Error::OrderTooHigh { order: self.order, max: max.min(MAX_ORDER), n_mics });
        }
        if !(self.tikhonov_rel >= 0.0) || !self.tikhonov_rel.is_finite() {
            return Err(invalid(format!("tikhonov_rel must be finite and >= 0, got {}", self.tikhonov_rel)));
        }
        Ok(())
    }
}

/// Outgoing radial terms `conj(h_n(x))` for `n = 0..=nmax`.
pub fn radial_upto<T: Real>(nmax: usize, x: T) -> Result<Vec<Complex<T>>> {
    Ok(sph_hankel_upto(nmax, x)?.into_iter().map(|h| h.conj()).collect())
}

/// Basis row `R_n(k r) Y_nm(theta, phi)` over all flat indices up to `order`.
pub fn basis_row<T: Real>(pos: &SphericalPos<T>, k: T, order: usize) -> Result<Vec<Complex<T>>> {
    let radial = radial_upto(order, k * pos.radius())?;
    let mut y = sph_harmonics_upto(order, pos.azimuth(), pos.polar())?;
    for (i, v) in y.iter_mut().enumerate() {
        *v = *v * radial[HarmonicIndex::from_flat(i).n];
    }
    Ok(y)
}

fn wavenumber<T: Real>(freq: T, v_sound: T) -> Result<T> {
    if !(freq > T::zero()) {
        return Err(Error::DomainError(format!("frequency must be > 0, got {freq}")));
    }
    if !(v_sound > T::zero()) {
        return Err(invalid(format!("speed of sound must be > 0, got {v_sound}")));
    }
    Ok(T::TAU() * freq / v_sound)
}

/// Transfer matrix `T(f)`, `N x (K+1)^2`, linking coefficients to microphone pressures.
pub fn build_transfer_matrix<T: Real + RealField>(
    geom: &MicArrayGeometry<T>,
    freq: T,
    order: usize,
    v_sound: T,
) -> Result<DMatrix<Complex<T>>> {
    let k = wavenumber(freq, v_sound)?;
    if order > MAX_ORDER {
        return Err(invalid(format!("order {order} exceeds the supported maximum {MAX_ORDER}")));
    }
    let cols = HarmonicIndex::count(order);
    let mut t = DMatrix::from_element(geom.len(), cols, Complex::new(T::zero(), T::zero()));
    for (i, mic) in geom.mics().iter().enumerate() {
        let row = basis_row(&mic.pos, k, order)?;
        for (j, v) in row.into_iter().enumerate() {
            t[(i, j)] = v;
        }
    }
    Ok(t)
}

/// Ratio of largest to smallest singular value of `m`.
pub fn condition_number<T: Real + RealField>(m: &DMatrix<Complex<T>>) -> T {
    let s = m.clone().singular_values();
    let max = s.iter().cloned().fold(T::zero(), Float::max);
    let min = s.iter().cloned().fold(<T as Float>::infinity(), Float::min);
    max / min
}

/// Regularized pseudo-inverse `(K+1)^2 x N` of a transfer matrix.
pub fn regularized_pinv<T: Real + RealField>(m: &DMatrix<Complex<T>>, tikhonov_rel: T) -> DMatrix<Complex<T>> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(T::zero(), Float::max);
    let lambda = tikhonov_rel * smax * smax;
    let dim = T::from_usize_lossy(m.nrows().max(m.ncols()));
    let cutoff = <T as Float>::epsilon() * dim * smax;
    let mut uh = u.adjoint();
    for (i, &sv) in s.iter().enumerate() {
        let phi = if lambda > T::zero() {
            sv / (sv * sv + lambda)
        } else if sv > cutoff {
            T::one() / sv
        } else {
            T::zero()
        };
        uh.row_mut(i).scale_mut(phi);
    }
    v_t.adjoint() * uh
}

/// Harmonic coefficients `beta_nm(tau, f)` for one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundFieldCoeffs<T> {
    beta: Vec<Complex<T>>,
    order: usize,
    frames: usize,
    bins: usize,
    config: StftConfig,
    sample_rate: u32,
    signal_len: usize,
    radius: T,
    v_sound: T,
    dc_policy: DcPolicy,
}

/// Scalar metadata of a [`SoundFieldCoeffs`]; also the JSON sidecar of a `.sfc` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffsHeader {
    pub order: usize,
    pub stft: StftConfig,
    pub sample_rate: u32,
    pub signal_len: usize,
    pub frames: usize,
    pub bins: usize,
    pub radius_m: f64,
    pub v_sound: f64,
    pub dc_policy: DcPolicy,
}

impl<T: Real> SoundFieldCoeffs<T> {
    /// All-zero field.
    pub fn zeros(order: usize, config: StftConfig, sample_rate: u32, signal_len: usize, radius: T, v_sound: T) -> Self {
        let frames = config.num_frames(signal_len);
        let bins = config.num_bins();
        Self {
            beta: vec![Complex::new(T::zero(), T::zero()); HarmonicIndex::count(order) * frames * bins],
            order,
            frames,
            bins,
            config,
            sample_rate,
            signal_len,
            radius,
            v_sound,
            dc_policy: DcPolicy::Zero,
        }
    }

    /// Builds coefficients from a header and values laid out `[harmonic][frame][bin]`.
    pub fn from_parts(header: &CoeffsHeader, beta: Vec<Complex<T>>) -> Result<Self> {
        header.stft.validate()?;
        let mut c = Self::zeros(
            header.order,
            header.stft,
            header.sample_rate,
            header.signal_len,
            T::lit(header.radius_m),
            T::lit(header.v_sound),
        );
        if c.frames != header.frames || c.bins != header.bins {
            return Err(invalid("header frame/bin counts disagree with the STFT configuration"));
        }
        if beta.len() != c.beta.len() {
            return Err(invalid(format!("expected {} coefficients, got {}", c.beta.len(), beta.len())));
        }
        if !beta.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        c.beta = beta;
        c.dc_policy = header.dc_policy;
        Ok(c)
    }

    pub fn header(&self) -> CoeffsHeader {
        CoeffsHeader {
            order: self.order,
            stft: self.config,
            sample_rate: self.sample_rate,
            signal_len: self.signal_len,
            frames: self.frames,
            bins: self.bins,
            radius_m: self.radius.to_f64_lossy(),
            v_sound: self.v_sound.to_f64_lossy(),
            dc_policy: self.dc_policy,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_harmonics(&self) -> usize {
        HarmonicIndex::count(self.order)
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

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn v_sound(&self) -> T {
        self.v_sound
    }

    pub fn dc_policy(&self) -> DcPolicy {
        self.dc_policy
    }

    #[inline]
    fn idx(&self, h: usize, tau: usize, f: usize) -> usize {
        (h * self.frames + tau) * self.bins + f
    }

    pub fn get(&self, h: usize, tau: usize, f: usize) -> Complex<T> {
        self.beta[self.idx(h, tau, f)]
    }

    pub fn set(&mut self, h: usize, tau: usize, f: usize, v: Complex<T>) {
        let i = self.idx(h, tau, f);
        self.beta[i] = v;
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.beta
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.beta
    }

    pub fn is_finite(&self) -> bool {
        self.beta.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn bin_frequency(&self, f: usize) -> T {
        T::from_usize_lossy(f) * T::from_usize_lossy(self.sample_rate as usize)
            / T::from_usize_lossy(self.config.window_size)
    }
}

// Bin whose matrices serve bin `f`, or None when the bin is left at zero.
fn effective_bin(f: usize, bins: usize, policy: DcPolicy) -> Option<usize> {
    match (f, policy) {
        (0, DcPolicy::Zero) => None,
        (0, DcPolicy::CopyBin1) if bins > 1 => Some(1),
        (0, DcPolicy::CopyBin1) => None,
        (f, _) => Some(f),
    }
}

/// Encodes `N` microphone spectrograms (channel `i` is microphone `i` of `geom`).
pub fn encode<T: Real + RealField>(
    mic_specs: &Spectrogram<T>,
    geom: &MicArrayGeometry<T>,
    cfg: &EncoderConfig,
    v_sound: T,
) -> Result<SoundFieldCoeffs<T>> {
    let n = geom.len();
    if mic_specs.num_channels() != n {
        return Err(invalid(format!(
            "spectrogram has {} channels but the array has {n} microphones",
            mic_specs.num_channels()
        )));
    }
    cfg.validate(n)?;
    if !mic_specs.is_finite() {
        return Err(invalid("microphone spectrograms must be finite"));
    }
    let mut out = SoundFieldCoeffs::zeros(
        cfg.order,
        *mic_specs.config(),
        mic_specs.sample_rate(),
        mic_specs.signal_len(),
        geom.nominal_radius(),
        v_sound,
    );
    out.dc_policy = cfg.dc_policy;
    let (frames, bins, nh) = (out.frames, out.bins, out.num_harmonics());
    let rel = T::lit(cfg.tikhonov_rel);
    let zero = Complex::new(T::zero(), T::zero());

    let per_bin: Vec<Option<DMatrix<Complex<T>>>> = (0..bins)
        .into_par_iter()
        .map(|f| -> Result<Option<DMatrix<Complex<T>>>> {
            let Some(src) = effective_bin(f, bins, cfg.dc_policy) else {
                return Ok(None);
            };
            let t = build_transfer_matrix(geom, out.bin_frequency(src), cfg.order, v_sound)?;
            let pinv = regularized_pinv(&t, rel);
            let s = DMatrix::from_fn(n, frames, |c, tau| mic_specs.get(c, tau, f));
            let mut beta = pinv * s;
            if f == 0 {
                beta.iter_mut().for_each(|v| v.im = T::zero());
            }
            Ok(Some(beta))
        })
        .collect::<Result<_>>()?;

    for (f, beta) in per_bin.into_iter().enumerate() {
        for h in 0..nh {
            for tau in 0..frames {
                let v = beta.as_ref().map_or(zero, |b| b[(h, tau)]);
                out.set(h, tau, f, v);
            }
        }
    }
    Ok(out)
}

/// Pressure spectrogram at each of `positions`, one channel per position.
pub fn decode_many<T: Real>(
    coeffs: &SoundFieldCoeffs<T>,
    positions: &[SphericalPos<T>],
    v_sound: T,
) -> Result<Spectrogram<T>> {
    if !(v_sound > T::zero()) {
        return Err(invalid(format!("speed of sound must be > 0, got {v_sound}")));
    }
    for p in positions {
        if !(p.radius() > T::zero()) {
            return Err(Error::DomainError("cannot decode at r = 0 (Hankel singularity)".into()));
        }
    }
    let (frames, bins, nh) = (coeffs.frames, coeffs.bins, coeffs.num_harmonics());
    let zero = Complex::new(T::zero(), T::zero());
    let mut spec = Spectrogram::zeros(positions.len(), coeffs.config, coeffs.sample_rate, coeffs.signal_len);

    for (c, pos) in positions.iter().enumerate() {
        let cols: Vec<Vec<Complex<T>>> = (0..bins)
            .into_par_iter()
            .map(|f| -> Result<Vec<Complex<T>>> {
                let Some(src) = effective_bin(f, bins, coeffs.dc_policy) else {
                    return Ok(vec![zero; frames]);
                };
                let k = wavenumber(coeffs.bin_frequency(src), v_sound)?;
                let row = basis_row(pos, k, coeffs.order)?;
                Ok((0..frames)
                    .map(|tau| {
                        let mut acc = zero;
                        for (h, b) in row.iter().enumerate().take(nh) {
                            acc = acc + coeffs.get(h, tau, f) * *b;
                        }
                        if f == 0 {
                            acc.im = T::zero();
                        }
                        acc
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        for (f, col) in cols.into_iter().enumerate() {
            for (tau, v) in col.into_iter().enumerate() {
                spec.set(c, tau, f, v);
            }
        }
    }
    Ok(spec)
}

/// Single-channel pressure spectrogram at `pos`.
pub fn decode<T: Real>(coeffs: &SoundFieldCoeffs<T>, pos: &SphericalPos<T>, v_sound: T) -> Result<Spectrogram<T>> {
    decode_many(coeffs, std::slice::from_ref(pos), v_sound)
}

/// Time-domain pressure at `pos`.
pub fn render<T: Real>(coeffs: &SoundFieldCoeffs<T>, pos: &SphericalPos<T>, v_sound: T) -> Result<AudioBuffer<T>> {
    istft(&decode(coeffs, pos, v_sound)?)
}

/// One channel per position.
pub fn render_many<T: Real>(
    coeffs: &SoundFieldCoeffs<T>,
    positions: &[SphericalPos<T>],
    v_sound: T,
) -> Result<AudioBuffer<T>> {
    istft(&decode_many(coeffs, positions, v_sound)?)
}

// ---------------------------------------------------------------------------
// Binary container.
//
// Little-endian layout:
//   magic "SFC1", u32 version (1), u32 order, u32 window_size, u32 hop,
//   u8 window code (0 hann, 1 blackman, 2 rect), u8 center, u8 dc policy, u8 reserved,
//   u32 sample_rate, f64 radius_m, f64 v_sound, u64 signal_len, u64 frames, u64 bins,
//   then (K+1)^2 * frames * bins complex values as (f32 re, f32 im),
//   ordered harmonic-major, then frame, then bin.

const SFC_MAGIC: &[u8; 4] = b"SFC1";
const SFC_VERSION: u32 = 1;
const SFC_HEADER_LEN: usize = 4 + 4 * 4 + 4 + 4 + 8 * 2 + 8 * 3;

pub fn write_sfc_to<T: Real, W: Write>(mut w: W, coeffs: &SoundFieldCoeffs<T>) -> Result<()> {
    let u32_of = |v: usize, what: &str| u32::try_from(v).map_err(|_| invalid(format!("{what} too large")));
    let mut head = Vec::with_capacity(SFC_HEADER_LEN);
    head.extend_from_slice(SFC_MAGIC);
    head.extend_from_slice(&SFC_VERSION.to_le_bytes());
    head.extend_from_slice(&u32_of(coeffs.order, "order")?.to_le_bytes());
    head.extend_from_slice(&u32_of(coeffs.config.window_size, "window size")?.to_le_bytes());
    head.extend_from_slice(&u32_of(coeffs.config.hop, "hop")?.to_le_bytes());
    head.extend_from_slice(&[coeffs.config.window.code(), coeffs.config.center as u8, coeffs.dc_policy.code(), 0]);
    head.extend_from_slice(&coeffs.sample_rate.to_le_bytes());
    head.extend_from_slice(&coeffs.radius.to_f64_lossy().to_le_bytes());
    head.extend_from_slice(&coeffs.v_sound.to_f64_lossy().to_le_bytes());
    for v in [coeffs.signal_len, coeffs.frames, coeffs.bins] {
        head.extend_from_slice(&(v as u64).to_le_bytes());
    }
    w.write_all(&head)?;
    let mut body = Vec::with_capacity(coeffs.beta.len() * 8);
    for v in &coeffs.beta {
        body.extend_from_slice(&(v.re.to_f64_lossy() as f32).to_le_bytes());
        body.extend_from_slice(&(v.im.to_f64_lossy() as f32).to_le_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

pub fn read_sfc_from<T: Real, R: Read>(mut r: R) -> Result<SoundFieldCoeffs<T>> {
    let mut head = [0u8; SFC_HEADER_LEN];
    r.read_exact(&mut head).map_err(|_| Error::Format("truncated coefficient header".into()))?;
    if &head[..4] != SFC_MAGIC {
        return Err(Error::Format("not a coefficient file (bad magic)".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != SFC_VERSION {
        return Err(Error::UnsupportedFormat(format!("coefficient file version {version}")));
    }
    let window = WindowKind::from_code(head[20]).ok_or_else(|| Error::Format("unknown window code".into()))?;
    let dc_policy = DcPolicy::from_code(head[22]).ok_or_else(|| Error::Format("unknown dc policy code".into()))?;
    let header = CoeffsHeader {
        order: u32_at(8) as usize,
        stft: StftConfig { window_size: u32_at(12) as usize, hop: u32_at(16) as usize, window, center: head[21] != 0 },
        sample_rate: u32_at(24),
        radius_m: f64_at(28),
        v_sound: f64_at(36),
        signal_len: u64_at(44) as usize,
        frames: u64_at(52) as usize,
        bins: u64_at(60) as usize,
        dc_policy,
    };
    header.stft.validate().map_err(|e| Error::Format(e.to_string()))?;
    if header.order > MAX_ORDER {
        return Err(Error::Format(format!("order {} out of range", header.order)));
    }
    let count = HarmonicIndex::count(header.order)
        .checked_mul(header.frames)
        .and_then(|v| v.checked_mul(header.bins))
        .ok_or_else(|| Error::Format("tensor size overflows".into()))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != count * 8 {
        return Err(Error::Format(format!("expected {} data bytes, found {}", count * 8, body.len())));
    }
    let beta = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            Complex::new(T::lit(re as f64), T::lit(im as f64))
        })
        .collect();
    SoundFieldCoeffs::from_parts(&header, beta).map_err(|e| Error::Format(e.to_string()))
}

/// Writes `path` and a JSON copy of the header to `path.json`.
pub fn write_sfc<T: Real>(path: impl AsRef<Path>, coeffs: &SoundFieldCoeffs<T>) -> Result<()> {
    let path = path.as_ref();
    write_sfc_to(std::io::BufWriter::new(std::fs::File::create(path)?), coeffs)?;
    let sidecar = serde_json::to_string_pretty(&coeffs.header()).expect("header serializes");
    std::fs::write(sidecar_path(path), sidecar + "\n")?;
    Ok(())
}

pub fn read_sfc<T: Real>(path: impl AsRef<Path>) -> Result<SoundFieldCoeffs<T>> {
    read_sfc_from(std::io::BufReader::new(std::fs::File::open(path.as_ref())?))
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}
