//! The `soundfield` command-line tool.
//!
//! Every subcommand prints one JSON document on stdout (or a plain table with
//! `--pretty`) and reports failures on stderr with a non-zero exit code.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::audio::{read_wav, stft, write_wav_as, AudioBuffer, StftConfig, WavFormat, WindowKind};
use crate::baseline::{naive_spatialize, naive_spatialize_array};
use crate::codec::{
    decode_many, encode, max_order, read_sfc, render, write_sfc, DcPolicy, EncoderConfig, DEFAULT_SPEED_OF_SOUND,
    DEFAULT_TIKHONOV_REL,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{cart_to_sph, joints, MicArrayGeometry, PoseTrack, SphericalPos, Vec3};
use crate::losses::{combined_loss, MsStftConfig, ShiftL2Config, SigmaScope};
use crate::metrics::evaluate;
use crate::sim::{simulate_array, simulate_receiver, DelayInterp, SimScene};
use crate::timewarp::{warp_stack_with, WarpJointSet};

pub const THREADS_ENV: &str = "SOUNDFIELD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "soundfield", version, about = "Spherical-array sound field encoding, rendering and evaluation")]
pub struct Cli {
    /// Worker threads (default: all cores). SOUNDFIELD_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print a human-readable table instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate free-field propagation to an array or a single receiver.
    Simulate(SimulateArgs),
    /// Encode per-microphone WAVs into a coefficient file.
    Encode(EncodeArgs),
    /// Render the field at one point.
    Render(RenderArgs),
    /// Time-warp head-mounted recordings toward a target.
    Warp(WarpArgs),
    /// Naive time-warp-and-attenuate spatialization.
    Baseline(BaselineArgs),
    /// shift-l2, multiscale STFT and combined loss between two WAVs.
    Loss(LossArgs),
    /// SDR, amplitude and phase error between WAVs or directories of WAVs.
    Eval(EvalArgs),
    /// Simulate, encode, render and evaluate a synthetic scene.
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SampleFormat {
    F32,
    I16,
    I24,
}

impl From<SampleFormat> for WavFormat {
    fn from(f: SampleFormat) -> Self {
        match f {
            SampleFormat::F32 => WavFormat::Float32,
            SampleFormat::I16 => WavFormat::Int16,
            SampleFormat::I24 => WavFormat::Int24,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Microphone array JSON; writes `<mic id>.wav` per microphone.
    #[arg(long, conflicts_with = "receiver", required_unless_present = "receiver")]
    pub array: Option<PathBuf>,
    /// Single receiver `x,y,z` in meters; writes `receiver.wav`.
    #[arg(long, value_parser = parse_triplet, allow_hyphen_values = true)]
    pub receiver: Option<[f64; 3]>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "f32")]
    pub format: SampleFormat,
}

#[derive(Debug, Args)]
pub struct StftArgs {
    #[arg(long, default_value_t = 1024)]
    pub window: usize,
    #[arg(long, default_value_t = 256)]
    pub hop: usize,
    #[arg(long, default_value = "hann", value_parser = parse_window)]
    pub window_kind: WindowKind,
}

impl StftArgs {
    fn config(&self) -> Result<StftConfig> {
        StftConfig::new(self.window, self.hop, self.window_kind)
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Directory holding `<mic id>.wav` for every microphone in the array.
    #[arg(long)]
    pub mics: PathBuf,
    #[arg(long)]
    pub array: PathBuf,
    /// Harmonic order (default: floor(sqrt(N)) - 1).
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TIKHONOV_REL)]
    pub tikhonov: f64,
    #[arg(long, default_value = "zero", value_parser = parse_dc)]
    pub dc: DcPolicy,
    #[arg(long, default_value_t = DEFAULT_SPEED_OF_SOUND)]
    pub v_sound: f64,
    #[command(flatten)]
    pub stft: StftArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub coeffs: PathBuf,
    /// Spherical position `azimuth,polar,radius` (radians, radians, meters).
    #[arg(long, value_parser = parse_triplet, allow_hyphen_values = true, conflicts_with = "at_xyz", required_unless_present = "at_xyz")]
    pub at_sph: Option<[f64; 3]>,
    /// Cartesian position `x,y,z` in meters.
    #[arg(long, value_parser = parse_triplet, allow_hyphen_values = true)]
    pub at_xyz: Option<[f64; 3]>,
    /// Speed of sound (default: the value stored with the coefficients).
    #[arg(long)]
    pub v_sound: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "f32")]
    pub format: SampleFormat,
}

#[derive(Debug, Args)]
pub struct WarpArgs {
    /// Head-mounted recording(s); every channel is warped.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub pose: PathBuf,
    #[arg(long, value_parser = parse_triplet, allow_hyphen_values = true)]
    pub target: [f64; 3],
    /// Comma-separated source joints (default: hands, feet, nose, hip). Pass "" for none.
    #[arg(long)]
    pub joints: Option<String>,
    #[arg(long, default_value = joints::NOSE)]
    pub input_joint: String,
    #[arg(long, default_value_t = DEFAULT_SPEED_OF_SOUND)]
    pub v_sound: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub pose: PathBuf,
    /// Single target `x,y,z`; writes `--out` as one WAV.
    #[arg(long, value_parser = parse_triplet, allow_hyphen_values = true, conflicts_with = "array", required_unless_present = "array")]
    pub target: Option<[f64; 3]>,
    /// Array JSON; writes one multichannel WAV in geometry order.
    #[arg(long)]
    pub array: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SPEED_OF_SOUND)]
    pub v_sound: f64,
    #[arg(long, default_value_t = 1.0)]
    pub reference_distance: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub segment_len: usize,
    #[arg(long, default_value_t = 100.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.001)]
    pub delta: f64,
    #[arg(long, default_value = "segment", value_parser = parse_scope)]
    pub sigma_scope: SigmaScope,
    #[arg(long, default_value_t = 100.0)]
    pub weight: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Estimate WAV, or a directory of WAVs matched by file name.
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[command(flatten)]
    pub stft: StftArgs,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_triplet(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse::<f64>().map_err(|e| format!("{p:?}: {e}"))?;
        if !o.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
    }
    Ok(out)
}

fn parse_window(s: &str) -> std::result::Result<WindowKind, String> {
    s.parse()
}

fn parse_dc(s: &str) -> std::result::Result<DcPolicy, String> {
    s.parse()
}

fn parse_scope(s: &str) -> std::result::Result<SigmaScope, String> {
    match s {
        "segment" => Ok(SigmaScope::Segment),
        "clip" => Ok(SigmaScope::Clip),
        other => Err(format!("unknown sigma scope {other:?} (segment, clip)")),
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Config(_) => 3,
        Error::Format(_) | Error::UnsupportedFormat(_) => 4,
        Error::Io(_) => 5,
        Error::DomainError(_) => 6,
        Error::DegenerateInput(_) | Error::DegenerateReference(_) => 7,
        Error::OrderTooHigh { .. } => 8,
    }
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).or(cli.threads);
    if let Some(n) = threads.filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not configure {n} threads: {e}");
        }
    }
    match run(&cli.command) {
        Ok(v) => {
            println!("{}", if cli.pretty { to_table(&v) } else { v.to_string() });
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn run(cmd: &Command) -> Result<Value> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Render(a) => cmd_render(a),
        Command::Warp(a) => cmd_warp(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Loss(a) => cmd_loss(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Demo(a) => run_demo(&a.out, a.seed),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

fn mono_channels(buf: &AudioBuffer<f64>) -> Vec<AudioBuffer<f64>> {
    (0..buf.num_channels()).map(|c| buf.extract_channel(c).expect("channel in range")).collect()
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Value> {
    let scene = SimScene::<f64>::load(&a.scene)?;
    create_dir(&a.out)?;
    let mut files = Vec::new();
    let (channels, len) = if let Some(array) = &a.array {
        let geom = MicArrayGeometry::<f64>::load(array)?;
        let out = simulate_array(&scene, &geom)?;
        for (mic, ch) in geom.mics().iter().zip(mono_channels(&out)) {
            let path = a.out.join(format!("{}.wav", mic.id));
            write_wav_as(&path, &ch, a.format.into())?;
            files.push(path.display().to_string());
        }
        (out.num_channels(), out.len())
    } else {
        let r = a.receiver.expect("clap enforces --array or --receiver");
        let out = simulate_receiver(&scene, Vec3::from_array(r))?;
        let path = a.out.join("receiver.wav");
        write_wav_as(&path, &out, a.format.into())?;
        files.push(path.display().to_string());
        (1, out.len())
    };
    Ok(json!({"command": "simulate", "channels": channels, "samples": len, "sample_rate": scene.sample_rate(), "files": files}))
}

/// Reads `<id>.wav` for every microphone, in array order.
pub fn read_mic_dir(dir: &Path, geom: &MicArrayGeometry<f64>) -> Result<AudioBuffer<f64>> {
    let mut parts = Vec::with_capacity(geom.len());
    for mic in geom.mics() {
        let path = dir.join(format!("{}.wav", mic.id));
        let buf: AudioBuffer<f64> = read_wav(&path).map_err(|e| match e {
            Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
            other => other,
        })?;
        if buf.num_channels() != 1 {
            return Err(invalid(format!("{} must be mono", path.display())));
        }
        if let Some(first) = parts.first() {
            let first: &AudioBuffer<f64> = first;
            if buf.len() != first.len() || buf.sample_rate() != first.sample_rate() {
                return Err(invalid(format!(
                    "{} has {} samples at {} Hz; expected {} at {} Hz",
                    path.display(),
                    buf.len(),
                    buf.sample_rate(),
                    first.len(),
                    first.sample_rate()
                )));
            }
        }
        parts.push(buf);
    }
    AudioBuffer::concat_channels(&parts)
}

fn cmd_encode(a: &EncodeArgs) -> Result<Value> {
    let geom = MicArrayGeometry::<f64>::load(&a.array)?;
    let order = a.order.unwrap_or_else(|| max_order(geom.len()));
    let cfg = EncoderConfig { order, tikhonov_rel: a.tikhonov, dc_policy: a.dc };
    cfg.validate(geom.len())?;
    let mics = read_mic_dir(&a.mics, &geom)?;
    let spec = stft(&mics, &a.stft.config()?)?;
    let coeffs = encode(&spec, &geom, &cfg, a.v_sound)?;
    write_sfc(&a.out, &coeffs)?;
    Ok(json!({"command": "encode", "file": a.out.display().to_string(), "header": coeffs.header(), "n_mics": geom.len()}))
}

fn render_position(a: &RenderArgs) -> Result<SphericalPos<f64>> {
    match (a.at_sph, a.at_xyz) {
        (Some([az, pol, r]), None) => {
            if r == 0.0 {
                return Err(Error::DomainError("cannot render at r = 0 (Hankel singularity)".into()));
            }
            SphericalPos::new(az, pol, r)
        }
        (None, Some(p)) => cart_to_sph(Vec3::from_array(p))
            .map_err(|_| Error::DomainError("cannot render at the origin (Hankel singularity)".into())),
        _ => Err(invalid("give exactly one of --at-sph or --at-xyz")),
    }
}

fn cmd_render(a: &RenderArgs) -> Result<Value> {
    let coeffs = read_sfc::<f64>(&a.coeffs)?;
    let pos = render_position(a)?;
    let v = a.v_sound.unwrap_or(coeffs.v_sound());
    let out = render(&coeffs, &pos, v)?;
    write_wav_as(&a.out, &out, a.format.into())?;
    Ok(json!({
        "command": "render",
        "file": a.out.display().to_string(),
        "samples": out.len(),
        "sample_rate": out.sample_rate(),
        "position": {"azimuth_rad": pos.azimuth(), "polar_rad": pos.polar(), "radius_m": pos.radius()},
    }))
}

fn cmd_warp(a: &WarpArgs) -> Result<Value> {
    let input: AudioBuffer<f64> = read_wav(&a.input)?;
    let pose = PoseTrack::<f64>::load(&a.pose)?;
    let set = match &a.joints {
        None => WarpJointSet::default(),
        Some(s) => WarpJointSet::new(s.split(',').map(str::trim).filter(|j| !j.is_empty()).map(String::from).collect()),
    };
    let out = warp_stack_with(&input, &pose, &set, &a.input_joint, Vec3::from_array(a.target), a.v_sound)?;
    write_wav_as(&a.out, &out, WavFormat::Float32)?;
    Ok(json!({
        "command": "warp",
        "file": a.out.display().to_string(),
        "input_channels": input.num_channels(),
        "channels": out.num_channels(),
        "joints": set.names(),
    }))
}

fn cmd_baseline(a: &BaselineArgs) -> Result<Value> {
    let input: AudioBuffer<f64> = read_wav(&a.input)?;
    let pose = PoseTrack::<f64>::load(&a.pose)?;
    let out = match (&a.array, a.target) {
        (Some(array), _) => {
            let geom = MicArrayGeometry::<f64>::load(array)?;
            naive_spatialize_array(&input, &pose, &geom, a.v_sound, a.reference_distance)?
        }
        (None, Some(t)) => naive_spatialize(&input, &pose, Vec3::from_array(t), a.v_sound, a.reference_distance)?,
        (None, None) => return Err(invalid("give --target or --array")),
    };
    write_wav_as(&a.out, &out, WavFormat::Float32)?;
    Ok(json!({"command": "baseline", "file": a.out.display().to_string(), "channels": out.num_channels(), "samples": out.len()}))
}

fn cmd_loss(a: &LossArgs) -> Result<Value> {
    let est: AudioBuffer<f64> = read_wav(&a.est)?;
    let reference: AudioBuffer<f64> = read_wav(&a.reference)?;
    let shift = ShiftL2Config { segment_len: a.segment_len, alpha: a.alpha, delta: a.delta, sigma_scope: a.sigma_scope };
    let ms = MsStftConfig { weight: a.weight, ..Default::default() };
    let r = combined_loss(&est, &reference, &shift, &ms)?;
    Ok(json!({"shift_l2": r.shift_l2, "ms_stft": r.ms_stft, "ms_stft_weight": r.ms_stft_weight, "combined": r.combined}))
}

fn wav_files(dir: &Path) -> Result<Vec<String>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.to_ascii_lowercase().ends_with(".wav"))
        .collect();
    names.sort();
    Ok(names)
}

fn cmd_eval(a: &EvalArgs) -> Result<Value> {
    let cfg = a.stft.config()?;
    if a.est.is_dir() != a.reference.is_dir() {
        return Err(invalid("--est and --ref must both be files or both be directories"));
    }
    let (labels, est, reference) = if a.est.is_dir() {
        let names = wav_files(&a.reference)?;
        if names.is_empty() {
            return Err(invalid(format!("no WAV files in {}", a.reference.display())));
        }
        let (mut labels, mut e_parts, mut r_parts) = (Vec::new(), Vec::new(), Vec::new());
        for n in &names {
            let r: AudioBuffer<f64> = read_wav(a.reference.join(n))?;
            let e: AudioBuffer<f64> = read_wav(a.est.join(n))?;
            for c in 0..r.num_channels() {
                labels.push(if r.num_channels() == 1 { n.clone() } else { format!("{n}#{c}") });
            }
            e_parts.push(e);
            r_parts.push(r);
        }
        for (e, r) in e_parts.iter().zip(&r_parts) {
            e.check_same_shape(r)?;
        }
        (labels, AudioBuffer::concat_channels(&e_parts)?, AudioBuffer::concat_channels(&r_parts)?)
    } else {
        let r: AudioBuffer<f64> = read_wav(&a.reference)?;
        let e: AudioBuffer<f64> = read_wav(&a.est)?;
        ((0..r.num_channels()).map(|c| format!("channel{c}")).collect(), e, r)
    };
    let rep = evaluate(&est, &reference, &cfg)?;
    let channels: Vec<Value> = labels
        .iter()
        .zip(&rep.channels)
        .map(|(l, m)| json!({"name": l, "sdr_db": m.sdr_db, "amplitude_x1000": m.amplitude_x1000, "phase_rad": m.phase_rad}))
        .collect();
    Ok(json!({
        "sdr_db": rep.mean.sdr_db,
        "amplitude_x1000": rep.mean.amplitude_x1000,
        "phase_rad": rep.mean.phase_rad,
        "channels": channels,
    }))
}

/// Demo scene parameters.
pub mod demo {
    pub const SAMPLE_RATE: u32 = 16_000;
    pub const SECONDS: f64 = 1.0;
    pub const N_MICS: usize = 64;
    pub const ARRAY_RADIUS: f64 = 1.7;
    pub const ORDER: usize = 6;
    pub const SOURCE: [f64; 3] = [0.06, -0.05, 0.05];
    pub const BAND_HZ: (f64, f64) = (300.0, 1500.0);
    pub const N_TONES: usize = 24;
    pub const N_HELD_OUT: usize = 8;
    pub const WINDOW: usize = 512;
    pub const HOP: usize = 128;
}

/// Band-limited multitone: `n` unit-amplitude sinusoids with seeded frequencies and phases.
pub fn multitone(seed: u64, n: usize, band: (f64, f64), sample_rate: u32, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tones: Vec<(f64, f64)> =
        (0..n).map(|_| (rng.gen_range(band.0..band.1), rng.gen_range(0.0..std::f64::consts::TAU))).collect();
    let scale = 1.0 / (n as f64).sqrt();
    (0..len)
        .map(|t| {
            let time = t as f64 / sample_rate as f64;
            scale * tones.iter().map(|(f, ph)| (std::f64::consts::TAU * f * time + ph).sin()).sum::<f64>()
        })
        .collect()
}

/// Simulate a point source on a 64-microphone sphere, encode, render at held-out
/// positions and score against the simulator. Writes WAVs, array and coefficient
/// files and `report.json` under `out`.
pub fn run_demo(out: &Path, seed: u64) -> Result<Value> {
    use demo::*;
    create_dir(out)?;
    let len = (SECONDS * SAMPLE_RATE as f64) as usize;
    let dry = AudioBuffer::mono(multitone(seed, N_TONES, BAND_HZ, SAMPLE_RATE, len), SAMPLE_RATE)?;
    write_wav_as(out.join("source.wav"), &dry, WavFormat::Float32)?;

    let geom = MicArrayGeometry::<f64>::fibonacci(N_MICS, ARRAY_RADIUS)?;
    std::fs::write(out.join("array.json"), geom.to_json_string())?;
    let scene = SimScene::point(Vec3::from_array(SOURCE), dry, DEFAULT_SPEED_OF_SOUND)?.with_interp(DelayInterp::sinc());
    let mics = simulate_array(&scene, &geom)?;
    let mic_dir = out.join("mics");
    create_dir(&mic_dir)?;
    for (mic, ch) in geom.mics().iter().zip(mono_channels(&mics)) {
        write_wav_as(mic_dir.join(format!("{}.wav", mic.id)), &ch, WavFormat::Float32)?;
    }

    let cfg = StftConfig::new(WINDOW, HOP, WindowKind::Hann)?;
    let coeffs = encode(&stft(&mics, &cfg)?, &geom, &EncoderConfig::new(ORDER), DEFAULT_SPEED_OF_SOUND)?;
    write_sfc(out.join("coeffs.sfc"), &coeffs)?;

    let held = MicArrayGeometry::<f64>::fibonacci_rotated(N_HELD_OUT, ARRAY_RADIUS, 0.5)?;
    let positions: Vec<SphericalPos<f64>> = held.mics().iter().map(|m| m.pos).collect();
    let rendered = crate::audio::istft(&decode_many(&coeffs, &positions, DEFAULT_SPEED_OF_SOUND)?)?;
    let truth = simulate_array(&scene, &held)?;
    let (render_dir, truth_dir) = (out.join("rendered"), out.join("truth"));
    create_dir(&render_dir)?;
    create_dir(&truth_dir)?;
    for (i, (r, t)) in mono_channels(&rendered).iter().zip(mono_channels(&truth)).enumerate() {
        write_wav_as(render_dir.join(format!("heldout{i}.wav")), r, WavFormat::Float32)?;
        write_wav_as(truth_dir.join(format!("heldout{i}.wav")), &t, WavFormat::Float32)?;
    }
    let rep = evaluate(&rendered, &truth, &cfg)?;
    let report = json!({
        "command": "demo",
        "seed": seed,
        "sample_rate": SAMPLE_RATE,
        "samples": len,
        "n_mics": N_MICS,
        "order": ORDER,
        "array_radius_m": ARRAY_RADIUS,
        "source_xyz_m": SOURCE,
        "held_out": rep.channels.iter().enumerate().map(|(i, m)| json!({
            "index": i,
            "azimuth_rad": positions[i].azimuth(),
            "polar_rad": positions[i].polar(),
            "sdr_db": m.sdr_db,
            "amplitude_x1000": m.amplitude_x1000,
            "phase_rad": m.phase_rad,
        })).collect::<Vec<_>>(),
        "mean": {"sdr_db": rep.mean.sdr_db, "amplitude_x1000": rep.mean.amplitude_x1000, "phase_rad": rep.mean.phase_rad},
    });
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    Ok(report)
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, val, rows);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object() || i.is_array()) => {
            for (i, val) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), val, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// Two-column `key  value` rendering of a JSON document.
pub fn to_table(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}")).collect::<Vec<_>>().join("\n")
}
