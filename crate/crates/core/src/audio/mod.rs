//! Audio buffers, WAV I/O, analysis windows and the STFT pair.

mod buffer;
pub mod stft;
pub mod wav;
pub mod window;

pub use buffer::{AudioBuffer, DEFAULT_SAMPLE_RATE};
pub use stft::{istft, stft, Spectrogram, StftConfig};
pub use wav::{read_wav, write_wav, write_wav_as, WavFormat};
pub use window::{blackman, periodic_window, WindowKind};
