use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Blackman,
    Rect,
}

impl WindowKind {
    pub(crate) fn code(self) -> u8 {
        match self {
            WindowKind::Hann => 0,
            WindowKind::Blackman => 1,
            WindowKind::Rect => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(WindowKind::Hann),
            1 => Some(WindowKind::Blackman),
            2 => Some(WindowKind::Rect),
            _ => None,
        }
    }
}

impl std::str::FromStr for WindowKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "hann" => Ok(WindowKind::Hann),
            "blackman" => Ok(WindowKind::Blackman),
            "rect" | "rectangular" | "boxcar" => Ok(WindowKind::Rect),
            other => Err(format!("unknown window {other:?} (hann, blackman, rect)")),
        }
    }
}

/// Symmetric Blackman window (0.42, 0.5, 0.08) of odd length `len >= 3`.
///
/// Endpoints are exactly 0 and the centre sample exactly 1; the second half
/// mirrors the first bit for bit.
pub fn blackman<T: Real>(len: usize) -> Result<Vec<T>> {
    if len < 3 || len % 2 == 0 {
        return Err(invalid(format!("blackman window length must be odd and >= 3, got {len}")));
    }
    let m = T::from_usize_lossy(len - 1);
    let half = len / 2;
    let mut w = vec![T::zero(); len];
    for k in 0..=half {
        w[k] = blackman_term(T::from_usize_lossy(k) / m);
        w[len - 1 - k] = w[k];
    }
    Ok(w)
}

// (a0 + a2 cos 2x) - a1 cos x keeps the endpoints and centre exact
fn blackman_term<T: Real>(frac: T) -> T {
    let x = T::TAU() * frac;
    (T::lit(0.42) + T::lit(0.08) * (x + x).cos()) - T::lit(0.5) * x.cos()
}

/// Periodic (DFT-even) analysis window of length `n`.
pub fn periodic_window<T: Real>(kind: WindowKind, n: usize) -> Vec<T> {
    let nn = T::from_usize_lossy(n);
    (0..n)
        .map(|k| {
            let frac = T::from_usize_lossy(k) / nn;
            match kind {
                WindowKind::Rect => T::one(),
                WindowKind::Hann => T::lit(0.5) - T::lit(0.5) * (T::TAU() * frac).cos(),
                WindowKind::Blackman => blackman_term(frac),
            }
        })
        .collect()
}
