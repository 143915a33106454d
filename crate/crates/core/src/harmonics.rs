//! Complex spherical harmonics and spherical Bessel / Hankel functions.
//!
//! `Y_nm` is orthonormal on the unit sphere and carries the Condon-Shortley
//! phase; negative degrees are derived from `Y_{n,-m} = (-1)^m conj(Y_nm)`.
//! Associated Legendre values are produced directly in normalised form so that
//! no factorials appear and orders up to 64 stay finite.
//!
//! `j_n` uses upward recurrence when `x >= n` and Miller's downward recurrence
//! otherwise; `y_n` always recurs upward, which is stable for it. The Hankel
//! function of the first kind is `h_n = j_n + i y_n`.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Largest harmonic order supported.
pub const MAX_ORDER: usize = 64;

/// `(n, m)` pair with `|m| <= n`, flattened as `n^2 + n + m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    pub n: usize,
    pub m: i64,
}

impl HarmonicIndex {
    pub fn new(n: usize, m: i64) -> Result<Self> {
        if m.unsigned_abs() as usize > n {
            return Err(invalid(format!("degree m = {m} exceeds order n = {n}")));
        }
        Ok(Self { n, m })
    }

    pub fn flat(self) -> usize {
        ((self.n * self.n + self.n) as i64 + self.m) as usize
    }

    pub fn from_flat(i: usize) -> Self {
        let n = i.isqrt();
        let m = i as i64 - (n * n + n) as i64;
        Self { n, m }
    }

    /// Number of harmonics up to and including order `k`.
    pub fn count(k: usize) -> usize {
        (k + 1) * (k + 1)
    }

    pub fn iter_upto(k: usize) -> impl Iterator<Item = Self> {
        (0..Self::count(k)).map(Self::from_flat)
    }
}

/// Normalised associated Legendre values `Pbar_n^m(cos polar)` for fixed `m >= 0`
/// and `n = m..=nmax`, including the `sqrt((2n+1)/4pi (n-m)!/(n+m)!)` factor
/// and the Condon-Shortley phase.
fn legendre_column<T: Real>(m: usize, nmax: usize, cos_p: T, sin_p: T) -> Vec<T> {
    let mut pmm = T::one() / (T::lit(4.0) * T::PI()).sqrt();
    for k in 1..=m {
        let kk = T::from_usize_lossy(k);
        pmm = -((kk + kk + T::one()) / (kk + kk)).sqrt() * sin_p * pmm;
    }
    let mut out = Vec::with_capacity(nmax + 1 - m);
    out.push(pmm);
    if nmax == m {
        return out;
    }
    let mm = T::from_usize_lossy(m);
    let mut prev2 = pmm;
    let mut prev1 = (mm + mm + T::lit(3.0)).sqrt() * cos_p * pmm;
    out.push(prev1);
    for n in m + 2..=nmax {
        let nn = T::from_usize_lossy(n);
        let n1 = nn - T::one();
        let a = ((T::lit(4.0) * nn * nn - T::one()) / (nn * nn - mm * mm)).sqrt();
        let b = ((n1 * n1 - mm * mm) / (T::lit(4.0) * n1 * n1 - T::one())).sqrt();
        let cur = a * (cos_p * prev1 - b * prev2);
        out.push(cur);
        prev2 = prev1;
        prev1 = cur;
    }
    out
}

fn check_polar<T: Real>(polar: T) -> Result<()> {
    if !(polar >= T::zero() && polar <= T::PI()) {
        return Err(invalid(format!("polar angle must lie in [0, pi], got {polar}")));
    }
    Ok(())
}

#[inline]
fn cs_sign<T: Real>(m: usize) -> T {
    if m % 2 == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Orthonormal complex spherical harmonic `Y_nm(azimuth, polar)`.
pub fn sph_harmonic<T: Real>(n: usize, m: i64, azimuth: T, polar: T) -> Result<Complex<T>> {
    let idx = HarmonicIndex::new(n, m)?;
    check_polar(polar)?;
    let am = idx.m.unsigned_abs() as usize;
    let (sin_p, cos_p) = polar.sin_cos();
    let p = legendre_column(am, n, cos_p, sin_p)[n - am];
    let phase = T::from_usize_lossy(am) * azimuth;
    let y = Complex::new(p * phase.cos(), p * phase.sin());
    Ok(if m < 0 { y.conj() * cs_sign::<T>(am) } else { y })
}

/// All `Y_nm` up to order `k`, indexed by [`HarmonicIndex::flat`].
pub fn sph_harmonics_upto<T: Real>(k: usize, azimuth: T, polar: T) -> Result<Vec<Complex<T>>> {
    if k > MAX_ORDER {
        return Err(invalid(format!("order {k} exceeds the supported maximum {MAX_ORDER}")));
    }
    check_polar(polar)?;
    let (sin_p, cos_p) = polar.sin_cos();
    let mut out = vec![Complex::new(T::zero(), T::zero()); HarmonicIndex::count(k)];
    for m in 0..=k {
        let col = legendre_column(m, k, cos_p, sin_p);
        let phase = T::from_usize_lossy(m) * azimuth;
        let (s, c) = phase.sin_cos();
        for (off, &p) in col.iter().enumerate() {
            let n = m + off;
            let y = Complex::new(p * c, p * s);
            out[HarmonicIndex { n, m: m as i64 }.flat()] = y;
            if m > 0 {
                out[HarmonicIndex { n, m: -(m as i64) }.flat()] = y.conj() * cs_sign::<T>(m);
            }
        }
    }
    Ok(out)
}

/// Spherical Bessel functions of the first kind `j_0..=j_nmax` at `x`.
/// Negative arguments use `j_n(-x) = (-1)^n j_n(x)`.
pub fn sph_bessel_j_upto<T: Real>(nmax: usize, x: T) -> Vec<T> {
    if x < T::zero() {
        let mut v = sph_bessel_j_upto(nmax, -x);
        for (n, val) in v.iter_mut().enumerate() {
            *val = *val * cs_sign::<T>(n);
        }
        return v;
    }
    let mut out = vec![T::zero(); nmax + 1];
    if x == T::zero() {
        out[0] = T::one();
        return out;
    }
    let j0 = x.sin() / x;
    out[0] = j0;
    if nmax == 0 {
        return out;
    }
    let j1 = x.sin() / (x * x) - x.cos() / x;
    if x >= T::from_usize_lossy(nmax) {
        out[1] = j1;
        for n in 1..nmax {
            let c = T::from_usize_lossy(2 * n + 1) / x;
            out[n + 1] = c * out[n] - out[n - 1];
        }
        return out;
    }

    // Miller: recur downward from well above max(n, x) with arbitrary seed,
    // rescaling to stay finite, then normalise against the closed forms.
    let extra = (T::lit(40.0) * T::from_usize_lossy(nmax)).sqrt().to_f64_lossy() as usize;
    let start = nmax + 16 + extra;
    let big = T::max_value().sqrt();
    let mut vals = vec![T::zero(); start + 2];
    vals[start] = T::min_positive_value().sqrt();
    for n in (1..=start).rev() {
        let c = T::from_usize_lossy(2 * n + 1) / x;
        vals[n - 1] = c * vals[n] - vals[n + 1];
        if vals[n - 1].abs() > big {
            let inv = T::one() / big;
            for v in vals[n - 1..].iter_mut() {
                *v = *v * inv;
            }
        }
    }
    out.copy_from_slice(&vals[..=nmax]);
    let scale = if j0.abs() >= j1.abs() { j0 / out[0] } else { j1 / out[1] };
    for v in out.iter_mut() {
        *v = *v * scale;
    }
    out
}

pub fn sph_bessel_j<T: Real>(n: usize, x: T) -> T {
    sph_bessel_j_upto(n, x)[n]
}

/// Spherical Bessel functions of the second kind `y_0..=y_nmax`; `x > 0`.
pub fn sph_bessel_y_upto<T: Real>(nmax: usize, x: T) -> Result<Vec<T>> {
    if !(x > T::zero()) {
        return Err(Error::DomainError(format!("y_n(x) is singular for x <= 0 (x = {x})")));
    }
    let mut out = vec![T::zero(); nmax + 1];
    out[0] = -x.cos() / x;
    if nmax >= 1 {
        out[1] = -x.cos() / (x * x) - x.sin() / x;
    }
    for n in 1..nmax {
        let c = T::from_usize_lossy(2 * n + 1) / x;
        out[n + 1] = c * out[n] - out[n - 1];
    }
    Ok(out)
}

pub fn sph_bessel_y<T: Real>(n: usize, x: T) -> Result<T> {
    Ok(sph_bessel_y_upto(n, x)?[n])
}

/// Spherical Hankel functions of the first kind `h_0..=h_nmax` at `x > 0`.
pub fn sph_hankel_upto<T: Real>(nmax: usize, x: T) -> Result<Vec<Complex<T>>> {
    let y = sph_bessel_y_upto(nmax, x)
        .map_err(|_| Error::DomainError(format!("h_n(x) is singular for x <= 0 (x = {x})")))?;
    let j = sph_bessel_j_upto(nmax, x);
    Ok(j.into_iter().zip(y).map(|(re, im)| Complex::new(re, im)).collect())
}

pub fn sph_hankel<T: Real>(n: usize, x: T) -> Result<Complex<T>> {
    Ok(sph_hankel_upto(n, x)?[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn flat_index_is_bijective() {
        let mut i = 0;
        for n in 0..=10usize {
            for m in -(n as i64)..=n as i64 {
                let h = HarmonicIndex::new(n, m).unwrap();
                assert_eq!(h.flat(), i);
                assert_eq!(HarmonicIndex::from_flat(i), h);
                i += 1;
            }
        }
        assert_eq!(i, HarmonicIndex::count(10));
        assert!(HarmonicIndex::new(2, 3).is_err());
        assert!(sph_harmonic(2, -3, 0.0, 1.0f64).is_err());
    }

    #[test]
    fn low_order_closed_forms() {
        let y00 = sph_harmonic(0, 0, 1.3, 0.4f64).unwrap();
        assert!((y00.re - 0.5 / PI.sqrt()).abs() < 1e-15 && y00.im == 0.0);
        assert!((y00.re - 0.2820948).abs() < 1e-7);
        for &(az, pol) in &[(0.0, 0.0), (1.0, 0.7), (4.0, 2.9), (2.0, PI)] {
            let y10 = sph_harmonic(1, 0, az, pol).unwrap();
            assert!((y10.re - (3.0 / (4.0 * PI)).sqrt() * pol.cos()).abs() < 1e-15);
            let y11 = sph_harmonic(1, 1, az, pol).unwrap();
            let want = Complex::from_polar(-(3.0 / (8.0 * PI)).sqrt() * pol.sin(), az);
            assert!((y11 - want).norm() < 1e-15);
            let y22 = sph_harmonic(2, 2, az, pol).unwrap();
            let want = Complex::from_polar(0.25 * (15.0 / (2.0 * PI)).sqrt() * pol.sin().powi(2), 2.0 * az);
            assert!((y22 - want).norm() < 1e-14);
            let y2m1 = sph_harmonic(2, -1, az, pol).unwrap();
            let want = Complex::from_polar(0.5 * (15.0 / (2.0 * PI)).sqrt() * pol.sin() * pol.cos(), -az);
            assert!((y2m1 - want).norm() < 1e-14);
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(0..=20usize);
            let m = rng.gen_range(0..=n) as i64;
            let az = rng.gen_range(0.0..2.0 * PI);
            let pol = rng.gen_range(0.0..PI);
            let pos = sph_harmonic(n, m, az, pol).unwrap();
            let neg = sph_harmonic(n, -m, az, pol).unwrap();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!((neg - pos.conj() * sign).norm() <= 1e-12);
        }
    }

    #[test]
    fn table_matches_single_evaluation() {
        let all = sph_harmonics_upto(12, 0.77, 2.1f64).unwrap();
        for h in HarmonicIndex::iter_upto(12) {
            let y = sph_harmonic(h.n, h.m, 0.77, 2.1).unwrap();
            assert_eq!(all[h.flat()], y);
        }
    }

    #[test]
    fn high_orders_stay_finite() {
        let all = sph_harmonics_upto(MAX_ORDER, 0.3, 1e-3f64).unwrap();
        assert!(all.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert!(sph_harmonics_upto(MAX_ORDER + 1, 0.0, 1.0f64).is_err());
    }

    #[test]
    fn bessel_closed_forms() {
        assert_eq!(sph_bessel_j(0, 0.0f64), 1.0);
        assert_eq!(sph_bessel_j(3, 0.0f64), 0.0);
        let x = 2.0f64;
        let j1 = x.sin() / (x * x) - x.cos() / x;
        assert!((sph_bessel_j(1, x) - j1).abs() < 1e-15);
        assert!((sph_bessel_j(1, x) - 0.435398).abs() < 1e-6);
        assert!((sph_bessel_j(2, -1.5f64) - sph_bessel_j(2, 1.5)).abs() < 1e-16);
        assert!((sph_bessel_j(3, -1.5f64) + sph_bessel_j(3, 1.5)).abs() < 1e-16);
    }

    #[test]
    fn bessel_matches_high_precision_reference() {
        // (n, x, j_n, y_n) from 30-digit arithmetic
        let table = [
            (10, 1.0, 7.116552640047313024e-11, -672215008.2562084436),
            (5, 3.0, 0.016397480955999103311, -2.2470233284653900902),
            (20, 7.5, 1.245006950116147195e-8, -280735.41395771361938),
            (64, 1000.0, 0.000087315539978810241151, 0.00099722740911691858173),
            (40, 0.5, 1.4053298053951285017e-73, -1.757113594971616605e+71),
            (3, 50.0, 0.019812594595663751546, -0.0029024095417214134781),
            (64, 10.0, 3.2088265489035159366e-46, -2.4453933833599191434e+42),
        ];
        for (n, x, j, y) in table {
            assert!(rel(sph_bessel_j(n, x), j) < 1e-10, "j_{n}({x})");
            assert!(rel(sph_bessel_y(n, x).unwrap(), y) < 1e-10, "y_{n}({x})");
        }
    }

    #[test]
    fn bessel_recurrence_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let n = rng.gen_range(1..=20usize);
            let x = rng.gen_range(0.5..50.0f64);
            let j = sph_bessel_j_upto(n + 1, x);
            let lhs = j[n - 1] + j[n + 1];
            let rhs = (2 * n + 1) as f64 / x * j[n];
            let scale = j[n - 1].abs().max(j[n + 1].abs()).max(rhs.abs());
            assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1e-300), "n={n} x={x}");
        }
    }

    #[test]
    fn wronskian_identity() {
        for &x in &[0.3, 1.0, 2.7, 9.0, 33.0] {
            let j = sph_bessel_j_upto(20, x);
            let y = sph_bessel_y_upto(20, x).unwrap();
            for n in 1..=20 {
                let w = j[n] * y[n - 1] - j[n - 1] * y[n];
                assert!(rel(w, 1.0 / (x * x)) < 1e-9, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn hankel_closed_forms() {
        let h = sph_hankel(0, 1.0f64).unwrap();
        assert!((h - Complex::new(1f64.sin(), -1f64.cos())).norm() < 1e-15);
        let h = sph_hankel(0, PI).unwrap();
        assert!(h.re.abs() < 1e-15 && (h.im - 1.0 / PI).abs() < 1e-15);
        assert!(matches!(sph_hankel(0, 0.0f64), Err(Error::DomainError(_))));
        assert!(sph_hankel(2, -1.0f64).is_err());
    }

    #[test]
    fn hankel_upward_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let x = rng.gen_range(0.5..50.0f64);
            let h = sph_hankel_upto(21, x).unwrap();
            for n in 1..=20 {
                let pred = h[n] * ((2 * n + 1) as f64 / x) - h[n - 1];
                assert!((h[n + 1] - pred).norm() <= 1e-9 * h[n + 1].norm());
            }
        }
    }

    #[test]
    fn single_precision_agrees() {
        let a = sph_hankel(4, 3.5f32).unwrap();
        let b = sph_hankel(4, 3.5f64).unwrap();
        assert!(((a.re as f64 - b.re).abs() + (a.im as f64 - b.im).abs()) / b.norm() < 1e-5);
        let y = sph_harmonic(3, -2, 0.5f32, 1.2f32).unwrap();
        let yd = sph_harmonic(3, -2, 0.5f64, 1.2f64).unwrap();
        assert!((y.re as f64 - yd.re).abs() < 1e-6);
    }
}
