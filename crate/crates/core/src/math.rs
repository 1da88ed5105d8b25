//! Small dense-vector helpers.
//!
//! Transcendental functions go through `libm` so results are identical on
//! every platform and with or without `std`.

use alloc::vec::Vec;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dot product of an f64 query against an f32 row, accumulated in f64.
#[inline]
pub fn dot_mixed(q: &[f64], row: &[f32]) -> f64 {
    debug_assert_eq!(q.len(), row.len());
    q.iter().zip(row).map(|(x, &y)| x * f64::from(y)).sum()
}

/// Single-precision dot product over eight lanes, for fast prefiltering.
/// Its error is at most `(len + 1)·2⁻²⁴·‖a‖·‖b‖` plus lane reassociation,
/// which [`f32_dot_slack`] bounds.
#[inline]
pub fn dot_f32(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f32; 8];
    let (ac, bc) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f32 = ac.remainder().iter().zip(bc.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ac.zip(bc) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f32>() + tail
}

/// Safe gap between [`dot_f32`] of unit vectors and the exact value.
pub fn f32_dot_slack(len: usize) -> f64 {
    4.0 * (len as f64 + 2.0) * f64::from(f32::EPSILON)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn norm_f32(a: &[f32]) -> f64 {
    sqrt(a.iter().map(|&x| f64::from(x) * f64::from(x)).sum())
}

/// Returns `a / ‖a‖`, or `None` when the norm is zero or not finite.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(a.iter().map(|x| x / n).collect())
    } else {
        None
    }
}

pub fn to_f64(a: &[f32]) -> Vec<f64> {
    a.iter().map(|&x| f64::from(x)).collect()
}

pub fn to_f32(a: &[f64]) -> Vec<f32> {
    a.iter().map(|&x| x as f32).collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    sqrt(ss / (xs.len() - 1) as f64)
}
