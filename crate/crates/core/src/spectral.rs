//! Trigonometric interpolation on uniform periodic grids.
//!
//! Samples `f(t_i)`, `t_i = 2πi/N`, are converted to coefficients of
//! `Σ_{|m|<N/2} f̂_m e^{imt}` with the Nyquist mode split evenly between
//! `±N/2`, so derivatives and interpolants are real when the data are.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Signed frequency of FFT bin `k` for a grid of `n` points.
#[inline]
pub fn frequency(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Normalized Fourier coefficients in FFT order: `f_i = Σ_k c_k e^{i m_k t_i}`.
pub fn coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    plan(n, false).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Inverse of [`coefficients`].
pub fn synthesize(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    plan(buf.len(), true).process(&mut buf);
    buf
}

/// `d^order/dt^order` of the trigonometric interpolant, sampled on the same grid.
pub fn derivative(samples: &[Complex64], order: u32) -> Vec<Complex64> {
    let n = samples.len();
    let mut c = coefficients(samples);
    for (k, ck) in c.iter_mut().enumerate() {
        let m = frequency(k, n);
        if n.is_multiple_of(2) && k == n / 2 && order % 2 == 1 {
            // odd derivatives of the split Nyquist mode cancel
            *ck = Complex64::new(0.0, 0.0);
            continue;
        }
        *ck *= Complex64::new(0.0, m as f64).powu(order);
    }
    synthesize(&c)
}

/// Resample the interpolant on a finer uniform grid of `m ≥ n` points.
pub fn upsample(samples: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = samples.len();
    if m == n {
        return samples.to_vec();
    }
    assert!(m > n, "upsample target {m} below source {n}");
    let c = coefficients(samples);
    let mut big = vec![Complex64::new(0.0, 0.0); m];
    for (k, ck) in c.iter().enumerate() {
        let f = frequency(k, n);
        if n.is_multiple_of(2) && k == n / 2 {
            big[n / 2] += ck * 0.5;
            big[m - n / 2] += ck * 0.5;
            continue;
        }
        let idx = if f >= 0 { f as usize } else { (m as i64 + f) as usize };
        big[idx] += ck;
    }
    synthesize(&big)
}

/// Evaluate the trigonometric interpolant at an arbitrary parameter.
pub fn interpolate(coeffs: &[Complex64], t: f64) -> Complex64 {
    let n = coeffs.len();
    coeffs
        .iter()
        .enumerate()
        .map(|(k, ck)| {
            if n.is_multiple_of(2) && k == n / 2 {
                let m = (n / 2) as f64;
                ck * (m * t).cos()
            } else {
                ck * Complex64::from_polar(1.0, frequency(k, n) as f64 * t)
            }
        })
        .sum()
}

/// Ratio of the largest coefficient in the top frequency decile to the largest overall.
pub fn tail_ratio(samples: &[Complex64]) -> f64 {
    let n = samples.len();
    let c = coefficients(samples);
    let max = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let cutoff = (0.45 * n as f64) as i64;
    let tail = c.iter().enumerate().filter(|(k, _)| frequency(*k, n).abs() >= cutoff).map(|(_, x)| x.norm()).fold(0.0, f64::max);
    tail / max
}

/// Uniform periodic nodes `2πi/n`.
pub fn nodes(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| 2.0 * PI * i as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        nodes(n).map(f).collect()
    }

    #[test]
    fn derivative_of_trig_polynomial_is_exact() {
        let f = |t: f64| Complex64::new((3.0 * t).cos(), (2.0 * t).sin());
        let df = |t: f64| Complex64::new(-3.0 * (3.0 * t).sin(), 2.0 * (2.0 * t).cos());
        let d = derivative(&sample(32, f), 1);
        for (x, t) in d.iter().zip(nodes(32)) {
            assert!((x - df(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn upsample_reproduces_smooth_function() {
        let f = |t: f64| Complex64::new(0.0, 1.0 * t).exp().exp();
        let up = upsample(&sample(64, f), 256);
        for (x, t) in up.iter().zip(nodes(256)) {
            assert!((x - f(t)).norm() < 1e-13);
        }
    }

    #[test]
    fn interpolate_matches_between_nodes() {
        let f = |t: f64| Complex64::new(t.cos(), 0.0) / (1.5 - t.sin());
        let c = coefficients(&sample(128, f));
        for t in [0.1, 1.234, 5.9] {
            assert!((interpolate(&c, t) - f(t)).norm() < 1e-12);
        }
    }
}
