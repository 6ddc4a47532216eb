//! Spectral boundary quadrature: closed-contour integrals, Cauchy integrals
//! with interior evaluation, and argument-principle zero location.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Grid};
use crate::spectral;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest per-curve grid used for near-boundary evaluation.
pub const MAX_UPSAMPLED: usize = 1 << 16;

/// Node spacing must be at most `dist / ratio` for Cauchy sums.
const VALUE_SPACING_RATIO: f64 = 3.0;
const DERIVATIVE_SPACING_RATIO: f64 = 6.0;

/// Complex samples of a function on every boundary curve of a domain.
pub struct BoundaryFunction {
    domain: Domain,
    values: Vec<Vec<Complex64>>,
    upsampled: Mutex<HashMap<usize, Arc<Vec<Vec<Complex64>>>>>,
}

impl Clone for BoundaryFunction {
    fn clone(&self) -> Self {
        Self { domain: self.domain.clone(), values: self.values.clone(), upsampled: Mutex::default() }
    }
}

impl std::fmt::Debug for BoundaryFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryFunction").field("curves", &self.values.len()).field("grid", &self.domain.grid_size()).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    None,
    Dz,
    Ds,
}

/// Whether interior evaluation may refine the grid near the boundary.
///
/// `Capped(n)` limits the grid to `n` nodes per curve and, like `Off`,
/// trusts the caller that the point is inside: the barycentric quotient is
/// returned even when the grid cannot resolve the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upsampling {
    Auto,
    Off,
    Capped(usize),
}

impl BoundaryFunction {
    pub fn new(domain: &Domain, values: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = domain.grid_size();
        if values.len() != domain.connectivity() || values.iter().any(|v| v.len() != n) {
            return Err(Error::GridMismatch(format!(
                "expected {} curves of {} samples, got {:?}",
                domain.connectivity(),
                n,
                values.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        Ok(Self { domain: domain.clone(), values, upsampled: Mutex::default() })
    }

    /// Sample `f(z)` at the boundary nodes.
    pub fn from_fn(domain: &Domain, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_nodes(domain, |_, _, z, _| f(z))
    }

    /// Sample `f(curve, index, z, z')` at the boundary nodes.
    pub fn from_nodes(domain: &Domain, f: impl Fn(usize, usize, Complex64, Complex64) -> Complex64) -> Self {
        let g = domain.grid();
        let values = g.curves.iter().enumerate().map(|(k, c)| (0..c.len()).map(|i| f(k, i, c.z[i], c.dz[i])).collect()).collect();
        Self { domain: domain.clone(), values, upsampled: Mutex::default() }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[Vec<Complex64>] {
        &self.values
    }

    pub fn curve(&self, k: usize) -> &[Complex64] {
        &self.values[k]
    }

    pub fn get(&self, k: usize, i: usize) -> Complex64 {
        self.values[k][i]
    }

    pub fn map(&self, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Self {
        let values =
            self.values.iter().enumerate().map(|(k, v)| v.iter().enumerate().map(|(i, x)| f(k, i, *x)).collect()).collect();
        Self { domain: self.domain.clone(), values, upsampled: Mutex::default() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        self.map(|k, i, x| f(x, other.values[k][i]))
    }

    pub fn conj(&self) -> Self {
        self.map(|_, _, x| x.conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|_, _, x| x * s)
    }

    /// `Σ coeffs[j]·fs[j]`.
    pub fn combine(domain: &Domain, fs: &[&BoundaryFunction], coeffs: &[Complex64]) -> Self {
        let g = domain.grid();
        let values = (0..domain.connectivity())
            .map(|k| (0..g.n).map(|i| fs.iter().zip(coeffs).map(|(f, c)| f.values[k][i] * c).sum()).collect())
            .collect();
        Self { domain: domain.clone(), values, upsampled: Mutex::default() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().flatten().map(|x| x.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Normalized Fourier coefficients of curve `k` (FFT order).
    pub fn fourier(&self, k: usize) -> Vec<Complex64> {
        spectral::coefficients(&self.values[k])
    }

    /// Largest top-decile coefficient over the largest coefficient, worst curve.
    pub fn tail_ratio(&self) -> f64 {
        self.values.iter().map(|v| spectral::tail_ratio(v)).fold(0.0, f64::max)
    }

    /// `d/dt` along each curve.
    pub fn d_dt(&self) -> Self {
        let values = self.values.iter().map(|v| spectral::derivative(v, 1)).collect();
        Self { domain: self.domain.clone(), values, upsampled: Mutex::default() }
    }

    /// Complex derivative along the boundary, `(d/dt)/z'`; for the trace of a
    /// holomorphic function this is the trace of its derivative.
    pub fn d_dz(&self) -> Self {
        let g = self.domain.grid();
        let dt = self.d_dt();
        dt.map(|k, i, x| x / g.curves[k].dz[i])
    }

    /// Arc-length derivative `(d/dt)/|z'|`.
    pub fn d_ds(&self) -> Self {
        let g = self.domain.grid();
        let dt = self.d_dt();
        dt.map(|k, i, x| x / g.curves[k].speed(i))
    }

    /// Spectral interpolation on curve `k` at parameter `t`.
    pub fn interpolate(&self, k: usize, t: f64) -> Complex64 {
        spectral::interpolate(&self.fourier(k), t)
    }

    /// Samples on `n` nodes per curve (cached).
    pub fn at_grid(&self, n: usize) -> Arc<Vec<Vec<Complex64>>> {
        if n == self.domain.grid_size() {
            return Arc::new(self.values.clone());
        }
        let mut cache = self.upsampled.lock().expect("upsample cache poisoned");
        cache.entry(n).or_insert_with(|| Arc::new(self.values.iter().map(|v| spectral::upsample(v, n)).collect())).clone()
    }

    /// Winding number of the sampled trace summed over curves.
    pub fn winding(&self) -> f64 {
        let n = 4 * self.domain.grid_size();
        let up = self.at_grid(n);
        up.iter().map(|v| winding_of_closed(v)).sum()
    }
}

/// Winding number of a closed sampled path about the origin.
pub fn winding_of_closed(v: &[Complex64]) -> f64 {
    let n = v.len();
    (0..n).map(|i| (v[(i + 1) % n] / v[i]).arg()).sum::<f64>() / (2.0 * PI)
}

/// Periodic trapezoid rule `Σ_k (2π/N) Σ_i f(t_i) w(t_i)`.
pub fn integrate_closed(f: &BoundaryFunction, weight: Weight) -> Complex64 {
    let g = f.domain.grid();
    integrate_curves(f, weight, &g, 0..g.curves.len())
}

/// Same as [`integrate_closed`] restricted to one curve.
pub fn integrate_curve(f: &BoundaryFunction, weight: Weight, k: usize) -> Complex64 {
    let g = f.domain.grid();
    integrate_curves(f, weight, &g, k..k + 1)
}

fn integrate_curves(f: &BoundaryFunction, weight: Weight, g: &Grid, curves: std::ops::Range<usize>) -> Complex64 {
    let dt = g.dt();
    curves
        .map(|k| {
            let c = &g.curves[k];
            (0..g.n)
                .map(|i| {
                    let w = match weight {
                        Weight::None => Complex64::new(1.0, 0.0),
                        Weight::Dz => c.dz[i],
                        Weight::Ds => Complex64::new(c.speed(i), 0.0),
                    };
                    f.values[k][i] * w
                })
                .sum::<Complex64>()
        })
        .sum::<Complex64>()
        * dt
}

/// Grid size so that the node spacing is at most `dist / ratio`.
fn grid_for_distance(domain: &Domain, z: Complex64, dist: f64, ratio: f64) -> Result<usize> {
    let base = domain.grid_size();
    let spacing = domain.spacing();
    let mut n = base;
    while spacing * base as f64 / n as f64 > dist / ratio {
        n *= 2;
        if n > MAX_UPSAMPLED {
            return Err(Error::NearBoundary { z, dist });
        }
    }
    Ok(n)
}

fn nearest_node_distance(g: &Grid, z: Complex64) -> f64 {
    g.curves.iter().flat_map(|c| c.z.iter()).map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Interior value of the holomorphic function whose boundary trace is `f`,
/// `(1/2πi)∮ f(ζ)/(ζ−z) dζ`, evaluated in barycentric form on a grid fine
/// enough for the distance of `z` to the boundary.
pub fn cauchy_eval(f: &BoundaryFunction, z: Complex64) -> Result<Complex64> {
    cauchy_eval_with(f, z, Upsampling::Auto)
}

pub fn cauchy_eval_with(f: &BoundaryFunction, z: Complex64, mode: Upsampling) -> Result<Complex64> {
    Ok(cauchy_eval_many(&[f], z, mode)?[0])
}

/// [`cauchy_eval_with`] for several traces on the same domain, sharing the
/// kernel weights.
pub fn cauchy_eval_many(fs: &[&BoundaryFunction], z: Complex64, mode: Upsampling) -> Result<Vec<Complex64>> {
    let Some(first) = fs.first() else { return Ok(Vec::new()) };
    let domain = &first.domain;
    let base = domain.grid();
    let (n, trusted) = match mode {
        Upsampling::Off => (base.n, true),
        Upsampling::Auto => {
            let dist = nearest_node_distance(&base, z);
            (grid_for_distance(domain, z, dist, VALUE_SPACING_RATIO)?, false)
        }
        Upsampling::Capped(cap) => {
            let dist = nearest_node_distance(&base, z);
            let n = grid_for_distance(domain, z, dist, VALUE_SPACING_RATIO).unwrap_or(MAX_UPSAMPLED);
            (n.min(cap.max(base.n)), true)
        }
    };
    let g = domain.grid_at(n);
    let vals: Vec<Arc<Vec<Vec<Complex64>>>> = fs.iter().map(|f| f.at_grid(n)).collect();
    let mut num = vec![ZERO; fs.len()];
    let mut den = ZERO;
    for (k, c) in g.curves.iter().enumerate() {
        for i in 0..g.n {
            let d = c.z[i] - z;
            if d == ZERO {
                return Ok(vals.iter().map(|v| v[k][i]).collect());
            }
            let w = c.dz[i] / d;
            for (acc, v) in num.iter_mut().zip(&vals) {
                *acc += v[k][i] * w;
            }
            den += w;
        }
    }
    let winding = den * g.dt() / (2.0 * PI * I);
    if !trusted && (winding - 1.0).norm() > 0.5 {
        return Err(Error::Outside { z });
    }
    Ok(num.into_iter().map(|x| x / den).collect())
}

/// `m`-th derivative of the Cauchy integral, `(m!/2πi)∮ f(ζ)/(ζ−z)^{m+1} dζ`.
/// `m = 0` is [`cauchy_eval`].
pub fn cauchy_derivative_eval(f: &BoundaryFunction, z: Complex64, m: u32) -> Result<Complex64> {
    if m == 0 {
        return cauchy_eval(f, z);
    }
    let base = f.domain.grid();
    let dist = nearest_node_distance(&base, z);
    let n = grid_for_distance(&f.domain, z, dist, DERIVATIVE_SPACING_RATIO)?;
    Ok(cauchy_sum(&f.domain.grid_at(n), &f.at_grid(n), z, m))
}

/// Plain trapezoid Cauchy sum on the base grid; valid at any point off the
/// boundary, including exterior points.
pub fn cauchy_integral(f: &BoundaryFunction, z: Complex64, m: u32) -> Complex64 {
    cauchy_sum(&f.domain.grid(), &f.values, z, m)
}

fn cauchy_sum(g: &Grid, vals: &[Vec<Complex64>], z: Complex64, m: u32) -> Complex64 {
    let fact: f64 = (1..=m).map(f64::from).product();
    let mut acc = ZERO;
    for (c, v) in g.curves.iter().zip(vals) {
        for i in 0..g.n {
            let d = c.z[i] - z;
            acc += v[i] * c.dz[i] / d.powu(m + 1);
        }
    }
    acc * (fact * g.dt()) / (2.0 * PI * I)
}

/// Interior boundary values of the Cauchy integral of an arbitrary smooth
/// density: `Φ₊(ζ₀) = f(ζ₀) + (1/2πi)∮ (f(ζ)−f(ζ₀))/(ζ−ζ₀) dζ`.
pub fn cauchy_boundary_limit(f: &BoundaryFunction) -> BoundaryFunction {
    let g = f.domain.grid();
    let ft = f.d_dt();
    let dt = g.dt();
    let nodes: Vec<(usize, usize)> = g.indices().collect();
    let flat: Vec<Complex64> = nodes
        .par_iter()
        .map(|&(k0, i0)| {
            let z0 = g.curves[k0].z[i0];
            let f0 = f.values[k0][i0];
            let mut acc = ft.values[k0][i0];
            for (k, c) in g.curves.iter().enumerate() {
                for i in 0..g.n {
                    if k == k0 && i == i0 {
                        continue;
                    }
                    acc += (f.values[k][i] - f0) * c.dz[i] / (c.z[i] - z0);
                }
            }
            f0 + acc * dt / (2.0 * PI * I)
        })
        .collect();
    let values = flat.chunks(g.n).map(<[Complex64]>::to_vec).collect();
    BoundaryFunction { domain: f.domain.clone(), values, upsampled: Mutex::default() }
}

/// Largest `|C[f](z)|` over exterior probe points (holes and outside); zero
/// for the trace of a function holomorphic in the domain.
pub fn exterior_leak(f: &BoundaryFunction, probes: &[Complex64]) -> f64 {
    probes.iter().map(|&z| cauchy_integral(f, z, 0).norm()).fold(0.0, f64::max)
}

/// Number of zeros inside the circle `|z−center| = radius`, from
/// `(1/2πi)∮ f'/f dz` with `f'` obtained spectrally from samples on the circle.
pub fn argument_principle_count(f: impl Fn(Complex64) -> Complex64, center: Complex64, radius: f64) -> Result<i64> {
    let m = 512;
    let samples: Vec<Complex64> = spectral::nodes(m).map(|t| f(center + Complex64::from_polar(radius, t))).collect();
    if samples.iter().any(|s| s.norm() == 0.0 || !s.norm().is_finite()) {
        return Err(Error::NonIntegerWinding { value: f64::NAN });
    }
    let ft = spectral::derivative(&samples, 1);
    let value: Complex64 =
        samples.iter().zip(&ft).map(|(s, d)| d / s).sum::<Complex64>() * (2.0 * PI / m as f64) / (2.0 * PI * I);
    let nearest = value.re.round();
    if (value - nearest).norm() > 0.1 {
        return Err(Error::NonIntegerWinding { value: value.re });
    }
    Ok(nearest as i64)
}

/// Axis-aligned search rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: Complex64,
    pub hi: Complex64,
}

impl Rect {
    pub fn new(lo: Complex64, hi: Complex64) -> Self {
        Self { lo, hi }
    }

    pub fn around(center: Complex64, half: f64) -> Self {
        Self { lo: center - Complex64::new(half, half), hi: center + Complex64::new(half, half) }
    }

    fn size(&self) -> f64 {
        (self.hi.re - self.lo.re).max(self.hi.im - self.lo.im)
    }

    fn center(&self) -> Complex64 {
        (self.lo + self.hi) * 0.5
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.lo.re - slack && z.re <= self.hi.re + slack && z.im >= self.lo.im - slack && z.im <= self.hi.im + slack
    }

    fn corners(&self) -> [Complex64; 4] {
        [self.lo, Complex64::new(self.hi.re, self.lo.im), self.hi, Complex64::new(self.lo.re, self.hi.im)]
    }

    /// Split off-center so that zeros on symmetric lattices do not land on edges.
    fn quarters(&self) -> [Rect; 4] {
        let x = self.lo.re + 0.4859 * (self.hi.re - self.lo.re);
        let y = self.lo.im + 0.5137 * (self.hi.im - self.lo.im);
        let m = Complex64::new(x, y);
        [
            Rect::new(self.lo, m),
            Rect::new(Complex64::new(x, self.lo.im), Complex64::new(self.hi.re, y)),
            Rect::new(m, self.hi),
            Rect::new(Complex64::new(self.lo.re, y), Complex64::new(x, self.hi.im)),
        ]
    }
}

/// Winding of `f` along the rectangle boundary by accumulated argument
/// increments, refining any step whose phase change exceeds `π/4`.
fn rect_count(f: &dyn Fn(Complex64) -> Complex64, r: &Rect) -> Option<i64> {
    fn edge(
        f: &dyn Fn(Complex64) -> Complex64,
        a: Complex64,
        fa: Complex64,
        b: Complex64,
        fb: Complex64,
        depth: u32,
    ) -> Option<f64> {
        let d = (fb / fa).arg();
        if d.abs() <= PI / 4.0 {
            return Some(d);
        }
        if depth == 0 {
            return None;
        }
        let m = (a + b) * 0.5;
        let fm = f(m);
        if fm.norm() == 0.0 || !fm.norm().is_finite() {
            return None;
        }
        Some(edge(f, a, fa, m, fm, depth - 1)? + edge(f, m, fm, b, fb, depth - 1)?)
    }
    let corners = r.corners();
    let mut total = 0.0;
    for s in 0..4 {
        let (a, b) = (corners[s], corners[(s + 1) % 4]);
        let pieces = 16;
        let mut za = a;
        let mut fa = f(za);
        for p in 1..=pieces {
            let zb = a + (b - a) * (p as f64 / pieces as f64);
            let fb = f(zb);
            if fa.norm() == 0.0 || fb.norm() == 0.0 || !fb.norm().is_finite() {
                return None;
            }
            total += edge(f, za, fa, zb, fb, 24)?;
            za = zb;
            fa = fb;
        }
    }
    let w = total / (2.0 * PI);
    let k = w.round();
    if (w - k).abs() > 1e-6 {
        return None;
    }
    Some(k as i64)
}

fn newton_polish(f: &dyn Fn(Complex64) -> Complex64, z0: Complex64, scale: f64) -> Complex64 {
    let h = 1e-6 * scale;
    let mut z = z0;
    for _ in 0..60 {
        let fz = f(z);
        let df = (f(z + h) - f(z - h)) / (2.0 * h);
        if df.norm() == 0.0 {
            break;
        }
        let step = fz / df;
        let step = if step.norm() > scale { step * (scale / step.norm()) } else { step };
        z -= step;
        if step.norm() <= 1e-15 * scale.max(z.norm()) {
            break;
        }
    }
    z
}

/// Find the `expected` zeros of `f` in `region` by quadtree subdivision
/// with argument-principle counts, then Newton polishing.
pub fn locate_zeros(f: impl Fn(Complex64) -> Complex64, region: Rect, expected: usize) -> Result<Vec<Complex64>> {
    let f = &f as &dyn Fn(Complex64) -> Complex64;
    let total = rect_count(f, &region).ok_or(Error::NonIntegerWinding { value: f64::NAN })?;
    if total < 0 || total as usize != expected {
        return Err(Error::ZeroCount { expected, found: total.max(0) as usize });
    }
    let size0 = region.size();
    let fscale = region.corners().iter().map(|&c| f(c).norm()).fold(0.0, f64::max);
    let mut zeros = Vec::new();
    let mut stack = vec![(region, total, 0u32)];
    const MAX_DEPTH: u32 = 40;
    while let Some((r, count, depth)) = stack.pop() {
        if count == 0 {
            continue;
        }
        if count == 1 && (depth >= 3 || r.size() <= 0.05 * size0) {
            let z = newton_polish(f, r.center(), r.size());
            if !r.contains(z, 0.25 * r.size()) || f(z).norm() > 1e-8 * fscale.max(f64::MIN_POSITIVE) {
                // Newton wandered: keep subdividing
                if depth >= MAX_DEPTH {
                    return Err(Error::ZeroCount { expected, found: zeros.len() });
                }
            } else {
                zeros.push(z);
                continue;
            }
        }
        if depth >= MAX_DEPTH {
            let z = r.center();
            let h = 1e-6 * r.size().max(1e-300);
            let df = (f(z + h) - f(z - h)) / (2.0 * h);
            return Err(Error::NonSimpleZero { z, derivative: df.norm() });
        }
        let quarters = r.quarters();
        let mut counts = Vec::with_capacity(4);
        for q in &quarters {
            counts.push(rect_count(f, q).ok_or(Error::NonIntegerWinding { value: f64::NAN })?);
        }
        if counts.iter().sum::<i64>() != count {
            return Err(Error::ZeroCount { expected: count as usize, found: counts.iter().sum::<i64>().max(0) as usize });
        }
        for (q, c) in quarters.into_iter().zip(counts) {
            stack.push((q, c, depth + 1));
        }
    }
    for (i, a) in zeros.iter().enumerate() {
        for b in &zeros[i + 1..] {
            if (a - b).norm() <= 1e-10 * size0 {
                return Err(Error::NonSimpleZero { z: *a, derivative: 0.0 });
            }
        }
    }
    if zeros.len() != expected {
        return Err(Error::ZeroCount { expected, found: zeros.len() });
    }
    zeros.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(zeros)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Curve;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disc(n: usize) -> Domain {
        Domain::new(vec![Curve::circle(c(0.0, 0.0), 1.0)], n).unwrap()
    }

    fn annulus(r: f64, n: usize) -> Domain {
        Domain::new(vec![Curve::circle(c(0.0, 0.0), 1.0), Curve::circle(c(0.0, 0.0), r)], n).unwrap()
    }

    #[test]
    fn closed_integrals() {
        let d = disc(64);
        let one = BoundaryFunction::from_fn(&d, |_| c(1.0, 0.0));
        assert!((integrate_closed(&one, Weight::Ds) - 2.0 * PI).norm() < 1e-13);
        let inv = BoundaryFunction::from_fn(&d, |z| 1.0 / z);
        assert!((integrate_closed(&inv, Weight::Dz) - c(0.0, 2.0 * PI)).norm() < 1e-13);
        let a = annulus(0.5, 64);
        let zbar = BoundaryFunction::from_fn(&a, |z| z.conj());
        let area = integrate_closed(&zbar, Weight::Dz) / c(0.0, 2.0);
        assert!((area - PI * 0.75).norm() < 1e-13);
    }

    #[test]
    fn cauchy_reproduces_holomorphic_traces() {
        let d = disc(64);
        let sq = BoundaryFunction::from_fn(&d, |z| z * z);
        let z = c(0.3, 0.1);
        assert!((cauchy_eval(&sq, z).unwrap() - c(0.08, 0.06)).norm() < 1e-14);
        assert!((cauchy_derivative_eval(&sq, c(0.3, 0.0), 1).unwrap() - c(0.6, 0.0)).norm() < 1e-13);

        let a = annulus(0.5, 64);
        let inv = BoundaryFunction::from_fn(&a, |z| 1.0 / z);
        assert!((cauchy_eval(&inv, c(0.7, 0.0)).unwrap() - 1.0 / 0.7).norm() < 1e-13);

        let zbar = BoundaryFunction::from_fn(&d, |z| z.conj());
        assert!(cauchy_integral(&zbar, c(0.2, -0.4), 0).norm() < 1e-14);
    }

    #[test]
    fn exponential_second_derivative_at_origin() {
        let d = disc(64);
        let e = BoundaryFunction::from_fn(&d, |z| z.exp());
        assert!((cauchy_derivative_eval(&e, c(0.0, 0.0), 2).unwrap() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn derivative_order_zero_is_cauchy_eval() {
        let a = annulus(0.5, 64);
        let f = BoundaryFunction::from_fn(&a, |z| z.exp() + 1.0 / (z * z));
        for z in [c(0.7, 0.0), c(-0.2, 0.6), c(0.0, -0.9)] {
            let x = cauchy_derivative_eval(&f, z, 0).unwrap();
            let y = cauchy_eval(&f, z).unwrap();
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn near_boundary_evaluation_upsamples() {
        let d = disc(128);
        let f = BoundaryFunction::from_fn(&d, |z| 1.0 / (z - 2.0));
        let z = c(0.0, 0.999);
        let exact = 1.0 / (z - 2.0);
        let err = (cauchy_eval(&f, z).unwrap() - exact).norm();
        assert!(err < 1e-12, "{err:e}");
        let d1 = cauchy_derivative_eval(&f, z, 1).unwrap();
        assert!((d1 + 1.0 / ((z - 2.0) * (z - 2.0))).norm() < 1e-10);
        assert!(matches!(cauchy_eval(&f, c(1.0 - 1e-9, 0.0)), Err(Error::NearBoundary { .. })));
    }

    #[test]
    fn evaluation_outside_is_rejected() {
        let a = annulus(0.5, 64);
        let f = BoundaryFunction::from_fn(&a, |z| z);
        assert!(matches!(cauchy_eval(&f, c(0.1, 0.0)), Err(Error::Outside { .. })));
    }

    #[test]
    fn boundary_limit_of_holomorphic_trace_is_itself() {
        let a = annulus(0.5, 128);
        let f = BoundaryFunction::from_fn(&a, |z| z * z + 1.0 / z);
        let lim = cauchy_boundary_limit(&f);
        for (u, v) in lim.values().iter().flatten().zip(f.values().iter().flatten()) {
            assert!((u - v).norm() < 1e-12);
        }
        // ζ̄ on the unit circle: interior limit of the Cauchy integral is 0
        let d = disc(64);
        let zbar = BoundaryFunction::from_fn(&d, |z| z.conj());
        assert!(cauchy_boundary_limit(&zbar).max_abs() < 1e-13);
    }

    #[test]
    fn argument_principle_examples() {
        assert_eq!(argument_principle_count(|z| z - 0.2, c(0.0, 0.0), 0.5).unwrap(), 1);
        assert_eq!(argument_principle_count(|z| (z - 0.2) * (z - 0.2), c(0.0, 0.0), 0.5).unwrap(), 2);
        assert_eq!(argument_principle_count(|z| z - 0.9, c(0.0, 0.0), 0.5).unwrap(), 0);
        assert!(argument_principle_count(|z| z - 0.5000001, c(0.0, 0.0), 0.5).is_err());
    }

    #[test]
    fn quadtree_finds_simple_zeros() {
        let zs = locate_zeros(|z| z * z - 0.25, Rect::new(c(-1.0, -1.0), c(1.0, 1.0)), 2).unwrap();
        assert!((zs[0] - c(-0.5, 0.0)).norm() < 1e-13);
        assert!((zs[1] - c(0.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn quadtree_reports_double_zero() {
        let r = locate_zeros(|z| (z - c(0.1, 0.2)).powu(2), Rect::new(c(-1.0, -1.0), c(1.0, 1.0)), 2);
        assert!(matches!(r, Err(Error::NonSimpleZero { .. })), "{r:?}");
    }

    #[test]
    fn quadtree_count_mismatch() {
        let r = locate_zeros(|z| z - 0.3, Rect::new(c(-1.0, -1.0), c(1.0, 1.0)), 2);
        assert!(matches!(r, Err(Error::ZeroCount { expected: 2, found: 1 })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn trapezoid_exact_on_trig_modes(k in -63i64..=63) {
                let d = disc(64);
                let f = BoundaryFunction::from_nodes(&d, |_, i, _, _| Complex64::from_polar(1.0, k as f64 * 2.0 * PI * i as f64 / 64.0));
                let v = integrate_closed(&f, Weight::None);
                let want = if k == 0 { 2.0 * PI } else { 0.0 };
                prop_assert!((v - want).norm() < 1e-12);
            }

            #[test]
            fn polynomial_traces_are_reproduced(a0 in -1.0..1.0f64, a1 in -1.0..1.0f64, a3 in -1.0..1.0f64, x in -0.15..0.15f64, y in -0.15..0.15f64) {
                let a = annulus(0.4, 256);
                let p = move |z: Complex64| a0 + a1 * z + a3 * z * z * z;
                let f = BoundaryFunction::from_fn(&a, p);
                let z = Complex64::from_polar(0.7, 0.0) + c(x, y);
                prop_assert!((cauchy_eval(&f, z).unwrap() - p(z)).norm() < 1e-12);
            }

            #[test]
            fn orientation_reversal_flips_sign(s in 0.1..3.0f64) {
                let d = disc(64);
                let rev = Domain::new(vec![Curve::circle(c(0.0, 0.0), 1.0).reversed()], 64).unwrap();
                // normalization makes both identical; a hand-reversed sum flips sign
                let f = BoundaryFunction::from_fn(&d, |z| z.conj() * s);
                let g = BoundaryFunction::from_fn(&rev, |z| z.conj() * s);
                let fwd = integrate_closed(&f, Weight::Dz);
                prop_assert!((fwd - integrate_closed(&g, Weight::Dz)).norm() < 1e-13);
                let grid = d.grid();
                let back: Complex64 = (0..64).map(|i| {
                    let j = (64 - i) % 64;
                    f.get(0, j) * (-grid.curves[0].dz[j])
                }).sum::<Complex64>() * grid.dt();
                prop_assert!((fwd + back).norm() < 1e-12);
            }

            #[test]
            fn integral_is_bilinear(a in -2.0..2.0f64, b in -2.0..2.0f64) {
                let d = annulus(0.5, 64);
                let f = BoundaryFunction::from_fn(&d, |z| z.conj() * z * z);
                let g = BoundaryFunction::from_fn(&d, |z| z.exp());
                let h = BoundaryFunction::combine(&d, &[&f, &g], &[c(a, 0.0), c(0.0, b)]);
                let lhs = integrate_closed(&h, Weight::Dz);
                let rhs = integrate_closed(&f, Weight::Dz) * a + integrate_closed(&g, Weight::Dz) * c(0.0, b);
                prop_assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }
}
