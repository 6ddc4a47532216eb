//! Reference geometries and closed-form or series kernels for them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Curve, Domain};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Absolute target for the geometric tail bound of every series sum.
const SERIES_TOL: f64 = 1e-17;

pub fn disc(center: Complex64, radius: f64, grid: usize) -> Result<Domain> {
    Domain::new(vec![Curve::circle(center, radius)], grid)
}

/// `{r < |z| < 1}`.
pub fn annulus(r: f64, grid: usize) -> Result<Domain> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("annulus inner radius {r} not in (0,1)")));
    }
    Domain::new(vec![Curve::circle(ZERO, 1.0), Curve::circle(ZERO, r)], grid)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Oracle {
    Disc { center: Complex64, radius: f64 },
    Annulus { r: f64, max_terms: usize },
}

/// Number of terms `N` such that the tail bound drops below the series
/// tolerance. `weighted` selects terms growing like `(n+1)·q^n`.
fn terms_needed(q: f64, c: f64, weighted: bool, max_terms: usize) -> Result<usize> {
    if !(q < 1.0) {
        return Err(Error::Truncation(format!("series ratio {q:.6} ≥ 1 (point on or outside the boundary)")));
    }
    let mut n = 0usize;
    loop {
        let bound = if weighted { weighted_tail_bound(q, c, n) } else { tail_bound(q, c, n) };
        if bound < SERIES_TOL {
            return Ok(n);
        }
        n += 1;
        if n > max_terms {
            return Err(Error::Truncation(format!("ratio {q:.6} needs more than {max_terms} terms for tail {SERIES_TOL:e}")));
        }
    }
}

/// Geometric bound on `Σ_{n>N} c·q^n`.
pub fn tail_bound(q: f64, c: f64, n: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    c * q.powi(n as i32 + 1) / (1.0 - q)
}

/// Bound on `Σ_{n>N} c·(n+1)·q^n`.
pub fn weighted_tail_bound(q: f64, c: f64, n: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    c * (n as f64 + 2.0) * q.powi(n as i32 + 1) / ((1.0 - q) * (1.0 - q))
}

/// `Σ_{n=-neg}^{pos} term(n)`, accumulated from the small ends inward.
fn bilateral(pos: usize, neg: usize, term: impl Fn(i64) -> Complex64) -> Complex64 {
    let mut acc = ZERO;
    for n in (0..=pos as i64).rev() {
        acc += term(n);
    }
    let mut low = ZERO;
    for m in (1..=neg as i64).rev() {
        low += term(-m);
    }
    acc + low
}

impl Oracle {
    pub fn disc(radius: f64, center: Complex64) -> Self {
        Oracle::Disc { center, radius }
    }

    pub fn annulus(r: f64) -> Self {
        Oracle::Annulus { r, max_terms: 100_000 }
    }

    /// Cap on the one-sided series length; exceeding it is a truncation error.
    pub fn with_max_terms(self, n: usize) -> Self {
        match self {
            Oracle::Annulus { r, .. } => Oracle::Annulus { r, max_terms: n },
            d => d,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Oracle::Disc { center, radius } => format!("disc(R={radius}, c={center})"),
            Oracle::Annulus { r, .. } => format!("annulus({r},1)"),
        }
    }

    pub fn domain(&self, grid: usize) -> Result<Domain> {
        match *self {
            Oracle::Disc { center, radius } => disc(center, radius, grid),
            Oracle::Annulus { r, .. } => annulus(r, grid),
        }
    }

    /// Geometric tail bounds `(positive side, negative side)` of the Szegő
    /// series truncated at `|n| ≤ terms`.
    pub fn szego_tail(&self, z: Complex64, w: Complex64, terms: usize) -> (f64, f64) {
        match *self {
            Oracle::Disc { .. } => (0.0, 0.0),
            Oracle::Annulus { r, .. } => {
                let p = (z * w.conj()).norm();
                (tail_bound(p, 1.0 / (2.0 * PI), terms), tail_bound(r * r / p, 1.0 / (2.0 * PI * r), terms))
            }
        }
    }

    pub fn szego(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        match *self {
            Oracle::Disc { center, radius } => {
                let (pz, pw) = ((z - center) / radius, (w - center) / radius);
                Ok(1.0 / (2.0 * PI * radius * (1.0 - pz * pw.conj())))
            }
            Oracle::Annulus { r, max_terms } => {
                let zw = z * w.conj();
                let p = zw.norm();
                let pos = terms_needed(p, 1.0 / (2.0 * PI), false, max_terms)?;
                let neg = terms_needed(r * r / p, 1.0 / (2.0 * PI * r), false, max_terms)?;
                Ok(bilateral(pos, neg, |n| zw.powi(n as i32) / (1.0 + r.powi(2 * n as i32 + 1))) / (2.0 * PI))
            }
        }
    }

    pub fn garabedian(&self, z: Complex64, a: Complex64) -> Result<Complex64> {
        let pole = 1.0 / (2.0 * PI * (z - a));
        match *self {
            Oracle::Disc { .. } => Ok(pole),
            Oracle::Annulus { r, max_terms } => {
                let (az, aa) = (z.norm(), a.norm());
                let pos = terms_needed(r * r * aa / az, r / az, false, max_terms)?;
                let neg = terms_needed(r * r * az / aa, 1.0 / (r * az), false, max_terms)?;
                let sum = bilateral(pos, neg, |n| {
                    let q = r.powi(2 * n as i32 + 1);
                    let rho = if n >= 0 { -q / (1.0 + q) } else { 1.0 / (1.0 + q) };
                    a.powi(n as i32) * z.powi(-(n as i32) - 1) * rho
                });
                Ok(pole + sum / (2.0 * PI))
            }
        }
    }

    pub fn bergman(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        match *self {
            Oracle::Disc { center, radius } => {
                let (pz, pw) = ((z - center) / radius, (w - center) / radius);
                let d = 1.0 - pz * pw.conj();
                Ok(1.0 / (PI * radius * radius * d * d))
            }
            Oracle::Annulus { r, max_terms } => {
                let zw = z * w.conj();
                let p = zw.norm();
                let pos = terms_needed(p, 1.0 / (PI * (1.0 - r * r)), true, max_terms)?;
                let neg = terms_needed(r * r / p, 1.0 / (PI * r * r * (1.0 - r * r)), true, max_terms)?;
                Ok(bilateral(pos, neg, |n| {
                    let norm2 = if n == -1 {
                        2.0 * PI * (1.0 / r).ln()
                    } else {
                        PI * (1.0 - r.powi(2 * n as i32 + 2)) / (n as f64 + 1.0)
                    };
                    zw.powi(n as i32) / norm2
                }))
            }
        }
    }

    /// Ahlfors map `f_a(z)`.
    pub fn ahlfors(&self, a: Complex64, z: Complex64) -> Result<Complex64> {
        match *self {
            Oracle::Disc { center, radius } => {
                let (pz, pa) = ((z - center) / radius, (a - center) / radius);
                Ok((pz - pa) / (1.0 - pa.conj() * pz))
            }
            Oracle::Annulus { .. } => Ok(self.szego(z, a)? / self.garabedian(z, a)?),
        }
    }

    /// Harmonic measure of the inner circle.
    pub fn harmonic_measure(&self, z: Complex64) -> Result<f64> {
        match *self {
            Oracle::Annulus { r, .. } => Ok(z.norm().ln() / r.ln()),
            Oracle::Disc { .. } => Err(Error::InvalidArgument("the disc has no inner boundary".into())),
        }
    }

    /// `F′ = 2∂ω/∂z` for the inner circle.
    pub fn harmonic_derivative(&self, z: Complex64) -> Result<Complex64> {
        match *self {
            Oracle::Annulus { r, .. } => Ok(1.0 / (z * r.ln())),
            Oracle::Disc { .. } => Err(Error::InvalidArgument("the disc has no inner boundary".into())),
        }
    }

    /// Period `(1/i)∮_{inner} F′ dz` with the inner circle clockwise.
    pub fn period(&self) -> Result<f64> {
        match *self {
            Oracle::Annulus { r, .. } => Ok(-2.0 * PI / r.ln()),
            Oracle::Disc { .. } => Err(Error::InvalidArgument("the disc has no inner boundary".into())),
        }
    }
}

/// Seeded smooth `n`-connected domain on a 256-point grid.
pub fn blob_domain(n: usize, seed: u64) -> Result<Domain> {
    blob_domain_with(n, seed, 0.08, 256)
}

/// Perturbed circles: an outer unit circle and `n−1` holes, each with
/// low-degree Fourier noise of relative size `amplitude`.
pub fn blob_domain_with(n: usize, seed: u64, amplitude: f64, grid: usize) -> Result<Domain> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidArgument(format!("blob connectivity {n} not in 1..=4")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const ATTEMPTS: usize = 16;
    let mut last = None;
    for _ in 0..ATTEMPTS {
        let mut curves = vec![perturbed_circle(&mut rng, ZERO, 1.0, amplitude)?];
        let holes = n - 1;
        for k in 0..holes {
            let (center, radius) = match holes {
                1 => (Complex64::new(0.08, -0.05), 0.3),
                _ => {
                    let angle = 2.0 * PI * k as f64 / holes as f64 + 0.3;
                    (Complex64::from_polar(0.45, angle), 0.2)
                }
            };
            curves.push(perturbed_circle(&mut rng, center, radius, amplitude)?);
        }
        match Domain::new(curves, grid) {
            Ok(d) if d.connectivity() == n => return Ok(d),
            Ok(d) => last = Some(Error::Nesting(format!("expected {n} curves, built {}", d.connectivity()))),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::InvalidArgument(format!(
        "blob validation failed after {ATTEMPTS} attempts: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

fn perturbed_circle(rng: &mut ChaCha8Rng, center: Complex64, radius: f64, amplitude: f64) -> Result<Curve> {
    const DEG: i64 = 4;
    let mut coeffs = vec![ZERO; (2 * DEG + 1) as usize];
    for m in -DEG..=DEG {
        let idx = (m + DEG) as usize;
        if m == 1 {
            coeffs[idx] = Complex64::new(radius, 0.0);
        } else if m == 0 {
            coeffs[idx] = center;
        } else {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            coeffs[idx] = c * (amplitude * radius / (m.abs() as f64 + 1.0));
        }
    }
    Curve::from_coeffs(&coeffs, DEG)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disc_bergman_at_center() {
        let k = Oracle::disc(1.0, ZERO).bergman(ZERO, ZERO).unwrap();
        assert!((k - 1.0 / PI).norm() < 1e-15);
    }

    #[test]
    fn annulus_harmonic_derivative() {
        let o = Oracle::annulus(0.5);
        let f = o.harmonic_derivative(c(0.7, 0.0)).unwrap();
        assert!((f - 1.0 / (0.7 * 0.5f64.ln())).norm() < 1e-15);
        assert!((o.period().unwrap() - 9.064720283654388).abs() < 1e-12);
    }

    #[test]
    fn sixty_term_szego_tail_inside() {
        let o = Oracle::annulus(0.5);
        for (z, w) in [(c(0.7, 0.0), c(0.7, 0.0)), (c(0.6, 0.2), c(-0.3, 0.65)), (c(0.55, 0.0), c(0.0, 0.9))] {
            let (p, n) = o.szego_tail(z, w, 60);
            assert!(p + n < 1e-15, "{p:e} {n:e}");
        }
        // on the outer circle the positive series does not converge at all
        let (p, _) = o.szego_tail(c(1.0, 0.0), c(1.0, 0.0), 60);
        assert!(p.is_nan() || p.is_infinite() || p > 1e-15);
    }

    #[test]
    fn truncation_cap_is_reported() {
        let o = Oracle::annulus(0.5).with_max_terms(60);
        assert!(o.szego(c(0.7, 0.0), c(0.7, 0.0)).is_ok());
        assert!(matches!(o.szego(c(0.999, 0.0), c(0.999, 0.0)), Err(Error::Truncation(_))));
    }

    #[test]
    fn annulus_oracles_satisfy_boundary_identity() {
        let o = Oracle::annulus(0.5);
        let d = o.domain(64).unwrap();
        let g = d.grid();
        let a = c(0.7, 0.1);
        for curve in &g.curves {
            for i in (0..g.n).step_by(7) {
                let (z, t) = (curve.z[i], curve.tangent(i));
                let s = o.szego(z, a).unwrap();
                let l = o.garabedian(z, a).unwrap();
                // conj S = (1/i) L T on the boundary
                assert!((s.conj() - l * t / Complex64::i()).norm() < 1e-12);
                let f = o.ahlfors(a, z).unwrap();
                assert!((f.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disc_oracles_satisfy_boundary_identity() {
        let o = Oracle::disc(1.5, c(0.2, -0.1));
        let d = o.domain(64).unwrap();
        let g = d.grid();
        let a = c(0.5, 0.3);
        let curve = &g.curves[0];
        for i in 0..g.n {
            let (z, t) = (curve.z[i], curve.tangent(i));
            let s = o.szego(z, a).unwrap();
            let l = o.garabedian(z, a).unwrap();
            assert!((s.conj() - l * t / Complex64::i()).norm() < 1e-12);
            assert!((o.ahlfors(a, z).unwrap() - s / l).norm() < 1e-12);
        }
    }

    #[test]
    fn annulus_szego_is_hermitian_and_positive() {
        let o = Oracle::annulus(0.5);
        let (z, w) = (c(0.6, 0.2), c(-0.3, 0.65));
        assert!((o.szego(z, w).unwrap() - o.szego(w, z).unwrap().conj()).norm() < 1e-15);
        assert!(o.szego(z, z).unwrap().re > 0.0);
        assert!((o.bergman(z, w).unwrap() - o.bergman(w, z).unwrap().conj()).norm() < 1e-13);
    }

    #[test]
    fn blob_examples_validate() {
        assert_eq!(blob_domain(2, 1).unwrap().connectivity(), 2);
        assert_eq!(blob_domain(3, 7).unwrap().connectivity(), 3);
        let a = blob_domain(3, 7).unwrap();
        let b = blob_domain(3, 7).unwrap();
        assert_eq!(a.curves()[0].coeffs(), b.curves()[0].coeffs());
    }

    #[test]
    fn large_perturbation_exercises_failure_path() {
        // 0.5 may or may not validate; a huge amplitude never does
        let _ = blob_domain_with(3, 1, 0.5, 256);
        assert!(blob_domain_with(3, 1, 6.0, 256).is_err());
    }
}
