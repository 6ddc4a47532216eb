//! Zipped quadrature domains: the boundary Fourier coefficients of `g` plus
//! principal parts, and everything that can be rebuilt from them.
//!
//! With `Q(w) = (1/2πi)∮_{b g(Ω)} ζ̄/(ζ−w) dζ` the Schwarz-type function of
//! `g(Ω)` is `h = Σ P_j + Q`, and the reflected function on `Ω` is
//! `H = P + (1/2πi)∮_{bΩ} conj(g(ζ))/(ζ−z) dζ`. Both follow from the Cauchy
//! integral of a principal part over the boundary vanishing when all of its
//! poles lie inside.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bergman::BergmanKernel;
use crate::error::{Error, Result};
use crate::geometry::{Curve, Domain};
use crate::gustafsson::{self, GustafssonMap, PrincipalPart, Variant};
use crate::io::DomainSpec;
use crate::kernels::require_interior;
use crate::quadrature::{self, BoundaryFunction};
use crate::spectral;

/// Fourier coefficients of `g` below this fraction of the largest are dropped.
pub const TAIL: f64 = 1e-12;
/// Smallest singular value drop (between consecutive degrees) that counts
/// as a detected relation.
pub const DEGREE_DROP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    /// Connectivity.
    pub n: usize,
    pub grid: usize,
    #[serde(flatten)]
    pub variant: Variant,
    pub base: Complex64,
    /// `Ω` in canonical curve order; `g_coeffs[k]` belongs to curve `k`.
    pub domain: DomainSpec,
}

/// `g_coeffs[k]` lists `c_{-M..M}` of `g(z_k(t)) = Σ c_m e^{imt}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ZipArchive {
    pub g_coeffs: Vec<Vec<Complex64>>,
    pub h_poles: Vec<PrincipalPart>,
    pub H_poles: Vec<PrincipalPart>,
    pub meta: ArchiveMeta,
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct ArchiveFile {
    g_coeffs: Vec<Vec<Complex64>>,
    h_poles: Vec<PrincipalPart>,
    H_poles: Vec<PrincipalPart>,
    meta: ArchiveMeta,
    checksum: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl ZipArchive {
    fn payload(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("archive serializes")
    }

    /// SHA-256 of the compact JSON payload.
    pub fn checksum(&self) -> String {
        hex(&Sha256::digest(self.payload()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let file = ArchiveFile {
            g_coeffs: self.g_coeffs.clone(),
            h_poles: self.h_poles.clone(),
            H_poles: self.H_poles.clone(),
            meta: self.meta.clone(),
            checksum: self.checksum(),
        };
        let mut out = serde_json::to_vec(&file).expect("archive serializes");
        out.push(b'\n');
        out
    }

    /// Parse and verify. Unreadable or truncated input is a checksum failure.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let file: ArchiveFile = serde_json::from_slice(bytes).map_err(|e| Error::Checksum {
            expected: "a complete archive".into(),
            computed: format!("unreadable input ({e})"),
        })?;
        let archive = Self { g_coeffs: file.g_coeffs, h_poles: file.h_poles, H_poles: file.H_poles, meta: file.meta };
        let computed = archive.checksum();
        if computed != file.checksum {
            return Err(Error::Checksum { expected: file.checksum, computed });
        }
        Ok(archive)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        crate::io::write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    /// Total boundary nodes of the grid the archive was made on.
    pub fn total_nodes(&self) -> usize {
        self.meta.n * self.meta.grid
    }

    /// Size of a dense complex kernel table on the boundary grid
    /// (16 bytes per entry) over the serialized archive size.
    pub fn compression_ratio(&self) -> f64 {
        let raw = 16.0 * (self.total_nodes() as f64).powi(2);
        raw / self.to_bytes().len() as f64
    }

    pub fn unzip(&self) -> Result<Unzipped> {
        Unzipped::new(self)
    }
}

/// Centered coefficients `c_{-M..M}` with everything beyond `M` below
/// `TAIL` relative to the largest.
fn truncated_coefficients(samples: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = samples.len();
    let c = spectral::coefficients(samples);
    let cmax = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let m = (0..n)
        .filter(|&k| c[k].norm() > TAIL * cmax)
        .map(|k| spectral::frequency(k, n).unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    if 2 * m >= n {
        return Err(Error::Invariant(format!("g is not resolved on {n} points (tail reaches the Nyquist mode)")));
    }
    Ok((-(m as i64)..=m as i64).map(|j| c[j.rem_euclid(n as i64) as usize]).collect())
}

pub fn pack(g: &GustafssonMap) -> Result<ZipArchive> {
    let domain = g.domain();
    let g_coeffs =
        (0..domain.connectivity()).map(|k| truncated_coefficients(g.g_trace().curve(k))).collect::<Result<Vec<_>>>()?;
    let (h_poles, big_h) = gustafsson::principal_parts(g, 1.0)?;
    Ok(ZipArchive {
        g_coeffs,
        h_poles,
        H_poles: big_h,
        meta: ArchiveMeta {
            n: domain.connectivity(),
            grid: domain.grid_size(),
            variant: g.variant(),
            base: g.base(),
            domain: DomainSpec::from_domain(domain),
        },
    })
}

/// The image domain `g(Ω)` with curves given by the archived coefficients.
pub fn image_domain(archive: &ZipArchive, grid: usize) -> Result<Domain> {
    let curves = archive.g_coeffs.iter().map(|c| Curve::from_coeffs(c, (c.len() / 2) as i64)).collect::<Result<Vec<_>>>()?;
    Domain::new(curves, grid).map_err(|e| Error::Injectivity(format!("image boundary is not a valid domain: {e}")))
}

/// `Q(w) = (1/2πi)∮_{b D} ζ̄/(ζ−w) dζ` for `w` inside `D`.
pub fn q_transform(image: &Domain, w: Complex64) -> Result<Complex64> {
    quadrature::cauchy_eval(&BoundaryFunction::from_fn(image, |z| z.conj()), w)
}

/// Evaluators rebuilt from an archive.
#[derive(Debug)]
pub struct Unzipped {
    archive: ZipArchive,
    domain: Domain,
    image: Domain,
    g: BoundaryFunction,
    g_conj: BoundaryFunction,
    zeta_conj: BoundaryFunction,
}

impl Unzipped {
    pub fn new(archive: &ZipArchive) -> Result<Self> {
        let grid = archive.meta.grid;
        let domain = archive.meta.domain.build_with_grid(grid)?;
        if archive.g_coeffs.len() != domain.connectivity() {
            return Err(Error::GridMismatch(format!(
                "archive has {} coefficient lists for {} curves",
                archive.g_coeffs.len(),
                domain.connectivity()
            )));
        }
        let image = image_domain(archive, grid)?;
        // g on the Ω grid is the image curve sampled at the same parameters
        let samples = image.grid().curves.iter().map(|c| c.z.clone()).collect();
        let g = BoundaryFunction::new(&domain, samples)?;
        let g_conj = g.conj();
        let zeta_conj = BoundaryFunction::from_fn(&image, |z| z.conj());
        Ok(Self { archive: archive.clone(), domain, image, g, g_conj, zeta_conj })
    }

    pub fn archive(&self) -> &ZipArchive {
        &self.archive
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn image(&self) -> &Domain {
        &self.image
    }

    /// Boundary values of `g` on the grid of `Ω`.
    pub fn g_trace(&self) -> &BoundaryFunction {
        &self.g
    }

    pub fn q(&self, w: Complex64) -> Result<Complex64> {
        quadrature::cauchy_eval(&self.zeta_conj, w)
    }

    /// Schwarz-type function of `g(Ω)`.
    pub fn h(&self, w: Complex64) -> Result<Complex64> {
        let p: Complex64 = self.archive.h_poles.iter().map(|pp| pp.eval(w)).sum();
        Ok(p + self.q(w)?)
    }

    pub fn g(&self, z: Complex64) -> Result<Complex64> {
        quadrature::cauchy_eval(&self.g, z)
    }

    pub fn g_prime(&self, z: Complex64) -> Result<Complex64> {
        require_interior(&self.domain, z)?;
        quadrature::cauchy_derivative_eval(&self.g, z, 1)
    }

    /// Reflected function on `Ω` (boundary values `conj g`).
    #[allow(non_snake_case)]
    pub fn H(&self, z: Complex64) -> Result<Complex64> {
        let p: Complex64 = self.archive.H_poles.iter().map(|pp| pp.eval(z)).sum();
        Ok(p + quadrature::cauchy_eval(&self.g_conj, z)?)
    }
}

pub fn unzip_h(archive: &ZipArchive, w: Complex64) -> Result<Complex64> {
    archive.unzip()?.h(w)
}

pub fn unzip_gprime(archive: &ZipArchive, z: Complex64) -> Result<Complex64> {
    archive.unzip()?.g_prime(z)
}

#[allow(non_snake_case)]
pub fn unzip_H(archive: &ZipArchive, z: Complex64) -> Result<Complex64> {
    archive.unzip()?.H(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullbackReport {
    pub pairs: usize,
    /// `max |K_Ω(z,w) − g′(z)·conj(g′(w))·K_{g(Ω)}(g(z),g(w))|`.
    pub residual: f64,
    /// Same, divided by `max |K_Ω(z,w)|` over the pairs.
    pub relative: f64,
}

/// Bergman transformation check over all pairs drawn from `points`.
pub fn bergman_pullback_check(un: &Unzipped, points: &[Complex64]) -> Result<PullbackReport> {
    let k_dom = BergmanKernel::new(&un.domain)?;
    let k_img = BergmanKernel::new(&un.image)?;
    let images = points.iter().map(|&z| Ok((un.g(z)?, un.g_prime(z)?))).collect::<Result<Vec<_>>>()?;
    let mut residual = 0.0f64;
    let mut scale = 0.0f64;
    let mut pairs = 0;
    for (i, &z) in points.iter().enumerate() {
        for (j, &w) in points.iter().enumerate().skip(i) {
            let (gz, dz) = images[i];
            let (gw, dw) = images[j];
            let lhs = k_dom.eval(z, w)?;
            let rhs = dz * dw.conj() * k_img.eval(gz, gw)?;
            residual = residual.max((lhs - rhs).norm());
            scale = scale.max(lhs.norm());
            pairs += 1;
        }
    }
    Ok(PullbackReport { pairs, residual, relative: residual / scale.max(f64::MIN_POSITIVE) })
}

/// Unit-norm polynomial `Σ q_st u^s v^t` (total degree ≤ d) that is smallest
/// on the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicRelation {
    pub degree: usize,
    /// `(s, t)` for each coefficient.
    pub exponents: Vec<(u32, u32)>,
    pub coeffs: Vec<Complex64>,
    /// `max_i |Σ q_st u_i^s v_i^t|`.
    pub residual: f64,
    /// Singular values of the scaled monomial matrix over the largest, ascending.
    pub singular_values: Vec<f64>,
    /// Involves both variables.
    pub nontrivial: bool,
}

impl AlgebraicRelation {
    pub fn smallest_singular(&self) -> f64 {
        self.singular_values[0]
    }

    /// Ratio of the second-smallest to the smallest singular value.
    pub fn gap(&self) -> f64 {
        self.singular_values.get(1).map_or(f64::INFINITY, |s| s / self.singular_values[0].max(f64::MIN_POSITIVE))
    }

    pub fn eval(&self, u: Complex64, v: Complex64) -> Complex64 {
        self.exponents.iter().zip(&self.coeffs).map(|(&(s, t), q)| q * u.powu(s) * v.powu(t)).sum()
    }

    pub fn coeff(&self, s: u32, t: u32) -> Complex64 {
        self.exponents.iter().position(|&e| e == (s, t)).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }
}

/// Monomials of total degree ≤ d, ordered by degree then by power of `v`.
pub fn exponents(d: usize) -> Vec<(u32, u32)> {
    (0..=d as u32).flat_map(|k| (0..=k).map(move |t| (k - t, t))).collect()
}

fn scale_of(x: &[Complex64]) -> f64 {
    let s = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Smallest right singular vector and the ascending relative singular values.
fn null_vector(a: &DMatrix<Complex64>) -> (Vec<Complex64>, Vec<f64>) {
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let sv = &svd.singular_values;
    let imin = (0..sv.len()).min_by(|&i, &j| sv[i].total_cmp(&sv[j])).unwrap();
    let smax = sv.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut rel: Vec<f64> = sv.iter().map(|s| s / smax).collect();
    rel.sort_by(f64::total_cmp);
    (vt.row(imin).iter().map(|x| x.conj()).collect(), rel)
}

fn unit(mut q: Vec<Complex64>) -> Vec<Complex64> {
    // fix the phase on the largest coefficient so fits are reproducible
    let (imax, _) = q.iter().enumerate().fold((0, 0.0), |acc, (i, x)| if x.norm() > acc.1 { (i, x.norm()) } else { acc });
    let norm = q.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let phase = q[imax].conj() / q[imax].norm();
    q.iter_mut().for_each(|x| *x *= phase / norm);
    q
}

/// Fit a relation of total degree ≤ `d` to paired samples.
pub fn fit_algebraic_relation(u: &[Complex64], v: &[Complex64], d: usize) -> Result<AlgebraicRelation> {
    if u.len() != v.len() {
        return Err(Error::InvalidArgument("sample lists differ in length".into()));
    }
    if d == 0 || u.len() < 3 * (d + 1) * (d + 1) {
        return Err(Error::InvalidArgument(format!(
            "degree {d} needs at least {} samples, got {}",
            3 * (d + 1) * (d + 1),
            u.len()
        )));
    }
    let ex = exponents(d);
    let (su, sv) = (scale_of(u), scale_of(v));
    let a = DMatrix::from_fn(u.len(), ex.len(), |i, c| {
        let (s, t) = ex[c];
        (u[i] / su).powu(s) * (v[i] / sv).powu(t)
    });
    let (q, singular_values) = null_vector(&a);
    // back to unscaled variables
    let q = unit(q.iter().zip(&ex).map(|(x, &(s, t))| x / (su.powi(s as i32) * sv.powi(t as i32))).collect());
    let mut rel = AlgebraicRelation { degree: d, exponents: ex, coeffs: q, residual: 0.0, singular_values, nontrivial: false };
    rel.residual = u.iter().zip(v).map(|(&x, &y)| rel.eval(x, y).norm()).fold(0.0, f64::max);
    let lead = rel.coeffs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let uses = |f: fn(&(u32, u32)) -> bool| rel.exponents.iter().zip(&rel.coeffs).any(|(e, q)| f(e) && q.norm() > 1e-8 * lead);
    rel.nontrivial = uses(|e| e.0 > 0) && uses(|e| e.1 > 0);
    Ok(rel)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeTrial {
    pub degree: usize,
    pub smallest_singular: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSearch {
    pub trials: Vec<DegreeTrial>,
    /// The first relation whose smallest singular value dropped by
    /// `DEGREE_DROP` against the previous degree.
    pub relation: Option<AlgebraicRelation>,
}

/// Raise the degree until the smallest singular value drops by six orders.
/// Two singular values dropping together is an ambiguous rank decision.
pub fn detect_relation(u: &[Complex64], v: &[Complex64], max_degree: usize) -> Result<DegreeSearch> {
    let mut trials = Vec::new();
    let mut prev = 1.0;
    for d in 1..=max_degree {
        if u.len() < 3 * (d + 1) * (d + 1) {
            break;
        }
        let rel = fit_algebraic_relation(u, v, d)?;
        let smin = rel.smallest_singular();
        trials.push(DegreeTrial { degree: d, smallest_singular: smin, residual: rel.residual });
        if smin <= DEGREE_DROP * prev {
            let second = rel.singular_values.get(1).copied().unwrap_or(f64::INFINITY);
            if second <= DEGREE_DROP * prev {
                return Err(Error::Ambiguous(format!(
                    "at degree {d} two singular values fell below {:.3e} ({smin:.3e}, {second:.3e}; gap {:.3e})",
                    DEGREE_DROP * prev,
                    rel.gap()
                )));
            }
            return Ok(DegreeSearch { trials, relation: Some(rel) });
        }
        prev = smin;
    }
    Ok(DegreeSearch { trials, relation: None })
}

/// `T² ≈ A(z,z̄)/B(z,z̄)` with `A`, `B` of total degree ≤ d, as the unit null
/// vector of `[A | −T²B]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientFit {
    pub degree: usize,
    pub exponents: Vec<(u32, u32)>,
    pub numerator: Vec<Complex64>,
    pub denominator: Vec<Complex64>,
    /// `max |A − T²B|` with `‖(A, B)‖ = 1`.
    pub residual: f64,
    pub smallest_singular: f64,
}

pub fn fit_quotient(z: &[Complex64], target: &[Complex64], d: usize) -> Result<QuotientFit> {
    let ex = exponents(d);
    let m = ex.len();
    if z.len() != target.len() || z.len() < 6 * m {
        return Err(Error::InvalidArgument(format!("quotient fit of degree {d} needs {} paired samples", 6 * m)));
    }
    let s = scale_of(z);
    let mono = |i: usize, c: usize| {
        let (a, b) = ex[c];
        let w = z[i] / s;
        w.powu(a) * w.conj().powu(b)
    };
    let a = DMatrix::from_fn(z.len(), 2 * m, |i, c| if c < m { mono(i, c) } else { -target[i] * mono(i, c - m) });
    let (q, sv) = null_vector(&a);
    let q = unit(q);
    let residual = (0..z.len()).map(|i| (0..2 * m).map(|c| q[c] * a[(i, c)]).sum::<Complex64>().norm()).fold(0.0, f64::max);
    Ok(QuotientFit {
        degree: d,
        exponents: ex,
        numerator: q[..m].to_vec(),
        denominator: q[m..].to_vec(),
        residual,
        smallest_singular: sv[0],
    })
}

/// Boundary samples `(z, z̄)` and the squared unit tangent of every curve.
pub fn boundary_samples(domain: &Domain) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let grid = domain.grid();
    let mut z = Vec::new();
    let mut t2 = Vec::new();
    for c in &grid.curves {
        for i in 0..c.len() {
            z.push(c.z[i]);
            let t = c.tangent(i);
            t2.push(t * t);
        }
    }
    let zb = z.iter().map(|x| x.conj()).collect();
    (z, zb, t2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gustafsson::build_g_16;
    use crate::testdomains;
    use std::sync::OnceLock;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disc_archive() -> &'static ZipArchive {
        static A: OnceLock<ZipArchive> = OnceLock::new();
        A.get_or_init(|| {
            let d = testdomains::disc(c(0.0, 0.0), 1.0, 64).unwrap();
            pack(&build_g_16(&d, c(0.0, 0.0), 1e-8).unwrap()).unwrap()
        })
    }

    #[test]
    fn disc_identity_archive() {
        let a = disc_archive();
        assert_eq!(a.g_coeffs.len(), 1);
        let g = &a.g_coeffs[0];
        assert_eq!(g.len(), 3);
        assert!((g[2] - 1.0).norm() < 1e-12 && g[0].norm() < 1e-12 && g[1].norm() < 1e-12);
        assert_eq!(a.h_poles.len(), 1);
        assert!(a.h_poles[0].w.norm() < 1e-10);
        assert!((a.h_poles[0].p[0] - 1.0).norm() < 1e-10);
        let un = a.unzip().unwrap();
        assert!(un.q(c(0.3, -0.2)).unwrap().norm() < 1e-10);
        assert!((un.h(c(0.5, 0.0)).unwrap() - 2.0).norm() < 1e-10);
        let z = c(-0.2, 0.45);
        assert!((un.H(z).unwrap() - 1.0 / z).norm() < 1e-10);
        assert!((un.g_prime(z).unwrap() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn q_transform_of_shifted_disc_is_conj_center() {
        let center = c(0.3, -0.4);
        let d = testdomains::disc(center, 0.7, 64).unwrap();
        for w in [center, center + c(0.2, 0.1), center + c(-0.25, 0.2)] {
            let e = (q_transform(&d, w).unwrap() - center.conj()).norm();
            assert!(e < 1e-12, "{w} {e:e}");
        }
    }

    #[test]
    fn quadratic_map_derivative() {
        // archive by hand: g(z) = z + 0.1 z² on the unit disc
        let mut a = disc_archive().clone();
        a.g_coeffs = vec![vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.0)]];
        let un = a.unzip().unwrap();
        assert!((un.g_prime(c(0.3, 0.0)).unwrap() - 1.06).norm() < 1e-12);
        let z = c(0.1, 0.4);
        assert!((un.g(z).unwrap() - (z + 0.1 * z * z)).norm() < 1e-12);
    }

    #[test]
    fn quadratic_map_pullback() {
        let mut a = disc_archive().clone();
        a.g_coeffs = vec![vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.0)]];
        let un = a.unzip().unwrap();
        let pts = [c(0.1, 0.2), c(-0.3, 0.1), c(0.2, -0.4)];
        let rep = bergman_pullback_check(&un, &pts).unwrap();
        assert_eq!(rep.pairs, 6);
        assert!(rep.residual <= 1e-6, "{rep:?}");
    }

    #[test]
    fn identity_pullback_is_self_consistent() {
        let un = disc_archive().unzip().unwrap();
        let rep = bergman_pullback_check(&un, &[c(0.1, 0.2), c(-0.5, 0.1)]).unwrap();
        assert!(rep.residual <= 1e-8, "{rep:?}");
    }

    #[test]
    fn archive_bytes_round_trip() {
        let a = disc_archive();
        let bytes = a.to_bytes();
        let b = ZipArchive::from_bytes(&bytes).unwrap();
        assert_eq!(&b, a);
        assert_eq!(b.to_bytes(), bytes);
    }

    #[test]
    fn corrupt_archive_fails_checksum() {
        let bytes = disc_archive().to_bytes();
        let cut = &bytes[..bytes.len() / 2];
        assert!(matches!(ZipArchive::from_bytes(cut), Err(Error::Checksum { .. })));
        let text = String::from_utf8(bytes).unwrap().replacen("\"grid\":64", "\"grid\":128", 1);
        assert!(matches!(ZipArchive::from_bytes(text.as_bytes()), Err(Error::Checksum { .. })));
    }

    #[test]
    fn unit_circle_relation() {
        let d = testdomains::disc(c(0.0, 0.0), 1.0, 64).unwrap();
        let (z, zb, _) = boundary_samples(&d);
        let s = detect_relation(&z, &zb, 4).unwrap();
        let rel = s.relation.unwrap();
        assert_eq!(rel.degree, 2);
        assert!(rel.residual <= 1e-12);
        assert!(rel.nontrivial);
        let q11 = rel.coeff(1, 1);
        let q00 = rel.coeff(0, 0);
        assert!((q00 / q11 + 1.0).norm() < 1e-12);
        assert!((q11.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn annulus_joint_boundary_needs_degree_four() {
        let r: f64 = 0.5;
        let d = testdomains::annulus(r, 64).unwrap();
        let (z, zb, _) = boundary_samples(&d);
        let two = fit_algebraic_relation(&z, &zb, 2).unwrap();
        assert!(two.residual >= 1e-2, "{}", two.residual);
        let s = detect_relation(&z, &zb, 6).unwrap();
        let rel = s.relation.unwrap();
        assert_eq!(rel.degree, 4);
        assert!(rel.residual <= 1e-12);
        // (z z̄ − 1)(z z̄ − r²) = z²z̄² − (1 + r²) z z̄ + r²
        let lead = rel.coeff(2, 2);
        assert!((rel.coeff(1, 1) / lead + (1.0 + r * r)).norm() < 1e-10);
        assert!((rel.coeff(0, 0) / lead - r * r).norm() < 1e-10);
        let rest: f64 = rel
            .exponents
            .iter()
            .zip(&rel.coeffs)
            .filter(|(e, _)| !matches!(e, (2, 2) | (1, 1) | (0, 0)))
            .map(|(_, q)| q.norm())
            .fold(0.0, f64::max);
        assert!(rest < 1e-10);
    }

    #[test]
    fn tangent_square_of_annulus() {
        // T² = −z/z̄ on both circles
        let d = testdomains::annulus(0.5, 64).unwrap();
        let (z, _, t2) = boundary_samples(&d);
        let f = fit_quotient(&z, &t2, 1).unwrap();
        assert!(f.residual < 1e-12, "{}", f.residual);
        let num = f.numerator[1];
        let den = f.denominator[2];
        assert!((num / den + 1.0).norm() < 1e-12);
    }

    #[test]
    fn four_points_give_an_ambiguous_conic() {
        // four points in general position lie on a pencil of conics
        let pts = [c(1.0, 0.0), c(-0.3, 0.8), c(0.2, -0.9), c(-0.7, -0.4)];
        let w = [c(0.5, 0.1), c(-0.2, 0.6), c(0.9, 0.3), c(0.1, -0.8)];
        let u: Vec<Complex64> = (0..40).map(|i| pts[i % 4]).collect();
        let v: Vec<Complex64> = (0..40).map(|i| w[i % 4]).collect();
        match detect_relation(&u, &v, 3) {
            Err(Error::Ambiguous(msg)) => assert!(msg.contains("degree 2"), "{msg}"),
            other => panic!("expected an ambiguous rank decision, got {other:?}"),
        }
    }

    #[test]
    fn too_few_samples() {
        let z = vec![c(1.0, 0.0); 10];
        assert!(matches!(fit_algebraic_relation(&z, &z, 2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn truncation_keeps_resolved_modes() {
        let n = 64;
        let s: Vec<Complex64> =
            spectral::nodes(n).map(|t| Complex64::from_polar(1.0, t) + 0.25 * Complex64::from_polar(1.0, -2.0 * t)).collect();
        let c = truncated_coefficients(&s).unwrap();
        assert_eq!(c.len(), 5);
        assert!((c[0] - 0.25).norm() < 1e-14 && (c[3] - 1.0).norm() < 1e-14);
    }
}
