//! Bergman kernel `K(z,w) = 4πS(z,w)² + Σ A_ij F_i′(z)·conj(F_j′(w))`.
//!
//! The coefficients come from the reproducing property applied to each
//! `F_k′`, with all inner products reduced to boundary integrals:
//! `F_k′(w) − 4π·conj(q_k(w)) = Σ_j C_kj F_j′(w)`, `q_k(w) = (1/i)∮_{γ_k} S(z,w)² dz`,
//! `C = P·conj(A)`, solved by least squares over interior samples `w`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::harmonic::{self, FPrimeField, PeriodMatrix};
use crate::kernels::{KSOperator, SzegoField};
use crate::quadrature::{self, BoundaryFunction, Upsampling, Weight};

const I: Complex64 = Complex64::new(0.0, 1.0);
#[cfg(test)]
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const PI: f64 = std::f64::consts::PI;

/// Grid cap for the many evaluations of 2D verification sweeps.
const AREA_UPSAMPLING: Upsampling = Upsampling::Capped(1024);

/// Seed for the interior sample used in the coefficient least squares.
pub const DEFAULT_SAMPLE_SEED: u64 = 0x5eed_0001;

pub struct BergmanKernel {
    domain: Domain,
    op: Arc<KSOperator>,
    fprimes: Vec<FPrimeField>,
    period: PeriodMatrix,
    coeffs: DMatrix<Complex64>,
    hermitian_residual: f64,
    lsq_residual: f64,
    memo: Mutex<HashMap<(u64, u64), Arc<SzegoField>>>,
    solves: Mutex<usize>,
}

impl std::fmt::Debug for BergmanKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BergmanKernel").field("connectivity", &self.domain.connectivity()).field("coeffs", &self.coeffs).finish()
    }
}

impl BergmanKernel {
    pub fn new(domain: &Domain) -> Result<Self> {
        Self::with_operator(Arc::new(KSOperator::new(domain)?), DEFAULT_SAMPLE_SEED)
    }

    pub fn with_operator(op: Arc<KSOperator>, seed: u64) -> Result<Self> {
        let domain = op.domain().clone();
        let fprimes = harmonic::f_primes(&domain)?;
        let period = harmonic::period_matrix(&fprimes)?;
        let mut kernel = Self {
            domain,
            op,
            fprimes,
            period,
            coeffs: DMatrix::zeros(0, 0),
            hermitian_residual: 0.0,
            lsq_residual: 0.0,
            memo: Mutex::default(),
            solves: Mutex::new(0),
        };
        if !kernel.fprimes.is_empty() {
            kernel.solve_coefficients(seed)?;
        }
        Ok(kernel)
    }

    fn solve_coefficients(&mut self, seed: u64) -> Result<()> {
        let m = self.fprimes.len();
        let samples = interior_sample(&self.domain, 8 * m, 0.1, seed);
        let mut design = DMatrix::<Complex64>::zeros(samples.len(), m);
        let mut rhs = DMatrix::<Complex64>::zeros(samples.len(), m);
        for (s, &w) in samples.iter().enumerate() {
            let sw = self.szego_at(w)?;
            let sq = sw.trace().map(|_, _, v| v * v);
            for j in 0..m {
                design[(s, j)] = self.fprimes[j].eval(w)?;
            }
            for k in 0..m {
                let q = quadrature::integrate_curve(&sq, Weight::Dz, k) / I;
                rhs[(s, k)] = design[(s, k)] - 4.0 * PI * q.conj();
            }
        }
        let svd = design.clone().svd(true, true);
        let sol = svd
            .solve(&rhs, 1e-13 * svd.singular_values.max())
            .map_err(|e| Error::IllConditioned(format!("coefficient least squares: {e}")))?;
        // sol[(j,k)] = C_kj
        let fit = &design * &sol;
        let scale = rhs.iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        self.lsq_residual = (&fit - &rhs).iter().map(|x| x.norm()).fold(0.0, f64::max) / scale;
        if self.lsq_residual > 1e-6 {
            return Err(Error::Residual {
                residual: self.lsq_residual,
                tol: 1e-6,
                context: "Bergman coefficient least squares".into(),
            });
        }
        let c = sol.transpose();
        let pinv =
            self.period.matrix.clone().try_inverse().ok_or_else(|| Error::IllConditioned("period matrix is singular".into()))?;
        let a = (pinv * c).map(|x| x.conj());
        let amax = a.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1.0);
        let residual = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| (a[(i, j)] - a[(j, i)].conj()).norm())
            .fold(0.0, f64::max)
            / amax;
        self.hermitian_residual = residual;
        if residual > 1e-6 {
            return Err(Error::Residual { residual, tol: 1e-6, context: "Bergman coefficients are not Hermitian".into() });
        }
        self.coeffs = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn operator(&self) -> &Arc<KSOperator> {
        &self.op
    }

    pub fn coefficients(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn period(&self) -> &PeriodMatrix {
        &self.period
    }

    pub fn f_primes(&self) -> &[FPrimeField] {
        &self.fprimes
    }

    /// Relative Hermitian residual of the coefficients before symmetrization.
    pub fn hermitian_residual(&self) -> f64 {
        self.hermitian_residual
    }

    pub fn least_squares_residual(&self) -> f64 {
        self.lsq_residual
    }

    /// Number of distinct Szegő solves performed so far.
    pub fn solve_count(&self) -> usize {
        *self.solves.lock().expect("solve counter poisoned")
    }

    /// `S(·,w)`, solved at most once per distinct `w`.
    pub fn szego_at(&self, w: Complex64) -> Result<Arc<SzegoField>> {
        let key = (w.re.to_bits(), w.im.to_bits());
        let mut memo = self.memo.lock().expect("Szegő memo poisoned");
        if let Some(s) = memo.get(&key) {
            return Ok(s.clone());
        }
        let s = Arc::new(self.op.szego(w)?);
        *self.solves.lock().expect("solve counter poisoned") += 1;
        memo.insert(key, s.clone());
        Ok(s)
    }

    /// `F_j′(w)` for all inner curves.
    pub fn f_prime_values(&self, w: Complex64, mode: Upsampling) -> Result<Vec<Complex64>> {
        self.fprimes.iter().map(|f| quadrature::cauchy_eval_with(f.trace(), w, mode)).collect()
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        let s = self.szego_at(w)?;
        self.eval_with(&s, &self.f_prime_values(w, Upsampling::Auto)?, z, Upsampling::Auto)
    }

    /// `K(z,w)` given the solve at `w` and `F_j′(w)`.
    pub fn eval_with(&self, sw: &SzegoField, fw: &[Complex64], z: Complex64, mode: Upsampling) -> Result<Complex64> {
        let mut traces = vec![sw.trace()];
        traces.extend(self.fprimes.iter().map(|f| f.trace()));
        let v = quadrature::cauchy_eval_many(&traces, z, mode)?;
        let (s, fz) = (v[0], &v[1..]);
        let mut k = 4.0 * PI * s * s;
        for i in 0..fw.len() {
            for j in 0..fw.len() {
                k += self.coeffs[(i, j)] * fz[i] * fw[j].conj();
            }
        }
        Ok(k)
    }
}

pub fn bergman_coefficients(domain: &Domain) -> Result<DMatrix<Complex64>> {
    Ok(BergmanKernel::new(domain)?.coeffs)
}

pub fn bergman_eval(k: &BergmanKernel, z: Complex64, w: Complex64) -> Result<Complex64> {
    k.eval(z, w)
}

/// Seeded interior points at distance at least `depth·diameter` from the
/// boundary; the depth is halved until enough points qualify.
pub fn interior_sample(domain: &Domain, count: usize, depth: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = domain.bounding_box();
    let diam = domain.diameter();
    let mut depth = depth;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        for _ in 0..400 * count {
            let z = Complex64::new(rng.gen_range(lo.re..hi.re), rng.gen_range(lo.im..hi.im));
            if domain.is_inside_polygonal(z) && domain.distance_to_boundary(z).0 >= depth * diam {
                out.push(z);
                if out.len() == count {
                    break;
                }
            }
        }
        depth *= 0.5;
    }
    out
}

/// Midpoint rule on a `grid × grid` lattice over the bounding box, keeping
/// inside points; cells within reach of the boundary are split `SUB × SUB`.
#[derive(Debug, Clone)]
pub struct AreaRule {
    pub points: Vec<Complex64>,
    pub weights: Vec<f64>,
}

impl AreaRule {
    pub const SUB: usize = 8;

    pub fn new(domain: &Domain, grid: usize) -> Self {
        let (lo, hi) = domain.bounding_box();
        let pad = 1e-3 * domain.diameter();
        let (lo, hi) = (lo - Complex64::new(pad, pad), hi + Complex64::new(pad, pad));
        let hx = (hi.re - lo.re) / grid as f64;
        let hy = (hi.im - lo.im) / grid as f64;
        let reach = 0.5 * (hx * hx + hy * hy).sqrt();
        let sub = Self::SUB;
        let rows: Vec<Vec<(Complex64, f64)>> = (0..grid)
            .into_par_iter()
            .map(|r| {
                let y = lo.im + (r as f64 + 0.5) * hy;
                let mut row = Vec::new();
                for c in 0..grid {
                    let x = lo.re + (c as f64 + 0.5) * hx;
                    let z = Complex64::new(x, y);
                    if domain.distance_to_boundary(z).0 > reach {
                        if domain.is_inside_polygonal(z) {
                            row.push((z, hx * hy));
                        }
                        continue;
                    }
                    for a in 0..sub {
                        for b in 0..sub {
                            let zz = Complex64::new(
                                x - 0.5 * hx + (a as f64 + 0.5) * hx / sub as f64,
                                y - 0.5 * hy + (b as f64 + 0.5) * hy / sub as f64,
                            );
                            if domain.is_inside_polygonal(zz) {
                                row.push((zz, hx * hy / (sub * sub) as f64));
                            }
                        }
                    }
                }
                row
            })
            .collect();
        let (points, weights) = rows.into_iter().flatten().unzip();
        Self { points, weights }
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Values of `f` at every rule point, computed in parallel.
    pub fn sample<F>(&self, f: F) -> Result<Vec<Complex64>>
    where
        F: Fn(Complex64) -> Result<Complex64> + Sync,
    {
        self.points.par_iter().map(|&z| f(z)).collect()
    }

    /// `Σ w_i v_i`, summed in order.
    pub fn sum(&self, values: &[Complex64]) -> Complex64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * *w).sum()
    }

    pub fn integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(Complex64) -> Result<Complex64> + Sync,
    {
        Ok(self.sum(&self.sample(f)?))
    }
}

pub fn area_integral<F>(domain: &Domain, grid: usize, f: F) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    AreaRule::new(domain, grid).integrate(f)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ReproducingResult {
    pub integral: Complex64,
    pub expected: Complex64,
    pub residual: f64,
}

/// `|∫ f·conj(K(·,w)) dA − f(w)|` by 2D midpoint quadrature.
pub fn reproducing_check(
    k: &BergmanKernel,
    f: impl Fn(Complex64) -> Complex64 + Sync,
    w: Complex64,
    grid: usize,
) -> Result<ReproducingResult> {
    let rule = AreaRule::new(k.domain(), grid);
    Ok(reproducing_check_many(k, &rule, &[&f], w)?[0])
}

/// Several test functions against one kernel sweep `conj(K(·,w))`.
pub fn reproducing_check_many(
    k: &BergmanKernel,
    rule: &AreaRule,
    fs: &[&(dyn Fn(Complex64) -> Complex64 + Sync)],
    w: Complex64,
) -> Result<Vec<ReproducingResult>> {
    let sw = k.szego_at(w)?;
    let fw = k.f_prime_values(w, Upsampling::Auto)?;
    let kbar: Vec<Complex64> = rule.sample(|z| Ok(k.eval_with(&sw, &fw, z, AREA_UPSAMPLING)?.conj()))?;
    Ok(fs
        .iter()
        .map(|f| {
            let vals: Vec<Complex64> = rule.points.iter().zip(&kbar).map(|(z, kb)| f(*z) * kb).collect();
            let integral = rule.sum(&vals);
            let expected = f(w);
            ReproducingResult { integral, expected, residual: (integral - expected).norm() }
        })
        .collect())
}

/// `⟨F_k′, F_i′⟩` by 2D quadrature, for cross-checking the period matrix.
pub fn gram_by_quadrature(fields: &[FPrimeField], domain: &Domain, grid: usize) -> Result<DMatrix<Complex64>> {
    let rule = AreaRule::new(domain, grid);
    let vals: Vec<Vec<Complex64>> = fields
        .iter()
        .map(|f| rule.sample(|z| quadrature::cauchy_eval_with(f.trace(), z, AREA_UPSAMPLING)))
        .collect::<Result<_>>()?;
    let m = fields.len();
    Ok(DMatrix::from_fn(m, m, |k, i| {
        let prod: Vec<Complex64> = vals[k].iter().zip(&vals[i]).map(|(a, b)| a * b.conj()).collect();
        rule.sum(&prod)
    }))
}

/// Trace of a holomorphic boundary function squared, handy for callers.
pub fn square_trace(f: &BoundaryFunction) -> BoundaryFunction {
    f.map(|_, _, v| v * v)
}

/// Least-squares helper: `‖Mx − b‖/‖b‖` for a given solution.
pub fn relative_residual(m: &DMatrix<Complex64>, x: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    (m * x - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
