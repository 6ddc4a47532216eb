//! Harmonic measures, their complex derivatives `F′ = 2∂ω/∂z`, and the
//! period matrix.
//!
//! `ω = Re Φ[μ] + Σ_k A_k log|z − p_k|` with `Φ[μ]` the Cauchy integral of a
//! real density, one logarithmic source `p_k` inside each hole and
//! `A_k = ∫_{γ_k} μ ds`. The boundary equation
//! `½μ + Kμ + Σ_k (∫_{γ_k} μ ds) log|ζ − p_k| = data` is uniquely solvable.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::quadrature::{self, BoundaryFunction, Weight};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Factored boundary system shared by all harmonic measures of a domain.
pub struct HarmonicSolver {
    domain: Domain,
    sources: Vec<Complex64>,
    lu: nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl std::fmt::Debug for HarmonicSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HarmonicSolver").field("sources", &self.sources).finish()
    }
}

impl HarmonicSolver {
    pub fn new(domain: &Domain) -> Result<Self> {
        let g = domain.grid();
        let dt = g.dt();
        let inner = domain.inner_count();
        let sources: Vec<Complex64> = (0..inner).map(|k| domain.hole_point(k)).collect();
        let nodes: Vec<(usize, usize)> = g.indices().collect();
        let m = nodes.len();
        let rows: Vec<Vec<f64>> = nodes
            .par_iter()
            .map(|&(ki, i)| {
                let ci = &g.curves[ki];
                let zi = ci.z[i];
                let mut row = vec![0.0; m];
                for (col, &(kj, j)) in nodes.iter().enumerate() {
                    let cj = &g.curves[kj];
                    let mut v = if ki == kj && i == j {
                        0.5 + (ci.d2z[i] / ci.dz[i]).im / (4.0 * PI) * dt
                    } else {
                        (cj.dz[j] * dt / (2.0 * PI * I * (cj.z[j] - zi))).re
                    };
                    if kj < inner {
                        v += cj.speed(j) * dt * (zi - sources[kj]).norm().ln();
                    }
                    row[col] = v;
                }
                row
            })
            .collect();
        let mat = DMatrix::from_fn(m, m, |r, c| rows[r][c]);
        let lu = mat.lu();
        if lu.u().diagonal().iter().any(|d| d.abs() < 1e-13) {
            return Err(Error::IllConditioned("completed double-layer system is singular".into()));
        }
        Ok(Self { domain: domain.clone(), sources, lu })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Logarithmic source points, one per inner curve.
    pub fn sources(&self) -> &[Complex64] {
        &self.sources
    }

    /// Harmonic function with real boundary data `data` (grid samples).
    pub fn solve(&self, data: &BoundaryFunction) -> Result<HarmonicField> {
        let b = DVector::from_iterator(self.domain.grid().total(), data.values().iter().flatten().map(|v| v.re));
        let mu = self.lu.solve(&b).ok_or_else(|| Error::IllConditioned("singular double-layer solve".into()))?;
        let n = self.domain.grid_size();
        let density = BoundaryFunction::new(
            &self.domain,
            (0..self.domain.connectivity()).map(|k| (0..n).map(|i| Complex64::new(mu[k * n + i], 0.0)).collect()).collect(),
        )?;
        let strengths: Vec<f64> =
            (0..self.sources.len()).map(|k| quadrature::integrate_curve(&density, Weight::Ds, k).re).collect();
        let phi_plus = quadrature::cauchy_boundary_limit(&density);
        Ok(HarmonicField { density, sources: self.sources.clone(), strengths, phi_plus })
    }

    /// Harmonic measure of curve `j` (inner curves first, the outer curve last).
    pub fn harmonic_measure(&self, j: usize) -> Result<HarmonicMeasure> {
        if j >= self.domain.connectivity() {
            return Err(Error::InvalidArgument(format!("no boundary curve {j}")));
        }
        let data = BoundaryFunction::from_nodes(&self.domain, |k, _, _, _| Complex64::new(if k == j { 1.0 } else { 0.0 }, 0.0));
        Ok(HarmonicMeasure { curve: j, field: self.solve(&data)? })
    }
}

/// `Re Φ[μ] + Σ A_k log|z − p_k|`.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    density: BoundaryFunction,
    sources: Vec<Complex64>,
    strengths: Vec<f64>,
    phi_plus: BoundaryFunction,
}

impl HarmonicField {
    pub fn density(&self) -> &BoundaryFunction {
        &self.density
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    fn logs(&self, z: Complex64) -> f64 {
        self.sources.iter().zip(&self.strengths).map(|(p, a)| a * (z - p).norm().ln()).sum()
    }

    pub fn eval(&self, z: Complex64) -> Result<f64> {
        Ok(quadrature::cauchy_eval(&self.phi_plus, z)?.re + self.logs(z))
    }

    /// Interior limit at parameter `t` of curve `k` (off-grid allowed).
    pub fn boundary_value(&self, k: usize, t: f64) -> f64 {
        let z = self.density.domain().curves()[k].point(t);
        self.phi_plus.interpolate(k, t).re + self.logs(z)
    }

    /// Trace of `2∂/∂z` of the field: `Φ′ + Σ A_k/(z − p_k)`.
    pub fn derivative_trace(&self) -> BoundaryFunction {
        let d = self.phi_plus.d_dz();
        d.map(|k, i, v| {
            let z = self.density.domain().grid().curves[k].z[i];
            v + self.sources.iter().zip(&self.strengths).map(|(p, a)| *a / (z - p)).sum::<Complex64>()
        })
    }
}

#[derive(Debug, Clone)]
pub struct HarmonicMeasure {
    curve: usize,
    field: HarmonicField,
}

impl HarmonicMeasure {
    pub fn curve(&self) -> usize {
        self.curve
    }

    pub fn field(&self) -> &HarmonicField {
        &self.field
    }

    pub fn eval(&self, z: Complex64) -> Result<f64> {
        self.field.eval(z)
    }

    pub fn boundary_value(&self, k: usize, t: f64) -> f64 {
        self.field.boundary_value(k, t)
    }

    pub fn f_prime(&self) -> FPrimeField {
        FPrimeField { curve: self.curve, trace: self.field.derivative_trace() }
    }
}

/// `F_j′ = 2∂ω_j/∂z` as a holomorphic boundary trace.
#[derive(Debug, Clone)]
pub struct FPrimeField {
    curve: usize,
    trace: BoundaryFunction,
}

impl FPrimeField {
    pub fn curve(&self) -> usize {
        self.curve
    }

    pub fn trace(&self) -> &BoundaryFunction {
        &self.trace
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        quadrature::cauchy_eval(&self.trace, z)
    }
}

pub fn harmonic_measure(domain: &Domain, j: usize) -> Result<HarmonicMeasure> {
    HarmonicSolver::new(domain)?.harmonic_measure(j)
}

pub fn f_prime(domain: &Domain, j: usize) -> Result<FPrimeField> {
    Ok(harmonic_measure(domain, j)?.f_prime())
}

/// `F_j′` for every inner curve `j`.
pub fn f_primes(domain: &Domain) -> Result<Vec<FPrimeField>> {
    if domain.inner_count() == 0 {
        return Ok(Vec::new());
    }
    let solver = HarmonicSolver::new(domain)?;
    (0..domain.inner_count()).map(|j| Ok(solver.harmonic_measure(j)?.f_prime())).collect()
}

/// `P_ki = (1/i)∮_{γ_i} F_k′ dz` over inner curves.
#[derive(Debug, Clone)]
pub struct PeriodMatrix {
    pub matrix: DMatrix<Complex64>,
    pub hermitian_residual: f64,
}

pub fn period_matrix(fields: &[FPrimeField]) -> Result<PeriodMatrix> {
    let m = fields.len();
    let raw = DMatrix::from_fn(m, m, |k, i| quadrature::integrate_curve(&fields[k].trace, Weight::Dz, i) / I);
    let residual = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| (raw[(i, j)] - raw[(j, i)].conj()).norm())
        .fold(0.0, f64::max);
    if residual > 1e-6 {
        return Err(Error::Residual { residual, tol: 1e-6, context: "period matrix is not Hermitian".into() });
    }
    let matrix = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(PeriodMatrix { matrix, hermitian_residual: residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdomains::{annulus, blob_domain, disc, Oracle};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn annulus_harmonic_measure() {
        let d = annulus(0.5, 128).unwrap();
        let w = harmonic_measure(&d, 0).unwrap();
        let want = 0.7f64.ln() / 0.5f64.ln();
        assert!((w.eval(c(0.7, 0.0)).unwrap() - want).abs() < 1e-10);
        assert!((want - 0.514573).abs() < 1e-6);
        let n = d.grid_size();
        for i in 0..n {
            let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            assert!((w.boundary_value(0, t) - 1.0).abs() < 1e-8);
            assert!(w.boundary_value(1, t).abs() < 1e-8);
        }
    }

    #[test]
    fn annulus_f_prime_and_period() {
        let d = annulus(0.5, 128).unwrap();
        let o = Oracle::annulus(0.5);
        let fs = f_primes(&d).unwrap();
        let z = c(0.7, 0.0);
        let v = fs[0].eval(z).unwrap();
        assert!((v - o.harmonic_derivative(z).unwrap()).norm() < 1e-8);
        assert!((v.re + 2.060992).abs() < 1e-6);
        let p = period_matrix(&fs).unwrap();
        assert!((p.matrix[(0, 0)].re - 2.0 * PI / 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn f_prime_trace_is_holomorphic() {
        let d = blob_domain(3, 7).unwrap();
        let fs = f_primes(&d).unwrap();
        for f in &fs {
            // plain Cauchy integral at exterior points vanishes
            for z in [c(0.0, 1.5), c(-2.0, 0.3)] {
                assert!(quadrature::cauchy_integral(f.trace(), z, 0).norm() < 1e-8);
            }
            for p in d.inner_count().checked_sub(1).into_iter().map(|_| d.hole_point(0)) {
                assert!(quadrature::cauchy_integral(f.trace(), p, 0).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn partition_of_unity_on_blob() {
        let d = blob_domain(3, 7).unwrap();
        let solver = HarmonicSolver::new(&d).unwrap();
        let ws: Vec<HarmonicMeasure> = (0..3).map(|j| solver.harmonic_measure(j).unwrap()).collect();
        for z in [c(0.0, 0.7), c(0.0, -0.6), c(0.75, -0.3)] {
            let s: f64 = ws.iter().map(|w| w.eval(z).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-8, "{s}");
            for w in &ws {
                let v = w.eval(z).unwrap();
                assert!(v > 0.0 && v < 1.0);
            }
        }
    }

    #[test]
    fn blob_period_matrix_positive_definite() {
        let d = blob_domain(3, 7).unwrap();
        let p = period_matrix(&f_primes(&d).unwrap()).unwrap();
        assert!(p.hermitian_residual < 1e-6);
        let re = p.matrix.map(|x| x.re);
        let eig = re.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l > 0.0), "{:?}", eig.eigenvalues);
    }

    #[test]
    fn disc_has_no_f_primes() {
        let d = disc(c(0.0, 0.0), 1.0, 64).unwrap();
        assert!(f_primes(&d).unwrap().is_empty());
        assert_eq!(period_matrix(&[]).unwrap().matrix.nrows(), 0);
    }
}
