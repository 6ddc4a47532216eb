//! Szegő kernel from the Kerzman–Stein integral equation, and the Garabedian
//! kernel, Ahlfors map and Szegő zeros derived from it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Location};
use crate::quadrature::{self, BoundaryFunction, Rect};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Refuse systems whose condition estimate exceeds this.
const MAX_CONDITION: f64 = 1e10;

/// Fail with `Outside`/`NearBoundary` unless `z` is safely interior.
pub fn require_interior(domain: &Domain, z: Complex64) -> Result<()> {
    match domain.contains(z) {
        Location::Inside => Ok(()),
        Location::Outside => Err(Error::Outside { z }),
        Location::NearBoundary(dist) => Err(Error::NearBoundary { z, dist }),
    }
}

/// Discretized `I + A` for the Kerzman–Stein kernel
/// `A(z,w) = conj(H(w,z)) − H(z,w)`, `H(z,w) = T(w)/(2πi(w−z))`, in the
/// arc-length symmetrized unknowns `√wᵢ·fᵢ`, factored once.
pub struct KSOperator {
    domain: Domain,
    skew: DMatrix<Complex64>,
    sqrt_w: Vec<f64>,
    lu: nalgebra::linalg::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl std::fmt::Debug for KSOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KSOperator").field("size", &self.sqrt_w.len()).field("condition", &self.condition).finish()
    }
}

impl KSOperator {
    pub fn new(domain: &Domain) -> Result<Self> {
        let g = domain.grid();
        let (n, dt) = (g.n, g.dt());
        let nodes: Vec<(Complex64, Complex64, f64)> =
            g.curves.iter().flat_map(|c| (0..n).map(move |i| (c.z[i], c.tangent(i), c.speed(i) * dt))).collect();
        let m = nodes.len();
        let sqrt_w: Vec<f64> = nodes.iter().map(|n| n.2.sqrt()).collect();
        let h = |i: usize, j: usize| nodes[j].1 / (2.0 * PI * I * (nodes[j].0 - nodes[i].0));
        let rows: Vec<Vec<Complex64>> = (0..m)
            .into_par_iter()
            .map(|i| (0..m).map(|j| if j <= i { ZERO } else { (h(j, i).conj() - h(i, j)) * (sqrt_w[i] * sqrt_w[j]) }).collect())
            .collect();
        let mut skew = DMatrix::<Complex64>::zeros(m, m);
        for (i, row) in rows.iter().enumerate() {
            for j in i + 1..m {
                skew[(i, j)] = row[j];
                skew[(j, i)] = -row[j].conj();
            }
        }
        let condition = condition_estimate(&skew);
        if !(condition < MAX_CONDITION) {
            return Err(Error::IllConditioned(format!("Kerzman–Stein system condition estimate {condition:.3e}")));
        }
        let system = DMatrix::<Complex64>::identity(m, m) + &skew;
        let lu = system.lu();
        Ok(Self { domain: domain.clone(), skew, sqrt_w, lu, condition })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Condition estimate of `I + A`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// The symmetrized kernel matrix.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.skew
    }

    /// `max |A + A*|` of the assembled matrix.
    pub fn skew_residual(&self) -> f64 {
        let m = self.skew.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                worst = worst.max((self.skew[(i, j)] + self.skew[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Solve `(I + A)f = rhs` for a boundary function `f`.
    pub fn solve(&self, rhs: &BoundaryFunction) -> Result<BoundaryFunction> {
        let b = DVector::from_iterator(self.sqrt_w.len(), rhs.values().iter().flatten().zip(&self.sqrt_w).map(|(v, s)| v * *s));
        let u = self.lu.solve(&b).ok_or_else(|| Error::IllConditioned("singular Kerzman–Stein system".into()))?;
        let n = self.domain.grid_size();
        let values =
            (0..self.domain.connectivity()).map(|k| (0..n).map(|i| u[k * n + i] / self.sqrt_w[k * n + i]).collect()).collect();
        BoundaryFunction::new(&self.domain, values)
    }

    /// Szegő kernel `S(·,a)`.
    pub fn szego(&self, a: Complex64) -> Result<SzegoField> {
        self.szego_wbar_derivative(a, 0)
    }

    /// `∂^m/∂w̄^m S(·,w)` at `w = w0`, from the analytically differentiated
    /// right-hand side `m!·(i/2π)·conj(T)/(z̄−w̄)^{m+1}`.
    pub fn szego_wbar_derivative(&self, w0: Complex64, m: u32) -> Result<SzegoField> {
        require_interior(&self.domain, w0)?;
        let fact: f64 = (1..=m).map(f64::from).product();
        let rhs = BoundaryFunction::from_nodes(&self.domain, |_, _, z, dz| {
            let t = dz / dz.norm();
            I / (2.0 * PI) * fact * t.conj() / (z.conj() - w0.conj()).powu(m + 1)
        });
        let trace = self.solve(&rhs)?;
        Ok(SzegoField { a: w0, order: m, trace })
    }
}

/// `sqrt(1 + ρ(A)²)`, the condition number of `I + A` for skew-Hermitian `A`,
/// with `ρ` from power iteration on `A*A`.
fn condition_estimate(a: &DMatrix<Complex64>) -> f64 {
    let m = a.nrows();
    if m == 0 {
        return 1.0;
    }
    let mut v = DVector::from_fn(m, |i, _| Complex64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()));
    v /= Complex64::from(v.norm());
    let mut lambda = 0.0;
    for _ in 0..60 {
        let w = a.ad_mul(&(a * &v));
        let nw = w.norm();
        if nw == 0.0 {
            return 1.0;
        }
        let next = nw;
        v = w / Complex64::from(nw);
        if (next - lambda).abs() <= 1e-6 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    (1.0 + lambda).sqrt()
}

/// Boundary trace of `S(·,a)` (or a `w̄`-derivative of it) with interior
/// evaluation by Cauchy integrals.
#[derive(Debug, Clone)]
pub struct SzegoField {
    a: Complex64,
    order: u32,
    trace: BoundaryFunction,
}

impl SzegoField {
    pub fn base(&self) -> Complex64 {
        self.a
    }

    /// Number of `w̄`-derivatives applied.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn trace(&self) -> &BoundaryFunction {
        &self.trace
    }

    pub fn domain(&self) -> &Domain {
        self.trace.domain()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        quadrature::cauchy_eval(&self.trace, z)
    }

    pub fn derivative(&self, z: Complex64, m: u32) -> Result<Complex64> {
        quadrature::cauchy_derivative_eval(&self.trace, z, m)
    }

    /// `S(a,a)`, real and positive for a valid solve.
    pub fn diagonal(&self) -> Result<f64> {
        let v = self.eval(self.a)?;
        if v.re <= 0.0 || v.im.abs() > 1e-8 * v.re {
            return Err(Error::Invariant(format!("S(a,a) = {v} is not real positive")));
        }
        Ok(v.re)
    }
}

/// One-shot Szegő solve; build a [`KSOperator`] to reuse the factorization.
pub fn solve_szego(domain: &Domain, a: Complex64) -> Result<SzegoField> {
    require_interior(domain, a)?;
    KSOperator::new(domain)?.szego(a)
}

pub fn szego_wbar_derivative(domain: &Domain, w0: Complex64, m: u32) -> Result<SzegoField> {
    require_interior(domain, w0)?;
    KSOperator::new(domain)?.szego_wbar_derivative(w0, m)
}

/// `|S(a′,a) − conj(S(a,a′))|` from two independent solves.
pub fn hermitian_spot_check(op: &KSOperator, a: Complex64, b: Complex64) -> Result<f64> {
    let sa = op.szego(a)?;
    let sb = op.szego(b)?;
    Ok((sa.eval(b)? - sb.eval(a)?.conj()).norm())
}

/// `L(·,a)` with boundary trace `i·conj(S)·conj(T)` and interior values
/// `1/(2π(z−a))` plus the Cauchy integral of the regular part.
#[derive(Debug, Clone)]
pub struct GarabedianField {
    a: Complex64,
    trace: BoundaryFunction,
    regular: BoundaryFunction,
}

impl GarabedianField {
    pub fn from_szego(s: &SzegoField) -> Self {
        let a = s.a;
        let trace = s.trace.map(|_, _, v| v);
        let g = s.domain().grid();
        let trace = trace.map(|k, i, v| I * v.conj() * g.curves[k].tangent(i).conj());
        let regular = BoundaryFunction::from_nodes(s.domain(), |k, i, z, _| trace.get(k, i) - 1.0 / (2.0 * PI * (z - a)));
        Self { a, trace, regular }
    }

    pub fn base(&self) -> Complex64 {
        self.a
    }

    pub fn trace(&self) -> &BoundaryFunction {
        &self.trace
    }

    /// Trace of `L(z,a) − 1/(2π(z−a))`, holomorphic in the domain.
    pub fn regular_trace(&self) -> &BoundaryFunction {
        &self.regular
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(1.0 / (2.0 * PI * (z - self.a)) + quadrature::cauchy_eval(&self.regular, z)?)
    }

    /// `m`-th derivative.
    pub fn derivative(&self, z: Complex64, m: u32) -> Result<Complex64> {
        let fact: f64 = (1..=m).map(f64::from).product();
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        let pole = sign * fact / (2.0 * PI * (z - self.a).powu(m + 1));
        Ok(pole + quadrature::cauchy_derivative_eval(&self.regular, z, m)?)
    }

    /// `∮ L dz` over a small circle about `a`; equals `i` for residue `1/2π`.
    pub fn residue_integral(&self, radius: f64) -> Result<Complex64> {
        let m = 64;
        let mut acc = ZERO;
        for t in crate::spectral::nodes(m) {
            let e = Complex64::from_polar(1.0, t);
            acc += self.eval(self.a + radius * e)? * I * radius * e;
        }
        Ok(acc * (2.0 * PI / m as f64))
    }

    /// `max |(1/i)·L·T − conj(S)|` over the grid.
    pub fn boundary_identity_residual(&self, s: &SzegoField) -> f64 {
        let g = s.domain().grid();
        let mut worst: f64 = 0.0;
        for (k, c) in g.curves.iter().enumerate() {
            for i in 0..g.n {
                let r = self.trace.get(k, i) * c.tangent(i) / I - s.trace.get(k, i).conj();
                worst = worst.max(r.norm());
            }
        }
        worst
    }
}

pub fn garabedian(s: &SzegoField) -> GarabedianField {
    GarabedianField::from_szego(s)
}

/// Ahlfors map `f_a = S(·,a)/L(·,a)`.
#[derive(Debug, Clone)]
pub struct AhlforsMap {
    a: Complex64,
    szego: SzegoField,
    garabedian: GarabedianField,
    trace: BoundaryFunction,
}

/// Measured Ahlfors-map invariants.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AhlforsReport {
    pub value_at_base: f64,
    pub modulus_residual: f64,
    pub derivative_relative: f64,
    pub winding: f64,
    pub connectivity: usize,
    pub derivative_at_base: Complex64,
}

impl AhlforsReport {
    pub fn passes(&self) -> bool {
        self.value_at_base <= 1e-10
            && self.modulus_residual <= 1e-8
            && self.derivative_relative <= 1e-6
            && (self.winding - self.connectivity as f64).abs() < 1e-6
    }
}

impl AhlforsMap {
    pub fn new(szego: SzegoField) -> Self {
        let garabedian = GarabedianField::from_szego(&szego);
        let trace = szego.trace.zip_with(&garabedian.trace, |s, l| s / l);
        Self { a: szego.a, szego, garabedian, trace }
    }

    pub fn base(&self) -> Complex64 {
        self.a
    }

    pub fn szego(&self) -> &SzegoField {
        &self.szego
    }

    pub fn garabedian(&self) -> &GarabedianField {
        &self.garabedian
    }

    pub fn trace(&self) -> &BoundaryFunction {
        &self.trace
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        quadrature::cauchy_eval(&self.trace, z)
    }

    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        quadrature::cauchy_derivative_eval(&self.trace, z, 1)
    }

    pub fn report(&self) -> Result<AhlforsReport> {
        let fa = self.eval(self.a)?;
        let modulus_residual = self.trace.values().iter().flatten().map(|f| (f.norm() - 1.0).abs()).fold(0.0, f64::max);
        let d = self.derivative(self.a)?;
        let expected = 2.0 * PI * self.szego.diagonal()?;
        Ok(AhlforsReport {
            value_at_base: fa.norm(),
            modulus_residual,
            derivative_relative: (d - expected).norm() / expected,
            winding: self.trace.winding(),
            connectivity: self.szego.domain().connectivity(),
            derivative_at_base: d,
        })
    }

    /// Fail with `Invariant` unless every Ahlfors-map property holds.
    pub fn check(&self) -> Result<AhlforsReport> {
        let r = self.report()?;
        if !r.passes() {
            return Err(Error::Invariant(format!("Ahlfors map invariants violated: {r:?}")));
        }
        Ok(r)
    }
}

pub fn ahlfors(domain: &Domain, a: Complex64) -> Result<AhlforsMap> {
    let map = AhlforsMap::new(solve_szego(domain, a)?);
    map.check()?;
    Ok(map)
}

/// Zeros of `S(·,a)` in the domain, `n−1` of them, each simple.
///
/// Power sums `Σ z_j^k` come from boundary moments of `S′/S`; the zeros are
/// the roots of the resulting polynomial, polished by Newton and confirmed
/// one by one with an argument-principle box search.
pub fn szego_zeros(s: &SzegoField) -> Result<Vec<Complex64>> {
    let domain = s.domain();
    let expected = domain.connectivity() - 1;
    let ds = s.trace.d_dz();
    let ratio = ds.zip_with(&s.trace, |d, v| d / v);
    let count = quadrature::integrate_closed(&ratio, quadrature::Weight::Dz) / (2.0 * PI * I);
    let found = count.re.round();
    if (count - found).norm() > 0.1 || found < 0.0 || found as usize != expected {
        return Err(Error::ZeroCount { expected, found: found.max(0.0) as usize });
    }
    if expected == 0 {
        return Ok(Vec::new());
    }
    let power_sums: Vec<Complex64> = (1..=expected)
        .map(|k| {
            let f = BoundaryFunction::from_nodes(domain, |kk, i, z, _| z.powu(k as u32) * ratio.get(kk, i));
            quadrature::integrate_closed(&f, quadrature::Weight::Dz) / (2.0 * PI * I)
        })
        .collect();
    let roots = polynomial_roots(&monic_from_power_sums(&power_sums));
    let scale = domain.diameter();
    let smax = s.trace.max_abs();
    let mut zeros = Vec::with_capacity(expected);
    for r in roots {
        let mut z = r;
        for _ in 0..30 {
            let f = s.eval(z)?;
            let df = s.derivative(z, 1)?;
            let step = f / df;
            z -= step;
            if step.norm() < 1e-15 * scale {
                break;
            }
        }
        if !domain.is_inside_polygonal(z) {
            return Err(Error::Outside { z });
        }
        let df = s.derivative(z, 1)?;
        if df.norm() < 1e-8 * smax / scale {
            return Err(Error::NonSimpleZero { z, derivative: df.norm() });
        }
        zeros.push(z);
    }
    for (i, a) in zeros.iter().enumerate() {
        for b in &zeros[i + 1..] {
            if (a - b).norm() < 1e-6 * scale {
                return Err(Error::NonSimpleZero { z: *a, derivative: 0.0 });
            }
        }
    }
    // independent confirmation of each zero by argument-principle box search
    for (i, &z) in zeros.iter().enumerate() {
        let sep = zeros.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, w)| (w - z).norm()).fold(f64::INFINITY, f64::min);
        let (dist, _, _) = domain.distance_to_boundary(z);
        let half = (0.4 * dist).min(0.3 * sep).min(0.05 * scale);
        let found =
            quadrature::locate_zeros(|w| s.eval(w).unwrap_or(Complex64::new(f64::NAN, f64::NAN)), Rect::around(z, half), 1)?;
        if (found[0] - z).norm() > 1e-8 * scale {
            return Err(Error::Invariant(format!("Szegő zero {z} not confirmed (box search found {})", found[0])));
        }
    }
    zeros.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(zeros)
}

/// Coefficients (highest first, leading 1) of the monic polynomial whose
/// roots have the given power sums `p_1..p_m` (Newton's identities).
pub fn monic_from_power_sums(p: &[Complex64]) -> Vec<Complex64> {
    let m = p.len();
    let mut e = vec![Complex64::new(1.0, 0.0)];
    for k in 1..=m {
        let mut acc = ZERO;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += e[k - i] * p[i - 1] * sign;
        }
        e.push(acc / k as f64);
    }
    e.iter().enumerate().map(|(k, ek)| if k % 2 == 0 { *ek } else { -ek }).collect()
}

/// Roots of a monic polynomial (coefficients highest first) by
/// Durand–Kerner iteration.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let m = coeffs.len() - 1;
    if m == 0 {
        return Vec::new();
    }
    let eval = |z: Complex64| coeffs.iter().fold(ZERO, |acc, c| acc * z + c);
    let radius = 1.0 + coeffs[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut roots: Vec<Complex64> =
        (0..m).map(|k| Complex64::from_polar(0.5 * radius, 0.4 + 2.0 * PI * k as f64 / m as f64)).collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for k in 0..m {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..m {
                if j != k {
                    den *= roots[k] - roots[j];
                }
            }
            let step = eval(roots[k]) / den;
            roots[k] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    roots
}
