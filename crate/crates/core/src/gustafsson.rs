//! Gustafsson functions: holomorphic maps close to the identity whose image
//! is a quadrature domain, with node and weight extraction and verification.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bergman::interior_sample;
use crate::error::{Error, Result};
use crate::geometry::{self, Domain, Location};
use crate::kernels::{self, GarabedianField, KSOperator, SzegoField};
use crate::quadrature::{self, BoundaryFunction, Upsampling};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Images closer than this fraction of the diameter are one node.
pub const MERGE_RADIUS: f64 = 1e-9;
/// Nodes whose weights are all below this fraction of the image area are dropped.
pub const DROP_WEIGHT: f64 = 1e-12;
/// A principal-part coefficient counts toward the order when its size,
/// normalized by the residue and the image contour radius, exceeds this.
pub const ORDER_TOL: f64 = 1e-8;
/// Required agreement of the reflected extension with `conj(g)` on the boundary.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Relative roundoff level of contour-extracted coefficients, against the
/// largest integrand value on the contour.
const NOISE: f64 = 1e-12;

const CONTOUR_POINTS: usize = 96;
const MAX_PRINCIPAL: usize = 3;
const RESOLVED_TAIL: f64 = 1e-12;
const KAPPA_SAFETY: f64 = 10.0;
const MAX_CONDITION_M: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum Variant {
    /// Density points anywhere in the domain.
    Thm16,
    /// Density points confined to the disc `D_eps(w0)`.
    Thm17 { w0: Complex64, eps: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct GustafssonOptions {
    /// RMS Sobolev residual target for the density fit; derived from
    /// `closeness_tol` when absent.
    pub fit_tol: Option<f64>,
    /// Bound on `sup|g − z|` and `sup|g′ − 1|` over the boundary grid.
    pub closeness_tol: f64,
    pub max_terms: usize,
    /// Candidate lattice points per diameter (free variant).
    pub lattice: usize,
    /// Number of rings of candidates in the disc (confined variant).
    pub rings: usize,
}

impl GustafssonOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { fit_tol: None, closeness_tol: tol, max_terms: 400, lattice: 40, rings: 4 }
    }

    pub fn fit_tol(mut self, tol: f64) -> Self {
        self.fit_tol = Some(tol);
        self
    }
}

/// Greedy Sobolev least-squares fit of a target by Szegő kernels.
#[derive(Debug, Clone)]
pub struct DensityFit {
    pub points: Vec<Complex64>,
    pub coeffs: Vec<Complex64>,
    /// Final RMS Sobolev residual.
    pub residual: f64,
    /// Residual after each greedy step, starting from the target norm.
    pub history: Vec<f64>,
    pub candidates: usize,
    fields: Vec<SzegoField>,
}

impl DensityFit {
    /// Boundary trace of `Σ c_j S(·,b_j)`.
    pub fn combination(&self, domain: &Domain) -> BoundaryFunction {
        let traces: Vec<&BoundaryFunction> = self.fields.iter().map(SzegoField::trace).collect();
        BoundaryFunction::combine(domain, &traces, &self.coeffs)
    }
}

struct Candidate {
    b: Complex64,
    field: SzegoField,
    column: Vec<Complex64>,
}

/// Quadrature weights for the Sobolev inner product (value and arc-length
/// derivative), normalized so the norm is an RMS over boundary length.
fn sobolev_weights(domain: &Domain) -> Vec<f64> {
    let g = domain.grid();
    let dt = g.dt();
    let w: Vec<f64> = g.curves.iter().flat_map(|c| (0..g.n).map(move |i| c.speed(i) * dt)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| (x / total).sqrt()).collect()
}

fn sobolev_vector(f: &BoundaryFunction, sw: &[f64]) -> Vec<Complex64> {
    let ds = f.d_ds();
    let vals = f.values().iter().flatten().zip(sw).map(|(v, s)| v * *s);
    let ders = ds.values().iter().flatten().zip(sw).map(|(v, s)| v * *s);
    vals.chain(ders).collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn candidate(op: &KSOperator, b: Complex64, sw: &[f64]) -> Option<Candidate> {
    let field = op.szego(b).ok()?;
    if field.trace().tail_ratio() > RESOLVED_TAIL {
        return None;
    }
    let column = sobolev_vector(field.trace(), sw);
    Some(Candidate { b, field, column })
}

/// Lattice of interior points resolved by the grid, `first` leading.
fn lattice_points(domain: &Domain, per_diameter: usize, first: Complex64, avoid: &[Complex64]) -> Vec<Complex64> {
    let (lo, hi) = domain.bounding_box();
    let h = domain.diameter() / per_diameter as f64;
    let delta = 2.0 * domain.spacing();
    let nx = ((hi.re - lo.re) / h).ceil() as usize;
    let ny = ((hi.im - lo.im) / h).ceil() as usize;
    let mut pts = vec![first];
    for j in 0..ny {
        for i in 0..nx {
            let z = Complex64::new(lo.re + (i as f64 + 0.5) * h, lo.im + (j as f64 + 0.5) * h);
            if (z - first).norm() < 0.25 * h || avoid.iter().any(|p| (z - p).norm() < 0.25 * h) {
                continue;
            }
            if domain.contains_with(z, delta) == Location::Inside {
                pts.push(z);
            }
        }
    }
    pts
}

/// Center plus `rings` concentric rings (6k points on ring k) inside `D_{0.8eps}(w0)`.
fn ring_points(w0: Complex64, eps: f64, rings: usize) -> Vec<Complex64> {
    let mut pts = vec![w0];
    for k in 1..=rings {
        let r = 0.8 * eps * k as f64 / rings as f64;
        let m = 6 * k;
        let shift = 0.5 * (k % 2) as f64;
        for j in 0..m {
            pts.push(w0 + Complex64::from_polar(r, 2.0 * PI * (j as f64 + shift) / m as f64));
        }
    }
    pts
}

/// Orthogonal matching pursuit on the candidate columns followed by a
/// truncated-SVD solve for the coefficients of the selected ones.
fn greedy_fit(domain: &Domain, target: &[Complex64], cands: Vec<Candidate>, tol: f64, max_terms: usize) -> Result<DensityFit> {
    let ncand = cands.len();
    let norms0: Vec<f64> = cands.iter().map(|c| norm(&c.column)).collect();
    let mut work: Vec<Vec<Complex64>> = cands.iter().map(|c| c.column.clone()).collect();
    let mut alive = vec![true; ncand];
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    let mut r = target.to_vec();
    let mut history = vec![norm(&r)];
    while (chosen.is_empty() || norm(&r) > tol) && chosen.len() < max_terms {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..ncand {
            let nj = norm(&work[j]);
            if !alive[j] || nj <= 1e-10 * norms0[j] {
                continue;
            }
            let score = dot(&work[j], &r).norm() / nj;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        alive[j] = false;
        let mut q = work[j].clone();
        for b in &basis {
            let p = dot(b, &q);
            q.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let nq = norm(&q);
        q.iter_mut().for_each(|x| *x /= nq);
        let p = dot(&q, &r);
        r.iter_mut().zip(&q).for_each(|(x, y)| *x -= p * y);
        work.par_iter_mut().zip(&alive).filter(|(_, a)| **a).for_each(|(w, _)| {
            let p = dot(&q, w);
            w.iter_mut().zip(&q).for_each(|(x, y)| *x -= p * y);
        });
        basis.push(q);
        chosen.push(j);
        history.push(norm(&r));
    }
    let rows = target.len();
    let a = DMatrix::from_fn(rows, chosen.len(), |i, j| cands[chosen[j]].column[i]);
    let t = DVector::from_column_slice(target);
    let coeffs: Vec<Complex64> = if chosen.is_empty() {
        Vec::new()
    } else {
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let x = svd.solve(&t, 1e-13 * smax).map_err(|e| Error::IllConditioned(format!("density fit: {e}")))?;
        x.iter().copied().collect()
    };
    let residual = if chosen.is_empty() { norm(target) } else { (&a * DVector::from_column_slice(&coeffs) - &t).norm() };
    if residual > tol {
        return Err(Error::FitStagnation { best: residual, tol, terms: chosen.len() });
    }
    let mut fields = Vec::with_capacity(chosen.len());
    let mut points = Vec::with_capacity(chosen.len());
    let mut slots: Vec<Option<Candidate>> = cands.into_iter().map(Some).collect();
    for &j in &chosen {
        let c = slots[j].take().expect("candidate chosen twice");
        points.push(c.b);
        fields.push(c.field);
    }
    let _ = domain;
    Ok(DensityFit { points, coeffs, residual, history, candidates: ncand, fields })
}

/// Fit `(z−a)·L(z,a)` by `Σ c_j S(z,b_j)` over lattice candidates.
pub fn fit_density_16(op: &KSOperator, a: Complex64, fit_tol: f64, opts: &GustafssonOptions) -> Result<DensityFit> {
    let s_a = op.szego(a)?;
    let l_a = kernels::garabedian(&s_a);
    let zeros = kernels::szego_zeros(&s_a)?;
    fit_free(op, a, &l_a, &zeros, fit_tol, opts)
}

fn fit_free(
    op: &KSOperator,
    a: Complex64,
    l_a: &GarabedianField,
    zeros: &[Complex64],
    fit_tol: f64,
    opts: &GustafssonOptions,
) -> Result<DensityFit> {
    let domain = op.domain();
    let sw = sobolev_weights(domain);
    let target = BoundaryFunction::from_nodes(domain, |k, i, z, _| (z - a) * l_a.trace().get(k, i));
    let pts = lattice_points(domain, opts.lattice, a, zeros);
    let cands: Vec<Candidate> = pts.par_iter().filter_map(|&b| candidate(op, b, &sw)).collect();
    if cands.first().is_none_or(|c| c.b != a) {
        return Err(Error::Invariant(format!("base point {a} is not resolved by the grid")));
    }
    greedy_fit(domain, &sobolev_vector(&target, &sw), cands, fit_tol, opts.max_terms)
}

fn fit_confined(
    op: &KSOperator,
    s_a: &SzegoField,
    w0: Complex64,
    eps: f64,
    fit_tol: f64,
    opts: &GustafssonOptions,
) -> Result<DensityFit> {
    let domain = op.domain();
    let sw = sobolev_weights(domain);
    let target = BoundaryFunction::from_nodes(domain, |k, i, z, _| z * s_a.trace().get(k, i));
    let pts = ring_points(w0, eps, opts.rings);
    let cands: Vec<Candidate> = pts.par_iter().filter_map(|&b| candidate(op, b, &sw)).collect();
    if cands.len() < pts.len() {
        return Err(Error::Invariant("disc candidates are not resolved by the grid".into()));
    }
    greedy_fit(domain, &sobolev_vector(&target, &sw), cands, fit_tol, opts.max_terms)
}

/// Denominator of the reflected extension.
#[derive(Debug, Clone)]
enum Denominator {
    Szego,
    Garabedian,
}

/// `H_refl(z) = constant + [Σ coef_p/(2π(z−p)) + C[regular](z)] / den(z)`.
#[derive(Debug, Clone)]
struct Reflected {
    constant: Complex64,
    poles: Vec<(Complex64, Complex64)>,
    regular: BoundaryFunction,
    den: Denominator,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Closeness {
    /// `sup |g − z|` on the boundary grid.
    pub value: f64,
    /// `sup |g′ − 1|` on the boundary grid.
    pub derivative: f64,
}

impl Closeness {
    pub fn c1(&self) -> f64 {
        self.value.max(self.derivative)
    }
}

/// `g` together with its reflected extension `H_refl`, which has the boundary
/// values `conj(g)` and finitely many poles in the domain.
#[derive(Debug, Clone)]
pub struct GustafssonMap {
    variant: Variant,
    op: Arc<KSOperator>,
    a: Complex64,
    zeros: Vec<Complex64>,
    fit: DensityFit,
    cleanup: Vec<Complex64>,
    mu: Vec<Complex64>,
    szego_a: SzegoField,
    garabedian_a: GarabedianField,
    g_trace: BoundaryFunction,
    gp_trace: BoundaryFunction,
    refl: Reflected,
    closeness: Closeness,
    identity_residual: f64,
    fit_tol: f64,
}

/// Serializable description of a built map.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GustafssonSummary {
    #[serde(flatten)]
    pub variant: Variant,
    pub a: Complex64,
    pub zeros: Vec<Complex64>,
    pub points: Vec<Complex64>,
    pub coeffs: Vec<Complex64>,
    pub cleanup_points: Vec<Complex64>,
    pub mu: Vec<Complex64>,
    pub fit_tol: f64,
    pub fit_residual: f64,
    pub fit_history: Vec<f64>,
    pub candidates: usize,
    pub closeness: Closeness,
    pub identity_residual: f64,
}

impl GustafssonMap {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn domain(&self) -> &Domain {
        self.op.domain()
    }

    pub fn operator(&self) -> &Arc<KSOperator> {
        &self.op
    }

    pub fn base(&self) -> Complex64 {
        self.a
    }

    /// Zeros of `S(·,a)`.
    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn points(&self) -> &[Complex64] {
        &self.fit.points
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.fit.coeffs
    }

    pub fn fit(&self) -> &DensityFit {
        &self.fit
    }

    pub fn cleanup_points(&self) -> &[Complex64] {
        &self.cleanup
    }

    pub fn mu(&self) -> &[Complex64] {
        &self.mu
    }

    pub fn closeness(&self) -> Closeness {
        self.closeness
    }

    /// `max |H_refl − conj(g)|` over the boundary grid.
    pub fn identity_residual(&self) -> f64 {
        self.identity_residual
    }

    pub fn szego_base(&self) -> &SzegoField {
        &self.szego_a
    }

    pub fn g_trace(&self) -> &BoundaryFunction {
        &self.g_trace
    }

    pub fn g_prime_trace(&self) -> &BoundaryFunction {
        &self.gp_trace
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        quadrature::cauchy_eval(&self.g_trace, z)
    }

    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        quadrature::cauchy_derivative_eval(&self.g_trace, z, 1)
    }

    /// Poles of the reflected extension.
    pub fn poles(&self) -> Vec<Complex64> {
        let mut p: Vec<Complex64> = self.refl.poles.iter().map(|x| x.0).collect();
        if self.variant == Variant::Thm16 {
            p.extend_from_slice(&self.zeros);
        }
        p
    }

    pub fn h_refl(&self, z: Complex64) -> Result<Complex64> {
        kernels::require_interior(self.domain(), z)?;
        let r = &self.refl;
        let den_trace = match r.den {
            Denominator::Szego => self.szego_a.trace(),
            Denominator::Garabedian => self.garabedian_a.regular_trace(),
        };
        let v = quadrature::cauchy_eval_many(&[&r.regular, den_trace], z, Upsampling::Auto)?;
        let num = r.poles.iter().map(|(p, c)| c / (2.0 * PI * (z - p))).sum::<Complex64>() + v[0];
        let den = match r.den {
            Denominator::Szego => v[1],
            Denominator::Garabedian => v[1] + 1.0 / (2.0 * PI * (z - self.a)),
        };
        Ok(r.constant + num / den)
    }

    /// Boundary values of `H_refl` assembled from its pole and regular parts.
    pub fn h_refl_trace(&self) -> BoundaryFunction {
        let r = &self.refl;
        BoundaryFunction::from_nodes(self.domain(), |k, i, z, _| {
            let num = r.poles.iter().map(|(p, c)| c / (2.0 * PI * (z - p))).sum::<Complex64>() + r.regular.get(k, i);
            let den = match r.den {
                Denominator::Szego => self.szego_a.trace().get(k, i),
                Denominator::Garabedian => self.garabedian_a.trace().get(k, i),
            };
            r.constant + num / den
        })
    }

    pub fn summary(&self) -> GustafssonSummary {
        GustafssonSummary {
            variant: self.variant,
            a: self.a,
            zeros: self.zeros.clone(),
            points: self.fit.points.clone(),
            coeffs: self.fit.coeffs.clone(),
            cleanup_points: self.cleanup.clone(),
            mu: self.mu.clone(),
            fit_tol: self.fit_tol,
            fit_residual: self.fit.residual,
            fit_history: self.fit.history.clone(),
            candidates: self.fit.candidates,
            closeness: self.closeness,
            identity_residual: self.identity_residual,
        }
    }
}

/// `max 1/|D| + max |D′|/|D|²` over the boundary, bounding the C¹ size of
/// `r/D` by the Sobolev size of `r`.
fn kappa(den: &BoundaryFunction) -> f64 {
    let d1 = den.d_dz();
    let inv = den.values().iter().flatten().map(|v| 1.0 / v.norm()).fold(0.0, f64::max);
    let rel =
        den.values().iter().flatten().zip(d1.values().iter().flatten()).map(|(v, d)| d.norm() / v.norm_sqr()).fold(0.0, f64::max);
    inv + rel
}

fn closeness_of(g: &BoundaryFunction, gp: &BoundaryFunction) -> Closeness {
    let grid = g.domain().grid();
    let mut value: f64 = 0.0;
    let mut derivative: f64 = 0.0;
    for (k, c) in grid.curves.iter().enumerate() {
        for i in 0..grid.n {
            value = value.max((g.get(k, i) - c.z[i]).norm());
            derivative = derivative.max((gp.get(k, i) - 1.0).norm());
        }
    }
    Closeness { value, derivative }
}

/// `g(bΩ)` must consist of simple closed curves with the original
/// orientations and nesting, and `g − g(z)` must wind once around bΩ for
/// sample interior points `z`.
pub fn check_injective(domain: &Domain, g: &BoundaryFunction) -> Result<()> {
    let up = g.at_grid(4 * domain.grid_size());
    let n = domain.connectivity();
    let outer = domain.outer_index();
    for k in 0..n {
        let poly = &up[k];
        if geometry::polygon_self_intersects(poly) {
            return Err(Error::Injectivity(format!("image of boundary curve {k} self-intersects")));
        }
        let area: f64 = (0..poly.len()).map(|i| (poly[i].conj() * poly[(i + 1) % poly.len()]).im).sum::<f64>() / 2.0;
        if area.signum() != domain.curves()[k].signed_area().signum() {
            return Err(Error::Injectivity(format!("image of boundary curve {k} reverses orientation")));
        }
    }
    for k in 0..n {
        for j in k + 1..n {
            if geometry::polygons_intersect(&up[k], &up[j]) {
                return Err(Error::Injectivity(format!("images of boundary curves {k} and {j} intersect")));
            }
        }
        if k != outer {
            if !geometry::point_in_polygon(up[k][0], &up[outer]) {
                return Err(Error::Injectivity(format!("image of inner curve {k} leaves the outer image")));
            }
            for j in (0..n).filter(|&j| j != outer && j != k) {
                if geometry::point_in_polygon(up[k][0], &up[j]) {
                    return Err(Error::Injectivity(format!("image of inner curve {k} lies inside the image of {j}")));
                }
            }
        }
    }
    for z in interior_sample(domain, 8, 0.1, 0x1ec7) {
        let w = quadrature::cauchy_eval(g, z)?;
        let wind: f64 = up.iter().map(|c| quadrature::winding_of_closed(&c.iter().map(|v| v - w).collect::<Vec<_>>())).sum();
        if (wind - 1.0).abs() > 0.1 {
            return Err(Error::Injectivity(format!("g − g({z}) winds {wind:.3} times around the boundary")));
        }
    }
    Ok(())
}

fn derived_fit_tol(opts: &GustafssonOptions, kappa: f64) -> f64 {
    opts.fit_tol.unwrap_or(opts.closeness_tol / (KAPPA_SAFETY * kappa))
}

/// `g(z) = a + Σ c_j S(z,b_j)/L(z,a)` with `(z−a)L(z,a) ≈ Σ c_j S(z,b_j)`.
pub fn build_g_16(domain: &Domain, a: Complex64, tol: f64) -> Result<GustafssonMap> {
    let op = Arc::new(KSOperator::new(domain)?);
    build_g_16_with(op, a, &GustafssonOptions::with_tol(tol))
}

pub fn build_g_16_with(op: Arc<KSOperator>, a: Complex64, opts: &GustafssonOptions) -> Result<GustafssonMap> {
    let domain = op.domain().clone();
    kernels::require_interior(&domain, a)?;
    let s_a = op.szego(a)?;
    s_a.diagonal()?;
    let l_a = kernels::garabedian(&s_a);
    let zeros = kernels::szego_zeros(&s_a)?;
    let mut fit_tol = derived_fit_tol(opts, kappa(l_a.trace()));
    let attempts = if opts.fit_tol.is_some() { 1 } else { 3 };
    for attempt in 0..attempts {
        let fit = fit_free(&op, a, &l_a, &zeros, fit_tol, opts)?;
        let num = fit.combination(&domain);
        let g_trace = num.zip_with(l_a.trace(), |n, l| a + n / l);
        let gp_trace = g_trace.d_dz();
        let closeness = closeness_of(&g_trace, &gp_trace);
        if closeness.c1() > opts.closeness_tol {
            if attempt + 1 < attempts {
                fit_tol *= 0.1;
                continue;
            }
            check_injective(&domain, &g_trace)?;
            return Err(Error::Invariant(format!(
                "‖g − id‖ = {:.3e} exceeds {:.3e} at fit tolerance {fit_tol:.3e}",
                closeness.c1(),
                opts.closeness_tol
            )));
        }
        check_injective(&domain, &g_trace)?;
        let l_fields: Vec<GarabedianField> = fit.fields.iter().map(kernels::garabedian).collect();
        let regs: Vec<&BoundaryFunction> = l_fields.iter().map(GarabedianField::regular_trace).collect();
        let conj_c: Vec<Complex64> = fit.coeffs.iter().map(|c| c.conj()).collect();
        let regular = BoundaryFunction::combine(&domain, &regs, &conj_c);
        let refl = Reflected {
            constant: a.conj(),
            poles: fit.points.iter().zip(&conj_c).map(|(p, c)| (*p, *c)).collect(),
            regular,
            den: Denominator::Szego,
        };
        return finish(GustafssonMap {
            variant: Variant::Thm16,
            op,
            a,
            zeros,
            fit,
            cleanup: Vec::new(),
            mu: Vec::new(),
            szego_a: s_a,
            garabedian_a: l_a,
            g_trace,
            gp_trace,
            refl,
            closeness,
            identity_residual: 0.0,
            fit_tol,
        });
    }
    unreachable!("attempt loop always returns")
}

fn finish(mut g: GustafssonMap) -> Result<GustafssonMap> {
    let h = g.h_refl_trace();
    let residual = h
        .values()
        .iter()
        .flatten()
        .zip(g.g_trace.values().iter().flatten())
        .map(|(h, g)| (h - g.conj()).norm())
        .fold(0.0, f64::max);
    g.identity_residual = residual;
    if !(residual <= IDENTITY_TOL) {
        return Err(Error::Invariant(format!("reflected extension misses conj(g) on the boundary by {residual:.3e}")));
    }
    Ok(g)
}

/// Variant with every density point and cleanup point in `D_eps(w0)`:
/// `g(z) = [Σ c_j S(z,b_j) − Σ μ_k S(z,B_k)] / S(z,a)`, where `μ` removes the
/// poles at the zeros of `S(·,a)` and keeps `g(a) = a`.
pub fn build_g_17(domain: &Domain, a: Complex64, w0: Complex64, eps: f64, tol: f64) -> Result<GustafssonMap> {
    let op = Arc::new(KSOperator::new(domain)?);
    build_g_17_with(op, a, w0, eps, &GustafssonOptions::with_tol(tol))
}

pub fn build_g_17_with(
    op: Arc<KSOperator>,
    a: Complex64,
    w0: Complex64,
    eps: f64,
    opts: &GustafssonOptions,
) -> Result<GustafssonMap> {
    let domain = op.domain().clone();
    kernels::require_interior(&domain, a)?;
    if !(eps > 0.0) || domain.distance_to_boundary(w0).0 <= eps || !domain.is_inside_polygonal(w0) {
        return Err(Error::InvalidArgument(format!("disc D_{eps}({w0}) is not compactly inside the domain")));
    }
    let s_a = op.szego(a)?;
    s_a.diagonal()?;
    let l_a = kernels::garabedian(&s_a);
    let zeros = kernels::szego_zeros(&s_a)?;
    let nodes: Vec<Complex64> = std::iter::once(a).chain(zeros.iter().copied()).collect();
    let n = nodes.len();
    let (cleanup, b_fields, m) = cleanup_points(&op, &nodes, w0, eps)?;
    let mut fit_tol = derived_fit_tol(opts, kappa(s_a.trace()));
    let attempts = if opts.fit_tol.is_some() { 1 } else { 3 };
    for attempt in 0..attempts {
        let fit = fit_confined(&op, &s_a, w0, eps, fit_tol, opts)?;
        let num = fit.combination(&domain);
        let rhs = DVector::from_iterator(
            n,
            nodes
                .iter()
                .map(|&z| -> Result<Complex64> {
                    let v = quadrature::cauchy_eval_many(&[&num, s_a.trace()], z, Upsampling::Auto)?;
                    Ok(v[0] - z * v[1])
                })
                .collect::<Result<Vec<_>>>()?,
        );
        let mu: Vec<Complex64> = m
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::IllConditioned("cleanup system is singular".into()))?
            .iter()
            .copied()
            .collect();
        let traces: Vec<&BoundaryFunction> = b_fields.iter().map(SzegoField::trace).collect();
        let correction = BoundaryFunction::combine(&domain, &traces, &mu);
        let numerator = num.zip_with(&correction, |x, y| x - y);
        check_pole_free(&numerator, &s_a, &zeros)?;
        let g_trace = numerator.zip_with(s_a.trace(), |x, s| x / s);
        let gp_trace = g_trace.d_dz();
        let closeness = closeness_of(&g_trace, &gp_trace);
        if closeness.c1() > opts.closeness_tol {
            if attempt + 1 < attempts {
                fit_tol *= 0.1;
                continue;
            }
            check_injective(&domain, &g_trace)?;
            return Err(Error::Invariant(format!(
                "‖g − id‖ = {:.3e} exceeds {:.3e} at fit tolerance {fit_tol:.3e}",
                closeness.c1(),
                opts.closeness_tol
            )));
        }
        check_injective(&domain, &g_trace)?;
        let mut poles: Vec<(Complex64, Complex64)> = fit.points.iter().zip(&fit.coeffs).map(|(p, c)| (*p, c.conj())).collect();
        poles.extend(cleanup.iter().zip(&mu).map(|(p, m)| (*p, -m.conj())));
        let l_fields: Vec<GarabedianField> = fit.fields.iter().chain(&b_fields).map(kernels::garabedian).collect();
        let regs: Vec<&BoundaryFunction> = l_fields.iter().map(GarabedianField::regular_trace).collect();
        let coefs: Vec<Complex64> = poles.iter().map(|p| p.1).collect();
        let regular = BoundaryFunction::combine(&domain, &regs, &coefs);
        let refl = Reflected { constant: ZERO, poles, regular, den: Denominator::Garabedian };
        return finish(GustafssonMap {
            variant: Variant::Thm17 { w0, eps },
            op,
            a,
            zeros,
            fit,
            cleanup,
            mu,
            szego_a: s_a,
            garabedian_a: l_a,
            g_trace,
            gp_trace,
            refl,
            closeness,
            identity_residual: 0.0,
            fit_tol,
        });
    }
    unreachable!("attempt loop always returns")
}

/// `n` points on the circle of radius `0.9 eps` about `w0`, rotated until
/// `M_jk = S(a_j,B_k)` is well conditioned.
fn cleanup_points(
    op: &KSOperator,
    nodes: &[Complex64],
    w0: Complex64,
    eps: f64,
) -> Result<(Vec<Complex64>, Vec<SzegoField>, DMatrix<Complex64>)> {
    let n = nodes.len();
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut worst = f64::INFINITY;
    for draw in 0..8 {
        let offset = 0.25 + golden * draw as f64;
        let pts: Vec<Complex64> =
            (0..n).map(|k| w0 + Complex64::from_polar(0.9 * eps, offset + 2.0 * PI * k as f64 / n as f64)).collect();
        let fields = pts.iter().map(|&b| op.szego(b)).collect::<Result<Vec<_>>>()?;
        let mut m = DMatrix::zeros(n, n);
        for (j, &z) in nodes.iter().enumerate() {
            let traces: Vec<&BoundaryFunction> = fields.iter().map(SzegoField::trace).collect();
            let row = quadrature::cauchy_eval_many(&traces, z, Upsampling::Auto)?;
            for k in 0..n {
                m[(j, k)] = row[k];
            }
        }
        let sv = m.clone().singular_values();
        let cond = sv.max() / sv.min();
        if cond.is_finite() && cond < MAX_CONDITION_M {
            return Ok((pts, fields, m));
        }
        worst = worst.min(cond);
    }
    Err(Error::IllConditioned(format!("cleanup matrix condition {worst:.3e} after 8 draws")))
}

/// Residue of `numerator/S(·,a)` at each zero of `S(·,a)`, from a small
/// circle, relative to the size of `g` on that circle.
fn check_pole_free(numerator: &BoundaryFunction, s_a: &SzegoField, zeros: &[Complex64]) -> Result<()> {
    let domain = numerator.domain();
    for (i, &z0) in zeros.iter().enumerate() {
        let sep = zeros.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, w)| (w - z0).norm()).fold(f64::INFINITY, f64::min);
        let rho = (0.5 * domain.distance_to_boundary(z0).0).min(0.4 * sep);
        let mut acc = ZERO;
        let mut size: f64 = 0.0;
        for t in crate::spectral::nodes(CONTOUR_POINTS) {
            let e = Complex64::from_polar(rho, t);
            let v = quadrature::cauchy_eval_many(&[numerator, s_a.trace()], z0 + e, Upsampling::Auto)?;
            let g = v[0] / v[1];
            size = size.max(g.norm());
            acc += g * e;
        }
        let res = acc / CONTOUR_POINTS as f64;
        if res.norm() > 1e-8 * rho * size {
            return Err(Error::Pole(format!("residual pole of g at zero {z0}: residue {:.3e}", res.norm())));
        }
    }
    Ok(())
}

/// Principal part `Σ_k p_k/(w−w_0)^k` at a pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalPart {
    pub w: Complex64,
    pub p: Vec<Complex64>,
}

impl PrincipalPart {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let d = z - self.w;
        self.p.iter().enumerate().map(|(k, c)| c / d.powu(k as u32 + 1)).sum()
    }
}

#[derive(Debug, Clone)]
struct RawPole {
    z: Complex64,
    w: Complex64,
    /// `w`-plane coefficients of the Schwarz-type function.
    h: Vec<Complex64>,
    /// `z`-plane coefficients of `H_refl`.
    zp: Vec<Complex64>,
    rho_w: f64,
    rho: f64,
    /// Roundoff floors for `|p_k|/ρ^{k−1}` in each plane.
    floor_w: f64,
    floor_z: f64,
}

fn contour_radius(domain: &Domain, poles: &[Complex64], i: usize) -> Result<f64> {
    let p = poles[i];
    let dist = domain.distance_to_boundary(p).0;
    if dist < 2.0 * domain.spacing() {
        return Err(Error::Pole(format!("pole {p} is within {dist:.3e} of the boundary")));
    }
    let sep = poles.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| (q - p).norm()).fold(f64::INFINITY, f64::min);
    Ok((0.5 * dist).min(0.4 * sep))
}

fn extract_pole(g: &GustafssonMap, p: Complex64, rho: f64) -> Result<RawPole> {
    let w = g.eval(p)?;
    let gp = g.derivative(p)?;
    if gp.norm() < 1e-6 {
        return Err(Error::Pole(format!("g′ nearly vanishes at pole {p}")));
    }
    let mut h = vec![ZERO; MAX_PRINCIPAL];
    let mut zp = vec![ZERO; MAX_PRINCIPAL];
    let (mut hmax_w, mut hmax_z) = (0.0f64, 0.0f64);
    for t in crate::spectral::nodes(CONTOUR_POINTS) {
        let e = Complex64::from_polar(rho, t);
        let z = p + e;
        let hv = g.h_refl(z)?;
        let v = quadrature::cauchy_eval_many(&[&g.g_trace, &g.gp_trace], z, Upsampling::Auto)?;
        let dw = v[0] - w;
        hmax_z = hmax_z.max(hv.norm());
        hmax_w = hmax_w.max((hv * v[1]).norm());
        let mut pw = Complex64::new(1.0, 0.0);
        let mut pz = Complex64::new(1.0, 0.0);
        for k in 0..MAX_PRINCIPAL {
            h[k] += hv * pw * v[1] * e;
            zp[k] += hv * pz * e;
            pw *= dw;
            pz *= e;
        }
    }
    h.iter_mut().chain(zp.iter_mut()).for_each(|x| *x /= CONTOUR_POINTS as f64);
    Ok(RawPole { z: p, w, h, zp, rho_w: rho * gp.norm(), rho, floor_w: NOISE * hmax_w * rho, floor_z: NOISE * hmax_z * rho })
}

/// `|p_k|/ρ^{k−1}`, zero when below the roundoff floor of the contour sum.
fn normalized(p: &[Complex64], rho: f64, floor: f64) -> Vec<f64> {
    p.iter()
        .enumerate()
        .map(|(k, c)| {
            let v = c.norm() / rho.powi(k as i32);
            if k > 0 && v <= floor {
                0.0
            } else {
                v
            }
        })
        .collect()
}

/// Number of significant coefficients: the last `k` with
/// `|p_k| > ORDER_TOL·|p_1|·ρ^{k−1}` above the roundoff floor.
fn significant(p: &[Complex64], rho: f64, floor: f64) -> usize {
    let v = normalized(p, rho, floor);
    let lead = v.iter().copied().fold(0.0, f64::max);
    (1..v.len()).filter(|&k| v[k] > ORDER_TOL * lead).map(|k| k + 1).max().unwrap_or(1)
}

/// Largest normalized coefficient beyond the residue, `|p_k|/(|p_1|·ρ^{k−1})`.
fn higher_ratio(p: &[Complex64], rho: f64, floor: f64) -> f64 {
    let v = normalized(p, rho, floor);
    let lead = v[0].max(f64::MIN_POSITIVE);
    v[1..].iter().map(|x| x / lead).fold(0.0, f64::max)
}

fn raw_poles(g: &GustafssonMap, radius_factor: f64) -> Result<Vec<RawPole>> {
    let poles = g.poles();
    let radii = (0..poles.len()).map(|i| contour_radius(g.domain(), &poles, i)).collect::<Result<Vec<_>>>()?;
    poles.par_iter().zip(&radii).map(|(&p, &r)| extract_pole(g, p, r * radius_factor)).collect()
}

/// Principal parts of the Schwarz-type function of `g(Ω)` (poles at the
/// images of the poles of `H_refl`), extracted with contour radii scaled by
/// `radius_factor ∈ (0, 1]`.
pub fn schwarz_principal_parts(g: &GustafssonMap, radius_factor: f64) -> Result<Vec<PrincipalPart>> {
    let raw = raw_poles(g, radius_factor)?;
    Ok(raw.iter().map(|r| PrincipalPart { w: r.w, p: r.h[..significant(&r.h, r.rho_w, r.floor_w)].to_vec() }).collect())
}

/// Principal parts of `H_refl` at its poles in the domain.
pub fn reflected_principal_parts(g: &GustafssonMap, radius_factor: f64) -> Result<Vec<PrincipalPart>> {
    let raw = raw_poles(g, radius_factor)?;
    Ok(raw.iter().map(|r| PrincipalPart { w: r.z, p: r.zp[..significant(&r.zp, r.rho, r.floor_z)].to_vec() }).collect())
}

/// Both families at once: `(schwarz, reflected)`.
pub fn principal_parts(g: &GustafssonMap, radius_factor: f64) -> Result<(Vec<PrincipalPart>, Vec<PrincipalPart>)> {
    let raw = raw_poles(g, radius_factor)?;
    let h = raw.iter().map(|r| PrincipalPart { w: r.w, p: r.h[..significant(&r.h, r.rho_w, r.floor_w)].to_vec() }).collect();
    let z = raw.iter().map(|r| PrincipalPart { w: r.z, p: r.zp[..significant(&r.zp, r.rho, r.floor_z)].to_vec() }).collect();
    Ok((h, z))
}

/// Quadrature nodes `w_j`, orders `n_j` and weights `c_jk` with
/// `∫ f dA = Σ_j Σ_k c_jk f^{(k)}(w_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureData {
    pub nodes: Vec<Complex64>,
    pub orders: Vec<usize>,
    pub weights: Vec<Vec<Complex64>>,
    /// Poles whose images carried negligible weight.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<Complex64>,
    /// Per node, largest normalized principal-part coefficient beyond the residue.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub higher_order: Vec<f64>,
}

/// Image polygons of the boundary curves on a 4× grid.
fn image_polygons(g: &GustafssonMap) -> Arc<Vec<Vec<Complex64>>> {
    g.g_trace.at_grid(4 * g.domain().grid_size())
}

fn inside_image(polys: &[Vec<Complex64>], outer: usize, w: Complex64) -> bool {
    polys.iter().enumerate().all(|(k, poly)| geometry::point_in_polygon(w, poly) == (k == outer))
}

/// `(1/2i)∮_{g(bΩ)} w^m w̄ dw` on the image grid.
fn image_moment(g: &GustafssonMap, m: u32) -> Complex64 {
    let grid = g.domain().grid();
    let mut acc = ZERO;
    for (k, c) in grid.curves.iter().enumerate() {
        for i in 0..grid.n {
            let w = g.g_trace.get(k, i);
            let dw = g.gp_trace.get(k, i) * c.dz[i];
            acc += w.powu(m) * w.conj() * dw;
        }
    }
    acc * grid.dt() / (2.0 * I)
}

/// Area of `g(Ω)`.
pub fn image_area(g: &GustafssonMap) -> f64 {
    image_moment(g, 0).re
}

#[allow(clippy::type_complexity)]
pub fn quadrature_data(g: &GustafssonMap) -> Result<QuadratureData> {
    let raw = raw_poles(g, 1.0)?;
    let diam = g.domain().diameter();
    let area = image_area(g);
    let polys = image_polygons(g);
    let outer = g.domain().outer_index();
    // merge coincident images
    // (node, principal part, contour radius, sources, roundoff floor)
    let mut groups: Vec<(Complex64, Vec<Complex64>, f64, Vec<Complex64>, f64)> = Vec::new();
    for r in &raw {
        if !inside_image(&polys, outer, r.w) {
            return Err(Error::Pole(format!("node {} is not inside the image domain", r.w)));
        }
        match groups.iter_mut().find(|gr| (gr.0 - r.w).norm() <= MERGE_RADIUS * diam) {
            Some(gr) => {
                gr.1.iter_mut().zip(&r.h).for_each(|(x, y)| *x += y);
                gr.2 = gr.2.min(r.rho_w);
                gr.3.push(r.z);
                gr.4 = gr.4.max(r.floor_w);
            }
            None => groups.push((r.w, r.h.clone(), r.rho_w, vec![r.z], r.floor_w)),
        }
    }
    let mut data = QuadratureData {
        nodes: Vec::new(),
        orders: Vec::new(),
        weights: Vec::new(),
        dropped: Vec::new(),
        higher_order: Vec::new(),
    };
    for (w, h, rho_w, sources, floor) in groups {
        let order = significant(&h, rho_w, floor);
        let mut fact = 1.0;
        let weights: Vec<Complex64> = (0..order)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                PI * h[k] / fact
            })
            .collect();
        if weights.iter().all(|c| c.norm() < DROP_WEIGHT * area) {
            data.dropped.extend(sources);
            continue;
        }
        data.nodes.push(w);
        data.orders.push(order);
        data.weights.push(weights);
        data.higher_order.push(higher_ratio(&h, rho_w, floor));
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResidual {
    pub m: u32,
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// `|lhs − rhs| / (area · R^m)` with `R = max |w|` on the image boundary.
    pub relative: f64,
}

/// Compare `∫_{g(Ω)} w^m dA` from the image boundary against the quadrature
/// sum for `m = 0..=max_degree`.
pub fn verify_quadrature(g: &GustafssonMap, data: &QuadratureData, max_degree: u32) -> Vec<QuadratureResidual> {
    let area = image_area(g);
    let radius = g.g_trace.values().iter().flatten().map(|w| w.norm()).fold(0.0, f64::max);
    (0..=max_degree)
        .into_par_iter()
        .map(|m| {
            let lhs = image_moment(g, m);
            let mut rhs = ZERO;
            for (w, cs) in data.nodes.iter().zip(&data.weights) {
                for (k, c) in cs.iter().enumerate() {
                    let k = k as u32;
                    if k <= m {
                        let falling: f64 = (m - k + 1..=m).map(f64::from).product();
                        rhs += c * falling * w.powu(m - k);
                    }
                }
            }
            let relative = (lhs - rhs).norm() / (area * radius.powi(m as i32));
            QuadratureResidual { m, lhs, rhs, relative }
        })
        .collect()
}

/// Seeded interior base point: the deepest of a seeded sample whose Szegő
/// trace is resolved by the grid and whose Szegő zeros are simple.
pub fn choose_base_point(op: &KSOperator, seed: u64) -> Result<Complex64> {
    let domain = op.domain();
    let mut pts = interior_sample(domain, 32, 0.15, seed);
    pts.sort_by(|a, b| domain.distance_to_boundary(*b).0.total_cmp(&domain.distance_to_boundary(*a).0));
    let mut last = None;
    for z in pts {
        let s = match op.szego(z) {
            Ok(s) => s,
            Err(e) => {
                last = Some(e);
                continue;
            }
        };
        if s.trace().tail_ratio() > RESOLVED_TAIL {
            last = Some(Error::Invariant(format!("base point {z} is not resolved by the grid")));
            continue;
        }
        match kernels::szego_zeros(&s) {
            Ok(_) => return Ok(z),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Invariant("no admissible base point".into())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdomains;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disc_fit_is_exact_with_one_term() {
        let d = testdomains::disc(c(0.0, 0.0), 1.0, 64).unwrap();
        let op = KSOperator::new(&d).unwrap();
        let fit = fit_density_16(&op, c(0.0, 0.0), 1e-12, &GustafssonOptions::with_tol(1e-8)).unwrap();
        assert_eq!(fit.points.len(), 1);
        assert_eq!(fit.points[0], c(0.0, 0.0));
        assert!((fit.coeffs[0] - 1.0).norm() < 1e-12, "{:?}", fit.coeffs);
    }

    #[test]
    fn disc_map_is_identity_with_mean_value_node() {
        let d = testdomains::disc(c(0.0, 0.0), 1.0, 64).unwrap();
        let g = build_g_16(&d, c(0.0, 0.0), 1e-8).unwrap();
        assert!(g.closeness().c1() < 1e-12);
        for z in [c(0.3, 0.1), c(-0.5, 0.4)] {
            assert!((g.eval(z).unwrap() - z).norm() < 1e-12);
            assert!((g.h_refl(z).unwrap() - 1.0 / z).norm() < 1e-10);
        }
        let q = quadrature_data(&g).unwrap();
        assert_eq!(q.nodes.len(), 1);
        assert!(q.nodes[0].norm() < 1e-12);
        assert_eq!(q.orders, vec![1]);
        assert!((q.weights[0][0] - PI).norm() < 1e-10);
        let res = verify_quadrature(&g, &q, 4);
        assert!(res.iter().all(|r| r.relative < 1e-10), "{res:?}");
    }

    #[test]
    fn shifted_disc_node_and_weight() {
        let center = c(0.4, -0.2);
        let radius = 0.7;
        let d = testdomains::disc(center, radius, 64).unwrap();
        let g = build_g_16(&d, center, 1e-8).unwrap();
        let q = quadrature_data(&g).unwrap();
        assert_eq!(q.nodes.len(), 1);
        assert!((q.nodes[0] - center).norm() < 1e-10);
        assert!((q.weights[0][0] - PI * radius * radius).norm() < 1e-10);
        let res = verify_quadrature(&g, &q, 1);
        assert!((res[1].lhs - PI * radius * radius * center).norm() < 1e-10);
        assert!(res[1].relative < 1e-10);
    }

    #[test]
    fn loose_tolerance_is_not_injective() {
        let d = testdomains::annulus(0.5, 256).unwrap();
        let op = Arc::new(KSOperator::new(&d).unwrap());
        match build_g_16_with(op, c(0.7, 0.1), &GustafssonOptions::with_tol(1e3).fit_tol(0.12)) {
            Err(Error::Injectivity(_)) => {}
            other => panic!("expected injectivity failure, got {:?}", other.map(|g| g.summary())),
        }
    }

    fn annulus_map() -> &'static GustafssonMap {
        static MAP: std::sync::OnceLock<GustafssonMap> = std::sync::OnceLock::new();
        MAP.get_or_init(|| {
            let d = testdomains::annulus(0.5, 256).unwrap();
            build_g_16(&d, c(0.7, 0.1), 1e-3).unwrap()
        })
    }

    #[test]
    fn annulus_map_meets_tolerance() {
        let g = annulus_map();
        assert!(g.closeness().c1() <= 1e-3, "{:?}", g.closeness());
        assert!(g.identity_residual() <= IDENTITY_TOL);
        assert_eq!(g.zeros().len(), 1);
        let hist = &g.fit().history;
        assert!(hist.windows(2).all(|w| w[1] <= w[0]), "{hist:?}");
        let z = c(-0.2, 0.75);
        assert!((g.eval(z).unwrap() - z).norm() <= 1e-3);
    }

    #[test]
    fn closeness_is_bounded_by_fit_residual() {
        let d = testdomains::annulus(0.5, 256).unwrap();
        let op = Arc::new(KSOperator::new(&d).unwrap());
        let a = c(0.7, 0.1);
        let g = build_g_16_with(op.clone(), a, &GustafssonOptions::with_tol(1.0).fit_tol(1e-6)).unwrap();
        let l = kernels::garabedian(&op.szego(a).unwrap());
        let k = kappa(l.trace());
        // sup over the grid is at most sqrt(total nodes) times the RMS
        let sup = g.fit().residual * ((2 * d.connectivity() * d.grid_size()) as f64).sqrt();
        assert!(g.closeness().c1() <= k * sup, "{:?} vs {k} * {sup}", g.closeness());
    }

    #[test]
    fn reflected_poles_are_the_density_points_and_zeros() {
        let g = annulus_map();
        let mut expect: Vec<Complex64> = g.points().to_vec();
        expect.extend_from_slice(g.zeros());
        assert_eq!(g.poles(), expect);
        let parts = reflected_principal_parts(g, 1.0).unwrap();
        for (pp, (b, cj)) in parts.iter().zip(g.points().iter().zip(g.coeffs())) {
            let expected = cj.conj() / (2.0 * PI * g.szego_base().eval(*b).unwrap());
            assert!((pp.p[0] - expected).norm() <= 1e-8 * expected.norm().max(1e-3), "{b}: {} vs {expected}", pp.p[0]);
            assert_eq!(pp.p.len(), 1);
        }
        // away from the poles the extension is analytic
        let z0 = g.points()[0] + 0.5 * (g.points()[1] - g.points()[0]);
        let rho = 0.01;
        let acc: Complex64 = crate::spectral::nodes(64)
            .map(|t| {
                let e = Complex64::from_polar(rho, t);
                g.h_refl(z0 + e).unwrap() * e
            })
            .sum::<Complex64>()
            / 64.0;
        assert!(acc.norm() < 1e-10, "{acc}");
    }

    #[test]
    fn annulus_quadrature_identity() {
        let g = annulus_map();
        let q = quadrature_data(g).unwrap();
        assert_eq!(q.nodes.len() + q.dropped.len(), g.points().len() + 1);
        assert!(q.orders.iter().all(|&o| o == 1));
        let total: Complex64 = q.weights.iter().map(|w| w[0]).sum();
        let area = image_area(g);
        assert!((total - area).norm() <= 1e-10 * area, "{total} vs {area}");
        let res = verify_quadrature(g, &q, 10);
        assert!(res.iter().all(|r| r.relative <= 1e-6), "{res:?}");
    }

    #[test]
    fn principal_parts_do_not_depend_on_radius() {
        let g = annulus_map();
        let full = schwarz_principal_parts(g, 1.0).unwrap();
        let half = schwarz_principal_parts(g, 0.5).unwrap();
        for (x, y) in full.iter().zip(&half) {
            assert_eq!(x.w, y.w);
            assert_eq!(x.p.len(), y.p.len());
            for (u, v) in x.p.iter().zip(&y.p) {
                assert!((u - v).norm() <= 1e-8 * u.norm().max(1.0), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn confined_disc_nodes_stay_in_the_disc() {
        let d = testdomains::disc(c(0.0, 0.0), 1.0, 128).unwrap();
        let g = build_g_17(&d, c(0.0, 0.0), c(0.0, 0.0), 0.1, 0.05).unwrap();
        assert!(g.closeness().c1() <= 0.05);
        assert_eq!(g.cleanup_points().len(), 1);
        assert!(g.points().iter().chain(g.cleanup_points()).all(|b| b.norm() < 0.1));
        let q = quadrature_data(&g).unwrap();
        assert!(q.nodes.iter().all(|w| w.norm() < 0.1), "{:?}", q.nodes);
        assert!(q.orders.iter().all(|&o| o == 1));
        assert!(q.higher_order.iter().all(|&h| h <= ORDER_TOL));
        let res = verify_quadrature(&g, &q, 6);
        assert!(res.iter().all(|r| r.relative <= 1e-8), "{res:?}");
    }

    #[test]
    fn cleanup_coefficients_shrink_with_the_fit() {
        let d = testdomains::disc(c(0.0, 0.0), 1.0, 128).unwrap();
        let op = Arc::new(KSOperator::new(&d).unwrap());
        let mu = |ft: f64| {
            let g = build_g_17_with(op.clone(), c(0.3, 0.1), c(0.0, 0.0), 0.1, &GustafssonOptions::with_tol(1.0).fit_tol(ft))
                .unwrap();
            (g.fit().residual, g.mu().iter().map(|m| m.norm()).fold(0.0, f64::max))
        };
        let (r1, m1) = mu(1e-2);
        let (r2, m2) = mu(1e-4);
        assert!(r2 <= 0.5 * r1);
        assert!(m2 <= 0.5 * m1, "mu {m1:e} -> {m2:e} for residual {r1:e} -> {r2:e}");
    }
}
