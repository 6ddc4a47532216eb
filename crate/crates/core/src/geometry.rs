//! Multiply connected domains bounded by trigonometric-polynomial curves.
//!
//! A [`Domain`] stores its curves with the inner curves first (in input
//! order) and the outer curve last, and always with the positive boundary
//! orientation: the outer curve counterclockwise, inner curves clockwise.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveRole {
    Outer,
    Inner,
}

/// `z(t) = Σ_{|m|≤M} c_m e^{imt}`, coefficients stored as `c_{-M}..c_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    coeffs: Vec<Complex64>,
    degree: usize,
    role: CurveRole,
}

impl Curve {
    /// Build from coefficients `c_{-offset}, c_{-offset+1}, ...`.
    pub fn from_coeffs(coeffs: &[Complex64], degree_offset: i64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Parse("curve has no coefficients".into()));
        }
        let lo = -degree_offset;
        let hi = lo + coeffs.len() as i64 - 1;
        let mut degree = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
        // trim exact zeros at the top so the Nyquist bound reflects the real content
        let get = |m: i64| -> Complex64 {
            if m < lo || m > hi {
                Complex64::new(0.0, 0.0)
            } else {
                coeffs[(m - lo) as usize]
            }
        };
        while degree > 0 && get(degree as i64) == Complex64::new(0.0, 0.0) && get(-(degree as i64)) == Complex64::new(0.0, 0.0) {
            degree -= 1;
        }
        let full = (-(degree as i64)..=degree as i64).map(get).collect();
        Ok(Self { coeffs: full, degree, role: CurveRole::Inner })
    }

    pub fn circle(center: Complex64, radius: f64) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0), center, Complex64::new(radius, 0.0)], degree: 1, role: CurveRole::Inner }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn role(&self) -> CurveRole {
        self.role
    }

    /// Coefficients `c_{-M}..c_M`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, m: i64) -> Complex64 {
        let d = self.degree as i64;
        if m.abs() > d {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(m + d) as usize]
        }
    }

    /// `d^order z / dt^order` at `t`.
    pub fn eval(&self, t: f64, order: u32) -> Complex64 {
        let d = self.degree as i64;
        (-d..=d)
            .map(|m| {
                let c = self.coeff(m);
                c * Complex64::new(0.0, m as f64).powu(order) * Complex64::from_polar(1.0, m as f64 * t)
            })
            .sum()
    }

    pub fn point(&self, t: f64) -> Complex64 {
        self.eval(t, 0)
    }

    /// Signed area `(1/2i)∮ z̄ dz = π Σ m |c_m|²`.
    pub fn signed_area(&self) -> f64 {
        let d = self.degree as i64;
        PI * (-d..=d).map(|m| m as f64 * self.coeff(m).norm_sqr()).sum::<f64>()
    }

    /// Same curve traversed backwards (`t ↦ -t`).
    pub fn reversed(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Self { coeffs, degree: self.degree, role: self.role }
    }

    /// Samples of `z`, `z'`, `z''` on `n` uniform nodes (exact for `n > 2M`).
    pub fn sample(&self, n: usize) -> CurveGrid {
        assert!(n > 2 * self.degree, "grid {n} cannot represent degree {}", self.degree);
        let mut bins = [vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n]];
        let d = self.degree as i64;
        for m in -d..=d {
            let idx = if m >= 0 { m as usize } else { (n as i64 + m) as usize };
            let c = self.coeff(m);
            let im = Complex64::new(0.0, m as f64);
            bins[0][idx] = c;
            bins[1][idx] = c * im;
            bins[2][idx] = c * im * im;
        }
        let [z, dz, d2z] = bins.map(|b| spectral::synthesize(&b));
        CurveGrid { z, dz, d2z }
    }
}

/// Samples of one curve on a uniform parameter grid.
#[derive(Debug, Clone)]
pub struct CurveGrid {
    pub z: Vec<Complex64>,
    pub dz: Vec<Complex64>,
    pub d2z: Vec<Complex64>,
}

impl CurveGrid {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn speed(&self, i: usize) -> f64 {
        self.dz[i].norm()
    }

    pub fn tangent(&self, i: usize) -> Complex64 {
        self.dz[i] / self.dz[i].norm()
    }

    pub fn max_speed(&self) -> f64 {
        self.dz.iter().map(|d| d.norm()).fold(0.0, f64::max)
    }
}

/// All curves sampled on `n` nodes each.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n: usize,
    pub curves: Vec<CurveGrid>,
}

impl Grid {
    pub fn dt(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Iterate `(curve, index)` over all nodes in storage order.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.curves.iter().enumerate().flat_map(|(k, c)| (0..c.len()).map(move |i| (k, i)))
    }

    pub fn total(&self) -> usize {
        self.n * self.curves.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub curve: usize,
    pub t: f64,
    pub z: Complex64,
    pub tangent: Complex64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Inside,
    Outside,
    NearBoundary(f64),
}

/// A bounded `n`-connected domain with normalized orientation.
#[derive(Debug, Clone)]
pub struct Domain {
    curves: Vec<Curve>,
    grid: usize,
    diameter: f64,
    cache: Arc<Mutex<HashMap<usize, Arc<Grid>>>>,
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.curves == other.curves && self.grid == other.grid
    }
}

impl Domain {
    /// Validate, orient and order the curves. The outer curve is the one of
    /// largest enclosed area; every other curve must lie inside it and
    /// outside each other.
    pub fn new(curves: Vec<Curve>, grid: usize) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Parse("domain has no curves".into()));
        }
        if grid < 8 || !grid.is_power_of_two() {
            return Err(Error::Parse(format!("grid {grid} must be a power of two >= 8")));
        }
        let check_n = (4 * grid).max(8 * curves.iter().map(|c| c.degree).max().unwrap_or(1) + 8);
        for (k, c) in curves.iter().enumerate() {
            if c.degree == 0 {
                return Err(Error::BadCurve { curve: k, reason: "constant curve (a point)".into() });
            }
            let s = c.sample(check_n);
            let scale = c.coeffs.iter().map(|x| x.norm()).fold(0.0, f64::max);
            if s.dz.iter().any(|d| d.norm() <= 1e-10 * scale) {
                return Err(Error::BadCurve { curve: k, reason: "vanishing derivative".into() });
            }
            if c.signed_area().abs() <= 1e-14 * scale * scale {
                return Err(Error::BadCurve { curve: k, reason: "zero enclosed area".into() });
            }
            if polygon_self_intersects(&s.z) {
                return Err(Error::BadCurve { curve: k, reason: "self-intersection".into() });
            }
        }
        let outer_idx =
            (0..curves.len()).max_by(|&a, &b| curves[a].signed_area().abs().total_cmp(&curves[b].signed_area().abs())).unwrap();

        let polys: Vec<Vec<Complex64>> = curves.iter().map(|c| c.sample(check_n).z).collect();
        for (k, p) in polys.iter().enumerate() {
            for (j, q) in polys.iter().enumerate().skip(k + 1) {
                if polygons_intersect(p, q) {
                    return Err(Error::Nesting(format!("curves {k} and {j} intersect")));
                }
            }
        }
        for (k, p) in polys.iter().enumerate() {
            if k == outer_idx {
                continue;
            }
            if !point_in_polygon(p[0], &polys[outer_idx]) {
                return Err(Error::Nesting(format!("curve {k} is not inside the outer curve {outer_idx}")));
            }
            for (j, q) in polys.iter().enumerate() {
                if j != k && j != outer_idx && point_in_polygon(p[0], q) {
                    return Err(Error::Nesting(format!("curve {k} lies inside inner curve {j}")));
                }
            }
        }

        let mut ordered = Vec::with_capacity(curves.len());
        for (k, c) in curves.iter().enumerate() {
            if k == outer_idx {
                continue;
            }
            let mut c = if c.signed_area() > 0.0 { c.reversed() } else { c.clone() };
            c.role = CurveRole::Inner;
            ordered.push(c);
        }
        let mut outer =
            if curves[outer_idx].signed_area() < 0.0 { curves[outer_idx].reversed() } else { curves[outer_idx].clone() };
        outer.role = CurveRole::Outer;
        let outer_pts = &polys[outer_idx];
        let diameter = outer_pts
            .iter()
            .enumerate()
            .flat_map(|(i, a)| outer_pts[i + 1..].iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        ordered.push(outer);

        Ok(Self { curves: ordered, grid, diameter, cache: Arc::default() })
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    /// Number of boundary curves `n`.
    pub fn connectivity(&self) -> usize {
        self.curves.len()
    }

    pub fn inner_count(&self) -> usize {
        self.curves.len() - 1
    }

    pub fn outer_index(&self) -> usize {
        self.curves.len() - 1
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    pub fn max_degree(&self) -> usize {
        self.curves.iter().map(|c| c.degree).max().unwrap_or(0)
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Same curves on a different base grid.
    pub fn with_grid(&self, grid: usize) -> Result<Self> {
        if grid < 8 || !grid.is_power_of_two() {
            return Err(Error::Parse(format!("grid {grid} must be a power of two >= 8")));
        }
        Ok(Self { curves: self.curves.clone(), grid, diameter: self.diameter, cache: Arc::default() })
    }

    /// Exact area from the Fourier coefficients.
    pub fn area(&self) -> f64 {
        self.curves.iter().map(Curve::signed_area).sum()
    }

    /// Sampled curves on `n` nodes per curve, cached.
    pub fn grid_at(&self, n: usize) -> Arc<Grid> {
        let mut cache = self.cache.lock().expect("grid cache poisoned");
        cache.entry(n).or_insert_with(|| Arc::new(Grid { n, curves: self.curves.iter().map(|c| c.sample(n)).collect() })).clone()
    }

    pub fn grid(&self) -> Arc<Grid> {
        self.grid_at(self.grid)
    }

    /// Base-grid node spacing bound `2π·max|z'|/N`.
    pub fn spacing(&self) -> f64 {
        let g = self.grid();
        g.curves.iter().map(|c| c.max_speed()).fold(0.0, f64::max) * g.dt()
    }

    /// Boundary points of curve `k` at `t_i = 2πi/N`.
    pub fn boundary_grid(&self, k: usize) -> Result<Vec<BoundaryPoint>> {
        let curve = self.curves.get(k).ok_or_else(|| Error::InvalidArgument(format!("no curve {k}")))?;
        let needed = 4 * curve.degree;
        if self.grid < needed {
            return Err(Error::GridTooCoarse { grid: self.grid, degree: curve.degree, needed });
        }
        let g = self.grid();
        let cg = &g.curves[k];
        Ok(spectral::nodes(g.n)
            .enumerate()
            .map(|(i, t)| BoundaryPoint { curve: k, t, z: cg.z[i], tangent: cg.tangent(i), speed: cg.speed(i) })
            .collect())
    }

    /// Distance from `z` to the boundary and the nearest `(curve, t)`.
    pub fn distance_to_boundary(&self, z: Complex64) -> (f64, usize, f64) {
        let g = self.grid();
        let (mut best_k, mut best_i, mut best) = (0, 0, f64::INFINITY);
        for (k, c) in g.curves.iter().enumerate() {
            for (i, p) in c.z.iter().enumerate() {
                let d = (p - z).norm();
                if d < best {
                    (best_k, best_i, best) = (k, i, d);
                }
            }
        }
        // Newton on d/dt |z(t) - z|^2 from the nearest node
        let curve = &self.curves[best_k];
        let mut t = 2.0 * PI * best_i as f64 / g.n as f64;
        let h = g.dt();
        for _ in 0..12 {
            let (p, dp, d2p) = (curve.eval(t, 0), curve.eval(t, 1), curve.eval(t, 2));
            let f = ((p - z) * dp.conj()).re;
            let df = dp.norm_sqr() + ((p - z) * d2p.conj()).re;
            if df <= 0.0 {
                break;
            }
            let step = (f / df).clamp(-h, h);
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let d = (curve.point(t) - z).norm();
        if d < best {
            (d, best_k, t.rem_euclid(2.0 * PI))
        } else {
            (best, best_k, 2.0 * PI * best_i as f64 / g.n as f64)
        }
    }

    /// Classify `z` with the default near-boundary threshold `2π·max|z'|/N`.
    pub fn contains(&self, z: Complex64) -> Location {
        self.contains_with(z, self.spacing())
    }

    pub fn contains_with(&self, z: Complex64, delta: f64) -> Location {
        let (d, _, _) = self.distance_to_boundary(z);
        if d < delta {
            return Location::NearBoundary(d);
        }
        if self.is_inside_polygonal(z) {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    /// Crossing-number test against the base-grid polygons; accurate for
    /// points farther than about one node spacing from the boundary.
    pub fn is_inside_polygonal(&self, z: Complex64) -> bool {
        let g = self.grid_at(2 * self.grid);
        let outer = self.outer_index();
        g.curves.iter().enumerate().all(|(k, c)| {
            let inside = point_in_polygon(z, &c.z);
            if k == outer {
                inside
            } else {
                !inside
            }
        })
    }

    /// Point inside an inner curve, used as a logarithmic source location.
    /// Starts from the area centroid and falls back to a lattice search.
    pub fn hole_point(&self, k: usize) -> Complex64 {
        let c = &self.curves[k];
        let s = c.sample(4 * self.grid);
        let dt = 2.0 * PI / s.len() as f64;
        // ∫ z dA = (1/2i)∮ |z|² dz, both sides signed by the curve orientation
        let area = c.signed_area();
        let m: Complex64 = s.z.iter().zip(&s.dz).map(|(z, dz)| z.norm_sqr() * dz).sum::<Complex64>() * dt;
        let centroid = m / (Complex64::new(0.0, 2.0) * area);
        if point_in_polygon(centroid, &s.z) && polygon_distance(centroid, &s.z) > 0.0 {
            return centroid;
        }
        let (lo, hi) = bbox(&s.z);
        let mut best = (f64::NEG_INFINITY, s.z[0]);
        for i in 1..40 {
            for j in 1..40 {
                let p = Complex64::new(lo.re + (hi.re - lo.re) * i as f64 / 40.0, lo.im + (hi.im - lo.im) * j as f64 / 40.0);
                if point_in_polygon(p, &s.z) {
                    let d = polygon_distance(p, &s.z);
                    if d > best.0 {
                        best = (d, p);
                    }
                }
            }
        }
        best.1
    }

    /// Bounding box of the outer curve.
    pub fn bounding_box(&self) -> (Complex64, Complex64) {
        bbox(&self.grid_at(4 * self.grid).curves[self.outer_index()].z)
    }
}

pub(crate) fn bbox(pts: &[Complex64]) -> (Complex64, Complex64) {
    let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo.re = lo.re.min(p.re);
        lo.im = lo.im.min(p.im);
        hi.re = hi.re.max(p.re);
        hi.im = hi.im.max(p.im);
    }
    (lo, hi)
}

fn polygon_distance(z: Complex64, poly: &[Complex64]) -> f64 {
    poly.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Even-odd crossing test.
pub fn point_in_polygon(z: Complex64, poly: &[Complex64]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if z.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    ((b - a).conj() * (c - a)).im
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 && d4 != 0.0
}

/// Segment intersection test between non-adjacent edges of a closed polygon.
pub fn polygon_self_intersects(poly: &[Complex64]) -> bool {
    let n = poly.len();
    let (lo, hi) = bbox(poly);
    // bucket edges on a coarse grid to avoid the full quadratic sweep
    let cells = ((n as f64).sqrt() as usize).max(4);
    let w = ((hi.re - lo.re) / cells as f64).max(1e-300);
    let h = ((hi.im - lo.im) / cells as f64).max(1e-300);
    let cell_of = |p: Complex64| -> (usize, usize) {
        ((((p.re - lo.re) / w) as usize).min(cells - 1), (((p.im - lo.im) / h) as usize).min(cells - 1))
    };
    let mut buckets: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for i in 0..n {
        let (a, b) = (cell_of(poly[i]), cell_of(poly[(i + 1) % n]));
        for cx in a.0.min(b.0)..=a.0.max(b.0) {
            for cy in a.1.min(b.1)..=a.1.max(b.1) {
                buckets.entry((cx, cy)).or_default().push(i);
            }
        }
    }
    for edges in buckets.values() {
        for (x, &i) in edges.iter().enumerate() {
            for &j in &edges[x + 1..] {
                let gap = (i as isize - j as isize).unsigned_abs();
                if gap <= 1 || gap == n - 1 {
                    continue;
                }
                if segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                    return true;
                }
            }
        }
    }
    false
}

pub fn polygons_intersect(p: &[Complex64], q: &[Complex64]) -> bool {
    let (plo, phi) = bbox(p);
    let (qlo, qhi) = bbox(q);
    if phi.re < qlo.re || qhi.re < plo.re || phi.im < qlo.im || qhi.im < plo.im {
        return false;
    }
    let (n, m) = (p.len(), q.len());
    (0..n).any(|i| (0..m).any(|j| segments_cross(p[i], p[(i + 1) % n], q[j], q[(j + 1) % m])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn annulus(r: f64) -> Domain {
        Domain::new(vec![Curve::circle(c(0.0, 0.0), 1.0), Curve::circle(c(0.0, 0.0), r)], 256).unwrap()
    }

    #[test]
    fn unit_circle_is_outer_ccw() {
        let d = Domain::new(vec![Curve::circle(c(0.0, 0.0), 1.0)], 64).unwrap();
        assert_eq!(d.connectivity(), 1);
        assert_eq!(d.curves()[0].role(), CurveRole::Outer);
        assert!(d.curves()[0].signed_area() > 0.0);
        let bp = d.boundary_grid(0).unwrap();
        assert!((bp[0].z - c(1.0, 0.0)).norm() < 1e-15);
        assert!((bp[0].tangent - c(0.0, 1.0)).norm() < 1e-15);
        assert!((bp[0].speed - 1.0).abs() < 1e-15);
    }

    #[test]
    fn annulus_inner_is_reoriented_clockwise() {
        let d = annulus(0.5);
        assert_eq!(d.connectivity(), 2);
        assert_eq!(d.curves()[0].role(), CurveRole::Inner);
        assert!(d.curves()[0].signed_area() < 0.0);
        let bp = d.boundary_grid(0).unwrap();
        assert!((bp[0].z - c(0.5, 0.0)).norm() < 1e-15);
        assert!((bp[0].tangent - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn disjoint_outer_candidates_are_rejected() {
        let r = Domain::new(vec![Curve::circle(c(0.0, 0.0), 1.0), Curve::circle(c(3.0, 0.0), 1.0)], 64);
        assert!(matches!(r, Err(Error::Nesting(_))));
    }

    #[test]
    fn nested_inner_curves_are_rejected() {
        let r = Domain::new(
            vec![Curve::circle(c(0.0, 0.0), 1.0), Curve::circle(c(0.0, 0.0), 0.5), Curve::circle(c(0.0, 0.0), 0.2)],
            64,
        );
        assert!(matches!(r, Err(Error::Nesting(_))));
    }

    #[test]
    fn figure_eight_is_rejected() {
        // z(t) = sin t + i sin 2t / 2 crosses itself at the origin
        let coeffs = [c(0.0, 0.25), c(0.0, 0.5), c(0.0, 0.0), c(0.0, -0.5), c(0.0, -0.25)];
        let curve = Curve::from_coeffs(&coeffs, 2).unwrap();
        let r = Domain::new(vec![curve], 64);
        assert!(matches!(r, Err(Error::BadCurve { .. })));
    }

    #[test]
    fn ellipse_at_quarter_turn() {
        // cos t + 0.5 i sin t = 0.75 e^{it} + 0.25 e^{-it}
        let curve = Curve::from_coeffs(&[c(0.25, 0.0), c(0.0, 0.0), c(0.75, 0.0)], 1).unwrap();
        let d = Domain::new(vec![curve], 64).unwrap();
        let bp = d.boundary_grid(0).unwrap();
        let q = &bp[16];
        assert!((q.z - c(0.0, 0.5)).norm() < 1e-15);
        assert!((q.speed - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_must_resolve_degree() {
        let mut coeffs = vec![c(0.0, 0.0); 41];
        coeffs[21] = c(1.0, 0.0);
        coeffs[40] = c(0.001, 0.0);
        let d = Domain::new(vec![Curve::from_coeffs(&coeffs, 20).unwrap()], 64).unwrap();
        assert!(matches!(d.boundary_grid(0), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn contains_classifies_annulus_points() {
        let d = annulus(0.5);
        assert_eq!(d.contains(c(0.7, 0.0)), Location::Inside);
        assert_eq!(d.contains(c(0.2, 0.0)), Location::Outside);
        assert_eq!(d.contains(c(1.5, 0.3)), Location::Outside);
        assert!(matches!(d.contains_with(c(0.999, 0.0), 0.01), Location::NearBoundary(x) if (x - 0.001).abs() < 1e-12));
    }

    #[test]
    fn annulus_area_is_exact() {
        let d = annulus(0.5);
        assert!((d.area() - PI * 0.75).abs() < 1e-14);
    }

    #[test]
    fn reversal_is_idempotent_after_normalization() {
        let a = annulus(0.4);
        let b = Domain::new(vec![Curve::circle(c(0.0, 0.0), 1.0).reversed(), Curve::circle(c(0.0, 0.0), 0.4).reversed()], 256)
            .unwrap();
        let (ga, gb) = (a.grid(), b.grid());
        for (ca, cb) in ga.curves.iter().zip(&gb.curves) {
            assert_eq!(ca.z, cb.z);
            assert_eq!(ca.dz, cb.dz);
        }
    }

    #[test]
    fn hole_point_is_inside_hole() {
        let d = Domain::new(vec![Curve::circle(c(0.0, 0.0), 1.0), Curve::circle(c(0.3, 0.1), 0.2)], 64).unwrap();
        let p = d.hole_point(0);
        assert!((p - c(0.3, 0.1)).norm() < 1e-12, "{p}");
    }
}
