use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use qdomain::bergman::{interior_sample, BergmanKernel};
use qdomain::gustafsson::{self, GustafssonMap, GustafssonOptions, QuadratureData, QuadratureResidual};
use qdomain::io::{load_domain, DomainSpec};
use qdomain::kernels::{self, AhlforsMap, GarabedianField, KSOperator};
use qdomain::zip::{self, AlgebraicRelation, DegreeSearch, QuotientFit, ZipArchive};
use qdomain::{harmonic, Domain, Location};
use serde::Serialize;

use crate::config::{RunArgs, VariantArg};
use crate::output::{all_pass, c2, failing, push_trace, trace_csv, write_json, Check, Csv, Num};
use crate::Failure;

/// Pullback residual bound used by `unzip`.
const PULLBACK_BOUND: f64 = 1e-5;
/// Agreement points for `unzip`.
const UNZIP_POINTS: usize = 20;
/// Points entering the pullback check (all pairs).
const PULLBACK_POINTS: usize = 6;

fn load(args: &RunArgs) -> Result<Domain, Failure> {
    let path = args.domain.as_ref().ok_or_else(|| Failure::Input("--domain is required".into()))?;
    let spec = load_domain(path)?;
    Ok(spec.build_with_grid(args.grid.unwrap_or(spec.grid))?)
}

fn base_point(args: &RunArgs, op: &KSOperator) -> Result<Complex64, Failure> {
    Ok(match args.base {
        Some(a) => a,
        None => gustafsson::choose_base_point(op, args.seed)?,
    })
}

fn out(args: &RunArgs, name: &str) -> PathBuf {
    args.out.join(name)
}

#[derive(Serialize)]
struct KernelsReport {
    command: &'static str,
    connectivity: usize,
    grid: usize,
    base: Complex64,
    szego_zeros: Vec<Complex64>,
    period_matrix: Vec<Vec<Complex64>>,
    ahlfors_derivative_at_base: Complex64,
    note: Option<String>,
    checks: Vec<Check>,
    pass: bool,
}

pub fn kernels(args: &RunArgs) -> Result<String, Failure> {
    let domain = load(args)?;
    let n = domain.connectivity();
    let op = Arc::new(KSOperator::new(&domain)?);
    let a = base_point(args, &op)?;
    let s = op.szego(a)?;
    let l = GarabedianField::from_szego(&s);
    let f = AhlforsMap::new(s.clone());
    let rep = f.report()?;
    let zeros = kernels::szego_zeros(&s)?;
    let fprimes = harmonic::f_primes(&domain)?;
    let period = harmonic::period_matrix(&fprimes)?;
    let bergman = BergmanKernel::with_operator(op.clone(), args.seed)?;

    trace_csv(s.trace()).write(&out(args, "szego.csv"))?;
    trace_csv(l.trace()).write(&out(args, "garabedian.csv"))?;
    trace_csv(f.trace()).write(&out(args, "ahlfors.csv"))?;
    let mut fp = Csv::new(&["field", "curve", "index", "t", "x", "y", "re", "im"]);
    for (j, field) in fprimes.iter().enumerate() {
        push_trace(&mut fp, field.trace(), Some(j));
    }
    fp.write(&out(args, "fprime.csv"))?;
    let mut kc = Csv::new(&["x", "y", "re", "im"]);
    for z in interior_lattice(&domain, 24) {
        let k = bergman.eval(z, a)?;
        kc.row(c2(z).into_iter().chain(c2(k)));
    }
    kc.write(&out(args, "bergman.csv"))?;

    let checks = vec![
        Check::at_most("garabedian_boundary_identity", l.boundary_identity_residual(&s), 1e-8),
        Check::at_most("ahlfors_value_at_base", rep.value_at_base, 1e-10),
        Check::at_most("ahlfors_modulus_on_boundary", rep.modulus_residual, 1e-8),
        Check::at_most("ahlfors_derivative_vs_szego_diagonal", rep.derivative_relative, 1e-6),
        Check::at_most("ahlfors_winding_minus_n", (rep.winding - n as f64).abs(), 1e-6),
        Check::at_most("szego_zero_count_mismatch", (zeros.len() as f64 - (n as f64 - 1.0)).abs(), 0.0),
        Check::at_most("period_matrix_hermitian", period.hermitian_residual, 1e-6),
        Check::at_most("bergman_hermitian", bergman.hermitian_residual(), 1e-8),
    ];
    let pass = all_pass(&checks);
    let report = KernelsReport {
        command: "kernels",
        connectivity: n,
        grid: domain.grid_size(),
        base: a,
        szego_zeros: zeros,
        period_matrix: (0..period.matrix.nrows()).map(|i| period.matrix.row(i).iter().copied().collect()).collect(),
        ahlfors_derivative_at_base: rep.derivative_at_base,
        note: (n == 1).then(|| "simply connected: no harmonic measures, empty F' table".to_string()),
        pass,
        checks,
    };
    write_json(&out(args, "report.json"), &report)?;
    if !pass {
        return Err(Failure::Construction(format!("kernel invariants failed: {}", failing(&report.checks))));
    }
    Ok(format!("kernels: n = {n}, all {} invariants pass", report.checks.len()))
}

/// Interior points of a `size × size` lattice over the bounding box.
fn interior_lattice(domain: &Domain, size: usize) -> Vec<Complex64> {
    let (lo, hi) = domain.bounding_box();
    let mut pts = Vec::new();
    for r in 0..size {
        for c in 0..size {
            let z = Complex64::new(
                lo.re + (c as f64 + 0.5) * (hi.re - lo.re) / size as f64,
                lo.im + (r as f64 + 0.5) * (hi.im - lo.im) / size as f64,
            );
            if domain.contains(z) == Location::Inside {
                pts.push(z);
            }
        }
    }
    pts
}

fn build(args: &RunArgs, domain: &Domain) -> Result<GustafssonMap, Failure> {
    let op = Arc::new(KSOperator::new(domain)?);
    let a = base_point(args, &op)?;
    let mut opts = GustafssonOptions::with_tol(args.tol);
    if let Some(f) = args.fit_tol {
        opts = opts.fit_tol(f);
    }
    let g = match args.variant {
        VariantArg::Thm16 => gustafsson::build_g_16_with(op, a, &opts),
        VariantArg::Thm17 => {
            let (w0, eps) = (args.w0.expect("validated"), args.eps.expect("validated"));
            gustafsson::build_g_17_with(op, a, w0, eps, &opts)
        }
    };
    g.map_err(|e| match Failure::from(e) {
        Failure::Construction(m) => Failure::Construction(format!("{m} (base point {a}, tol {:e})", args.tol)),
        other => other,
    })
}

#[derive(Serialize)]
struct QuadratureFile<'a> {
    area: f64,
    #[serde(flatten)]
    data: &'a QuadratureData,
}

#[derive(Serialize)]
struct QuadratizeReport {
    command: &'static str,
    base: Complex64,
    terms: usize,
    nodes: usize,
    orders: Vec<usize>,
    closeness: f64,
    fit_residual: f64,
    identity_residual: f64,
    max_relative_residual: f64,
    checks: Vec<Check>,
    pass: bool,
}

pub fn quadratize(args: &RunArgs) -> Result<String, Failure> {
    let domain = load(args)?;
    let g = build(args, &domain)?;
    let data = gustafsson::quadrature_data(&g)?;
    let residuals = gustafsson::verify_quadrature(&g, &data, args.max_degree);
    let area = gustafsson::image_area(&g);

    write_json(&out(args, "gustafsson.json"), &g.summary())?;
    write_json(&out(args, "quadrature.json"), &QuadratureFile { area, data: &data })?;
    let mut gb = Csv::new(&["curve", "index", "t", "x", "y", "gx", "gy"]);
    push_trace(&mut gb, g.g_trace(), None);
    gb.write(&out(args, "g_boundary.csv"))?;
    let mut nc = Csv::new(&["node", "x", "y", "order", "k", "weight_re", "weight_im"]);
    for (j, (w, cs)) in data.nodes.iter().zip(&data.weights).enumerate() {
        for (k, c) in cs.iter().enumerate() {
            let cells = [Num(j as f64), Num(w.re), Num(w.im), Num(data.orders[j] as f64), Num(k as f64), Num(c.re), Num(c.im)];
            nc.row(cells);
        }
    }
    nc.write(&out(args, "nodes.csv"))?;
    verification_csv(&residuals).write(&out(args, "verification.csv"))?;

    let worst = residuals.iter().map(|r| r.relative).fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_most("quadrature_relative_residual", worst, args.bound),
        Check::at_most("closeness_c1", g.closeness().c1(), args.tol),
    ];
    if let (VariantArg::Thm17, Some(w0), Some(eps)) = (args.variant, args.w0, args.eps) {
        let spread = data.nodes.iter().map(|w| (w - w0).norm()).fold(0.0, f64::max);
        checks.push(Check::at_most("node_distance_from_w0", spread, eps));
        let higher = data.higher_order.iter().copied().fold(0.0, f64::max);
        checks.push(Check::at_most("higher_order_coefficient", higher, gustafsson::ORDER_TOL));
    }
    let pass = all_pass(&checks);
    let report = QuadratizeReport {
        command: "quadratize",
        base: g.base(),
        terms: g.points().len(),
        nodes: data.nodes.len(),
        orders: data.orders.clone(),
        closeness: g.closeness().c1(),
        fit_residual: g.fit().residual,
        identity_residual: g.identity_residual(),
        max_relative_residual: worst,
        pass,
        checks,
    };
    write_json(&out(args, "report.json"), &report)?;
    if !pass {
        return Err(Failure::Construction(format!("quadrature checks failed: {}", failing(&report.checks))));
    }
    Ok(format!("quadratize: {} nodes, max relative residual {worst:.3e} for m <= {}", data.nodes.len(), args.max_degree))
}

fn verification_csv(residuals: &[QuadratureResidual]) -> Csv {
    let mut csv = Csv::new(&["m", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "relative"]);
    for r in residuals {
        csv.row([Num(r.m as f64), Num(r.lhs.re), Num(r.lhs.im), Num(r.rhs.re), Num(r.rhs.im), Num(r.relative)]);
    }
    csv
}

#[derive(Serialize)]
struct ZipReport {
    command: &'static str,
    archive: PathBuf,
    bytes: usize,
    compression_ratio: f64,
    coefficients: Vec<usize>,
    h_poles: usize,
    reflected_poles: usize,
    checksum: String,
}

fn archive_path(args: &RunArgs) -> PathBuf {
    args.archive.clone().unwrap_or_else(|| out(args, "archive.json"))
}

pub fn zip(args: &RunArgs) -> Result<String, Failure> {
    let domain = load(args)?;
    let g = build(args, &domain)?;
    let archive = zip::pack(&g)?;
    let path = archive_path(args);
    archive.save(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let report = ZipReport {
        command: "zip",
        bytes: archive.to_bytes().len(),
        compression_ratio: archive.compression_ratio(),
        coefficients: archive.g_coeffs.iter().map(Vec::len).collect(),
        h_poles: archive.h_poles.len(),
        reflected_poles: archive.H_poles.len(),
        checksum: archive.checksum(),
        archive: path,
    };
    write_json(&out(args, "report.json"), &report)?;
    Ok(format!("zip: {} poles, {} bytes, compression ratio {:.1}", report.h_poles, report.bytes, report.compression_ratio))
}

#[derive(Serialize)]
struct UnzipReport {
    command: &'static str,
    points: usize,
    h_vs_reflected: f64,
    pullback: zip::PullbackReport,
    checks: Vec<Check>,
    pass: bool,
}

fn load_archive(args: &RunArgs) -> Result<ZipArchive, Failure> {
    let path = args.archive.as_ref().ok_or_else(|| Failure::Input("--archive is required".into()))?;
    let bytes = std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(ZipArchive::from_bytes(&bytes)?)
}

pub fn unzip(args: &RunArgs) -> Result<String, Failure> {
    let archive = load_archive(args)?;
    let un = archive.unzip()?;
    let pts = interior_sample(un.domain(), UNZIP_POINTS, 0.05, args.seed);
    let mut csv = Csv::new(&["x", "y", "g_re", "g_im", "gp_re", "gp_im", "h_re", "h_im", "H_re", "H_im", "diff"]);
    let mut worst = 0.0f64;
    for &z in &pts {
        let gz = un.g(z)?;
        let gp = un.g_prime(z)?;
        let h = un.h(gz)?;
        let big = un.H(z)?;
        let diff = (h - big).norm();
        worst = worst.max(diff);
        csv.row(c2(z).into_iter().chain(c2(gz)).chain(c2(gp)).chain(c2(h)).chain(c2(big)).chain([Num(diff)]));
    }
    csv.write(&out(args, "unzip.csv"))?;
    let pullback = zip::bergman_pullback_check(&un, &pts[..PULLBACK_POINTS])?;
    let checks = vec![
        Check::at_most("h_of_g_vs_reflected", worst, args.bound),
        Check::at_most("bergman_pullback", pullback.residual, PULLBACK_BOUND),
    ];
    let pass = all_pass(&checks);
    let report = UnzipReport { command: "unzip", points: pts.len(), h_vs_reflected: worst, pullback, pass, checks };
    write_json(&out(args, "report.json"), &report)?;
    if !pass {
        return Err(Failure::Construction(format!("reconstruction checks failed: {}", failing(&report.checks))));
    }
    Ok(format!("unzip: h/H agreement {worst:.3e}, pullback residual {:.3e}", pullback.residual))
}

#[derive(Serialize)]
struct Dependence {
    variables: &'static str,
    search: Option<DegreeSearch>,
    error: Option<String>,
}

#[derive(Serialize)]
struct AlgebraicReport {
    command: &'static str,
    source: &'static str,
    boundary: DegreeSearch,
    /// Degree-2 fit of `(z, z̄)` over all boundary curves at once.
    quadratic: AlgebraicRelation,
    tangent_square: Option<QuotientFit>,
    dependences: Vec<Dependence>,
    ambiguous: Vec<String>,
}

/// `(z, z̄)` samples of a boundary at `4 × grid` points per curve.
fn boundary_pairs(domain: &Domain) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let fine = domain.with_grid(4 * domain.grid_size()).expect("power of two");
    zip::boundary_samples(&fine)
}

fn dependence(variables: &'static str, search: qdomain::Result<DegreeSearch>, ambiguous: &mut Vec<String>) -> Dependence {
    match search {
        Ok(s) => Dependence { variables, search: Some(s), error: None },
        Err(e) => {
            if matches!(e, qdomain::Error::Ambiguous(_)) {
                ambiguous.push(format!("{variables}: {e}"));
            }
            Dependence { variables, search: None, error: Some(e.to_string()) }
        }
    }
}

pub fn algebraic(args: &RunArgs) -> Result<String, Failure> {
    let max = args.max_degree as usize;
    let (source, curve_domain, unzipped) = match &args.archive {
        Some(_) => {
            let un = load_archive(args)?.unzip()?;
            ("archive image", un.image().clone(), Some(un))
        }
        None => ("domain", load(args)?, None),
    };
    let (z, zb, t2) = boundary_pairs(&curve_domain);
    let mut ambiguous = Vec::new();
    let boundary = match zip::detect_relation(&z, &zb, max) {
        Ok(s) => s,
        Err(e @ qdomain::Error::Ambiguous(_)) => {
            ambiguous.push(format!("boundary: {e}"));
            zip::DegreeSearch { trials: Vec::new(), relation: None }
        }
        Err(e) => return Err(e.into()),
    };
    let quadratic = zip::fit_algebraic_relation(&z, &zb, 2)?;
    // below the boundary degree no multiple of the relation can hide in (A, B)
    let top = boundary.relation.as_ref().map_or(max.min(4), |r| r.degree.saturating_sub(1)).max(1);
    let tangent_square =
        (1..=top).filter_map(|d| zip::fit_quotient(&z, &t2, d).ok()).min_by(|a, b| a.residual.total_cmp(&b.residual));

    let samples = interior_sample(&curve_domain, 3 * (max + 1) * (max + 1), 0.05, args.seed);
    let mut dependences = Vec::new();
    let op = Arc::new(KSOperator::new(&curve_domain)?);
    let bases = interior_sample(&curve_domain, 2, 0.1, args.seed.wrapping_add(1));
    let fa = AhlforsMap::new(op.szego(bases[0])?);
    let fb = AhlforsMap::new(op.szego(bases[1])?);
    let pairs: qdomain::Result<(Vec<_>, Vec<_>)> = samples.iter().map(|&w| Ok((fa.eval(w)?, fb.eval(w)?))).collect();
    let search = pairs.and_then(|(u, v)| zip::detect_relation(&u, &v, max));
    dependences.push(dependence("f_a,f_b", search, &mut ambiguous));
    if let Some(un) = &unzipped {
        let hs: qdomain::Result<Vec<_>> = samples.iter().map(|&w| un.h(w)).collect();
        let search = hs.and_then(|h| zip::detect_relation(&h, &samples, max));
        dependences.push(dependence("h,z", search, &mut ambiguous));
    }

    let mut csv = Csv::new(&["s", "t", "re", "im"]);
    if let Some(rel) = &boundary.relation {
        for (&(s, t), q) in rel.exponents.iter().zip(&rel.coeffs) {
            csv.row([Num(s as f64), Num(t as f64), Num(q.re), Num(q.im)]);
        }
    }
    csv.write(&out(args, "relation.csv"))?;
    let summary = match &boundary.relation {
        Some(r) => format!("algebraic: boundary relation of degree {} with residual {:.3e}", r.degree, r.residual),
        None => format!("algebraic: no relation detected up to degree {max}; degree-2 residual {:.3e}", quadratic.residual),
    };
    let report = AlgebraicReport { command: "algebraic", source, boundary, quadratic, tangent_square, dependences, ambiguous };
    write_json(&out(args, "report.json"), &report)?;
    if !report.ambiguous.is_empty() {
        return Err(Failure::Ambiguous(report.ambiguous.join("; ")));
    }
    Ok(summary)
}

/// Domain file text for a built domain.
pub fn domain_json(domain: &Domain) -> String {
    serde_json::to_string_pretty(&DomainSpec::from_domain(domain)).expect("domain serializes") + "\n"
}
