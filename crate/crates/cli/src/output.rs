use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use qdomain::io::write_atomic;
use qdomain::quadrature::BoundaryFunction;
use serde::Serialize;

use crate::Failure;

/// Rows of already formatted cells.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row<I, T>(&mut self, cells: I)
    where
        I: IntoIterator<Item = T>,
        T: std::fmt::Display,
    {
        let mut first = true;
        for c in cells {
            if !first {
                self.text.push(',');
            }
            first = false;
            let _ = write!(self.text, "{c}");
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        write_atomic(path, self.text.as_bytes()).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Construction(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// `curve,index,t,x,y,re,im` for a boundary trace.
pub fn trace_csv(f: &BoundaryFunction) -> Csv {
    let mut csv = Csv::new(&["curve", "index", "t", "x", "y", "re", "im"]);
    push_trace(&mut csv, f, None);
    csv
}

pub fn push_trace(csv: &mut Csv, f: &BoundaryFunction, label: Option<usize>) {
    let grid = f.domain().grid();
    let dt = grid.dt();
    for (k, c) in grid.curves.iter().enumerate() {
        for i in 0..grid.n {
            let z = c.z[i];
            let v = f.get(k, i);
            let cells = [k as f64, i as f64, i as f64 * dt, z.re, z.im, v.re, v.im];
            match label {
                Some(l) => csv.row(std::iter::once(l as f64).chain(cells).map(Num)),
                None => csv.row(cells.into_iter().map(Num)),
            }
        }
    }
}

/// Shortest round-trip formatting, integers without a fraction.
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.fract() == 0.0 && self.0.abs() < 1e15 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

pub fn c2(z: Complex64) -> [Num; 2] {
    [Num(z.re), Num(z.im)]
}

/// One checked quantity in a report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value <= bound }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

pub fn failing(checks: &[Check]) -> String {
    checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} = {:.3e} > {:.1e}", c.name, c.value, c.bound))
        .collect::<Vec<_>>()
        .join("; ")
}
