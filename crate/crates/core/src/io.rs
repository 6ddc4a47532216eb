//! Domain files and atomic output.
//!
//! A domain file is JSON:
//! `{"curves":[{"coeffs":[[re,im],...],"degree_offset":M}],"grid":N}` where
//! `coeffs` lists `c_{-M}, c_{-M+1}, ...` of `z(t) = Σ c_m e^{imt}`.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Curve, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub coeffs: Vec<Complex64>,
    pub degree_offset: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub curves: Vec<CurveSpec>,
    pub grid: usize,
}

impl DomainSpec {
    pub fn from_domain(domain: &Domain) -> Self {
        let curves =
            domain.curves().iter().map(|c| CurveSpec { coeffs: c.coeffs().to_vec(), degree_offset: c.degree() as i64 }).collect();
        Self { curves, grid: domain.grid_size() }
    }

    pub fn build(&self) -> Result<Domain> {
        self.build_with_grid(self.grid)
    }

    pub fn build_with_grid(&self, grid: usize) -> Result<Domain> {
        let curves = self
            .curves
            .iter()
            .map(|c| {
                if c.coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::Parse("non-finite curve coefficient".into()));
                }
                Curve::from_coeffs(&c.coeffs, c.degree_offset)
            })
            .collect::<Result<Vec<_>>>()?;
        Domain::new(curves, grid)
    }
}

pub fn parse_domain(text: &str) -> Result<DomainSpec> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn load_domain(path: &Path) -> Result<DomainSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_domain(&text)
}

/// Write `bytes` to a temporary sibling and rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_json() {
        let text = r#"{"curves":[{"coeffs":[[0,0],[0,0],[1,0]],"degree_offset":1},
                       {"coeffs":[[0,0],[0,0],[0.5,0]],"degree_offset":1}],"grid":64}"#;
        let spec = parse_domain(text).unwrap();
        let d = spec.build().unwrap();
        assert_eq!(d.connectivity(), 2);
        let again = DomainSpec::from_domain(&d).build().unwrap();
        assert!((again.area() - d.area()).abs() < 1e-15);
    }

    #[test]
    fn malformed_is_parse_error() {
        assert!(matches!(parse_domain("{\"curves\": 3}"), Err(Error::Parse(_))));
        let spec = parse_domain(r#"{"curves":[{"coeffs":[[1,0]],"degree_offset":0}],"grid":64}"#).unwrap();
        assert!(spec.build().is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("qdomain-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("x.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        fs::remove_dir_all(&dir).unwrap();
    }
}
