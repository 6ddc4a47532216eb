use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::Failure;

pub const CSV_HELP: &str = "\
Output files (CSV columns):
  kernels:    szego.csv, garabedian.csv, ahlfors.csv
                curve,index,t,x,y,re,im      boundary trace at z(t) = x + iy
              fprime.csv
                field,curve,index,t,x,y,re,im   F_j' traces (header only when n = 1)
              bergman.csv
                x,y,re,im                    K(z, a) on an interior lattice
              report.json                    invariants with value, bound and pass
  quadratize: g_boundary.csv
                curve,index,t,x,y,gx,gy      boundary point and its image under g
              nodes.csv
                node,x,y,order,k,weight_re,weight_im
              verification.csv
                m,lhs_re,lhs_im,rhs_re,rhs_im,relative
              gustafsson.json, quadrature.json, report.json
  zip:        archive.json (or --archive), report.json
  unzip:      unzip.csv
                x,y,g_re,g_im,gp_re,gp_im,h_re,h_im,H_re,H_im,diff
              report.json
  algebraic:  relation.csv
                s,t,re,im                    coefficients of the boundary relation
              report.json

Exit codes: 0 pass, 2 input/output or archive corruption, 3 construction or
verification failure, 4 ambiguous numerical decision.";

#[derive(Debug, Parser)]
#[command(
    name = "qdomain",
    version,
    about = "Kernel functions and quadrature domains for multiply connected planar domains",
    after_help = CSV_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Szegő, Garabedian, Ahlfors, F_j' and Bergman tables plus an invariant report.
    Kernels(RunArgs),
    /// Build g, extract the quadrature identity and verify it.
    Quadratize(RunArgs),
    /// Build g and write its archive.
    Zip(RunArgs),
    /// Rebuild h, g' and H from an archive and check them.
    Unzip(RunArgs),
    /// Fit algebraic relations to a boundary (domain file or archive image).
    Algebraic(RunArgs),
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Kernels(a) | Command::Quadratize(a) | Command::Zip(a) | Command::Unzip(a) | Command::Algebraic(a) => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Kernels(_) => "kernels",
            Command::Quadratize(_) => "quadratize",
            Command::Zip(_) => "zip",
            Command::Unzip(_) => "unzip",
            Command::Algebraic(_) => "algebraic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Thm16,
    Thm17,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Domain file (JSON curves).
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Boundary grid per curve; overrides the domain file (power of two >= 64).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Closeness tolerance for g (sup |g - z| and |g' - 1| on the boundary).
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Density fit tolerance; derived from --tol when absent.
    #[arg(long)]
    pub fit_tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = VariantArg::Thm16)]
    pub variant: VariantArg,
    /// Disc centre for thm17, as "re,im".
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub w0: Option<Complex64>,
    /// Disc radius for thm17.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Base point "re,im"; chosen from --seed when absent.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub base: Option<Complex64>,
    /// Highest monomial degree verified (quadratize) or searched (algebraic).
    #[arg(long, default_value_t = 10)]
    pub max_degree: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, env = "QDOMAIN_THREADS")]
    pub threads: Option<usize>,
    /// Archive path (written by zip, read by unzip and algebraic).
    #[arg(long)]
    pub archive: Option<PathBuf>,
    /// Pass bound for quadrature and reconstruction residuals.
    #[arg(long, default_value_t = 1e-6)]
    pub bound: f64,
}

impl RunArgs {
    pub fn validate(&self) -> Result<(), Failure> {
        let positive =
            [("--tol", Some(self.tol)), ("--fit-tol", self.fit_tol), ("--eps", self.eps), ("--bound", Some(self.bound))];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Failure::Input(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(g) = self.grid {
            if g < 64 || !g.is_power_of_two() {
                return Err(Failure::Input(format!("--grid must be a power of two >= 64, got {g}")));
            }
        }
        if self.variant == VariantArg::Thm17 && (self.w0.is_none() || self.eps.is_none()) {
            return Err(Failure::Input("thm17 needs --w0 and --eps".into()));
        }
        Ok(())
    }
}

pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected \"re,im\", got {s:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_arguments() {
        assert_eq!(parse_complex("0.7,-0.1").unwrap(), Complex64::new(0.7, -0.1));
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert!(parse_complex("a,b").is_err());
    }

    #[test]
    fn thm17_requires_disc() {
        let cli = Cli::try_parse_from(["qdomain", "quadratize", "--variant", "thm17", "--w0", "0.7,0"]).unwrap();
        assert!(cli.command.args().validate().is_err());
        let cli = Cli::try_parse_from(["qdomain", "kernels", "--grid", "100"]).unwrap();
        assert!(cli.command.args().validate().is_err());
    }
}
