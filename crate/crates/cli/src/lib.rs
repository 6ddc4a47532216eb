//! Command implementations behind the `qdomain` binary.

pub mod commands;
pub mod config;
pub mod output;

use qdomain::Error;

pub use config::{Cli, Command, RunArgs, VariantArg};

/// Failure classes, one per nonzero exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or malformed input, corrupt archive, bad arguments.
    Input(String),
    /// A construction step or a verification bound failed.
    Construction(String),
    /// A rank decision could not be made.
    Ambiguous(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Construction(_) => 3,
            Failure::Ambiguous(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Construction(m) => write!(f, "construction failure: {m}"),
            Failure::Ambiguous(m) => write!(f, "ambiguous: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::Checksum { .. }
            | Error::BadCurve { .. }
            | Error::Nesting(_)
            | Error::GridTooCoarse { .. } => Failure::Input(e.to_string()),
            Error::Ambiguous(_) => Failure::Ambiguous(e.to_string()),
            _ => Failure::Construction(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Run one parsed command; `Ok` carries a one-line summary.
pub fn run(command: &Command) -> Result<String, Failure> {
    let args = command.args();
    args.validate()?;
    std::fs::create_dir_all(&args.out)?;
    match command {
        Command::Kernels(a) => commands::kernels(a),
        Command::Quadratize(a) => commands::quadratize(a),
        Command::Zip(a) => commands::zip(a),
        Command::Unzip(a) => commands::unzip(a),
        Command::Algebraic(a) => commands::algebraic(a),
    }
}
