use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("netlist: {0}")]
    Netlist(String),
    #[error("singular {what} matrix{}", node.as_ref().map(|n| format!(" (node {n} has no {what})")).unwrap_or_default())]
    Singular { what: &'static str, node: Option<String> },
    #[error("ill-conditioned coupling block matrix (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("eigensolver did not converge after {iterations} iterations (worst residual {worst_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        worst_residual: f64,
        residuals: Vec<f64>,
    },
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("no opposite-sign current eigenstates at this bias (o0 = {o0:.6e}, o1 = {o1:.6e})")]
    NoOppositeCurrents { o0: f64, o1: f64 },
    #[error("island charge difference is not 2e (o0 = {o0:.6e}, o1 = {o1:.6e})")]
    ChargeDifference { o0: f64, o1: f64 },
    #[error("reduction invalid: {0}")]
    Validity(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Process exit code for the CLI: 2 usage/parse, 3 numeric, 4 validity.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Parse(_) | Error::Netlist(_) | Error::Io(_) => 2,
            Error::Singular { .. }
            | Error::IllConditioned { .. }
            | Error::Unsupported(_)
            | Error::NoConvergence { .. }
            | Error::Numeric(_) => 3,
            Error::NoOppositeCurrents { .. } | Error::ChargeDifference { .. } | Error::Validity(_) => 4,
        }
    }

    pub fn is_validity(&self) -> bool {
        self.exit_code() == 4
    }
}
