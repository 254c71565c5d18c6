use alloc::string::String;
use alloc::vec::Vec;

use crate::mixing::Violation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),

    #[error(
        "Jacobi eigensolver did not converge for {label} ({dim}x{dim}) after {sweeps} sweeps; \
         off-diagonal norm {off_norm:e}"
    )]
    EigenNoConvergence {
        label: String,
        dim: usize,
        sweeps: usize,
        off_norm: f64,
    },

    #[error("matrix is not PSD: eigenvalue {eigenvalue:e} below -{threshold:e}")]
    NotPsd { eigenvalue: f64, threshold: f64 },

    #[error("{what} is not positive definite (min eigenvalue {min_eigenvalue:e}); {advice}")]
    NotPositiveDefinite {
        what: &'static str,
        min_eigenvalue: f64,
        advice: &'static str,
    },

    #[error("graph error: {0}")]
    Graph(String),

    #[error("mixing matrices violate the mixing conditions: {}", display_violations(.0))]
    Mixing(Vec<Violation>),

    #[error("relaxation factor {factor} moves lambda_min to {lambda_min}, at or below -5/3")]
    Relaxation { factor: f64, lambda_min: f64 },

    #[error(
        "admissible theta interval (3/4, {upper}] is empty (lambda_min(W~) = {lambda_min_wt})"
    )]
    ThetaInterval { lambda_min_wt: f64, upper: f64 },

    #[error("theta = {theta} outside admissible interval (3/4, {upper}]")]
    ThetaOutOfRange { theta: f64, upper: f64 },

    #[error("average objective is not strongly convex: lambda_min of mean Hessian = {lambda_min:e}")]
    NotStronglyConvex { lambda_min: f64 },

    #[error("stepsize {alpha} outside certified range (0, {bound}) for {algorithm}")]
    Stepsize {
        algorithm: &'static str,
        alpha: f64,
        bound: f64,
    },

    #[error("empty admissible interval for {constant}: upper limit {upper:e}")]
    EmptyInterval { constant: &'static str, upper: f64 },

    #[error("{constant} = {value} outside its admissible interval (0, {upper})")]
    ParameterOutOfRange {
        constant: &'static str,
        value: f64,
        upper: f64,
    },

    #[error("NIDS certificate is vacuous at theta = {theta}: r4 interval (0, theta - 3/4) is empty")]
    VacuousCertificate { theta: f64 },

    #[error("certificate unavailable for {0}")]
    NoCertificate(&'static str),

    #[error("unknown scenario '{name}'; valid presets: {valid}")]
    UnknownScenario { name: String, valid: String },

    #[error("stepsize '{name}' is not usable here: {reason}")]
    UnusableStepsize { name: &'static str, reason: String },
}

fn display_violations(v: &[Violation]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, item) in v.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{item}");
    }
    out
}
