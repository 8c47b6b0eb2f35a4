use alloc::string::String;
use core::fmt;

/// Errors raised by the potential algebra, the fitters and the solver.
#[derive(Debug, Clone, PartialEq)]
pub enum MteError {
    /// A point or assignment misses a domain variable, names an unknown
    /// variable, or uses an unknown state.
    Domain(String),
    /// `add` on potentials over different domains, or two variables with the
    /// same name but incompatible definitions.
    DomainMismatch(String),
    NotContinuous(String),
    NotDiscrete(String),
    NotDecision(String),
    NotUtility,
    /// Normalization constant is zero or negative for some configuration.
    NonpositiveMass(f64),
    /// Normalization constant varies with a continuous parent inside a cell.
    NonconstantMass {
        relative_spread: f64,
    },
    /// Maximizing a decision would leave two or more continuous variables.
    UnsupportedMaxDim(usize),
    BadInterval {
        lo: f64,
        hi: f64,
    },
    BadSigma(f64),
    BadFitSpec(String),
    FitDiverged,
    MissingFit(String),
    InvalidOrder(String),
    NotPermutation(String),
    DecisionInProbability(String),
}

impl MteError {
    /// Stable machine-readable code, as printed by the command-line tool.
    pub fn code(&self) -> &'static str {
        match self {
            MteError::Domain(_) => "E_DOMAIN",
            MteError::DomainMismatch(_) => "E_DOMAIN_MISMATCH",
            MteError::NotContinuous(_) => "E_NOT_CONTINUOUS",
            MteError::NotDiscrete(_) => "E_NOT_DISCRETE",
            MteError::NotDecision(_) => "E_NOT_DECISION",
            MteError::NotUtility => "E_NOT_UTILITY",
            MteError::NonpositiveMass(_) => "E_NONPOSITIVE_MASS",
            MteError::NonconstantMass { .. } => "E_NONCONSTANT_K",
            MteError::UnsupportedMaxDim(_) => "E_UNSUPPORTED_MAXDIM",
            MteError::BadInterval { .. } => "E_BAD_INTERVAL",
            MteError::BadSigma(_) => "E_BAD_SIGMA",
            MteError::BadFitSpec(_) => "E_BAD_FIT_SPEC",
            MteError::FitDiverged => "E_FIT_DIVERGED",
            MteError::MissingFit(_) => "E_MISSING_FIT",
            MteError::InvalidOrder(_) => "E_INVALID_ORDER",
            MteError::NotPermutation(_) => "E_NOT_PERMUTATION",
            MteError::DecisionInProbability(_) => "E_DECISION_IN_PROBABILITY",
        }
    }
}

impl fmt::Display for MteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MteError::Domain(msg) => write!(f, "domain error: {msg}"),
            MteError::DomainMismatch(msg) => write!(f, "domain mismatch: {msg}"),
            MteError::NotContinuous(v) => write!(f, "variable `{v}` is not a continuous chance variable"),
            MteError::NotDiscrete(v) => write!(f, "variable `{v}` is not a discrete chance variable"),
            MteError::NotDecision(v) => write!(f, "variable `{v}` is not a discrete decision variable"),
            MteError::NotUtility => f.write_str("decision marginalization requires a utility potential"),
            MteError::NonpositiveMass(k) => write!(f, "normalization constant {k} is not positive"),
            MteError::NonconstantMass { relative_spread } => write!(
                f,
                "normalization constant varies with a continuous parent (relative spread {relative_spread:e})"
            ),
            MteError::UnsupportedMaxDim(n) => write!(
                f,
                "decision maximization with {n} remaining continuous variables is not supported (at most 1)"
            ),
            MteError::BadInterval { lo, hi } => write!(f, "empty interval [{lo}, {hi}]"),
            MteError::BadSigma(s) => write!(f, "standard deviation must be positive, got {s}"),
            MteError::BadFitSpec(msg) => write!(f, "invalid fit specification: {msg}"),
            MteError::FitDiverged => f.write_str("no multi-start converged to a finite residual"),
            MteError::MissingFit(v) => write!(f, "no MTE fit supplied for variable `{v}`"),
            MteError::InvalidOrder(msg) => write!(f, "invalid elimination order: {msg}"),
            MteError::NotPermutation(msg) => write!(f, "elimination order is not a permutation: {msg}"),
            MteError::DecisionInProbability(v) => write!(
                f,
                "decision `{v}` still appears in a probability potential when it is deleted"
            ),
        }
    }
}

impl core::error::Error for MteError {}

pub type Result<T> = core::result::Result<T, MteError>;
