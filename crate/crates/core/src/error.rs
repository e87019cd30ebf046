//! Error type shared by all modules.

use alloc::string::String;

/// Errors surfaced by field evaluation, transformations, solvers and reports.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The point lies in a field's declared singular set.
    SingularPoint,
    /// A derivative order beyond what the field representation supports.
    UnsupportedOrder { requested: usize, max: usize },
    /// A finite-difference stencil touches a singular or out-of-domain point.
    SingularStencil,
    /// Invalid grid axis (`lo >= hi` or fewer than 2 samples).
    BadRange(String),
    /// A general-form PDE was evaluated without its time-coefficient functions.
    MissingCoefficient,
    /// A time-coefficient function vanishes inside the requested domain.
    CoefficientVanishes { axis: usize, at: f64 },
    /// A parameter violates an operation's documented precondition.
    BadParameter(String),
    /// The labeling functions of a characteristic transformation are
    /// linearly dependent (vanishing Jacobian determinant).
    DegenerateTransform,
    /// A construction-time self-check failed (defining residual too large).
    CertificationFailed {
        what: &'static str,
        max_residual: f64,
    },
    /// The point lies outside the object's domain of validity.
    OutOfDomain,
    /// Shooting found no sign change over the speed bracket.
    NoConnection,
    /// The PDE form is not supported by this operation.
    UnsupportedForm(&'static str),
    /// Explicit scheme step exceeds the stability bound.
    StabilityViolation { ds: f64, limit: f64 },
    /// A numerical value became non-finite.
    NonFinite { step: usize },
    /// A requested level set is never crossed.
    LevelNotCrossed,
    /// Every grid point was masked; nothing to evaluate.
    EmptyGrid,
    /// Mismatched dimensions (times, grid axes, coefficient counts).
    DimensionMismatch { expected: usize, got: usize },
}

impl Error {
    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SingularPoint => "singular_point",
            Error::UnsupportedOrder { .. } => "unsupported_order",
            Error::SingularStencil => "singular_stencil",
            Error::BadRange(_) => "bad_range",
            Error::MissingCoefficient => "missing_coefficient",
            Error::CoefficientVanishes { .. } => "coefficient_vanishes",
            Error::BadParameter(_) => "bad_parameter",
            Error::DegenerateTransform => "degenerate_transform",
            Error::CertificationFailed { .. } => "certification_failed",
            Error::OutOfDomain => "out_of_domain",
            Error::NoConnection => "no_connection",
            Error::UnsupportedForm(_) => "unsupported_form",
            Error::StabilityViolation { .. } => "stability_violation",
            Error::NonFinite { .. } => "non_finite",
            Error::LevelNotCrossed => "level_not_crossed",
            Error::EmptyGrid => "empty_grid",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
        }
    }
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::SingularPoint => write!(f, "point lies in the field's singular set"),
            Error::UnsupportedOrder { requested, max } => {
                write!(f, "derivative order {requested} unsupported (max {max})")
            }
            Error::SingularStencil => write!(f, "finite-difference stencil hits a singular point"),
            Error::BadRange(msg) => write!(f, "bad range: {msg}"),
            Error::MissingCoefficient => {
                write!(
                    f,
                    "general-form PDE evaluated without coefficient functions"
                )
            }
            Error::CoefficientVanishes { axis, at } => {
                write!(f, "time coefficient h^{} vanishes near t = {at}", axis + 1)
            }
            Error::BadParameter(msg) => write!(f, "bad parameter: {msg}"),
            Error::DegenerateTransform => write!(f, "degenerate transformation (W1, W2 dependent)"),
            Error::CertificationFailed { what, max_residual } => {
                write!(
                    f,
                    "certification of {what} failed, max residual {max_residual:e}"
                )
            }
            Error::OutOfDomain => write!(f, "point outside the domain of validity"),
            Error::NoConnection => write!(f, "no heteroclinic connection in the speed bracket"),
            Error::UnsupportedForm(what) => write!(f, "unsupported PDE form: {what}"),
            Error::StabilityViolation { ds, limit } => {
                write!(f, "explicit step {ds:e} exceeds stability limit {limit:e}")
            }
            Error::NonFinite { step } => write!(f, "non-finite value at step {step}"),
            Error::LevelNotCrossed => write!(f, "level set never crossed"),
            Error::EmptyGrid => write!(f, "all grid points masked"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
