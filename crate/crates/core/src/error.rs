//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the model, the closed-form constructions and the
/// numerical drivers.
///
/// Variants are split into validation problems (bad input, a state outside the
/// region where a construction applies) and numerical failures (an iteration
/// that did not converge, a manifold that never reached its section). The CLI
/// maps the two families to different exit codes via [`Error::is_validation`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid state ({sw}, {so}): saturations must be non-negative and sum to at most one")]
    InvalidState { sw: f64, so: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("Jacobian has complex eigenvalues (discriminant {0:e})")]
    ComplexEigenvalues(f64),
    #[error("states coincide; no shock speed is defined")]
    CoincidentStates,
    #[error("component shock speeds disagree ({0} vs {1}); states are not Rankine-Hugoniot related")]
    InconsistentSpeeds(f64, f64),
    #[error("state lies on the boundary where the capillarity matrix is singular")]
    BoundaryState,
    #[error("point is not an equilibrium (field norm {0:e})")]
    NotEquilibrium(f64),
    #[error("both linearization eigenvalues vanish")]
    Degenerate,
    #[error("quadratic has no real root")]
    NoRealRoot,
    #[error("selected root {0} lies outside [0, 1]")]
    RootOutOfRange(f64),
    #[error("state is {0:e} away from the invariant line")]
    NotOnLine(f64),
    #[error("value {value} outside admissible range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("right state s = {s_m} lies in the gap ({s_u}, 1/2) where no undercompressive shock exists")]
    GapRegion { s_m: f64, s_u: f64 },
    #[error("left state s = {s} outside the open interval ({lo}, {hi})")]
    NotInInterval { s: f64, lo: f64, hi: f64 },
    #[error("manifold direction is degenerate (eigenvalue {0:e})")]
    DegenerateDirection(f64),
    #[error("manifold did not reach the section ({0})")]
    NoSectionHit(String),
    #[error("bisection bracket lost: {0}")]
    BracketLost(String),
    #[error("iteration limit reached ({0})")]
    MaxIterations(usize),
    #[error("no saddle partner found on the Hugoniot locus")]
    PartnerNotFound,
    #[error("seed triple failed verification: {0}")]
    SeedInvalid(String),
    #[error("Newton iteration diverged at t = {t} (residual {residual:e})")]
    NewtonDiverged { t: f64, residual: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// True for errors caused by inputs outside a construction's domain, as
    /// opposed to a numerical procedure failing on valid input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidState { .. }
                | Error::InvalidParams(_)
                | Error::CoincidentStates
                | Error::InconsistentSpeeds(..)
                | Error::BoundaryState
                | Error::NotOnLine(_)
                | Error::OutOfRange { .. }
                | Error::GapRegion { .. }
                | Error::NotInInterval { .. }
                | Error::Precondition(_)
                | Error::SeedInvalid(_)
        )
    }

    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidState { .. } => "InvalidState",
            Error::InvalidParams(_) => "InvalidParams",
            Error::ComplexEigenvalues(_) => "ComplexEigenvalues",
            Error::CoincidentStates => "CoincidentStates",
            Error::InconsistentSpeeds(..) => "InconsistentSpeeds",
            Error::BoundaryState => "BoundaryState",
            Error::NotEquilibrium(_) => "NotEquilibrium",
            Error::Degenerate => "Degenerate",
            Error::NoRealRoot => "NoRealRoot",
            Error::RootOutOfRange(_) => "RootOutOfRange",
            Error::NotOnLine(_) => "NotOnLine",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::GapRegion { .. } => "GapRegion",
            Error::NotInInterval { .. } => "NotInInterval",
            Error::DegenerateDirection(_) => "DegenerateDirection",
            Error::NoSectionHit(_) => "NoSectionHit",
            Error::BracketLost(_) => "BracketLost",
            Error::MaxIterations(_) => "MaxIterations",
            Error::PartnerNotFound => "PartnerNotFound",
            Error::SeedInvalid(_) => "SeedInvalid",
            Error::NewtonDiverged { .. } => "NewtonDiverged",
            Error::Precondition(_) => "Precondition",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
