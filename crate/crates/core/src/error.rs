//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by scenario construction, the physical models and the solvers.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A mandatory configuration key is absent.
    #[error("missing key `{key}` in section [{section}]")]
    MissingKey { section: String, key: String },

    /// A configuration line or value could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A constructed record violates one of its invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// An operation was called outside its domain (e.g. non-positive gap).
    #[error("domain error: {0}")]
    Domain(String),

    /// Gent strain stiffening limit reached: J_m - (I1 - 3) <= 0.
    #[error("membrane lockup: first invariant exceeds Gent limit (lambda1 = {lambda1:.4})")]
    Lockup { lambda1: f64 },

    /// Electric field across the film exceeds the dielectric strength.
    #[error("dielectric breakdown: field {field_v_per_um:.1} V/um exceeds limit {limit_v_per_um:.1} V/um")]
    Breakdown {
        field_v_per_um: f64,
        limit_v_per_um: f64,
    },

    /// Maxwell pressure exceeds the meridional stress; the membrane goes slack.
    #[error("loss of tension: Maxwell pressure exceeds meridional stress at d = {deflection_mm:.3} mm")]
    Slack { deflection_mm: f64 },

    /// A magnetically biased disc travelled into the 1 mm gap floor.
    #[error("contact: displacement {displacement_mm:.3} mm leaves less than the minimum gap to the magnet")]
    Contact { displacement_mm: f64 },

    /// Voltage continuation lost the stable branch.
    #[error("snap-through: stable branch lost above {last_stable_voltage:.1} V")]
    SnapThrough { last_stable_voltage: f64 },

    /// The offset optimizer found no feasible operating point.
    #[error("no feasible offset in [{lo_mm:.2}, {hi_mm:.2}] mm")]
    NoFeasibleOffset { lo_mm: f64, hi_mm: f64 },

    /// Requested integrator step violates the stability guard.
    #[error("time step {dt:.3e} s exceeds stability guard {limit:.3e} s")]
    DtTooLarge { dt: f64, limit: f64 },

    /// Curve fitting preconditions violated (too few points, bad values).
    #[error("fit error: {0}")]
    Fit(String),

    /// File input/output failure.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
