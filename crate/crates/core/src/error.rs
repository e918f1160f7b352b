use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Witness;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("input is not function-like: |f'| = {slope:e} at x = {x}")]
    NotFunctionLike { x: f64, slope: f64 },

    #[error("degenerate curve: repeated point at sample {index}")]
    DegenerateCurve { index: usize },

    #[error("curve is not C1-periodic: seam tangent mismatch {mismatch:e}")]
    NotC1Periodic { mismatch: f64 },

    #[error("invalid radius {0} (must be positive and finite)")]
    InvalidRadius(f64),

    #[error("resolution exceeded: {0}")]
    ResolutionExceeded(String),

    #[error("no closure in bracket: unwrapped monodromy angle spans [{phi_min}, {phi_max}]")]
    NoClosureInBracket { phi_min: f64, phi_max: f64 },

    #[error("closing radii found but no candidate loop is simple ({} witnesses)", witnesses.len())]
    NoSimpleClosure { witnesses: Vec<Witness> },

    #[error("seam {seam} mismatch: frame gap {gap:e}")]
    SeamMismatch { seam: usize, gap: f64 },

    #[error("operation requires a simple closed loop")]
    RequiresSimpleLoop,

    #[error("groove overlaps itself: clearance {clearance} < required {required}")]
    GrooveOverlap { clearance: f64, required: f64 },

    #[error("mesh invalid: {0}")]
    MeshInvalid(String),

    #[error("body left the groove at t = {t}")]
    TrackingLost { t: f64 },

    #[error("rolling stalled at t = {t}")]
    StallDetected { t: f64 },

    #[error("contact lost at t = {t}")]
    ContactLost { t: f64 },

    #[error("coordinate singularity near the pole at t = {t}")]
    PoleSingularity { t: f64 },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable name, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::NotFunctionLike { .. } => "NotFunctionLike",
            Error::DegenerateCurve { .. } => "DegenerateCurve",
            Error::NotC1Periodic { .. } => "NotC1Periodic",
            Error::InvalidRadius(_) => "InvalidRadius",
            Error::ResolutionExceeded(_) => "ResolutionExceeded",
            Error::NoClosureInBracket { .. } => "NoClosureInBracket",
            Error::NoSimpleClosure { .. } => "NoSimpleClosure",
            Error::SeamMismatch { .. } => "SeamMismatch",
            Error::RequiresSimpleLoop => "RequiresSimpleLoop",
            Error::GrooveOverlap { .. } => "GrooveOverlap",
            Error::MeshInvalid(_) => "MeshInvalid",
            Error::TrackingLost { .. } => "TrackingLost",
            Error::StallDetected { .. } => "StallDetected",
            Error::ContactLost { .. } => "ContactLost",
            Error::PoleSingularity { .. } => "PoleSingularity",
            Error::Parse { .. } => "Parse",
            Error::Io { .. } => "Io",
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
