use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure classes surfaced by the analysis pipeline.
///
/// [`Error::is_numeric`] separates numerical failures (non-convergence,
/// broken mode structure) from input and configuration errors; the CLI maps
/// the two groups onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("case schema violation: {0}")]
    Schema(String),

    #[error("invalid case: {entity}: {reason}")]
    Invariant { entity: String, reason: String },

    #[error("invalid dispatch: {0}")]
    Dispatch(String),

    #[error("invalid option {name}: {reason}")]
    Config { name: String, reason: String },

    #[error("power flow did not converge after {iterations} iterations (max mismatch {mismatch:.3e} pu)")]
    PowerFlowDiverged { iterations: usize, mismatch: f64 },

    #[error("singular network block: {0}")]
    SingularNetwork(String),

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("mode pairing failed: expected {expected} conjugate pairs, found {found}")]
    Pairing { expected: usize, found: usize },

    #[error("mode {mode} is already unstable at the base case (real part {real_part:.3e})")]
    UnstableMode { mode: usize, real_part: f64 },

    #[error("generalized curve of mode {mode} has non-negative slope {slope:.3e} at the origin")]
    CurveSlope { mode: usize, slope: f64 },

    #[error("state reconstructed from modal coordinates is not real (max |imag| {residue:.3e})")]
    NonReal { residue: f64 },

    #[error("no extremum of the generalized curve for mode {mode} on the {side} side within |delta_g| <= {cap}")]
    NoExtremum { mode: usize, side: &'static str, cap: f64 },

    #[error("MS3 load fixed point did not converge in {iterations} iterations (max |dS_L| {residual:.3e} pu)")]
    Ms3Diverged { iterations: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate scan direction")]
    DegenerateDirection,

    #[error("base operating point is not stable for the {0} check")]
    UnstableBase(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::PowerFlowDiverged { .. }
                | Error::SingularNetwork(_)
                | Error::Eigen(_)
                | Error::Pairing { .. }
                | Error::UnstableMode { .. }
                | Error::NonReal { .. }
                | Error::CurveSlope { .. }
                | Error::NoExtremum { .. }
                | Error::Ms3Diverged { .. }
                | Error::UnstableBase(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Schema(_) => "schema",
            Error::Invariant { .. } => "invariant",
            Error::Dispatch(_) => "dispatch",
            Error::Config { .. } => "config",
            Error::PowerFlowDiverged { .. } => "power_flow_diverged",
            Error::SingularNetwork(_) => "singular_network",
            Error::Eigen(_) => "eigen",
            Error::Pairing { .. } => "pairing",
            Error::UnstableMode { .. } => "unstable_mode",
            Error::NonReal { .. } => "non_real",
            Error::CurveSlope { .. } => "curve_slope",
            Error::NoExtremum { .. } => "no_extremum",
            Error::Ms3Diverged { .. } => "ms3_diverged",
            Error::Dimension { .. } => "dimension",
            Error::DegenerateDirection => "degenerate_direction",
            Error::UnstableBase(_) => "unstable_base",
        }
    }

    pub(crate) fn invariant(entity: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invariant {
            entity: entity.into(),
            reason: reason.into(),
        }
    }
}
