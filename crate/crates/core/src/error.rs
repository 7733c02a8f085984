use thiserror::Error;

/// Every failure the library reports. Variants split into configuration
/// problems (bad inputs) and numerical failures, see [`DryerError::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DryerError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("singular state: `{state}` = {value} (must be > 0)")]
    SingularState { state: &'static str, value: f64 },

    #[error("singular operating point: {expr} is zero")]
    SingularOperatingPoint { expr: String },

    #[error("newton did not converge after {iterations} iterations (residual norm {residual_norm:.3e})")]
    NonConvergence { iterations: usize, residual_norm: f64 },

    #[error("singular jacobian (condition estimate {condition_estimate:.3e})")]
    SingularJacobian { condition_estimate: f64 },

    #[error("linearization point rejected: residual norm {residual_norm:.3e} exceeds {tol:.1e}")]
    InvalidLinearizationPoint { residual_norm: f64, tol: f64 },

    #[error("undefined moisture: solid and water masses are both zero")]
    UndefinedMoisture,

    #[error("undefined efficiency: fuel flow {0} must be > 0")]
    UndefinedEfficiency(f64),

    #[error("degenerate temperature lift: {0}")]
    DegenerateLift(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("degenerate plant: numerator polynomial is identically zero")]
    DegeneratePlant,

    #[error("tuning rule failed: {reason}")]
    Tuning { reason: String, omega_n_sq: f64 },

    #[error("transfer function is improper (numerator degree {num} > denominator degree {den})")]
    Improper { num: usize, den: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("integration blew up at t = {time:.4} s: {detail}")]
    IntegrationBlowUp { time: f64, detail: String },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("empty grid: {0}")]
    EmptyGrid(String),

    #[error("empty evaluation window")]
    EmptyWindow,

    #[error("missing derivative channel `{0}`")]
    MissingChannel(&'static str),

    #[error("configuration error: {0}")]
    Config(String),
}

impl DryerError {
    /// True for failures of the numerics (exit code 3 in the CLI), false for
    /// input/configuration problems (exit code 2).
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            DryerError::InvalidParameter { .. }
                | DryerError::Scenario(_)
                | DryerError::EmptyGrid(_)
                | DryerError::Config(_)
                | DryerError::DimensionMismatch(_)
                | DryerError::MissingChannel(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, DryerError>;
