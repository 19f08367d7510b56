use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field contains a non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operation not supported on this grid: {0}")]
    Unsupported(&'static str),
    #[error("Neumann problem is incompatible: defect {defect:e} exceeds {tol:e}")]
    Compatibility { defect: f64, tol: f64 },
    #[error("singular linear system (pivot {pivot:e} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },
    #[error("Sobolev order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("field is not solenoidal/tangent: residual {residual:e} exceeds {tol:e}")]
    NotSolenoidal { residual: f64, tol: f64 },
    #[error("time step {dt:e} violates the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("blow-up detected at t = {t}: norm {norm:e} exceeds {threshold:e}")]
    BlowupDetected { t: f64, norm: f64, threshold: f64 },
    #[error("input outside the operator domain: residual {residual:e}")]
    DomainViolation { residual: f64 },
    #[error("initial datum is not an eigenfunction of d^2/dx1^2: residual {residual:e}")]
    NotEigenfunction { residual: f64 },
    #[error("flow integration failed at s = {s}: step size underflow")]
    StepFailure { s: f64 },
    #[error("no return to the section within s_max = {s_max}")]
    NoReturn { s_max: f64 },
    #[error("|B| = {speed:e} is below the critical-point threshold")]
    CriticalPoint { speed: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
