use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("unknown unit `{0}`")]
    UnknownUnit(String),

    #[error("invalid unit system: {0}")]
    InvalidUnits(String),

    #[error("duration must be positive, got {0}")]
    NonpositiveDuration(f64),

    #[error("time {t} outside [0, {t_f}]")]
    TimeOutOfRange { t: f64, t_f: f64 },

    #[error("singular constraint system (condition number {cond:.3e})")]
    SingularSystem { cond: f64 },

    #[error("inconsistent constraints: residual {residual:.3e}")]
    InconsistentConstraints { residual: f64 },

    #[error("position {x} outside tabulated domain [{lo}, {hi}]")]
    DomainExceeded { x: f64, lo: f64, hi: f64 },

    #[error("infeasible grid: {required} points required, ceiling is {ceiling}")]
    InfeasibleGrid { required: usize, ceiling: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("eigensolver did not converge: max residual {residual:.3e}")]
    Convergence { residual: f64 },

    #[error("wavefunction reached the grid edge at t = {t}: amplitude {amplitude:.3e}")]
    Containment { t: f64, amplitude: f64 },

    #[error("time step {dt:.3e} violates step policy (max {max_dt:.3e})")]
    StepPolicy { dt: f64, max_dt: f64 },

    #[error("shift by {shift} would wrap wavefunction amplitude {amplitude:.3e} around the grid")]
    ShiftAliasing { shift: f64, amplitude: f64 },

    #[error("eigenbasis truncation residual {residual:.3e} exceeds {tolerance:.1e}")]
    Truncation { residual: f64, tolerance: f64 },

    #[error("mode index {n} out of range ({available} available)")]
    IndexOutOfRange { n: usize, available: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("convergence gate failed: delta_phi(dt) = {coarse}, delta_phi(dt/2) = {fine}")]
    GateFailure { coarse: f64, fine: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}
