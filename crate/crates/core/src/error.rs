use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("packet width {sigma} is under-resolved: need sigma >= 4h = {min}")]
    UnderResolved { sigma: f64, min: f64 },

    #[error("packet leaks past the grid boundary: mass outside domain {mass:e}")]
    PacketLeak { mass: f64 },

    #[error("state is not normalized: computed norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("particle {particle} left the grid domain at t = {time}")]
    DomainEscape { particle: usize, time: f64 },

    #[error("trajectory reached a node of the wave function at t = {time} (|psi| ratio {ratio:e})")]
    NodeProximity { time: f64, ratio: f64 },

    #[error("integrator step size underflow at t = {time}")]
    StepUnderflow { time: f64 },

    #[error("conditional wave function is degenerate: norm {norm:e}")]
    CollapseDegenerate { norm: f64 },

    #[error("particle {particle} starts outside the detector ball: |x| = {distance} >= R = {radius}")]
    OutsideBall {
        particle: usize,
        distance: f64,
        radius: f64,
    },

    #[error("exit position radius {distance} does not match detector radius {radius}")]
    RadiusMismatch { distance: f64, radius: f64 },

    #[error("wave function mass {mass:e} within 3h of the grid boundary at t = {time}")]
    BoundaryLeak { time: f64, mass: f64 },

    #[error("wave operator did not converge: {0}")]
    Horizon(String),

    #[error("trajectory horizon {available} is shorter than required {required}")]
    InsufficientHorizon { available: f64, required: f64 },

    #[error("time {time} outside trajectory segment [{start}, {end}]")]
    OutsideSegment { time: f64, start: f64, end: f64 },

    #[error("sample aborted ({kind}) at t = {time}")]
    SampleAborted { kind: &'static str, time: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration invalid:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
