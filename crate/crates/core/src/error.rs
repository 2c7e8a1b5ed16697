use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("malformed curve at point {index}: {reason}")]
    MalformedCurve { index: usize, reason: String },

    #[error("time step {dt:e} violates the explicit stability bound; need dt <= {required:e}")]
    Stability { dt: f64, required: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ODE integration diverged at step {step}")]
    IntegrationDiverged { step: usize },

    #[error("singular metric at node ({i}, {j}), det g = {det:e}")]
    SingularMetric { i: usize, j: usize, det: f64 },

    #[error("Lagrangian angle cannot be unwrapped across the cell at ({i}, {j}), jump {jump:.3} rad")]
    AngleUnwrap { i: usize, j: usize, jump: f64 },

    #[error("patch is not graphical over the plane at node ({i}, {j})")]
    NotGraphical { i: usize, j: usize },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("projection is not a covering map: preimage counts {counts:?} at witnesses {witnesses:?}")]
    NotACovering {
        counts: Vec<usize>,
        witnesses: Vec<[f64; 2]>,
    },

    #[error("cluster density {density:.4} is not within 0.2 of an integer")]
    AmbiguousMultiplicity { density: f64 },

    #[error("construction error: {0}")]
    Construction(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}
