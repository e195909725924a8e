//! Error taxonomy shared across the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} is outside the domain of chart `{chart}` (axis {axis})")]
    OutOfDomain {
        chart: String,
        point: Vec<f64>,
        axis: usize,
    },

    #[error("metric of chart `{chart}` is numerically singular at {point:?} (condition number ~{cond:.3e})")]
    SingularMetric {
        chart: String,
        point: Vec<f64>,
        cond: f64,
    },

    #[error("operation needs jets of order {needed}, field `{field}` provides order {available}")]
    Capability {
        field: String,
        needed: u8,
        available: u8,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("evaluation failed: non-finite value at node {point:?} while computing {what}")]
    NonFinite { what: String, point: Vec<f64> },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
