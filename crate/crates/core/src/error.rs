use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unit mismatch: cannot {op} `{left}` and `{right}`")]
    UnitMismatch {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("invalid unit tag `{0}`")]
    InvalidUnit(String),

    #[error("division by a zero-valued quantity")]
    DivisionByZero,

    #[error("invalid quantity: {0}")]
    InvalidQuantity(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("scan span {span_hz} Hz covers fewer than 3 fringe periods ({period_hz} Hz each)")]
    SpanTooSmall { span_hz: f64, period_hz: f64 },

    #[error("fringe envelope peak lies at the edge of the scan (estimated center {center_hz} Hz, scan {lo_hz}..{hi_hz} Hz)")]
    CenterAtEdge { center_hz: f64, lo_hz: f64, hi_hz: f64 },

    #[error("fringe contrast is indistinguishable from noise ({snr:.2} sigma)")]
    FlatSpectrum { snr: f64 },

    #[error("not enough points: {points} points for {params} parameters")]
    TooFewPoints { points: usize, params: usize },

    #[error("invalid spectrum set: {0}")]
    InvalidSet(String),

    #[error("spectrum {index} fit did not converge")]
    UnconvergedFit { index: usize },

    #[error("spectrum {index}: |center| = {center_hz} Hz is below 10x its uncertainty {sigma_hz} Hz")]
    SuspiciousFit {
        index: usize,
        center_hz: f64,
        sigma_hz: f64,
    },

    #[error("invalid error budget: {0}")]
    InvalidBudget(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid QED series: {0}")]
    InvalidQed(String),

    #[error("missing constant `{0}` in registry file")]
    MissingConstant(String),

    #[error("invalid registry: {0}")]
    InvalidRegistry(String),

    #[error("non-positive input to {0}")]
    NonPositive(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
