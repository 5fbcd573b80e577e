//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation degrees differ: {0} vs {1}")]
    TruncationMismatch(usize, usize),

    #[error("truncation degree {0} exceeds the supported maximum {max}", max = crate::z2::MAX_TRUNCATION_DEGREE)]
    TruncationTooLarge(usize),

    #[error("dimension must be at least 1")]
    DimensionRange,

    #[error("hex bitmask malformed: {0}")]
    BadHex(String),

    #[error(
        "stable rank m = {m} must exceed the trivial summand rank k = {k} (and k must be positive)"
    )]
    StableRank { k: u64, m: u64 },

    #[error("expression parse error at byte {pos}: {msg}")]
    ExprParse { pos: usize, msg: String },

    #[error("unknown variable `{name}` (chart coordinates: {coords:?})")]
    UnknownVariable { name: String, coords: Vec<String> },

    #[error("unknown atlas `{0}`")]
    UnknownAtlas(String),

    #[error("atlas `{atlas}` has no chart `{chart}`")]
    UnknownChart { atlas: String, chart: String },

    #[error("malformed rectangle: lower bound must be strictly below upper bound on every axis")]
    EmptyRect,

    #[error("chart `{chart}` domain degenerates under margin {margin}")]
    DegenerateDomain { chart: String, margin: f64 },

    #[error("grid resolution must be at least 2 per axis (got {0})")]
    ResolutionTooSmall(usize),

    #[error("grid resolution has {got} axes but chart `{chart}` has {expected}")]
    ResolutionDim {
        chart: String,
        got: usize,
        expected: usize,
    },

    #[error("no grid covers chart `{0}`")]
    MissingGrid(String),

    #[error("no transition from chart `{from}` to chart `{to}`")]
    NoTransition { from: String, to: String },

    #[error("coordinates {coords:?} lie outside every overlap branch of {from} -> {to}; branches tried: {branches}")]
    OutsideOverlap {
        from: String,
        to: String,
        coords: Vec<f64>,
        branches: String,
    },

    #[error("coordinates {coords:?} lie outside the domain of chart `{chart}`")]
    OutsideChart { chart: String, coords: Vec<f64> },

    #[error("embedded point must be a unit vector (|coords| = {norm})")]
    NotUnit { norm: f64 },

    #[error(
        "embedded {slot} component must be orthogonal to the base point (inner product {dot})"
    )]
    NotTangent { slot: &'static str, dot: f64 },

    #[error("component vector has length {got}, expected {expected}")]
    ComponentLength { got: usize, expected: usize },

    #[error("operation `{0}` requires a chart-based atlas")]
    ChartBackendRequired(&'static str),

    #[error("operation `{0}` requires an embedded atlas")]
    EmbeddedBackendRequired(&'static str),

    #[error("metric is not defined on chart `{chart}`")]
    MetricUndefined { chart: String },

    #[error("metric matrix on chart `{chart}` is singular")]
    SingularMetric { chart: String },

    #[error("metric fails the overlap compatibility check (residual {residual:e})")]
    MetricIncompatible { residual: f64 },

    #[error("transition branch Jacobian is singular (|det| = {det:e})")]
    SingularJacobian { det: f64 },

    #[error("section `{section}` is not defined on chart `{chart}`")]
    SectionUndefined { section: String, chart: String },

    #[error("expected {expected} sections/fields, got {got}")]
    FrameSize { expected: usize, got: usize },

    #[error("base points differ between the two generalized vectors")]
    BasePointMismatch,

    #[error("frame matrix is numerically singular at the evaluation point (rcond {rcond:e})")]
    SingularSolve { rcond: f64 },

    #[error("operation requires a {expected} structure, got {got}")]
    StructureKindMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("no explicit frame is available for sphere dimension {0}; only 1 and 3 are supported")]
    UnsupportedSphereFrame(usize),

    #[error("unknown structure name `{0}` (expected metric:J, metric:F, frame:J or frame:F)")]
    UnknownStructure(String),

    #[error("unknown section name `{0}`")]
    UnknownSection(String),

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("configuration parse error: {0}")]
    Json(#[from] serde_json::Error),
}
