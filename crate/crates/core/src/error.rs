use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single row-level problem found while ingesting a CSV table.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct RowIssue {
    pub file: String,
    /// 1-based data row number (the header is row 0).
    pub row: usize,
    pub message: String,
}

impl std::fmt::Display for RowIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} row {}: {}", self.file, self.row, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}: malformed header, expected `{expected}`, found `{found}`")]
    Header {
        file: String,
        expected: String,
        found: String,
    },

    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },

    #[error("{file}: {failed} of {total} rows failed validation; first: {}", .issues.first().map(|i| i.to_string()).unwrap_or_default())]
    TooManyBadRows {
        file: String,
        failed: usize,
        total: usize,
        issues: Vec<RowIssue>,
    },

    #[error("no patent rows")]
    NoPatents,

    #[error("applicant ids with conflicting countries: {}", .0.join(", "))]
    ConflictingApplicants(Vec<String>),

    #[error("country codes not in registry: {}", .0.join(", "))]
    UnknownCountries(Vec<String>),

    #[error("empty portfolio for holder {0}")]
    EmptyPortfolio(String),

    #[error("zero denominator in RCA: {0} is zero")]
    ZeroDenominator(&'static str),

    #[error("empty sector: no firms to rank")]
    EmptySector,

    #[error("zero row sum for country {0}")]
    ZeroRowSum(String),

    #[error("window end {window_end} precedes latest publication month {latest}")]
    WindowEnd { window_end: String, latest: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("negative value {value} in column `{column}` at row {row}")]
    NegativeCovariate { row: usize, column: String, value: f64 },

    #[error("invalid value {value} in column `{column}` at row {row}: {reason}")]
    InvalidCovariate {
        row: usize,
        column: String,
        value: f64,
        reason: &'static str,
    },

    #[error("response is all zero")]
    AllZeroResponse,

    #[error("response must be binary with both classes present")]
    SingleClassResponse,

    #[error("no convergence after {iterations} iterations (last max |step| = {last_step:e})")]
    NoConvergence {
        iterations: usize,
        last_step: f64,
        trace: Vec<f64>,
    },

    #[error("perfect separation detected on column `{0}`")]
    Separation(String),

    #[error("design is rank deficient: column `{0}` is collinear with the others")]
    Collinear(String),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("cannot cluster with a single cluster")]
    SingleCluster,

    #[error("positive-flow subsample contains a zero response at row {0}")]
    ZeroInPositiveSubset(usize),

    #[error("no selection-stage inverse Mills ratio for dyad {0}")]
    MissingImr(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
