//! Instance streams: the synthetic rotating-hyperplane generator with
//! sigmoid-mixed drift, and CSV ingestion for numeric and Yahoo-format data.

mod hyperplane;
mod ingest;

pub use hyperplane::{
    make_hyperplane_concept, sigmoid_mix_probability, DriftStream, DriftStreamSpec,
    HyperplaneConcept, TargetMode,
};
pub use ingest::{
    parse_regression_csv, parse_yahoo_csv, read_regression_csv, read_yahoo_csv, TargetColumn,
    YAHOO_HEADER,
};

/// One stream element: a feature vector and its real-valued target.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub x: Vec<f64>,
    pub y: f64,
    /// Position in the stream, starting at 0.
    pub index: u64,
}

impl Instance {
    pub fn new(x: Vec<f64>, y: f64, index: u64) -> Self {
        Self { x, y, index }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}
