//! Streaming regression with a dynamically sized ensemble of online learners
//! organised as a scale-free network of experts.
//!
//! The crate is split along the data path:
//!
//! - [`stream`]: instances, the rotating-hyperplane drift generator and CSV ingestion.
//! - [`adwin`]: the adaptive-windowing change detector.
//! - [`graph`]: the expert network, attachment laws, rewiring and centrality metrics.
//! - [`learners`]: the online base regressors every expert wraps.
//! - [`ensemble`]: period-driven and ADWIN-driven network ensembles plus the AddExp baseline.
//! - [`eval`]: prequential evaluation, experiment configuration and result emission.
//!
//! All randomness flows through [`rng::StreamRng`] (ChaCha8), so every run is
//! reproducible from its seed.

pub mod adwin;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod graph;
pub mod learners;
pub mod rng;
pub mod stream;

pub use error::{Error, Result};
pub use stream::Instance;
