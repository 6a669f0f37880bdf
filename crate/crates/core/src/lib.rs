//! Evaluation toolkit for image-to-web generation.
//!
//! Scores generated pages against reference pages with DOM-based Element
//! Accuracy and LCS-based Layout Accuracy, and provides the supporting
//! pipelines: visually validated HTML simplification, complexity
//! classification, Set-of-Mark injection and a five-hop multimodal
//! chain-of-thought driver.
//!
//! Metric code is generic over [`Scalar`]; [`Score`] (`f64`) is the working
//! type and [`ExactScore`] (`Ratio<i64>`) reproduces hand computations
//! exactly.

pub mod dom;
pub mod harness;
pub mod mcot;
pub mod metrics;
pub mod render;
pub mod scalar;
pub mod simplify;
pub mod som;
pub mod style;

pub use scalar::Scalar;

/// Floating-point score used by reports and the CLI.
pub type Score = f64;
/// Exact rational score.
pub type ExactScore = num_rational::Ratio<i64>;

pub type ElementScore = metrics::ElementScore<Score>;
pub type EvalConfig = metrics::EvalConfig<Score>;
pub type EvalReport = metrics::EvalReport<Score>;
pub type ExactEvalReport = metrics::EvalReport<ExactScore>;
