//! Verification engine for Dirac, Jacobi-Dirac and precontact structures
//! on coordinate charts.
//!
//! Every geometric object is represented by rules that evaluate second-order
//! jets at a point, so derivatives in brackets and exterior derivatives are
//! exact up to rounding. Identities are checked at deterministic samples and
//! reported as [`report::CheckRecord`]s.

pub mod apaths;
pub mod calculus;
pub mod chart;
pub mod courant;
pub mod error;
pub mod expr;
pub mod field;
pub mod groupoids;
pub mod jet;
pub mod linalg;
pub mod prequantize;
pub mod reduction;
pub mod report;
pub mod vorobjev;

pub use chart::Chart;
pub use jet::Jet2;
