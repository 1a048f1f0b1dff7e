//! Modeling toolkit for a single-satellite, two-quantum-memory, time-delayed
//! quantum repeater link.
//!
//! The crate computes finite-size secure key lengths for the 2-QM and 1-QM
//! protocol variants, cross-checks the closed-form model against an
//! event-level stochastic simulator, derives on-board memory capacity
//! requirements, and evaluates a best-case GEO dual-downlink comparison.

pub mod error;
pub mod geolink;
pub mod keyrate;
pub mod link;
pub mod params;
pub mod pipeline;
pub mod plot;
pub mod qber;
pub mod record;
pub mod simkernel;
pub mod yields;

pub use error::Error;
pub use params::SystemParams;
