//! Empirical and exact checks of the restricted quasiconvexity isometry
//! property for random matrices with symmetric α-stable entries, α ∈ (0, 1).
//!
//! The crate is organised by subsystem:
//!
//! - [`stable`]: SαS sampling, closed-form moment and tail constants.
//! - [`special`]: the gamma function those constants need.
//! - [`concentration`]: the truncation bound for empirical fractional moments
//!   and Monte-Carlo estimates of the deviation probability it controls.
//! - [`geometry`]: the ℓ_α quasi-norm, covering bounds and constructive nets.
//! - [`rqip`]: the deviation statistic, matrix checks and the row-count bound.
//! - [`experiments`]: seeded studies that write CSV/JSON/SVG artifacts.
//! - [`cli`]: the `rqip` command-line front end.
//!
//! Runnable walkthroughs for each subsystem live under `examples/`.

pub mod cli;
pub mod concentration;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod rqip;
pub mod special;
pub mod stable;
pub mod stream;
pub mod svg;

pub use error::{Error, Result};
pub use stream::Stream;
