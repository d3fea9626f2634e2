//! Simulation and verification toolkit for SLE(κ, ρ⃗).
//!
//! The crate is organised bottom-up:
//!
//! * [`loewner`]: forward Loewner evolution with piecewise-constant driving.
//! * [`driver`]: samplers for SLE(κ) and SLE(κ, ρ⃗) driving functions.
//! * [`zipper`]: inverse Loewner transform and ensemble estimators.
//! * [`gff`]: Gaussian free field on a triangular-lattice half-disk.
//! * [`levelline`]: lattice level lines of a field sample.
//! * [`cft`]: exact rational checks of the free-boson null-state identities.
//! * [`experiments`]: end-to-end pipelines producing reproducible reports.
//!
//! Shared data types are re-exported at the crate root.

pub mod cft;
pub mod driver;
pub mod error;
pub mod experiments;
pub mod gff;
pub mod io;
pub mod levelline;
pub mod loewner;
pub mod rng;
pub mod stats;
pub mod zipper;

pub use driver::{ForceSpec, SdeConfig, SwallowPolicy};
pub use error::{Error, Result};
pub use gff::{BoundaryData, FieldSample, LatticeDomain};
pub use levelline::LevelLine;
pub use loewner::{DrivingPath, LoewnerChain, Trace};
pub use num_complex::Complex64;
pub use zipper::CurveInput;
