//! Shared fixtures for the pipeline benchmarks.

use std::sync::Arc;

use slelab::driver::sample_sle_driving;
use slelab::gff::{theoretical_kappa_lat, GffSampler};
use slelab::{BoundaryData, DrivingPath, LatticeDomain, SdeConfig};

/// SLE(κ) driving function on `[0, 1]` with `n_steps` steps.
pub fn driving(kappa: f64, n_steps: usize, seed: u64) -> DrivingPath {
    sample_sle_driving(kappa, &SdeConfig::new(1.0, n_steps, seed)).expect("plain SLE never swallows")
}

/// Unit-charge sampler on the half-disk of the given radius, using the
/// uncalibrated coupling so setup cost is just the factorisation.
pub fn unit_charge_sampler(radius: usize) -> GffSampler {
    let dom = Arc::new(LatticeDomain::new(radius).expect("radius is valid"));
    let bc = BoundaryData::single(1.0, 1.0).expect("unit charge is valid");
    GffSampler::new(dom, bc, theoretical_kappa_lat(1.0)).expect("sampler builds")
}
