//! Driving-function samplers for SLE(κ) and SLE(κ, ρ⃗).
//!
//! Two integrators are provided for the force-point system. The direct one
//! evolves the centred positions `X⁽ʲ⁾ = ĝ_t(x_j)` and uses the drift
//! `−Σ ρ_j / X⁽ʲ⁾`. The current route evolves the uncentred images
//! `g_t(x_j)` and reads the drift off the harmonic current `J^x = ∂_y Φ` at the
//! tip, with `Φ(z) = −Σ ρ_j arg(z − X⁽ʲ⁾)`. On shared noise they agree up to
//! floating-point reassociation.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::loewner::DrivingPath;
use crate::rng::{substream, Purpose};

const MAX_REFINEMENT_DEPTH: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error("invalid force specification: {0}")]
    InvalidSpec(String),
    #[error("invalid SDE configuration: {0}")]
    InvalidConfig(String),
    #[error("force point {index} swallowed at t = {time}")]
    Swallowed { time: f64, index: usize, partial: Box<DrivingPath> },
    #[error("harmonic current is singular at source {index}")]
    Singular { index: usize },
}

/// Marked boundary point `x` with weight `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcePoint {
    pub x: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceSpec {
    pub kappa: f64,
    pub points: Vec<ForcePoint>,
}

impl ForceSpec {
    pub fn new(kappa: f64, points: Vec<ForcePoint>) -> Result<Self, DriverError> {
        let spec = Self { kappa, points };
        spec.validate()?;
        Ok(spec)
    }

    /// Plain SLE(κ): no force points.
    pub fn plain(kappa: f64) -> Self {
        Self { kappa, points: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        let bad = |m: String| Err(DriverError::InvalidSpec(m));
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return bad(format!("kappa must be >= 0, got {}", self.kappa));
        }
        for (j, p) in self.points.iter().enumerate() {
            if p.x == 0.0 || !p.x.is_finite() {
                return bad(format!("force point {} must be finite and nonzero", j + 1));
            }
            if !p.rho.is_finite() {
                return bad(format!("rho {} is not finite", j + 1));
            }
            if self.points[..j].iter().any(|q| q.x == p.x) {
                return bad(format!("force point {} duplicates x = {}", j + 1, p.x));
            }
        }
        Ok(())
    }

    pub fn with_positions(&self, xs: &[f64]) -> Self {
        let points = self.points.iter().zip(xs).map(|(p, &x)| ForcePoint { x, rho: p.rho }).collect();
        Self { kappa: self.kappa, points }
    }

    /// Initial drift `−Σ ρ_j / x_j` of the driving function.
    pub fn initial_drift(&self) -> f64 {
        -self.points.iter().map(|p| p.rho / p.x).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwallowPolicy {
    /// Stop the path and report the event.
    Halt,
    /// Freeze the swallowed point and continue without its drift (non-canonical).
    DropPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub t_max: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub swallow_policy: SwallowPolicy,
    pub adaptive: bool,
}

impl SdeConfig {
    pub fn new(t_max: f64, n_steps: usize, seed: u64) -> Self {
        Self { t_max, n_steps, seed, swallow_policy: SwallowPolicy::Halt, adaptive: true }
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        if self.n_steps < 1 {
            return Err(DriverError::InvalidConfig("n_steps must be >= 1".into()));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(DriverError::InvalidConfig(format!("t_max must be > 0, got {}", self.t_max)));
        }
        Ok(())
    }

    fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.t_max * i as f64 / self.n_steps as f64).collect()
    }
}

/// Which form of the drift the integrator evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftRoute {
    /// `−Σ ρ_j / X⁽ʲ⁾` with centred force points.
    ForcePoints,
    /// `−J^x(0)` from the harmonic current of uncentred sources.
    HarmonicCurrent,
}

/// `Φ(z) = −Σ ρ_j arg(z − (x_j − W))`.
pub fn harmonic_potential(at: Complex64, spec: &ForceSpec, w: f64) -> Result<f64, DriverError> {
    let mut phi = 0.0;
    for (j, p) in spec.points.iter().enumerate() {
        let d = at - (p.x - w);
        if d.re == 0.0 && d.im == 0.0 {
            return Err(DriverError::Singular { index: j });
        }
        phi -= p.rho * d.im.atan2(d.re);
    }
    Ok(phi)
}

/// `J^x = ∂_y Φ` at `at`, for sources at `x_j − W`.
pub fn harmonic_current_x(at: Complex64, spec: &ForceSpec, w: f64) -> Result<f64, DriverError> {
    let mut jx = 0.0;
    for (j, p) in spec.points.iter().enumerate() {
        let u = at.re - (p.x - w);
        let y = at.im;
        let r2 = u * u + y * y;
        if r2 == 0.0 {
            return Err(DriverError::Singular { index: j });
        }
        // ∂_y atan2(y, u) = u / (u² + y²)
        jx -= p.rho * u / r2;
    }
    Ok(jx)
}

fn brownian_increments(cfg: &SdeConfig, index: u64) -> impl Iterator<Item = f64> {
    let dt = cfg.t_max / cfg.n_steps as f64;
    let sd = dt.sqrt();
    let mut rng = substream(cfg.seed, Purpose::Brownian, index);
    (0..cfg.n_steps).map(move |_| sd * rng.sample::<f64, _>(StandardNormal))
}

/// SLE(κ) driving function `W = √κ B` for path 0 of the seed.
pub fn sample_sle_driving(kappa: f64, cfg: &SdeConfig) -> Result<DrivingPath, DriverError> {
    sample_sle_driving_indexed(kappa, cfg, 0)
}

pub fn sample_sle_driving_indexed(kappa: f64, cfg: &SdeConfig, index: u64) -> Result<DrivingPath, DriverError> {
    cfg.validate()?;
    ForceSpec::plain(kappa).validate()?;
    let sk = kappa.sqrt();
    let mut values = Vec::with_capacity(cfg.n_steps + 1);
    let mut w = 0.0;
    values.push(w);
    for db in brownian_increments(cfg, index) {
        w += sk * db;
        values.push(w);
    }
    DrivingPath::new(cfg.times(), values, Vec::new()).map_err(|e| DriverError::InvalidConfig(e.to_string()))
}

pub fn sample_sle_rho_driving(spec: &ForceSpec, cfg: &SdeConfig) -> Result<DrivingPath, DriverError> {
    integrate(spec, cfg, 0, DriftRoute::ForcePoints)
}

pub fn sample_via_current(spec: &ForceSpec, cfg: &SdeConfig) -> Result<DrivingPath, DriverError> {
    integrate(spec, cfg, 0, DriftRoute::HarmonicCurrent)
}

struct State<'a> {
    spec: &'a ForceSpec,
    route: DriftRoute,
    sqrt_kappa: f64,
    t: f64,
    w: f64,
    /// Centred `X⁽ʲ⁾` for the direct route, uncentred `g_t(x_j)` for the current route.
    pos: Vec<f64>,
    active: Vec<bool>,
    /// Source table handed to [`harmonic_current_x`]; swallowed points carry `ρ = 0`.
    sources: ForceSpec,
    bridge: ChaCha8Rng,
    swallow_policy: SwallowPolicy,
    adaptive: bool,
}

impl State<'_> {
    fn centred(&self, j: usize) -> f64 {
        match self.route {
            DriftRoute::ForcePoints => self.pos[j],
            DriftRoute::HarmonicCurrent => self.pos[j] - self.w,
        }
    }

    fn min_active_distance(&self) -> f64 {
        (0..self.pos.len()).filter(|&j| self.active[j]).map(|j| self.centred(j).abs()).fold(f64::INFINITY, f64::min)
    }

    fn drift(&mut self) -> f64 {
        match self.route {
            DriftRoute::ForcePoints => -(0..self.pos.len())
                .filter(|&j| self.active[j])
                .map(|j| self.spec.points[j].rho / self.pos[j])
                .sum::<f64>(),
            DriftRoute::HarmonicCurrent => {
                for (src, &g) in self.sources.points.iter_mut().zip(&self.pos) {
                    src.x = g;
                }
                // Sources never sit at the tip: swallowed points are deactivated first.
                -harmonic_current_x(Complex64::new(0.0, 0.0), &self.sources, self.w).unwrap_or(f64::NAN)
            }
        }
    }

    fn advance(&mut self, dt: f64, db: f64, depth: u32) -> Result<(), usize> {
        let kappa = self.sqrt_kappa * self.sqrt_kappa;
        if self.adaptive && depth < MAX_REFINEMENT_DEPTH && self.min_active_distance() < 10.0 * (kappa * dt).sqrt() {
            // Brownian-bridge split keeps the coarse increment intact.
            let z: f64 = self.bridge.sample(StandardNormal);
            let first = 0.5 * db + 0.5 * dt.sqrt() * z;
            self.advance(0.5 * dt, first, depth + 1)?;
            return self.advance(0.5 * dt, db - first, depth + 1);
        }
        let before: Vec<f64> = (0..self.pos.len()).map(|j| self.centred(j)).collect();
        let dw = self.sqrt_kappa * db + self.drift() * dt;
        for j in 0..self.pos.len() {
            if !self.active[j] {
                continue;
            }
            match self.route {
                DriftRoute::ForcePoints => {
                    let x = self.pos[j];
                    self.pos[j] = x + 2.0 * dt / x - dw;
                }
                DriftRoute::HarmonicCurrent => {
                    let g = self.pos[j];
                    self.pos[j] = g + 2.0 * dt / (g - self.w);
                }
            }
        }
        self.w += dw;
        self.t += dt;
        let threshold = f64::max(1e-6, (kappa * dt).sqrt() / 10.0);
        for j in 0..self.pos.len() {
            if !self.active[j] {
                continue;
            }
            let x = self.centred(j);
            let crossed = x.signum() != before[j].signum();
            if x.abs() < threshold || crossed {
                match self.swallow_policy {
                    SwallowPolicy::Halt => return Err(j),
                    SwallowPolicy::DropPoint => {
                        self.active[j] = false;
                        self.sources.points[j].rho = 0.0;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Euler–Maruyama integration of the force-point system for path `index`.
pub fn integrate(spec: &ForceSpec, cfg: &SdeConfig, index: u64, route: DriftRoute) -> Result<DrivingPath, DriverError> {
    spec.validate()?;
    cfg.validate()?;
    let n_pts = spec.points.len();
    let mut state = State {
        spec,
        route,
        sqrt_kappa: spec.kappa.sqrt(),
        t: 0.0,
        w: 0.0,
        pos: spec.points.iter().map(|p| p.x).collect(),
        active: vec![true; n_pts],
        sources: spec.clone(),
        bridge: substream(cfg.seed, Purpose::Bridge, index),
        swallow_policy: cfg.swallow_policy,
        adaptive: cfg.adaptive,
    };
    let times = cfg.times();
    let dt = cfg.t_max / cfg.n_steps as f64;
    let mut values = Vec::with_capacity(times.len());
    let mut tracks: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); n_pts];
    let mut frozen = vec![0.0; n_pts];
    let record = |state: &State, values: &mut Vec<f64>, tracks: &mut Vec<Vec<f64>>, frozen: &mut Vec<f64>| {
        values.push(state.w);
        for j in 0..n_pts {
            if state.active[j] {
                frozen[j] = state.centred(j);
            }
            tracks[j].push(frozen[j]);
        }
    };
    record(&state, &mut values, &mut tracks, &mut frozen);
    for (i, db) in brownian_increments(cfg, index).enumerate() {
        if let Err(j) = state.advance(dt, db, 0) {
            let partial = DrivingPath::new(times[..=i].to_vec(), values, tracks)
                .map_err(|e| DriverError::InvalidConfig(e.to_string()))?;
            return Err(DriverError::Swallowed { time: state.t, index: j, partial: Box::new(partial) });
        }
        // Grid times are taken from the uniform grid, not the accumulated sum.
        state.t = times[i + 1];
        record(&state, &mut values, &mut tracks, &mut frozen);
    }
    DrivingPath::new(times, values, tracks).map_err(|e| DriverError::InvalidConfig(e.to_string()))
}

/// Result of sampling many paths: completed paths plus swallow events.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Ensemble {
    pub paths: Vec<DrivingPath>,
    pub swallow_events: Vec<SwallowEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwallowEvent {
    pub path: u64,
    pub time: f64,
    pub force_point: usize,
}

/// Samples `n_paths` independent paths in parallel; path `i` uses substream `i`.
pub fn sample_ensemble(spec: &ForceSpec, cfg: &SdeConfig, n_paths: usize, route: DriftRoute) -> Result<Ensemble, DriverError> {
    spec.validate()?;
    cfg.validate()?;
    let results: Vec<Result<DrivingPath, DriverError>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            if spec.points.is_empty() {
                sample_sle_driving_indexed(spec.kappa, cfg, i)
            } else {
                integrate(spec, cfg, i, route)
            }
        })
        .collect();
    let mut out = Ensemble::default();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => out.paths.push(p),
            Err(DriverError::Swallowed { time, index, .. }) => {
                out.swallow_events.push(SwallowEvent { path: i as u64, time, force_point: index })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
