//! Forward Loewner evolution in the upper half-plane.
//!
//! The driving function is treated as piecewise constant on each time step,
//! for which the centred Loewner flow `dĝ = 2dt/ĝ − dW` has the closed-form
//! solution `ĝ ↦ sqrt((ĝ − w)² + 4Δt)`: the map removing a vertical slit of
//! height `2√Δt` based at `w`. Composing these maps gives a chain that is
//! exactly conformal at every resolution.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoewnerError {
    #[error("invalid driving path: {0}")]
    InvalidPath(String),
    #[error("capacity increment must be positive, got {0}")]
    NonPositiveCapacity(f64),
    #[error("point {z} lies inside the slit removed by step {step}")]
    InsideSlit { z: Complex64, step: usize },
    #[error("inverse step {step} produced {z} below the real axis")]
    BranchViolation { z: Complex64, step: usize },
}

/// Numerical tolerances used by the Loewner routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Identities of a single elementary map.
    pub algebraic: f64,
    /// Comparisons between composed traces.
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { algebraic: 1e-12, trace: 1e-4 }
    }
}

/// Time-discretised driving function with optional force-point tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    times: Vec<f64>,
    values: Vec<f64>,
    force_tracks: Vec<Vec<f64>>,
}

impl DrivingPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, force_tracks: Vec<Vec<f64>>) -> Result<Self, LoewnerError> {
        let bad = |m: String| Err(LoewnerError::InvalidPath(m));
        if times.is_empty() {
            return bad("no samples".into());
        }
        if times[0] != 0.0 {
            return bad(format!("first time must be 0, got {}", times[0]));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return bad(format!("times not strictly increasing at index {}", i + 1));
        }
        if values.len() != times.len() {
            return bad(format!("{} values for {} times", values.len(), times.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return bad("non-finite driving value".into());
        }
        for (j, track) in force_tracks.iter().enumerate() {
            if track.len() != times.len() {
                return bad(format!("force track {} has {} samples for {} times", j + 1, track.len(), times.len()));
            }
            if let Some(i) = track.iter().position(|x| *x == 0.0 || !x.is_finite()) {
                return bad(format!("force track {} is zero or non-finite at index {i}", j + 1));
            }
        }
        Ok(Self { times, values, force_tracks })
    }

    /// Uniform grid on `[0, t_max]` with the given driving values.
    pub fn uniform(t_max: f64, values: Vec<f64>) -> Result<Self, LoewnerError> {
        let n = values.len().saturating_sub(1).max(1);
        let times = (0..values.len()).map(|i| t_max * i as f64 / n as f64).collect();
        Self::new(times, values, Vec::new())
    }

    /// `W ≡ c` on an `n`-step uniform grid over `[0, t_max]`.
    pub fn constant(t_max: f64, n: usize, c: f64) -> Self {
        Self::uniform(t_max, vec![c; n + 1]).expect("constant path is valid")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn force_tracks(&self) -> &[Vec<f64>] {
        &self.force_tracks
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("path is never empty")
    }

    /// Linear interpolation of `W` in capacity time; held constant past the end.
    pub fn value_at(&self, t: f64) -> f64 {
        let ts = &self.times;
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= self.final_time() {
            return *self.values.last().unwrap();
        }
        let k = ts.partition_point(|&s| s <= t);
        let (t0, t1) = (ts[k - 1], ts[k]);
        let (w0, w1) = (self.values[k - 1], self.values[k]);
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }

    /// `σ⁻¹ W_{σ² t}`: the path obtained by scaling space by `1/σ`.
    pub fn rescaled(&self, sigma: f64) -> Self {
        let s2 = sigma * sigma;
        Self {
            times: self.times.iter().map(|t| t / s2).collect(),
            values: self.values.iter().map(|w| w / sigma).collect(),
            force_tracks: self.force_tracks.iter().map(|tr| tr.iter().map(|x| x / sigma).collect()).collect(),
        }
    }

    /// Prefix of the path up to and including sample `last`.
    pub fn truncated(&self, last: usize) -> Self {
        let n = (last + 1).min(self.len());
        Self {
            times: self.times[..n].to_vec(),
            values: self.values[..n].to_vec(),
            force_tracks: self.force_tracks.iter().map(|tr| tr[..n].to_vec()).collect(),
        }
    }
}

/// One elementary vertical-slit map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// Capacity increment `Δt > 0`.
    pub dt: f64,
    /// Driving offset relative to the previous tip image.
    pub offset: f64,
}

impl Step {
    fn slit_height(&self) -> f64 {
        2.0 * self.dt.sqrt()
    }

    /// Image of the new tip in the coordinates before this step.
    pub fn tip_preimage(&self) -> Complex64 {
        Complex64::new(self.offset, self.slit_height())
    }
}

/// Ordered sequence of elementary slit maps representing `ĝ_t`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoewnerChain {
    steps: Vec<Step>,
}

impl LoewnerChain {
    pub fn new(steps: Vec<Step>) -> Result<Self, LoewnerError> {
        if let Some(s) = steps.iter().find(|s| !(s.dt > 0.0) || !s.offset.is_finite()) {
            return Err(LoewnerError::NonPositiveCapacity(s.dt));
        }
        Ok(Self { steps })
    }

    /// Chain whose step `i` holds `W` at the value `W_{t_i}` over `(t_{i−1}, t_i]`.
    pub fn from_driving(path: &DrivingPath) -> Self {
        let steps = path
            .times
            .windows(2)
            .zip(path.values.windows(2))
            .map(|(t, w)| Step { dt: t[1] - t[0], offset: w[1] - w[0] })
            .collect();
        Self { steps }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: Step) -> Result<(), LoewnerError> {
        if !(step.dt > 0.0) {
            return Err(LoewnerError::NonPositiveCapacity(step.dt));
        }
        self.steps.push(step);
        Ok(())
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &LoewnerChain) -> LoewnerChain {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        LoewnerChain { steps }
    }

    /// Half-plane capacity `Σ Δt_i`.
    pub fn capacity(&self) -> f64 {
        capacity_of(self)
    }

    /// Total driving displacement `W_{t_n} − W_0`.
    pub fn total_offset(&self) -> f64 {
        self.steps.iter().map(|s| s.offset).sum()
    }
}

pub fn capacity_of(chain: &LoewnerChain) -> f64 {
    chain.steps.iter().map(|s| s.dt).sum()
}

/// `sqrt((z − w)² + 4Δt)` on the branch mapping `H \ slit` onto `H`.
pub fn elementary_slit_map(z: Complex64, dt: f64, w: f64) -> Result<Complex64, LoewnerError> {
    if !(dt > 0.0) {
        return Err(LoewnerError::NonPositiveCapacity(dt));
    }
    let zeta = z - w;
    let c = 2.0 * dt.sqrt();
    if zeta.re == 0.0 && zeta.im > 0.0 && zeta.im < c {
        return Err(LoewnerError::InsideSlit { z, step: 0 });
    }
    Ok(slit_forward(zeta, c))
}

/// Inverse of [`elementary_slit_map`]: `w + sqrt(u² − 4Δt)` with `Im ≥ 0`.
pub fn inverse_slit_map(u: Complex64, dt: f64, w: f64) -> Result<Complex64, LoewnerError> {
    if !(dt > 0.0) {
        return Err(LoewnerError::NonPositiveCapacity(dt));
    }
    Ok(w + slit_inverse(u, 2.0 * dt.sqrt()))
}

// (ζ − ic)(ζ + ic) rather than ζ² + c² so the tip lands on 0 exactly.
#[inline]
fn slit_forward(zeta: Complex64, c: f64) -> Complex64 {
    let ic = Complex64::new(0.0, c);
    upper_root((zeta - ic) * (zeta + ic), zeta.re)
}

#[inline]
fn slit_inverse(u: Complex64, c: f64) -> Complex64 {
    upper_root((u - c) * (u + c), u.re)
}

/// Square root with `Im ≥ 0`; on the real axis the sign follows `side`.
#[inline]
fn upper_root(a: Complex64, side: f64) -> Complex64 {
    let s = a.sqrt();
    if s.im > 0.0 {
        s
    } else if s.im < 0.0 {
        -s
    } else if (s.re < 0.0) != (side < 0.0) {
        -s
    } else {
        s
    }
}

/// Applies the chain's maps in time order.
pub fn forward_evaluate(chain: &LoewnerChain, z: Complex64) -> Result<Complex64, LoewnerError> {
    let mut u = z;
    for (i, s) in chain.steps.iter().enumerate() {
        let zeta = u - s.offset;
        let c = s.slit_height();
        if zeta.re == 0.0 && zeta.im > 0.0 && zeta.im < c {
            return Err(LoewnerError::InsideSlit { z, step: i });
        }
        u = slit_forward(zeta, c);
    }
    Ok(u)
}

/// First Laurent coefficients of `ĝ(z) = a z + b + c/z + …` on a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaurentFit {
    pub leading: Complex64,
    pub constant: Complex64,
    /// Equals `2·capacity` for a hydrodynamically normalized map.
    pub subleading: Complex64,
    pub radius: f64,
}

impl LaurentFit {
    pub fn capacity(&self) -> f64 {
        0.5 * self.subleading.re
    }
}

/// Discrete Fourier fit of `g` on `|z| = radius`, extended to the lower
/// half-plane by reflection `g(z̄) = conj g(z)`.
pub fn fit_laurent(chain: &LoewnerChain, radius: f64, n_points: usize) -> Result<LaurentFit, LoewnerError> {
    let m = 2 * n_points.max(4);
    let mut acc = [Complex64::new(0.0, 0.0); 3];
    for k in 0..m / 2 {
        let theta = std::f64::consts::TAU * (k as f64 + 0.5) / m as f64;
        let z = Complex64::from_polar(radius, theta);
        // Subtract z first so the large part cancels exactly.
        let h = forward_evaluate(chain, z)? - z;
        for (zz, hh) in [(z, h), (z.conj(), h.conj())] {
            acc[0] += hh / zz;
            acc[1] += hh;
            acc[2] += hh * zz;
        }
    }
    let n = m as f64;
    Ok(LaurentFit { leading: 1.0 + acc[0] / n, constant: acc[1] / n, subleading: acc[2] / n, radius })
}

/// Applies the inverses of steps `upto−1, …, 0` to `u`.
pub fn inverse_evaluate(chain: &LoewnerChain, upto: usize, u: Complex64, tol: f64) -> Result<Complex64, LoewnerError> {
    let mut z = u;
    for i in (0..upto).rev() {
        let s = chain.steps[i];
        z = s.offset + slit_inverse(z, s.slit_height());
        if z.im < -tol {
            return Err(LoewnerError::BranchViolation { z, step: i });
        }
    }
    Ok(z)
}

/// Planar curve `γ(t_i)` generated by a driving path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub times: Vec<f64>,
    pub points: Vec<Complex64>,
}

impl Trace {
    pub fn tip(&self) -> Complex64 {
        *self.points.last().expect("trace is never empty")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn compute_trace(path: &DrivingPath) -> Result<Trace, LoewnerError> {
    compute_trace_with(path, Tolerances::default())
}

/// Trace by unwinding each tip through the inverse maps; O(n²), parallel over tips.
pub fn compute_trace_with(path: &DrivingPath, tol: Tolerances) -> Result<Trace, LoewnerError> {
    let chain = LoewnerChain::from_driving(path);
    let tips: Result<Vec<Complex64>, LoewnerError> = (0..chain.len())
        .into_par_iter()
        .map(|i| {
            let s = chain.steps[i];
            let z = inverse_evaluate(&chain, i, s.tip_preimage(), tol.trace)?;
            Ok(Complex64::new(z.re, z.im.max(0.0)))
        })
        .collect();
    let mut points = Vec::with_capacity(path.len());
    points.push(Complex64::new(0.0, 0.0));
    points.extend(tips?);
    Ok(Trace { times: path.times.clone(), points })
}
