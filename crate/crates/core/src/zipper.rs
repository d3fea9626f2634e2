//! Inverse Loewner transform and driving-function estimators.
//!
//! A curve is unzipped point by point: the next unconsumed point is pushed
//! through every slit map extracted so far, and its image `w` defines the
//! next vertical slit (`Δt = (Im w)²/4`, driving offset `Re w`). This is the
//! exact inverse of [`compute_trace`](crate::loewner::compute_trace), so
//! a trace zipped at its own resolution reproduces the driving path to
//! rounding error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::loewner::{forward_evaluate, DrivingPath, LoewnerChain, Step, Trace};
use crate::stats::{self, Estimate};

pub const MIN_ENSEMBLE: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZipperError {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("degenerate step at point {index}: image {image} is not above the real axis")]
    DegenerateStep { index: usize, image: Complex64 },
    #[error("ensemble has {got} usable paths, need at least {need}")]
    InsufficientEnsemble { got: usize, need: usize },
}

/// Polyline in the upper half-plane starting at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveInput {
    points: Vec<Complex64>,
}

impl CurveInput {
    /// Checks the endpoint conditions; simplicity is checked lazily by the
    /// extraction itself (see [`CurveInput::is_simple`] for an explicit test).
    pub fn new(points: Vec<Complex64>) -> Result<Self, ZipperError> {
        if points.len() < 2 {
            return Err(ZipperError::InvalidCurve("need at least two points".into()));
        }
        if points[0] != Complex64::new(0.0, 0.0) {
            return Err(ZipperError::InvalidCurve(format!("first point must be 0, got {}", points[0])));
        }
        if let Some(i) = points.iter().skip(1).position(|z| !(z.im > 0.0) || !z.re.is_finite()) {
            return Err(ZipperError::InvalidCurve(format!("point {} is not strictly above the real axis", i + 1)));
        }
        Ok(Self { points })
    }

    pub fn from_trace(trace: &Trace) -> Result<Self, ZipperError> {
        Self::new(trace.points.clone())
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn scaled(&self, sigma: f64) -> Self {
        Self { points: self.points.iter().map(|z| z * sigma).collect() }
    }

    /// Every `stride`-th point, always keeping the last one.
    pub fn subsampled(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let mut points: Vec<Complex64> = self.points.iter().step_by(stride).copied().collect();
        let last = *self.points.last().unwrap();
        if *points.last().unwrap() != last {
            points.push(last);
        }
        Self { points }
    }

    /// O(n²) check that no two non-adjacent segments intersect.
    pub fn is_simple(&self) -> bool {
        let p = &self.points;
        let n = p.len();
        for i in 0..n.saturating_sub(1) {
            for j in (i + 2)..n.saturating_sub(1) {
                if segments_intersect(p[i], p[i + 1], p[j], p[j + 1]) {
                    return false;
                }
            }
        }
        true
    }
}

fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let cross = |o: Complex64, p: Complex64, q: Complex64| (p - o).re * (q - o).im - (p - o).im * (q - o).re;
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// Replaces consecutive point pairs by their midpoints, keeping both ends.
///
/// Removes the lattice-scale zigzag of level lines before unzipping.
pub fn midpoint_decimate(curve: &CurveInput) -> CurveInput {
    let p = &curve.points;
    let mut out = vec![p[0]];
    let mut k = 1;
    while k + 1 < p.len() {
        out.push((p[k] + p[k + 1]) * 0.5);
        k += 2;
    }
    let last = *p.last().unwrap();
    if *out.last().unwrap() != last {
        out.push(last);
    }
    CurveInput { points: out }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipperConfig {
    /// Steps whose capacity exceeds `t_total / n_min` are refined by inserting
    /// segment midpoints; 0 disables refinement.
    pub n_min: usize,
    pub max_refinements: usize,
}

impl Default for ZipperConfig {
    fn default() -> Self {
        Self { n_min: 100, max_refinements: 8 }
    }
}

pub fn extract_driving(curve: &CurveInput) -> Result<DrivingPath, ZipperError> {
    extract_driving_with(curve, &ZipperConfig::default())
}

pub fn extract_driving_with(curve: &CurveInput, cfg: &ZipperConfig) -> Result<DrivingPath, ZipperError> {
    let mut points = curve.points.clone();
    let mut chain = unzip(&points)?;
    for _ in 0..cfg.max_refinements {
        if cfg.n_min == 0 {
            break;
        }
        let bound = chain.capacity() / cfg.n_min as f64;
        let coarse: Vec<usize> = chain.steps().iter().enumerate().filter(|(_, s)| s.dt > bound).map(|(k, _)| k).collect();
        if coarse.is_empty() {
            break;
        }
        let mut refined = Vec::with_capacity(points.len() + coarse.len());
        refined.push(points[0]);
        let mut next = coarse.iter().peekable();
        for k in 1..points.len() {
            // Step k−1 consumed points[k].
            if next.peek() == Some(&&(k - 1)) {
                next.next();
                refined.push((points[k - 1] + points[k]) * 0.5);
            }
            refined.push(points[k]);
        }
        points = refined;
        chain = unzip(&points)?;
    }
    chain_to_path(&chain)
}

fn unzip(points: &[Complex64]) -> Result<LoewnerChain, ZipperError> {
    let mut chain = LoewnerChain::default();
    for (index, &z) in points.iter().enumerate().skip(1) {
        let image = forward_evaluate(&chain, z).map_err(|_| ZipperError::DegenerateStep { index, image: z })?;
        if !(image.im > 0.0) {
            return Err(ZipperError::DegenerateStep { index, image });
        }
        let step = Step { dt: image.im * image.im / 4.0, offset: image.re };
        chain.push(step).map_err(|_| ZipperError::DegenerateStep { index, image })?;
    }
    Ok(chain)
}

fn chain_to_path(chain: &LoewnerChain) -> Result<DrivingPath, ZipperError> {
    let mut times = Vec::with_capacity(chain.len() + 1);
    let mut values = Vec::with_capacity(chain.len() + 1);
    let (mut t, mut w) = (0.0, 0.0);
    times.push(t);
    values.push(w);
    for (index, s) in chain.steps().iter().enumerate() {
        let next = t + s.dt;
        if !(next > t) {
            // Capacity below the resolution of the accumulated time.
            return Err(ZipperError::DegenerateStep { index: index + 1, image: Complex64::new(s.offset, 2.0 * s.dt.sqrt()) });
        }
        t = next;
        w += s.offset;
        times.push(t);
        values.push(w);
    }
    DrivingPath::new(times, values, Vec::new()).map_err(|e| ZipperError::InvalidCurve(e.to_string()))
}

/// Time grid shared by the ensemble estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_grid: usize,
    /// Grid end; `None` uses the median final time of the ensemble.
    pub t_max: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_grid: 50, t_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub kappa: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub grid: Vec<f64>,
    /// Mean of `t ∧ τ` at each grid time (equals the grid when no path ends early).
    pub mean_time: Vec<f64>,
    /// Across-ensemble variance of `W_{t∧τ}` at each grid time.
    pub variance: Vec<f64>,
    /// Paths that end before the grid does.
    pub n_stopped: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Slope of the across-ensemble variance of `W` against capacity time.
///
/// Paths are resampled onto a common grid by linear interpolation. A path
/// that ends before the grid does is held at its final value, and the
/// regressor is then the mean stopped time `E[t ∧ τ]`; since `W` is a
/// martingale for SLE(κ), `E[W²_{t∧τ}] = κ E[t ∧ τ]` and the estimator stays
/// unbiased. With a common horizon this is the plain regression on `t`.
pub fn estimate_kappa(paths: &[DrivingPath], grid: GridSpec, n_boot: usize, seed: u64) -> Result<KappaEstimate, ZipperError> {
    if paths.len() < MIN_ENSEMBLE {
        return Err(ZipperError::InsufficientEnsemble { got: paths.len(), need: MIN_ENSEMBLE });
    }
    let t_end = grid.t_max.unwrap_or_else(|| median(paths.iter().map(|p| p.final_time()).collect()));
    let n_grid = grid.n_grid.max(1);
    let times: Vec<f64> = (1..=n_grid).map(|i| t_end * i as f64 / n_grid as f64).collect();
    let w: Vec<Vec<f64>> = paths.iter().map(|p| times.iter().map(|&t| p.value_at(t)).collect()).collect();
    let s: Vec<Vec<f64>> = paths.iter().map(|p| times.iter().map(|&t| t.min(p.final_time())).collect()).collect();
    let n_stopped = paths.iter().filter(|p| p.final_time() < t_end).count();

    let moments = |idx: &[usize]| -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; n_grid];
        let mut y = vec![0.0; n_grid];
        let mut col = Vec::with_capacity(idx.len());
        for i in 0..n_grid {
            col.clear();
            col.extend(idx.iter().map(|&p| w[p][i]));
            y[i] = stats::variance(&col);
            x[i] = idx.iter().map(|&p| s[p][i]).sum::<f64>() / idx.len() as f64;
        }
        (x, y)
    };
    let all: Vec<usize> = (0..paths.len()).collect();
    let (mean_time, variance) = moments(&all);
    let kappa = stats::slope_through_origin(&mean_time, &variance);
    let stderr = stats::bootstrap_stderr(paths.len(), n_boot, seed, |idx| {
        let (x, y) = moments(idx);
        stats::slope_through_origin(&x, &y)
    });
    Ok(KappaEstimate { kappa, stderr, n_paths: paths.len(), grid: times, mean_time, variance, n_stopped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    /// Left ends of the bins.
    pub times: Vec<f64>,
    /// Mean increment rate per bin.
    pub rates: Vec<Estimate>,
    /// Mean rate over the whole window.
    pub window: Estimate,
    pub window_bounds: (f64, f64),
    /// Paths that end before the window does and are left out.
    pub n_excluded: usize,
}

/// Mean of `(W_{t+Δ} − W_t)/Δ` over the ensemble on `n_bins` bins of `window`.
pub fn estimate_drift(paths: &[DrivingPath], window: (f64, f64), n_bins: usize) -> Result<DriftEstimate, ZipperError> {
    let (t0, t1) = window;
    if !(t1 > t0) || t0 < 0.0 {
        return Err(ZipperError::InvalidCurve(format!("invalid drift window [{t0}, {t1}]")));
    }
    let usable: Vec<&DrivingPath> = paths.iter().filter(|p| p.final_time() >= t1 * (1.0 - 1e-12)).collect();
    if usable.len() < MIN_ENSEMBLE {
        return Err(ZipperError::InsufficientEnsemble { got: usable.len(), need: MIN_ENSEMBLE });
    }
    let n_bins = n_bins.max(1);
    let h = (t1 - t0) / n_bins as f64;
    let mut times = Vec::with_capacity(n_bins);
    let mut rates = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let a = t0 + h * b as f64;
        let r: Vec<f64> = usable.iter().map(|p| (p.value_at(a + h) - p.value_at(a)) / h).collect();
        times.push(a);
        rates.push(stats::mean_estimate(&r));
    }
    let whole: Vec<f64> = usable.iter().map(|p| (p.value_at(t1) - p.value_at(t0)) / (t1 - t0)).collect();
    Ok(DriftEstimate {
        times,
        rates,
        window: stats::mean_estimate(&whole),
        window_bounds: window,
        n_excluded: paths.len() - usable.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loewner::compute_trace;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vertical_segment_gives_zero_driving() {
        let n = 400;
        let pts: Vec<Complex64> = (0..=n).map(|k| c(0.0, 2.0 * (k as f64 / n as f64).sqrt())).collect();
        let path = extract_driving(&CurveInput::new(pts).unwrap()).unwrap();
        assert!(path.values().iter().all(|w| w.abs() < 1e-12));
        assert!((path.final_time() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn exact_inverse_of_forward_trace() {
        let vals: Vec<f64> = (0..=300).map(|i| (i as f64 * 0.05).sin() * 0.3).collect();
        let path = DrivingPath::uniform(1.0, vals).unwrap();
        let trace = compute_trace(&path).unwrap();
        let back = extract_driving_with(&CurveInput::from_trace(&trace).unwrap(), &ZipperConfig { n_min: 0, ..Default::default() }).unwrap();
        assert_eq!(back.len(), path.len());
        for (a, b) in back.values().iter().zip(path.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in back.times().iter().zip(path.times()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_commutes_with_extraction() {
        let pts = vec![c(0.0, 0.0), c(0.1, 0.3), c(0.3, 0.5), c(0.2, 0.9), c(-0.1, 1.2)];
        let curve = CurveInput::new(pts).unwrap();
        let cfg = ZipperConfig { n_min: 0, ..Default::default() };
        let a = extract_driving_with(&curve, &cfg).unwrap();
        let sigma = 3.0;
        let b = extract_driving_with(&curve.scaled(sigma), &cfg).unwrap();
        for i in 0..a.len() {
            assert!((b.values()[i] - sigma * a.values()[i]).abs() < 1e-12);
            assert!((b.times()[i] - sigma * sigma * a.times()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_bounds_step_capacity() {
        let pts = vec![c(0.0, 0.0), c(0.0, 0.1), c(0.5, 2.0)];
        let curve = CurveInput::new(pts).unwrap();
        let cfg = ZipperConfig { n_min: 20, max_refinements: 12 };
        let path = extract_driving_with(&curve, &cfg).unwrap();
        let total = path.final_time();
        let max_dt = path.times().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(max_dt <= total / 20.0 * 1.0001, "max dt {max_dt}, total {total}");
    }

    #[test]
    fn invalid_curves() {
        assert!(CurveInput::new(vec![c(0.0, 0.0)]).is_err());
        assert!(CurveInput::new(vec![c(1.0, 0.0), c(1.0, 1.0)]).is_err());
        assert!(CurveInput::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).is_err());
        // Doubling back along the same vertical line collapses onto the slit.
        let back = CurveInput::new(vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, 2.0), c(0.0, 0.5)]).unwrap();
        assert!(matches!(extract_driving(&back), Err(ZipperError::DegenerateStep { .. })));
    }

    #[test]
    fn simplicity_check() {
        let simple = CurveInput::new(vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 1.0), c(1.0, 2.0)]).unwrap();
        assert!(simple.is_simple());
        let crossing = CurveInput::new(vec![c(0.0, 0.0), c(0.0, 2.0), c(1.0, 2.0), c(1.0, 1.0), c(-1.0, 1.0)]).unwrap();
        assert!(!crossing.is_simple());
    }

    #[test]
    fn decimation_keeps_endpoints() {
        let pts: Vec<Complex64> = (0..8).map(|k| c(0.0, k as f64 + if k == 0 { 0.0 } else { 0.5 })).collect();
        let d = midpoint_decimate(&CurveInput::new(pts.clone()).unwrap());
        assert_eq!(d.points()[0], c(0.0, 0.0));
        assert_eq!(*d.points().last().unwrap(), *pts.last().unwrap());
        assert!(d.len() < pts.len());
    }

    #[test]
    fn zero_ensemble_has_zero_kappa() {
        let paths = vec![DrivingPath::constant(1.0, 20, 0.0); 40];
        let est = estimate_kappa(&paths, GridSpec::default(), 50, 1).unwrap();
        assert_eq!(est.kappa, 0.0);
        assert!(matches!(
            estimate_kappa(&paths[..10], GridSpec::default(), 50, 1),
            Err(ZipperError::InsufficientEnsemble { got: 10, need: 30 })
        ));
    }
}
