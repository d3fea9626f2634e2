//! Discrete Gaussian free field on a triangular-lattice half-disk.
//!
//! Sites sit at `x = i + (j+1)/2`, `y = j√3/2` for integer `i` and `j ≥ 0`,
//! so row 0 lies on the real axis at half-integers and no site sits on a
//! jump at an integer position. The domain keeps the sites with `|z| ≤ R`.
//! Row 0 and every site with a neighbour outside the domain form the
//! Dirichlet boundary.
//!
//! The interior graph Laplacian `L = 6I − A` is factored once by a profile
//! (skyline) Cholesky in row-major site order, whose bandwidth is about one
//! lattice row. Samples are `√κ_lat · L⁻ᵀ z` for white noise `z`, giving
//! covariance `κ_lat · L⁻¹`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{substream, Purpose};

pub const MIN_CALIBRATION_RADIUS: usize = 32;
const HARMONIC_TOL: f64 = 1e-10;
const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GffError {
    #[error("radius {0} too small")]
    RadiusTooSmall(usize),
    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),
    #[error("point {z} coincides with a boundary jump")]
    Singular { z: Complex64 },
    #[error("Laplacian not positive definite at interior row {row}")]
    Factorization { row: usize },
    #[error("harmonic solve residual {residual:e} exceeds tolerance")]
    Solver { residual: f64 },
    #[error("calibration fit residual {residual:.3} exceeds 5%")]
    CalibrationFit { residual: f64 },
    #[error("value vector has length {got}, domain has {sites} sites")]
    SizeMismatch { got: usize, sites: usize },
}

/// `λ* = (4g)^{−1/2}`.
pub fn lambda_star(g: f64) -> f64 {
    1.0 / (4.0 * g).sqrt()
}

/// Triangular-lattice constant expected from the continuum limit,
/// `κ_lat = 2π√3 / g`. The calibrated value is what sampling uses.
pub fn theoretical_kappa_lat(g: f64) -> f64 {
    2.0 * PI * 3f64.sqrt() / g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteKind {
    Interior,
    RealAxis,
    OuterArc,
}

/// Offsets `(di, dj)` of the six neighbours.
pub const NEIGHBOURS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

pub fn site_position(i: i32, j: i32) -> Complex64 {
    Complex64::new(i as f64 + 0.5 * (j + 1) as f64, j as f64 * SQRT3_2)
}

fn inside(radius: usize, i: i32, j: i32) -> bool {
    // 4|z|² = (2i + j + 1)² + 3j², exact in integers.
    let (i, j, r) = (i as i64, j as i64, radius as i64);
    j >= 0 && (2 * i + j + 1).pow(2) + 3 * j * j <= 4 * r * r
}

/// Profile Cholesky factor: row `r` stores `L[r, first[r]..=r]`.
#[derive(Debug, Clone)]
pub struct Skyline {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl Skyline {
    /// Factors the symmetric positive definite matrix given by `entry(r, c)`
    /// for `first[r] ≤ c ≤ r`.
    pub fn factor(first: Vec<usize>, entry: impl Fn(usize, usize) -> f64) -> Result<Self, GffError> {
        let n = first.len();
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for r in 0..n {
            start.push(start[r] + r - first[r] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for r in 0..n {
            let fr = first[r];
            for c in fr..=r {
                let k0 = fr.max(first[c]);
                let row_r = &data[start[r] + (k0 - fr)..start[r] + (c - fr)];
                let row_c = &data[start[c] + (k0 - first[c])..start[c] + (c - first[c])];
                let dot: f64 = row_r.iter().zip(row_c).map(|(a, b)| a * b).sum();
                let s = entry(r, c) - dot;
                let v = if c < r {
                    s / data[start[c + 1] - 1]
                } else {
                    if s <= 0.0 {
                        return Err(GffError::Factorization { row: r });
                    }
                    s.sqrt()
                };
                data[start[r] + (c - fr)] = v;
            }
        }
        Ok(Self { first, start: start[..n + 1].to_vec(), data })
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[self.start[r]..self.start[r + 1]]
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower(&self, b: &mut [f64]) {
        for r in 0..self.len() {
            let row = self.row(r);
            let fr = self.first[r];
            let dot: f64 = row[..row.len() - 1].iter().zip(&b[fr..r]).map(|(a, y)| a * y).sum();
            b[r] = (b[r] - dot) / row[row.len() - 1];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn solve_upper(&self, y: &mut [f64]) {
        for r in (0..self.len()).rev() {
            let row = self.row(r);
            let fr = self.first[r];
            y[r] /= row[row.len() - 1];
            let xr = y[r];
            for (k, l) in row[..row.len() - 1].iter().enumerate() {
                y[fr + k] -= l * xr;
            }
        }
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.solve_lower(b);
        self.solve_upper(b);
    }

    /// Number of stored entries, a measure of fill.
    pub fn stored(&self) -> usize {
        self.data.len()
    }
}

/// Triangular-lattice half-disk with a cached Laplacian factorization.
#[derive(Debug, Clone)]
pub struct LatticeDomain {
    radius: usize,
    coords: Vec<(i32, i32)>,
    positions: Vec<Complex64>,
    kinds: Vec<SiteKind>,
    /// Per row `j`: smallest `i` and the id of that site.
    rows: Vec<(i32, usize, usize)>,
    neighbours: Vec<[Option<usize>; 6]>,
    /// Site id → interior index, or `usize::MAX` on the boundary.
    interior_index: Vec<usize>,
    interior: Vec<usize>,
    factor: Arc<Skyline>,
}

impl LatticeDomain {
    pub fn new(radius: usize) -> Result<Self, GffError> {
        if radius < 2 {
            return Err(GffError::RadiusTooSmall(radius));
        }
        let mut coords = Vec::new();
        let mut rows = Vec::new();
        let jmax = ((radius as f64) / SQRT3_2).floor() as i32;
        for j in 0..=jmax {
            let half = radius as i32 + 2;
            let row: Vec<i32> = (-half - j..=half).filter(|&i| inside(radius, i, j)).collect();
            if row.is_empty() {
                break;
            }
            rows.push((row[0], row.len(), coords.len()));
            coords.extend(row.iter().map(|&i| (i, j)));
        }
        let mut dom = Self {
            radius,
            positions: coords.iter().map(|&(i, j)| site_position(i, j)).collect(),
            kinds: Vec::new(),
            rows,
            neighbours: Vec::new(),
            interior_index: Vec::new(),
            interior: Vec::new(),
            factor: Arc::new(Skyline { first: vec![], start: vec![0], data: vec![] }),
            coords,
        };
        dom.neighbours = dom
            .coords
            .iter()
            .map(|&(i, j)| {
                let mut nb = [None; 6];
                for (slot, (di, dj)) in nb.iter_mut().zip(NEIGHBOURS) {
                    *slot = dom.site_index(i + di, j + dj);
                }
                nb
            })
            .collect();
        dom.kinds = dom
            .coords
            .iter()
            .zip(&dom.neighbours)
            .map(|(&(_, j), nb)| {
                if j == 0 {
                    SiteKind::RealAxis
                } else if nb.iter().any(Option::is_none) {
                    SiteKind::OuterArc
                } else {
                    SiteKind::Interior
                }
            })
            .collect();
        dom.interior_index = vec![usize::MAX; dom.coords.len()];
        for (s, k) in dom.kinds.iter().enumerate() {
            if *k == SiteKind::Interior {
                dom.interior_index[s] = dom.interior.len();
                dom.interior.push(s);
            }
        }
        dom.factor = Arc::new(dom.factor_laplacian()?);
        Ok(dom)
    }

    fn factor_laplacian(&self) -> Result<Skyline, GffError> {
        let first: Vec<usize> = self
            .interior
            .iter()
            .enumerate()
            .map(|(r, &s)| {
                self.neighbours[s]
                    .iter()
                    .flatten()
                    .map(|&t| self.interior_index[t])
                    .filter(|&c| c != usize::MAX)
                    .fold(r, usize::min)
            })
            .collect();
        Skyline::factor(first, |r, c| {
            if r == c {
                6.0
            } else {
                let s = self.interior[r];
                let t = self.interior[c];
                if self.neighbours[s].contains(&Some(t)) {
                    -1.0
                } else {
                    0.0
                }
            }
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn position(&self, site: usize) -> Complex64 {
        self.positions[site]
    }

    pub fn positions(&self) -> &[Complex64] {
        &self.positions
    }

    pub fn coords(&self, site: usize) -> (i32, i32) {
        self.coords[site]
    }

    pub fn kind(&self, site: usize) -> SiteKind {
        self.kinds[site]
    }

    pub fn is_interior(&self, site: usize) -> bool {
        self.kinds[site] == SiteKind::Interior
    }

    pub fn neighbours(&self, site: usize) -> &[Option<usize>; 6] {
        &self.neighbours[site]
    }

    pub fn interior_sites(&self) -> &[usize] {
        &self.interior
    }

    pub fn factor(&self) -> &Skyline {
        &self.factor
    }

    pub fn site_index(&self, i: i32, j: i32) -> Option<usize> {
        if j < 0 {
            return None;
        }
        let &(imin, count, offset) = self.rows.get(j as usize)?;
        let k = i - imin;
        (k >= 0 && (k as usize) < count).then(|| offset + k as usize)
    }

    /// Site nearest to `z`, if that site belongs to the domain.
    pub fn nearest_site(&self, z: Complex64) -> Option<usize> {
        let j0 = (z.im / SQRT3_2).round() as i32;
        let mut best: Option<(f64, i32, i32)> = None;
        for j in (j0 - 1)..=(j0 + 1) {
            let i0 = (z.re - 0.5 * (j + 1) as f64).round() as i32;
            for i in (i0 - 1)..=(i0 + 1) {
                let d = (site_position(i, j) - z).norm_sqr();
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        best.and_then(|(_, i, j)| self.site_index(i, j))
    }

    /// Solves `L x = e_site` for an interior site, returning `L⁻¹` column per site
    /// (zero on the boundary).
    pub fn green_column(&self, site: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.n_interior()];
        let r = self.interior_index[site];
        assert!(r != usize::MAX, "site {site} is not interior");
        b[r] = 1.0;
        self.factor.solve(&mut b);
        self.scatter(&b)
    }

    fn scatter(&self, interior_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (&s, v) in self.interior.iter().zip(interior_values) {
            out[s] = *v;
        }
        out
    }

    /// Largest `|6φ_s − Σ φ_nbr|` over interior sites.
    pub fn harmonic_residual(&self, values: &[f64]) -> f64 {
        self.interior
            .iter()
            .map(|&s| {
                let sum: f64 = self.neighbours[s].iter().flatten().map(|&t| values[t]).sum();
                (6.0 * values[s] - sum).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Jumps `2πλ_j` at `x_j` and the coupling `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub jumps: Vec<(f64, f64)>,
    pub g: f64,
}

impl BoundaryData {
    pub fn new(jumps: Vec<(f64, f64)>, g: f64) -> Result<Self, GffError> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(GffError::InvalidBoundary(format!("coupling g = {g} must be positive")));
        }
        for (a, &(xa, la)) in jumps.iter().enumerate() {
            if !xa.is_finite() || !la.is_finite() {
                return Err(GffError::InvalidBoundary(format!("jump {a} is not finite")));
            }
            if jumps[..a].iter().any(|&(xb, _)| xb == xa) {
                return Err(GffError::InvalidBoundary(format!("duplicate jump position {xa}")));
            }
        }
        Ok(Self { jumps, g })
    }

    /// Single jump `λ = q·λ*(g)` at the origin.
    pub fn single(q: f64, g: f64) -> Result<Self, GffError> {
        Self::new(vec![(0.0, q * lambda_star(g))], g)
    }

    /// Same data with the jump positions multiplied by `factor`.
    pub fn scaled_positions(&self, factor: f64) -> Self {
        Self { jumps: self.jumps.iter().map(|&(x, l)| (x * factor, l)).collect(), g: self.g }
    }
}

/// `φ_c(z) = −2 Σ_j λ_j arg(z − x_j)`.
pub fn continuum_harmonic(z: Complex64, bc: &BoundaryData) -> Result<f64, GffError> {
    let mut phi = 0.0;
    for &(x, lambda) in &bc.jumps {
        let d = z - x;
        if d.norm() == 0.0 {
            return Err(GffError::Singular { z });
        }
        // atan2(+0, negative) = π, so the real axis left of x_j gets −2πλ.
        phi -= 2.0 * lambda * d.im.abs().atan2(d.re);
    }
    Ok(phi)
}

/// Discrete harmonic extension of the boundary values given by
/// [`continuum_harmonic`] on all boundary sites.
pub fn solve_harmonic_part(dom: &LatticeDomain, bc: &BoundaryData) -> Result<Vec<f64>, GffError> {
    let mut values = vec![0.0; dom.len()];
    for s in 0..dom.len() {
        if !dom.is_interior(s) {
            values[s] = continuum_harmonic(dom.position(s), bc)?;
        }
    }
    solve_with_boundary(dom, values)
}

/// Fills interior sites of `values` with the discrete harmonic extension of
/// its boundary entries.
pub fn solve_with_boundary(dom: &LatticeDomain, mut values: Vec<f64>) -> Result<Vec<f64>, GffError> {
    if values.len() != dom.len() {
        return Err(GffError::SizeMismatch { got: values.len(), sites: dom.len() });
    }
    for &s in dom.interior_sites() {
        values[s] = 0.0;
    }
    let rhs = |values: &[f64]| -> Vec<f64> {
        dom.interior_sites()
            .iter()
            .map(|&s| {
                let sum: f64 = dom.neighbours(s).iter().flatten().map(|&t| values[t]).sum();
                sum - 6.0 * values[s]
            })
            .collect()
    };
    // Direct solve, then refinement sweeps if needed.
    for _ in 0..3 {
        let mut r = rhs(&values);
        dom.factor().solve(&mut r);
        for (&s, dx) in dom.interior_sites().iter().zip(&r) {
            values[s] += dx;
        }
        if dom.harmonic_residual(&values) < HARMONIC_TOL {
            return Ok(values);
        }
    }
    Err(GffError::Solver { residual: dom.harmonic_residual(&values) })
}

/// One sample `φ = φ_c + φ′`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub harmonic_part: Arc<Vec<f64>>,
    pub fluctuation: Vec<f64>,
}

impl FieldSample {
    pub fn value(&self, site: usize) -> f64 {
        self.harmonic_part[site] + self.fluctuation[site]
    }

    pub fn total(&self) -> Vec<f64> {
        self.harmonic_part.iter().zip(&self.fluctuation).map(|(a, b)| a + b).collect()
    }

    /// The sample with every value negated.
    pub fn negated(&self) -> Self {
        Self {
            harmonic_part: Arc::new(self.harmonic_part.iter().map(|v| -v).collect()),
            fluctuation: self.fluctuation.iter().map(|v| -v).collect(),
        }
    }

    /// A deterministic field (no fluctuation).
    pub fn deterministic(values: Vec<f64>) -> Self {
        let n = values.len();
        Self { harmonic_part: Arc::new(values), fluctuation: vec![0.0; n] }
    }
}

/// Zero-mean Gaussian field with covariance `κ_lat · L⁻¹`, zero on the boundary.
/// `index` selects the noise substream so ensembles can be drawn in parallel.
pub fn sample_fluctuation(dom: &LatticeDomain, kappa_lat: f64, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = substream(seed, Purpose::Field, index);
    let mut z: Vec<f64> = (0..dom.n_interior()).map(|_| StandardNormal.sample(&mut rng)).collect();
    dom.factor().solve_upper(&mut z);
    let scale = kappa_lat.sqrt();
    z.iter_mut().for_each(|v| *v *= scale);
    dom.scatter(&z)
}

/// Field sampler bundling a domain, boundary data and calibrated constant.
#[derive(Debug, Clone)]
pub struct GffSampler {
    pub domain: Arc<LatticeDomain>,
    pub boundary: BoundaryData,
    pub kappa_lat: f64,
    harmonic: Arc<Vec<f64>>,
}

impl GffSampler {
    pub fn new(domain: Arc<LatticeDomain>, boundary: BoundaryData, kappa_lat: f64) -> Result<Self, GffError> {
        let harmonic = Arc::new(solve_harmonic_part(&domain, &boundary)?);
        Ok(Self { domain, boundary, kappa_lat, harmonic })
    }

    pub fn harmonic_part(&self) -> &Arc<Vec<f64>> {
        &self.harmonic
    }

    pub fn sample(&self, seed: u64, index: u64) -> FieldSample {
        FieldSample {
            harmonic_part: Arc::clone(&self.harmonic),
            fluctuation: sample_fluctuation(&self.domain, self.kappa_lat, seed, index),
        }
    }

    /// Deterministic sample without fluctuation.
    pub fn mean_field(&self) -> FieldSample {
        FieldSample { harmonic_part: Arc::clone(&self.harmonic), fluctuation: vec![0.0; self.domain.len()] }
    }
}

/// Dirichlet Green's function of the radius-`R` half-disk for the action
/// `(g/4π)∫(∂φ)²`: `(1/g) ln(|z − w̄||R² − z w̄| / (|z − w||R² − z w|))`.
pub fn half_disk_green(z: Complex64, w: Complex64, radius: f64, g: f64) -> f64 {
    let r2 = Complex64::new(radius * radius, 0.0);
    let num = (z - w.conj()).norm() * (r2 - z * w.conj()).norm();
    let den = (z - w).norm() * (r2 - z * w).norm();
    (num / den).ln() / g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub kappa_lat: f64,
    pub g: f64,
    pub radius: usize,
    /// Relative L² residual of the fit on the training pairs.
    pub fit_residual: f64,
    /// Same on held-out pairs, using the fitted constant.
    pub held_out_residual: f64,
    pub n_pairs: usize,
}

fn calibration_sources(dom: &LatticeDomain) -> Vec<usize> {
    let r = dom.radius() as f64;
    [Complex64::new(0.0, 0.5), Complex64::new(0.3, 0.35), Complex64::new(-0.2, 0.3)]
        .iter()
        .filter_map(|&u| dom.nearest_site(u * r))
        .filter(|&s| dom.is_interior(s))
        .collect()
}

fn calibration_pairs(dom: &LatticeDomain, source: usize, g: f64) -> (Vec<f64>, Vec<f64>) {
    let r = dom.radius() as f64;
    let w = dom.position(source);
    let column = dom.green_column(source);
    let mut lattice = Vec::new();
    let mut continuum = Vec::new();
    for &s in dom.interior_sites() {
        let z = dom.position(s);
        if (z - w).norm() < 4.0 || z.norm() > r - 4.0 || z.im < 4.0 {
            continue;
        }
        lattice.push(column[s]);
        continuum.push(half_disk_green(z, w, r, g));
    }
    (lattice, continuum)
}

fn relative_residual(k: f64, lattice: &[f64], continuum: &[f64]) -> f64 {
    let num: f64 = lattice.iter().zip(continuum).map(|(a, b)| (k * a - b).powi(2)).sum();
    let den: f64 = continuum.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

impl LatticeDomain {
    /// Fits `κ_lat` so that `κ_lat · L⁻¹(z, w)` matches the continuum Green's
    /// function over site pairs at separation ≥ 4 away from the boundary.
    /// The first two source columns train the fit; the last is held out.
    pub fn calibrate(&self, g: f64) -> Result<Calibration, GffError> {
        if self.radius < MIN_CALIBRATION_RADIUS {
            return Err(GffError::RadiusTooSmall(self.radius));
        }
        if !(g > 0.0) {
            return Err(GffError::InvalidBoundary(format!("coupling g = {g} must be positive")));
        }
        let sources = calibration_sources(self);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = sources.par_iter().map(|&s| calibration_pairs(self, s, g)).collect();
        let (train, held) = pairs.split_at(pairs.len() - 1);
        let lat: Vec<f64> = train.iter().flat_map(|p| p.0.iter().copied()).collect();
        let con: Vec<f64> = train.iter().flat_map(|p| p.1.iter().copied()).collect();
        let kappa_lat = crate::stats::slope_through_origin(&lat, &con);
        let fit_residual = relative_residual(kappa_lat, &lat, &con);
        let held_out_residual = relative_residual(kappa_lat, &held[0].0, &held[0].1);
        if fit_residual > 0.05 {
            return Err(GffError::CalibrationFit { residual: fit_residual });
        }
        Ok(Calibration {
            kappa_lat,
            g,
            radius: self.radius,
            fit_residual,
            held_out_residual,
            n_pairs: lat.len() + held[0].0.len(),
        })
    }
}

/// Builds the radius-`R` domain and calibrates it.
pub fn calibrate_lattice_coupling(g: f64, radius: usize) -> Result<Calibration, GffError> {
    if radius < MIN_CALIBRATION_RADIUS {
        return Err(GffError::RadiusTooSmall(radius));
    }
    LatticeDomain::new(radius)?.calibrate(g)
}
