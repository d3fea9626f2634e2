//! End-to-end pipelines: GFF sample → level line → driving function → estimates.
//!
//! Every run is a pure function of its configuration. Samples are processed in
//! parallel on per-sample noise substreams, results are collected in sample
//! order, and all reductions happen afterwards in a fixed order, so a report is
//! byte-identical across reruns and thread counts.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cft::{parse_rational, rho_coefficients, ChargeConfig};
use crate::error::{Error, Result};
use crate::gff::{lambda_star, BoundaryData, Calibration, FieldSample, GffSampler, LatticeDomain};
use crate::levelline::{
    aggregate_jump, default_level, extract_level_line, line_jump_profile, LevelLine, DEFAULT_PROBES, DEFAULT_WAYPOINTS,
};
use crate::loewner::DrivingPath;
use crate::stats::Estimate;
use crate::zipper::{estimate_drift, estimate_kappa, extract_driving, midpoint_decimate, GridSpec};

pub const MIN_RADIUS: usize = 64;
pub const MAX_FAILURE_RATE: f64 = 0.05;
/// Drift window as a fraction of the median total capacity.
pub const DRIFT_WINDOW_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

impl NamedEstimate {
    fn new(name: impl Into<String>, e: Estimate) -> Self {
        Self { name: name.into(), value: e.value, stderr: e.stderr, n: e.n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceCheck {
    pub name: String,
    pub pass: bool,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: String,
    /// Exploratory checks are reported but do not fail the report.
    pub exploratory: bool,
}

/// Data behind a plot: `y ± yerr` against `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub yerr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub code_version: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub exploratory: bool,
    pub parameters: serde_json::Value,
    pub estimates: Vec<NamedEstimate>,
    pub checks: Vec<ToleranceCheck>,
    pub series: Vec<Series>,
    pub n_samples: usize,
    pub n_failed: usize,
    pub failures: Vec<String>,
    pub degenerate: bool,
    pub notes: Vec<String>,
    pub pass: bool,
    pub provenance: Provenance,
}

impl ExperimentReport {
    fn new<C: Serialize>(experiment: &str, config: &C) -> Self {
        let parameters = serde_json::to_value(config).expect("config serializes");
        Self {
            experiment: experiment.into(),
            exploratory: false,
            provenance: Provenance { code_version: env!("CARGO_PKG_VERSION").into(), config_hash: config_hash(config) },
            parameters,
            estimates: Vec::new(),
            checks: Vec::new(),
            series: Vec::new(),
            n_samples: 0,
            n_failed: 0,
            failures: Vec::new(),
            degenerate: false,
            notes: Vec::new(),
            pass: true,
        }
    }

    pub fn estimate(&self, name: &str) -> Option<&NamedEstimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&ToleranceCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push_check(&mut self, check: ToleranceCheck) {
        if !check.exploratory {
            self.pass &= check.pass;
        }
        self.checks.push(check);
    }

    fn record_failures(&mut self, n_samples: usize, failures: Vec<String>) {
        self.n_samples = n_samples;
        self.n_failed = failures.len();
        let rate = self.n_failed as f64 / n_samples.max(1) as f64;
        self.push_check(ToleranceCheck {
            name: "failure_rate".into(),
            pass: rate <= MAX_FAILURE_RATE,
            observed: rate,
            expected: 0.0,
            tolerance: format!("<= {MAX_FAILURE_RATE}"),
            exploratory: false,
        });
        self.failures = failures;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// SHA-256 of the compact JSON form of a configuration.
pub fn config_hash<C: Serialize>(config: &C) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn band_check(name: &str, est: f64, lo: f64, hi: f64, exploratory: bool) -> ToleranceCheck {
    ToleranceCheck {
        name: name.into(),
        pass: est >= lo && est <= hi,
        observed: est,
        expected: 0.5 * (lo + hi),
        tolerance: format!("in [{lo}, {hi}]"),
        exploratory,
    }
}

fn sigma_check(name: &str, est: &Estimate, target: f64, n_sigma: f64, exploratory: bool) -> ToleranceCheck {
    ToleranceCheck {
        name: name.into(),
        pass: est.within(target, n_sigma),
        observed: est.value,
        expected: target,
        tolerance: format!("within {n_sigma} stderr ({:.4})", est.stderr),
        exploratory,
    }
}

/// Everything one sample produces on its way to a driving function.
pub struct LevelLineSample {
    pub field: FieldSample,
    pub line: LevelLine,
    pub driving: DrivingPath,
}

/// Sample → level line at the midpoint level → curve truncated at `R/2` and
/// rescaled by `4/R` → one midpoint decimation → zipper.
pub fn levelline_driving(sampler: &GffSampler, seed: u64, index: u64) -> Result<LevelLineSample> {
    let field = sampler.sample(seed, index);
    let values = field.total();
    let line = extract_level_line(&sampler.domain, &field, default_level(&sampler.domain, &values))?;
    let curve = midpoint_decimate(&line.curve_input()?);
    let driving = extract_driving(&curve)?;
    Ok(LevelLineSample { field, line, driving })
}

fn check_radius(radius: usize) -> Result<()> {
    if radius < MIN_RADIUS {
        return Err(Error::Experiment(format!("radius {radius} below the minimum {MIN_RADIUS}")));
    }
    Ok(())
}

fn check_samples(n: usize) -> Result<()> {
    if n < crate::zipper::MIN_ENSEMBLE {
        return Err(Error::Experiment(format!("{n} samples, need at least {}", crate::zipper::MIN_ENSEMBLE)));
    }
    Ok(())
}

fn calibrated_domain(radius: usize, g: f64) -> Result<(Arc<LatticeDomain>, Calibration)> {
    let dom = LatticeDomain::new(radius)?;
    let cal = dom.calibrate(g)?;
    Ok((Arc::new(dom), cal))
}

fn run_paths(sampler: &GffSampler, n: usize, seed: u64) -> (Vec<DrivingPath>, Vec<String>) {
    let results: Vec<Result<DrivingPath>> =
        (0..n as u64).into_par_iter().map(|i| levelline_driving(sampler, seed, i).map(|s| s.driving)).collect();
    let mut paths = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => paths.push(p),
            Err(e) => failures.push(format!("sample {i}: {e}")),
        }
    }
    (paths, failures)
}

fn kappa_series(k: &crate::zipper::KappaEstimate) -> Vec<Series> {
    vec![
        Series {
            name: "variance_vs_time".into(),
            x: k.mean_time.clone(),
            y: k.variance.clone(),
            yerr: vec![0.0; k.variance.len()],
        },
        Series {
            name: "variance_fit".into(),
            x: k.mean_time.clone(),
            y: k.mean_time.iter().map(|t| k.kappa * t).collect(),
            yerr: vec![0.0; k.mean_time.len()],
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelLineKappaConfig {
    /// Boundary jump in units of `λ*(g)`.
    pub q: f64,
    pub g: f64,
    pub radius: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub kappa_band: (f64, f64),
    pub n_boot: usize,
    /// Set to false to use the harmonic part alone.
    pub fluctuations: bool,
}

impl Default for LevelLineKappaConfig {
    fn default() -> Self {
        Self { q: 1.0, g: 1.0, radius: 128, n_samples: 500, seed: 1, kappa_band: (3.5, 4.5), n_boot: 200, fluctuations: true }
    }
}

/// κ̂ of level-line driving functions for a single boundary jump `q·λ*` at 0,
/// plus their short-time drift.
pub fn run_levelline_kappa_experiment(cfg: &LevelLineKappaConfig) -> Result<ExperimentReport> {
    check_radius(cfg.radius)?;
    check_samples(cfg.n_samples)?;
    if !(cfg.q > 0.0 && cfg.q <= 2.0) {
        return Err(Error::Experiment(format!("q = {} outside (0, 2]", cfg.q)));
    }
    let mut report = ExperimentReport::new("levelline-kappa", cfg);
    report.exploratory = cfg.q != 1.0;
    let (dom, cal) = calibrated_domain(cfg.radius, cfg.g)?;
    let kappa_lat = if cfg.fluctuations { cal.kappa_lat } else { 0.0 };
    let sampler = GffSampler::new(dom, BoundaryData::single(cfg.q, cfg.g)?, kappa_lat)?;
    let (paths, failures) = run_paths(&sampler, cfg.n_samples, cfg.seed);
    report.record_failures(cfg.n_samples, failures);
    report.estimates.push(NamedEstimate {
        name: "kappa_lat".into(),
        value: cal.kappa_lat,
        stderr: cal.fit_residual * cal.kappa_lat,
        n: cal.n_pairs,
    });

    let mut k = estimate_kappa(&paths, GridSpec::default(), cfg.n_boot, cfg.seed)?;
    report.degenerate = paths.windows(2).all(|w| w[0] == w[1]);
    if report.degenerate {
        // Identical paths leave only rounding noise in the variances.
        k.kappa = 0.0;
        k.stderr = 0.0;
        k.variance.iter_mut().for_each(|v| *v = 0.0);
        report.notes.push("all driving functions coincide; κ̂ is zero by construction".into());
    }
    report.estimates.push(NamedEstimate { name: "kappa".into(), value: k.kappa, stderr: k.stderr, n: k.n_paths });
    let (lo, hi) = cfg.kappa_band;
    report.push_check(band_check("kappa_band", k.kappa, lo, hi, report.exploratory || report.degenerate));

    let t_med = *k.grid.last().expect("grid is nonempty");
    let window = (0.0, DRIFT_WINDOW_FRACTION * t_med);
    let d = estimate_drift(&paths, window, 1)?;
    report.estimates.push(NamedEstimate::new("initial_drift", d.window));
    report.push_check(sigma_check("drift_zero", &d.window, 0.0, 3.0, report.exploratory || report.degenerate));
    report.notes.push(format!(
        "drift window [0, {:.5}] = {DRIFT_WINDOW_FRACTION} of the median capacity {t_med:.5}; {} paths shorter than the window excluded",
        window.1, d.n_excluded
    ));
    report.series.extend(kappa_series(&k));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftConsistencyConfig {
    /// Charge at the origin, as a rational string such as `"1/2"`.
    pub q: String,
    /// Spectator `(x_j, q_j)` pairs as rational strings. Positions are in
    /// curve units, where the truncation radius `R/2` is 2, so `x_j` sits at
    /// `x_j·R/4` lattice units.
    pub spectators: Vec<(String, String)>,
    pub g: f64,
    pub radius: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for DriftConsistencyConfig {
    fn default() -> Self {
        Self {
            q: "1/2".into(),
            spectators: vec![("2".into(), "1".into())],
            g: 1.0,
            radius: 128,
            n_samples: 500,
            seed: 1,
        }
    }
}

/// Short-time drift of level-line driving functions against `−Σ ρ_j/x_j`.
pub fn run_drift_consistency_experiment(cfg: &DriftConsistencyConfig) -> Result<ExperimentReport> {
    check_radius(cfg.radius)?;
    check_samples(cfg.n_samples)?;
    let qi = parse_rational(&cfg.q)?;
    let mut charges = vec![qi.clone()];
    let mut positions = vec![parse_rational("0")?];
    for (x, qj) in &cfg.spectators {
        let x = parse_rational(x)?;
        if x == positions[0] {
            return Err(Error::Experiment("spectator placed at the origin".into()));
        }
        positions.push(x);
        charges.push(parse_rational(qj)?);
    }
    let charge_cfg = ChargeConfig::new(charges.clone(), positions.clone())?;
    let rho = rho_coefficients(&charge_cfg, 0)?;
    let f = |v: &crate::cft::Q| v.to_f64().unwrap_or(f64::NAN);
    let predicted: f64 = rho.iter().zip(&positions).skip(1).map(|(r, x)| -f(r) / f(x)).sum();

    let mut report = ExperimentReport::new("drift-consistency", cfg);
    report.exploratory = f(&qi) != 1.0;
    let (dom, cal) = calibrated_domain(cfg.radius, cfg.g)?;
    let ls = lambda_star(cfg.g);
    let scale = cfg.radius as f64 / 4.0;
    let jumps = charges.iter().zip(&positions).map(|(q, x)| (f(x) * scale, f(q) * ls)).collect();
    let sampler = GffSampler::new(dom, BoundaryData::new(jumps, cfg.g)?, cal.kappa_lat)?;
    let (paths, failures) = run_paths(&sampler, cfg.n_samples, cfg.seed);
    report.record_failures(cfg.n_samples, failures);

    let k = estimate_kappa(&paths, GridSpec::default(), 0, cfg.seed)?;
    let t_med = *k.grid.last().expect("grid is nonempty");
    let window = (0.0, DRIFT_WINDOW_FRACTION * t_med);
    let d = estimate_drift(&paths, window, 1)?;
    report.estimates.push(NamedEstimate::new("initial_drift", d.window));
    report.estimates.push(NamedEstimate { name: "predicted_drift".into(), value: predicted, stderr: 0.0, n: 0 });
    report.push_check(sigma_check("drift_matches_prediction", &d.window, predicted, 3.0, report.exploratory));
    report.notes.push(format!(
        "rho = [{}]; drift window [0, {:.5}]; {} paths shorter than the window excluded",
        rho.iter().skip(1).map(ToString::to_string).collect::<Vec<_>>().join(", "),
        window.1,
        d.n_excluded
    ));
    let bins = estimate_drift(&paths, (0.0, 0.5 * t_med), 10)?;
    report.series.push(Series {
        name: "drift_vs_time".into(),
        x: bins.times.clone(),
        y: bins.rates.iter().map(|e| e.value).collect(),
        yerr: bins.rates.iter().map(|e| e.stderr).collect(),
    });
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpUniversalityConfig {
    pub q_list: Vec<f64>,
    pub radii: Vec<usize>,
    pub g: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub probes: Vec<f64>,
    pub n_waypoints: usize,
    /// Relative band around `λ*` for the `q = 1` check.
    pub tolerance: f64,
}

impl Default for JumpUniversalityConfig {
    fn default() -> Self {
        Self {
            q_list: vec![1.0, 0.5],
            radii: vec![64, 128],
            g: 1.0,
            n_samples: 200,
            seed: 1,
            probes: DEFAULT_PROBES.to_vec(),
            n_waypoints: DEFAULT_WAYPOINTS,
            tolerance: 0.15,
        }
    }
}

fn jump_for(dom: &Arc<LatticeDomain>, kappa_lat: f64, q: f64, cfg: &JumpUniversalityConfig) -> Result<(crate::levelline::JumpMeasurement, Vec<String>)> {
    let sampler = GffSampler::new(Arc::clone(dom), BoundaryData::single(q, cfg.g)?, kappa_lat)?;
    let results: Vec<Result<(Vec<Option<f64>>, usize)>> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let field = sampler.sample(cfg.seed, i);
            let values = field.total();
            let line = extract_level_line(dom, &field, default_level(dom, &values))?;
            Ok(line_jump_profile(dom, &values, &line, &cfg.probes, cfg.n_waypoints)?)
        })
        .collect();
    let mut per_line = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => per_line.push(p),
            Err(e) => failures.push(format!("q = {q}, R = {}, sample {i}: {e}", dom.radius())),
        }
    }
    Ok((aggregate_jump(&cfg.probes, &per_line, cfg.n_waypoints)?, failures))
}

/// Jump `Δφ/2π` across level lines at each `(q, R)`, compared with `λ*`.
/// The headline value uses the smallest probe distance.
pub fn run_jump_universality_experiment(cfg: &JumpUniversalityConfig) -> Result<ExperimentReport> {
    if cfg.radii.len() < 2 {
        return Err(Error::Experiment("need at least two radii for a trend".into()));
    }
    for &r in &cfg.radii {
        check_radius(r)?;
    }
    check_samples(cfg.n_samples)?;
    if let Some(q) = cfg.q_list.iter().find(|q| !(**q > 0.0 && **q < 2.0)) {
        return Err(Error::Experiment(format!("q = {q} outside (0, 2)")));
    }
    if cfg.probes.is_empty() {
        return Err(Error::Experiment("no probe distances".into()));
    }
    let mut report = ExperimentReport::new("jump-universality", cfg);
    report.exploratory = true;
    let ls = lambda_star(cfg.g);
    let mut all_failures = Vec::new();
    let mut largest: BTreeMap<String, Estimate> = BTreeMap::new();
    let r_max = *cfg.radii.iter().max().expect("radii nonempty");
    for &r in &cfg.radii {
        let (dom, cal) = calibrated_domain(r, cfg.g)?;
        for &q in &cfg.q_list {
            let (m, failures) = jump_for(&dom, cal.kappa_lat, q, cfg)?;
            all_failures.extend(failures);
            let to_units = |e: &Estimate| Estimate { value: e.value / (2.0 * PI), stderr: e.stderr / (2.0 * PI), n: e.n };
            let head = to_units(&m.jump);
            report.estimates.push(NamedEstimate::new(format!("jump_over_2pi[q={q},R={r}]"), head));
            // The other convention for the bulk jump, Δφ/π.
            report.estimates.push(NamedEstimate::new(
                format!("jump_over_pi[q={q},R={r}]"),
                Estimate { value: 2.0 * head.value, stderr: 2.0 * head.stderr, n: head.n },
            ));
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                m.profile.iter().filter(|p| p.delta <= 4.0).map(|p| (p.delta, p.jump.value / (2.0 * PI))).unzip();
            if xs.len() >= 2 {
                let (intercept, _) = crate::stats::linear_fit(&xs, &ys);
                report.notes.push(format!("q = {q}, R = {r}: linear extrapolation of Δφ/2π to δ = 0 gives {intercept:.4}"));
            }
            report.series.push(Series {
                name: format!("jump_profile[q={q},R={r}]"),
                x: m.profile.iter().map(|p| p.delta).collect(),
                y: m.profile.iter().map(|p| p.jump.value / (2.0 * PI)).collect(),
                yerr: m.profile.iter().map(|p| p.jump.stderr / (2.0 * PI)).collect(),
            });
            report.notes.push(format!("q = {q}, R = {r}: {} probe pairs excluded near the boundary", m.n_excluded));
            if r == r_max {
                largest.insert(format!("{q}"), head);
            }
        }
    }
    report.record_failures(cfg.n_samples * cfg.radii.len() * cfg.q_list.len(), all_failures);
    report.estimates.push(NamedEstimate { name: "lambda_star".into(), value: ls, stderr: 0.0, n: 0 });
    // Both conventions for the bulk jump: Δφ/2π and Δφ/π.
    for (suffix, factor) in [("2pi", 1.0), ("pi", 2.0)] {
        if let Some(e) = largest.get("1") {
            let v = factor * e.value;
            let (lo, hi) = (ls * (1.0 - cfg.tolerance), ls * (1.0 + cfg.tolerance));
            report.push_check(band_check(&format!("unit_charge_jump_{suffix}"), v, lo, hi, true));
        }
        for (q, e) in &largest {
            let qv: f64 = q.parse().expect("formatted from f64");
            if qv == 1.0 {
                continue;
            }
            let v = factor * e.value;
            report.push_check(ToleranceCheck {
                name: format!("universality_{suffix}[q={q}]"),
                pass: (v - ls).abs() < (v - qv * ls).abs(),
                observed: v,
                expected: ls,
                tolerance: format!("closer to λ* = {ls} than to qλ* = {}", qv * ls),
                exploratory: true,
            });
        }
    }
    Ok(report)
}
