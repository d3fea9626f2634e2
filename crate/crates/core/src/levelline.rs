//! Level lines of lattice fields.
//!
//! The walk lives on the triangles of the lattice (the vertices of the dual
//! hexagonal lattice). It starts on the boundary edge between the row-0 sites
//! at `x = −½` and `x = +½`, and always crosses an edge with an "above" site
//! (`φ > φ₀`, ties counted as above) on one side and a "below" site on the
//! other. In each triangle the third vertex decides the exit edge uniquely.
//! The walk stops when the next triangle leaves the domain.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gff::{FieldSample, LatticeDomain};
use crate::stats::{mean, mean_estimate, Estimate};
use crate::zipper::{CurveInput, ZipperError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevelLineError {
    #[error("boundary values {left} and {right} at the origin do not straddle level {level}")]
    StartEdge { left: f64, right: f64, level: f64 },
    #[error("walk exceeded {cap} steps without reaching the boundary")]
    NonTermination { cap: usize },
    #[error("separation violated at step {step}")]
    Separation { step: usize },
    #[error("sample has {got} values, domain has {sites} sites")]
    SizeMismatch { got: usize, sites: usize },
    #[error("line has {got} usable waypoints, need {need}")]
    TooFewWaypoints { got: usize, need: usize },
    #[error("probe distance must be at least 1, got {0}")]
    ProbeDistance(f64),
    #[error("curve rejected by the zipper: {0}")]
    Curve(#[from] ZipperError),
    #[error("no samples")]
    Empty,
}

/// Which side of the walk holds the sites above the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Above on the right, the standard convention.
    AboveRight,
    /// Above on the left, as for a negated field.
    AboveLeft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelLine {
    pub level: f64,
    pub orientation: Orientation,
    /// Crossed edges as `(left site, right site)` in walk order.
    pub edges: Vec<(usize, usize)>,
    /// Edge midpoints; the first is the origin.
    pub curve: Vec<Complex64>,
    pub radius: usize,
}

impl LevelLine {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Prefix of the curve that stays within `|z| ≤ max_radius` and off the real axis.
    pub fn truncated_curve(&self, max_radius: f64) -> Vec<Complex64> {
        let mut out = vec![self.curve[0]];
        for &p in &self.curve[1..] {
            if p.norm() > max_radius || p.im <= 0.0 {
                break;
            }
            out.push(p);
        }
        out
    }

    /// Truncated at `R/2` and rescaled by `4/R`, so the truncation radius becomes 2.
    pub fn curve_input(&self) -> Result<CurveInput, LevelLineError> {
        let r = self.radius as f64;
        let pts = self.truncated_curve(0.5 * r).into_iter().map(|p| p * (4.0 / r)).collect();
        Ok(CurveInput::new(pts)?)
    }

    /// Checks that every edge has its above site on the expected side.
    pub fn check_separation(&self, values: &[f64]) -> Result<(), LevelLineError> {
        for (step, &(l, r)) in self.edges.iter().enumerate() {
            let (hi, lo) = match self.orientation {
                Orientation::AboveRight => (r, l),
                Orientation::AboveLeft => (l, r),
            };
            if !(values[hi] >= self.level && values[lo] < self.level) {
                return Err(LevelLineError::Separation { step });
            }
        }
        Ok(())
    }
}

/// Default level: midpoint of the two boundary values at the origin.
pub fn default_level(dom: &LatticeDomain, values: &[f64]) -> f64 {
    let (a, b) = start_sites(dom);
    0.5 * (values[a] + values[b])
}

fn start_sites(dom: &LatticeDomain) -> (usize, usize) {
    let a = dom.site_index(-1, 0).expect("domain contains row 0");
    let b = dom.site_index(0, 0).expect("domain contains row 0");
    (a, b)
}

/// Extracts the level line of `sample` at `level`, starting at the origin.
pub fn extract_level_line(dom: &LatticeDomain, sample: &FieldSample, level: f64) -> Result<LevelLine, LevelLineError> {
    extract_from_values(dom, &sample.total(), level)
}

pub fn extract_from_values(dom: &LatticeDomain, values: &[f64], level: f64) -> Result<LevelLine, LevelLineError> {
    if values.len() != dom.len() {
        return Err(LevelLineError::SizeMismatch { got: values.len(), sites: dom.len() });
    }
    let above = |s: usize| values[s] >= level;
    let (a0, b0) = start_sites(dom);
    let orientation = match (above(a0), above(b0)) {
        (false, true) => Orientation::AboveRight,
        (true, false) => Orientation::AboveLeft,
        _ => return Err(LevelLineError::StartEdge { left: values[a0], right: values[b0], level }),
    };
    let right_class = |s: usize| above(s) == (orientation == Orientation::AboveRight);

    let coords = |s: usize| dom.coords(s);
    let mid = |a: usize, b: usize| 0.5 * (dom.position(a) + dom.position(b));
    let (mut l, mut r) = (a0, b0);
    // Apex of the triangle above the start edge.
    let mut apex = (-1, 1);
    let mut edges = vec![(l, r)];
    let mut curve = vec![mid(l, r)];
    let cap = 10 * dom.len();
    loop {
        let Some(c) = dom.site_index(apex.0, apex.1) else { break };
        let dropped = if right_class(c) {
            let d = r;
            r = c;
            d
        } else {
            let d = l;
            l = c;
            d
        };
        let (pl, pr, pd) = (coords(l), coords(r), coords(dropped));
        apex = (pl.0 + pr.0 - pd.0, pl.1 + pr.1 - pd.1);
        edges.push((l, r));
        curve.push(mid(l, r));
        if edges.len() > cap {
            return Err(LevelLineError::NonTermination { cap });
        }
    }
    Ok(LevelLine { level, orientation, edges, curve, radius: dom.radius() })
}

/// Jump across the line at one probe distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpProfilePoint {
    pub delta: f64,
    pub jump: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpMeasurement {
    /// Jump at the smallest probe distance.
    pub jump: Estimate,
    pub profile: Vec<JumpProfilePoint>,
    pub waypoints_per_line: usize,
    /// Waypoint probes dropped because a probe site was not interior.
    pub n_excluded: usize,
}

pub const DEFAULT_PROBES: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
pub const DEFAULT_WAYPOINTS: usize = 10;

/// Points at equal arc length along `curve`, with unit normals pointing right.
pub fn waypoints(curve: &[Complex64], n: usize) -> Vec<(Complex64, Complex64)> {
    let seg: Vec<f64> = curve.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let total: f64 = seg.iter().sum();
    if total == 0.0 || n == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n);
    let (mut k, mut acc) = (0usize, 0.0);
    for m in 1..=n {
        let target = total * m as f64 / (n + 1) as f64;
        while k < seg.len() - 1 && acc + seg[k] < target {
            acc += seg[k];
            k += 1;
        }
        let tangent = (curve[k + 1] - curve[k]) / seg[k];
        let frac = ((target - acc) / seg[k]).clamp(0.0, 1.0);
        let p = curve[k] + (curve[k + 1] - curve[k]) * frac;
        // Rotate the tangent clockwise.
        out.push((p, Complex64::new(tangent.im, -tangent.re)));
    }
    out
}

/// Per-probe mean of `φ(m + δn) − φ(m − δn)` over the waypoints `m` of one
/// line, with `n` the unit normal pointing to the right of the walk and the
/// sign flipped for [`Orientation::AboveLeft`]. Only the part of the line inside
/// `|z| ≤ R/2` is used. Entries are `None` when every probe pair touched the
/// boundary; the second value counts dropped pairs.
pub fn line_jump_profile(
    dom: &LatticeDomain,
    values: &[f64],
    line: &LevelLine,
    probes: &[f64],
    n_waypoints: usize,
) -> Result<(Vec<Option<f64>>, usize), LevelLineError> {
    if let Some(&d) = probes.iter().find(|&&d| d < 1.0) {
        return Err(LevelLineError::ProbeDistance(d));
    }
    let curve = line.truncated_curve(0.5 * dom.radius() as f64);
    let wps = waypoints(&curve, n_waypoints);
    if wps.len() < n_waypoints || n_waypoints == 0 {
        return Err(LevelLineError::TooFewWaypoints { got: wps.len(), need: n_waypoints.max(1) });
    }
    let sign = if line.orientation == Orientation::AboveRight { 1.0 } else { -1.0 };
    let mut excluded = 0;
    let profile = probes
        .iter()
        .map(|&delta| {
            let mut diffs = Vec::new();
            for &(m, n) in &wps {
                let plus = dom.nearest_site(m + n * delta).filter(|&s| dom.is_interior(s));
                let minus = dom.nearest_site(m - n * delta).filter(|&s| dom.is_interior(s));
                match (plus, minus) {
                    (Some(p), Some(q)) => diffs.push(sign * (values[p] - values[q])),
                    _ => excluded += 1,
                }
            }
            (!diffs.is_empty()).then(|| mean(&diffs))
        })
        .collect();
    Ok((profile, excluded))
}

/// Combines per-line profiles into ensemble estimates.
pub fn aggregate_jump(
    probes: &[f64],
    per_line: &[(Vec<Option<f64>>, usize)],
    n_waypoints: usize,
) -> Result<JumpMeasurement, LevelLineError> {
    if per_line.is_empty() || probes.is_empty() {
        return Err(LevelLineError::Empty);
    }
    let profile: Vec<JumpProfilePoint> = probes
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let v: Vec<f64> = per_line.iter().filter_map(|(p, _)| p[k]).collect();
            JumpProfilePoint { delta, jump: mean_estimate(&v) }
        })
        .collect();
    Ok(JumpMeasurement {
        jump: profile[0].jump,
        profile,
        waypoints_per_line: n_waypoints,
        n_excluded: per_line.iter().map(|(_, e)| e).sum(),
    })
}

/// [`line_jump_profile`] over an ensemble, averaged over samples.
pub fn measure_jump(
    dom: &LatticeDomain,
    samples: &[FieldSample],
    lines: &[LevelLine],
    probes: &[f64],
    n_waypoints: usize,
) -> Result<JumpMeasurement, LevelLineError> {
    if samples.is_empty() || samples.len() != lines.len() {
        return Err(LevelLineError::Empty);
    }
    let per_line = samples
        .iter()
        .zip(lines)
        .map(|(s, l)| line_jump_profile(dom, &s.total(), l, probes, n_waypoints))
        .collect::<Result<Vec<_>, _>>()?;
    aggregate_jump(probes, &per_line, n_waypoints)
}
