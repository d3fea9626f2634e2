//! Correlator-level form of the deformed null condition.
//!
//! For boundary-condition-changing operators of charges `q_j` at `x_j` the
//! inhomogeneous partition function is `Π_{j<k} (x_k − x_j)^{q_j q_k / 2}`.
//! Singling out operator `i` and writing `d_j = x_i − x_j`,
//!
//! ```text
//! ⟨L₋₁ φ_i …⟩ / ⟨…⟩  =  Σ' a_j / d_j,                       a_j = q_i q_j / 2
//! ⟨L₋₁² φ_i …⟩ / ⟨…⟩ =  (Σ' a_j / d_j)² − Σ' a_j / d_j²
//! ⟨L₋₂ φ_i …⟩ / ⟨…⟩  = −½ Σ' q_i q_j / d_j² + ¼ Σ'_{j,k} q_j q_k / (d_j d_k)
//! ```
//!
//! and the identity checked is
//! `2⟨L₋₂⟩ = 2⟨L₋₁²⟩ − Σ' ρ_j/(x_j − x_i) ⟨L₋₁⟩` with
//! `ρ_j = (q_j/q_i)(1 − q_i²)`. Both sides are rational functions of the
//! positions of bounded degree, so exact agreement at enough random rational
//! points decides the identity.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{q, CftError, Q};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeConfig {
    pub charges: Vec<Q>,
    pub positions: Vec<Q>,
}

impl ChargeConfig {
    pub fn new(charges: Vec<Q>, positions: Vec<Q>) -> Result<Self, CftError> {
        if charges.len() != positions.len() {
            return Err(CftError::LengthMismatch { charges: charges.len(), positions: positions.len() });
        }
        check_distinct(&positions)?;
        Ok(Self { charges, positions })
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    fn with_positions(&self, positions: Vec<Q>) -> Self {
        Self { charges: self.charges.clone(), positions }
    }
}

fn check_distinct(xs: &[Q]) -> Result<(), CftError> {
    for a in 0..xs.len() {
        for b in (a + 1)..xs.len() {
            if xs[a] == xs[b] {
                return Err(CftError::CoincidentPoints { a, b });
            }
        }
    }
    Ok(())
}

/// Exponents `2gλ_jλ_k = q_j q_k / 2`; symmetric with a zero diagonal.
pub fn partition_exponents(cfg: &ChargeConfig) -> Vec<Vec<Q>> {
    let n = cfg.len();
    let half = q(1, 2);
    (0..n)
        .map(|j| {
            (0..n)
                .map(|k| if j == k { Q::zero() } else { &cfg.charges[j] * &cfg.charges[k] * &half })
                .collect()
        })
        .collect()
}

/// `h = gλ² = q²/4`.
pub fn conformal_weight(charge: &Q) -> Q {
    charge * charge * q(1, 4)
}

/// `ρ_j = (q_j/q_i)(1 − q_i²)` for `j ≠ i`; entry `i` is zero.
pub fn rho_coefficients(cfg: &ChargeConfig, i: usize) -> Result<Vec<Q>, CftError> {
    let qi = cfg.charges.get(i).ok_or(CftError::BadIndex { index: i, len: cfg.len() })?;
    if qi.is_zero() {
        return Err(CftError::ZeroCharge { index: i });
    }
    let factor = (Q::one() - qi * qi) / qi;
    Ok(cfg
        .charges
        .iter()
        .enumerate()
        .map(|(j, qj)| if j == i { Q::zero() } else { qj * &factor })
        .collect())
}

/// Random position tuples of distinct rationals for identity testing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalEvaluator {
    pub points: Vec<Vec<Q>>,
}

impl RationalEvaluator {
    pub fn random(n_vars: usize, n_points: usize, seed: u64) -> Self {
        let mut rng = substream(seed, Purpose::Evaluation, n_vars as u64);
        let points = (0..n_points)
            .map(|_| {
                let mut tuple: Vec<Q> = Vec::with_capacity(n_vars);
                while tuple.len() < n_vars {
                    let num: i64 = rng.random_range(-997..=997);
                    let den: i64 = rng.random_range(1..=89);
                    let v = Q::new(BigInt::from(num), BigInt::from(den));
                    if !tuple.contains(&v) {
                        tuple.push(v);
                    }
                }
                tuple
            })
            .collect();
        Self { points }
    }
}

/// Per-point residuals of a correlator identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelatorCheck {
    pub pass: bool,
    pub index: usize,
    pub rho: Vec<Q>,
    pub points: Vec<Vec<Q>>,
    pub residuals: Vec<Q>,
}

struct Moments {
    l1: Q,
    l11: Q,
    l2: Q,
}

fn moments(cfg: &ChargeConfig, i: usize) -> Moments {
    let exps = partition_exponents(cfg);
    let qi = &cfg.charges[i];
    let xi = &cfg.positions[i];
    let others: Vec<usize> = (0..cfg.len()).filter(|&j| j != i).collect();
    let d: Vec<Q> = others.iter().map(|&j| xi - &cfg.positions[j]).collect();

    // Derivatives of the spectator product Π' d_j^{a_j}.
    let mut s1 = Q::zero();
    let mut s2 = Q::zero();
    for (idx, &j) in others.iter().enumerate() {
        let a = &exps[i][j];
        s1 += a / &d[idx];
        s2 += a / (&d[idx] * &d[idx]);
    }
    let l1 = s1.clone();
    let l11 = &s1 * &s1 - s2;

    let mut l2 = Q::zero();
    for (idx, &j) in others.iter().enumerate() {
        l2 -= q(1, 2) * qi * &cfg.charges[j] / (&d[idx] * &d[idx]);
        for (kdx, &k) in others.iter().enumerate() {
            l2 += q(1, 4) * &cfg.charges[j] * &cfg.charges[k] / (&d[idx] * &d[kdx]);
        }
    }
    Moments { l1, l11, l2 }
}

/// Residual `2⟨L₋₂⟩ − 2⟨L₋₁²⟩ + Σ' ρ_j/(x_j − x_i) ⟨L₋₁⟩`.
fn residual(cfg: &ChargeConfig, i: usize, rho: &[Q]) -> Q {
    let m = moments(cfg, i);
    let xi = &cfg.positions[i];
    let mut drift = Q::zero();
    for (j, r) in rho.iter().enumerate() {
        if j != i {
            drift += r / (&cfg.positions[j] - xi);
        }
    }
    q(2, 1) * m.l2 - q(2, 1) * m.l11 + drift * m.l1
}

fn precheck(cfg: &ChargeConfig, i: usize) -> Result<(), CftError> {
    if i >= cfg.len() {
        return Err(CftError::BadIndex { index: i, len: cfg.len() });
    }
    if cfg.charges[i].is_zero() {
        return Err(CftError::ZeroCharge { index: i });
    }
    if cfg.len() < 2 {
        return Err(CftError::NoSpectators);
    }
    check_distinct(&cfg.positions)
}

/// Evaluates the deformed identity with an explicit `ρ⃗` at the configured
/// positions and at every evaluator point.
pub fn check_deformed_null_with_rho(
    cfg: &ChargeConfig,
    i: usize,
    rho: &[Q],
    evaluator: &RationalEvaluator,
) -> Result<CorrelatorCheck, CftError> {
    precheck(cfg, i)?;
    let mut points = vec![cfg.positions.clone()];
    points.extend(evaluator.points.iter().cloned());
    let mut residuals = Vec::with_capacity(points.len());
    for p in &points {
        if p.len() != cfg.len() {
            return Err(CftError::LengthMismatch { charges: cfg.len(), positions: p.len() });
        }
        check_distinct(p)?;
        residuals.push(residual(&cfg.with_positions(p.clone()), i, rho));
    }
    let pass = residuals.iter().all(Zero::is_zero);
    Ok(CorrelatorCheck { pass, index: i, rho: rho.to_vec(), points, residuals })
}

/// The deformed null condition with `ρ⃗` from [`rho_coefficients`], evaluated at
/// the configured positions plus `n_random` (at least 5) random rational points.
pub fn check_deformed_null_on_correlator(
    cfg: &ChargeConfig,
    i: usize,
    n_random: usize,
    seed: u64,
) -> Result<CorrelatorCheck, CftError> {
    precheck(cfg, i)?;
    let rho = rho_coefficients(cfg, i)?;
    let evaluator = RationalEvaluator::random(cfg.len(), n_random.max(5), seed);
    check_deformed_null_with_rho(cfg, i, &rho, &evaluator)
}
