use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{CftError, Q};

/// Default truncation level; every identity checked here lives at level ≤ 2.
pub const DEFAULT_TRUNCATION: u32 = 4;

/// Product `J_{−m₁} J_{−m₂} ⋯` of creation modes, stored as the sorted
/// magnitudes `m_i ≥ 1`. Creation modes commute, so the sorted form is canonical.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn vacuum() -> Self {
        Self(Vec::new())
    }

    /// From mode indices, which must all be ≤ −1.
    pub fn from_modes(modes: &[i32]) -> Self {
        assert!(modes.iter().all(|&m| m <= -1), "creation modes must be negative");
        let mut v: Vec<u32> = modes.iter().map(|m| m.unsigned_abs()).collect();
        v.sort_unstable();
        Self(v)
    }

    pub fn level(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn magnitudes(&self) -> &[u32] {
        &self.0
    }

    fn with(&self, m: u32) -> Self {
        let mut v = self.0.clone();
        let at = v.partition_point(|&x| x < m);
        v.insert(at, m);
        Self(v)
    }

    fn without_one(&self, m: u32) -> Option<(Self, usize)> {
        let count = self.0.iter().filter(|&&x| x == m).count();
        let at = self.0.iter().position(|&x| x == m)?;
        let mut v = self.0.clone();
        v.remove(at);
        Some((Self(v), count))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut i = 0;
        // Highest mode first, J_{-2}J_{-1}^2.
        let desc: Vec<u32> = self.0.iter().rev().copied().collect();
        while i < desc.len() {
            let m = desc[i];
            let run = desc[i..].iter().take_while(|&&x| x == m).count();
            write!(f, "J_{{-{m}}}")?;
            if run > 1 {
                write!(f, "^{run}")?;
            }
            i += run;
        }
        Ok(())
    }
}

/// Exact linear combination of monomials acting on `|h, q⟩` with U(1) anomaly `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockVector {
    terms: BTreeMap<Monomial, Q>,
    pub charge: Q,
    pub anomaly: Q,
}

impl FockVector {
    /// The highest-weight state `|h, q⟩` itself.
    pub fn highest_weight(charge: Q, anomaly: Q) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::vacuum(), Q::one());
        Self { terms, charge, anomaly }
    }

    pub fn zero(charge: Q, anomaly: Q) -> Self {
        Self { terms: BTreeMap::new(), charge, anomaly }
    }

    fn empty_like(&self) -> Self {
        Self::zero(self.charge.clone(), self.anomaly.clone())
    }

    pub fn from_terms(charge: Q, anomaly: Q, terms: impl IntoIterator<Item = (Monomial, Q)>) -> Self {
        let mut v = Self::zero(charge, anomaly);
        for (m, c) in terms {
            v.add_term(m, c);
        }
        v
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest level among the terms (0 for the zero vector).
    pub fn level(&self) -> u32 {
        self.terms.keys().map(Monomial::level).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = self.empty_like();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, v) in &other.terms {
            out.add_term(m.clone(), v.clone());
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scale(&-Q::one()))
    }

    /// Term list such as `["1/2 J_{-2}", "-3/4 J_{-1}^2"]`, used in reports.
    pub fn describe(&self) -> Vec<String> {
        self.terms.iter().rev().map(|(m, c)| format!("{c} {m}")).collect()
    }

    /// Shapovalov form with `⟨h,q|h,q⟩ = 1` and `J_n† = J_{−n}`.
    pub fn inner(&self, other: &FockVector) -> Q {
        let mut total = Q::zero();
        for (m, c) in &self.terms {
            let mut w = other.clone();
            // (J_{−m₁}⋯J_{−m_r})† = J_{m_r}⋯J_{m₁}; J_{m₁} acts first.
            for &mag in m.magnitudes().iter() {
                w = apply_j(mag as i32, &w);
            }
            total += c * w.coefficient(&Monomial::vacuum());
        }
        total
    }
}

impl fmt::Display for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        write!(f, "{}", self.describe().join(" + "))
    }
}

/// Action of `J_n` using `[J_n, J_m] = k n δ_{n,−m}`, `J_0|h,q⟩ = q|h,q⟩`
/// and `J_{n>0}|h,q⟩ = 0`.
pub fn apply_j(n: i32, v: &FockVector) -> FockVector {
    let mut out = v.empty_like();
    match n.cmp(&0) {
        std::cmp::Ordering::Less => {
            for (m, c) in &v.terms {
                out.add_term(m.with(n.unsigned_abs()), c.clone());
            }
        }
        // J_0 commutes with every mode.
        std::cmp::Ordering::Equal => {
            for (m, c) in &v.terms {
                out.add_term(m.clone(), c * &v.charge);
            }
        }
        std::cmp::Ordering::Greater => {
            let kn = &v.anomaly * Q::from_integer(n.into());
            for (m, c) in &v.terms {
                if let Some((rest, count)) = m.without_one(n as u32) {
                    out.add_term(rest, c * &kn * Q::from_integer((count as i64).into()));
                }
            }
        }
    }
    out
}

/// Normalisation of the stress tensor `T = P :J²:` plus the truncation level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeAlgebra {
    pub prefactor: Q,
    pub truncation: u32,
}

impl ModeAlgebra {
    /// Unperturbed free boson, `T = ¼ :J²:`.
    pub fn free_boson() -> Self {
        Self { prefactor: super::q(1, 4), truncation: DEFAULT_TRUNCATION }
    }

    /// `JJ̄`-perturbed boson, `T = (s/4) :J²:` with `s = 1 + 4πu`.
    pub fn perturbed(s: &Q) -> Self {
        Self { prefactor: s * super::q(1, 4), truncation: DEFAULT_TRUNCATION }
    }
}

/// Sugawara action `L_n = P Σ_r :J_r J_{n−r}:`, normal ordering placing the
/// larger mode index on the right.
pub fn apply_l(n: i32, v: &FockVector, alg: &ModeAlgebra) -> Result<FockVector, CftError> {
    let lev = v.level() as i32;
    if lev - n > alg.truncation as i32 {
        return Err(CftError::Truncation { level: alg.truncation });
    }
    let mut out = v.empty_like();
    if v.is_zero() {
        return Ok(out);
    }
    // Terms with max(r, n − r) > level annihilate v.
    for r in (n - lev)..=lev {
        let (a, b) = (r.min(n - r), r.max(n - r));
        let w = apply_j(a, &apply_j(b, v));
        out = out.plus(&w);
    }
    Ok(out.scale(&alg.prefactor))
}
