//! Discrete offspring laws and the model constants of the rescaled chain.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{JumpMeasure, Region};

/// Cumulative mass at which the support is cut.
pub const TRUNCATION_TOL: f64 = 1e-12;
/// Hard cap on the support length of a truncated law.
pub const MAX_SUPPORT: usize = 2_000_000;

/// A probability law on `{offset, offset + 1, ...}` with finite support.
#[derive(Debug, Clone)]
pub struct OffspringLaw {
    weights: Vec<f64>,
    truncation_tail: f64,
    support_offset: u64,
    alias: WeightedAliasIndex<f64>,
}

impl PartialEq for OffspringLaw {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights
            && self.support_offset == other.support_offset
            && self.truncation_tail == other.truncation_tail
    }
}

impl OffspringLaw {
    /// Normalizes `weights` (indexed from `support_offset`) into a law.
    pub fn new(weights: Vec<f64>, support_offset: u64, truncation_tail: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidLaw("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidLaw(format!(
                "weight {w} is not a finite non-negative number"
            )));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidLaw("weights sum to zero".into()));
        }
        let mut weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        while weights.len() > 1 && *weights.last().unwrap() == 0.0 {
            weights.pop();
        }
        let alias =
            WeightedAliasIndex::new(weights.clone()).map_err(|e| Error::InvalidLaw(format!("alias table: {e}")))?;
        Ok(Self {
            weights,
            truncation_tail,
            support_offset,
            alias,
        })
    }

    /// A law putting all its mass on `k`.
    pub fn point(k: u64) -> Self {
        Self::new(vec![1.0], k, 0.0).expect("point mass is a valid law")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support_offset(&self) -> u64 {
        self.support_offset
    }

    pub fn truncation_tail(&self) -> f64 {
        self.truncation_tail
    }

    /// Largest point of the support.
    pub fn max_value(&self) -> u64 {
        self.support_offset + self.weights.len() as u64 - 1
    }

    /// `P(k)`; zero outside the stored support.
    pub fn prob(&self, k: u64) -> f64 {
        k.checked_sub(self.support_offset)
            .and_then(|i| self.weights.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    /// Iterates `(k, P(k))` over the stored support.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.support_offset + i as u64, w))
    }

    /// `E[g(K)]`.
    pub fn expect(&self, g: impl Fn(u64) -> f64) -> f64 {
        self.iter().map(|(k, w)| w * g(k)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|k| k as f64)
    }

    /// `Σ (k - 1) P(k)`, the mean net change of an offspring event.
    pub fn centered_mean(&self) -> f64 {
        self.expect(|k| k as f64 - 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.support_offset + self.alias.sample(rng) as u64
    }

    /// Audit export: `{"k": weight, ...}` plus metadata.
    pub fn to_export(&self, n: u64, c: f64) -> LawExport {
        LawExport {
            weights: self.iter().map(|(k, w)| (k.to_string(), w)).collect(),
            n,
            c,
            truncation_tail: self.truncation_tail,
        }
    }
}

/// JSON form of an offspring law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawExport {
    pub weights: BTreeMap<String, f64>,
    #[serde(rename = "N")]
    pub n: u64,
    pub c: f64,
    pub truncation_tail: f64,
}

/// Which half of the jump measure a law is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JumpClass {
    Small,
    Big,
}

impl JumpClass {
    fn region(self) -> Region {
        match self {
            JumpClass::Small => Region::SMALL,
            JumpClass::Big => Region::BIG,
        }
    }

    fn name(self) -> &'static str {
        match self {
            JumpClass::Small => "small-jump",
            JumpClass::Big => "big-jump",
        }
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    Ok(())
}

/// Builds `π^{∓,N}`: `q_0 = L(N)/(N α)`, `q_1 = 0`, and for `k >= 2`
/// `q_k = ∫ (Nz)^k e^{-Nz}/k! μ(dz) / (N α)` over the jump class.
pub fn build_jump_law(measure: &JumpMeasure, class: JumpClass, n: u64) -> Result<OffspringLaw> {
    check_n(n)?;
    let nf = n as f64;
    let (alpha, l) = match class {
        JumpClass::Small => (measure.alpha_small(n), measure.l_small(nf)?),
        JumpClass::Big => (measure.alpha_big(n), measure.l_big(nf)?),
    };
    if !(alpha > 0.0) {
        return Err(Error::InactiveComponent {
            component: class.name(),
        });
    }
    if !measure.has_light_tail() {
        return Err(Error::Truncation(
            "offspring weights of an unbounded power density decay too slowly to truncate; bound its support".into(),
        ));
    }
    let norm = nf * alpha;
    let mut weights = vec![l / norm, 0.0];
    let mut cumulative = weights[0];
    let region = class.region();
    // The Poisson bumps peak near k = N z; past the support bound the
    // weights decay factorially.
    let peak = (nf * measure.support_max()).min(MAX_SUPPORT as f64);
    let mut k = 2u64;
    loop {
        let w = measure.poisson_weight(region, n, k) / norm;
        weights.push(w);
        cumulative += w;
        // Cutting at 1 - 1e-12 alone leaves k * tail in the mean; run on
        // until the weights themselves are negligible.
        if (k as f64) > peak && w * (k as f64) < 1e-18 {
            break;
        }
        if weights.len() >= MAX_SUPPORT {
            return Err(Error::Truncation(format!(
                "support exceeded {MAX_SUPPORT} points with cumulative mass {cumulative}"
            )));
        }
        k += 1;
    }
    if (1.0 - cumulative).abs() > 1e-9 {
        return Err(Error::Truncation(format!(
            "weights sum to {cumulative}, quadrature did not converge"
        )));
    }
    let tail = (1.0 - cumulative).max(0.0);
    OffspringLaw::new(weights, 0, tail)
}

pub fn build_pi_minus(measure: &JumpMeasure, n: u64) -> Result<OffspringLaw> {
    build_jump_law(measure, JumpClass::Small, n)
}

pub fn build_pi_plus(measure: &JumpMeasure, n: u64) -> Result<OffspringLaw> {
    build_jump_law(measure, JumpClass::Big, n)
}

/// Weighted mixture of laws on a common offset-0 support.
fn mixture(parts: &[(f64, &OffspringLaw)]) -> Result<OffspringLaw> {
    if let [(_, law)] = parts {
        return Ok((*law).clone());
    }
    let len = parts.iter().map(|(_, l)| l.max_value() as usize + 1).max().unwrap_or(1);
    let mut weights = vec![0.0; len];
    let total: f64 = parts.iter().map(|(w, _)| w).sum();
    let mut tail = 0.0;
    for (w, law) in parts {
        for (k, p) in law.iter() {
            weights[k as usize] += w * p / total;
        }
        tail += w * law.truncation_tail() / total;
    }
    OffspringLaw::new(weights, 0, tail)
}

fn active_parts(measure: &JumpMeasure, n: u64) -> Result<Vec<(f64, OffspringLaw)>> {
    let mut parts = Vec::with_capacity(2);
    for class in [JumpClass::Small, JumpClass::Big] {
        let alpha = match class {
            JumpClass::Small => measure.alpha_small(n),
            JumpClass::Big => measure.alpha_big(n),
        };
        if alpha > 0.0 {
            parts.push((alpha, build_jump_law(measure, class, n)?));
        }
    }
    Ok(parts)
}

/// `ν^{1,N} = (α_- π^- + α_+ π^+) / d1`.
pub fn build_nu1(measure: &JumpMeasure, n: u64) -> Result<OffspringLaw> {
    check_n(n)?;
    let parts = active_parts(measure, n)?;
    if parts.is_empty() {
        return Err(Error::InactiveComponent { component: "jump" });
    }
    let refs: Vec<(f64, &OffspringLaw)> = parts.iter().map(|(w, l)| (*w, l)).collect();
    mixture(&refs)
}

/// `ν^{2,N}`: binary splitting with equal birth and death rates.
pub fn build_nu2(c: f64) -> Result<OffspringLaw> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    OffspringLaw::new(vec![0.5, 0.0, 0.5], 0, 0.0)
}

/// `π_N = (d1 ν^{1,N} + d2 ν^{2,N}) / d_N`.
pub fn build_pi_total(measure: &JumpMeasure, n: u64, c: f64) -> Result<OffspringLaw> {
    check_n(n)?;
    let nu2 = build_nu2(c)?;
    let d2 = 2.0 * c * n as f64;
    let parts = active_parts(measure, n)?;
    if parts.is_empty() {
        return Ok(nu2);
    }
    let d1: f64 = parts.iter().map(|(w, _)| w).sum();
    let nu1 = build_nu1(measure, n)?;
    mixture(&[(d1, &nu1), (d2, &nu2)])
}

/// `Λ^{1,N}` on `{1, 2, ...}`: `P(k) = q^{1,N}_{k+1} / (1 - q^{1,N}_0)`.
pub fn build_lambda1(measure: &JumpMeasure, n: u64) -> Result<OffspringLaw> {
    lambda_from_nu1(&build_nu1(measure, n)?)
}

fn lambda_from_nu1(nu1: &OffspringLaw) -> Result<OffspringLaw> {
    let q0 = nu1.prob(0);
    if q0 >= 1.0 {
        return Err(Error::DegenerateLaw("q_0 = 1 leaves no reflection law".into()));
    }
    let weights: Vec<f64> = nu1.weights().iter().skip(2).copied().collect();
    if weights.is_empty() {
        return Err(Error::DegenerateLaw("no offspring class above 1".into()));
    }
    OffspringLaw::new(weights, 1, nu1.truncation_tail())
}

/// Scalar constants of the rescaled model at a given `(μ, c, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub n: u64,
    pub c: f64,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub d1: f64,
    pub d2: f64,
    pub dn: f64,
    pub q0_1: f64,
    pub m1: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma_n: f64,
    pub a_n: f64,
}

impl ModelConstants {
    /// Binary birth rate `λ_N`, equal to the binary death rate `μ_N`.
    pub fn binary_rate(&self) -> f64 {
        self.c * self.n as f64
    }

    fn from_parts(n: u64, c: f64, alpha_minus: f64, alpha_plus: f64, q0_1: f64) -> Self {
        let nf = n as f64;
        let d1 = alpha_minus + alpha_plus;
        let d2 = 2.0 * c * nf;
        let cn = c * nf;
        let gamma1 = d1 * (1.0 - q0_1);
        Self {
            n,
            c,
            alpha_minus,
            alpha_plus,
            d1,
            d2,
            dn: d1 + d2,
            q0_1,
            m1: if d1 > 0.0 { q0_1 / (1.0 - q0_1) } else { 0.0 },
            gamma0: d1 * q0_1 + cn,
            gamma1,
            gamma_n: gamma1 + cn,
            a_n: nf + q0_1 * d1 / c,
        }
    }
}

pub fn model_constants(measure: &JumpMeasure, n: u64, c: f64) -> Result<ModelConstants> {
    Ok(ModelLaws::build(measure, n, c)?.constants)
}

/// Every law and constant of the rescaled model at one `(μ, c, N)`.
#[derive(Debug, Clone)]
pub struct ModelLaws {
    pub pi_minus: Option<OffspringLaw>,
    pub pi_plus: Option<OffspringLaw>,
    pub nu1: Option<OffspringLaw>,
    pub nu2: OffspringLaw,
    pub pi_total: OffspringLaw,
    pub lambda1: Option<OffspringLaw>,
    pub constants: ModelConstants,
}

impl ModelLaws {
    pub fn build(measure: &JumpMeasure, n: u64, c: f64) -> Result<Self> {
        check_n(n)?;
        let nu2 = build_nu2(c)?;
        let alpha_minus = measure.alpha_small(n);
        let alpha_plus = measure.alpha_big(n);
        let pi_minus = if alpha_minus > 0.0 {
            Some(build_pi_minus(measure, n)?)
        } else {
            None
        };
        let pi_plus = if alpha_plus > 0.0 {
            Some(build_pi_plus(measure, n)?)
        } else {
            None
        };
        let parts: Vec<(f64, &OffspringLaw)> = [(alpha_minus, &pi_minus), (alpha_plus, &pi_plus)]
            .into_iter()
            .filter_map(|(a, l)| l.as_ref().map(|l| (a, l)))
            .collect();
        let nu1 = if parts.is_empty() { None } else { Some(mixture(&parts)?) };
        let d1 = alpha_minus + alpha_plus;
        let d2 = 2.0 * c * n as f64;
        let pi_total = match &nu1 {
            Some(nu1) => mixture(&[(d1, nu1), (d2, &nu2)])?,
            None => nu2.clone(),
        };
        let lambda1 = nu1.as_ref().map(lambda_from_nu1).transpose()?;
        let q0_1 = nu1.as_ref().map_or(0.0, |l| l.prob(0));
        Ok(Self {
            pi_minus,
            pi_plus,
            nu1,
            nu2,
            pi_total,
            lambda1,
            constants: ModelConstants::from_parts(n, c, alpha_minus, alpha_plus, q0_1),
        })
    }
}
