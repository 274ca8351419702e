//! The jump measure and its Lévy-type functionals.
//!
//! Three families are supported: finitely many atoms, a power-law density
//! `C z^(-1-α)` on `(0, z_max]`, and its exponentially tempered variant.
//! Density integrals are computed in substituted variables so every
//! integrand the constructions need is bounded: `z = t^(1/(2-α))` on
//! `(0, 1]` and `z = a s^(-1/(α-1))` above `a >= 1`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, GaussLegendre};

/// Relative tolerance handed to the adaptive integrator.
pub const QUAD_REL_TOL: f64 = 1e-13;

/// A point mass of the jump measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureFamily {
    Atoms(Vec<Atom>),
    /// Density `scale * z^(-1-alpha)` on `(0, z_max]`; `z_max` may be infinite.
    Power {
        scale: f64,
        alpha: f64,
        z_max: f64,
    },
    /// Density `scale * z^(-1-alpha) * exp(-theta z)` on `(0, inf)`.
    Tempered {
        scale: f64,
        alpha: f64,
        theta: f64,
    },
}

/// Serialized description of a jump measure, as found in study configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureSpec {
    Atoms {
        /// `[location, weight]` pairs.
        atoms: Vec<[f64; 2]>,
        #[serde(default)]
        p: Option<f64>,
    },
    Power {
        scale: f64,
        alpha: f64,
        /// Upper end of the support; omitted or null means unbounded.
        #[serde(default)]
        z_max: Option<f64>,
        #[serde(default)]
        p: Option<f64>,
        #[serde(default)]
        quadrature_nodes: Option<usize>,
    },
    Tempered {
        scale: f64,
        alpha: f64,
        theta: f64,
        #[serde(default)]
        p: Option<f64>,
        #[serde(default)]
        quadrature_nodes: Option<usize>,
    },
}

impl MeasureSpec {
    pub fn build(&self) -> Result<JumpMeasure> {
        match self {
            MeasureSpec::Atoms { atoms, p } => {
                let atoms = atoms
                    .iter()
                    .map(|[z, w]| Atom {
                        location: *z,
                        weight: *w,
                    })
                    .collect();
                JumpMeasure::new(MeasureFamily::Atoms(atoms), p.unwrap_or(1.5), DEFAULT_NODES)
            }
            MeasureSpec::Power {
                scale,
                alpha,
                z_max,
                p,
                quadrature_nodes,
            } => JumpMeasure::new(
                MeasureFamily::Power {
                    scale: *scale,
                    alpha: *alpha,
                    z_max: z_max.unwrap_or(f64::INFINITY),
                },
                p.unwrap_or(0.5 * (1.0 + alpha)),
                quadrature_nodes.unwrap_or(DEFAULT_NODES),
            ),
            MeasureSpec::Tempered {
                scale,
                alpha,
                theta,
                p,
                quadrature_nodes,
            } => JumpMeasure::new(
                MeasureFamily::Tempered {
                    scale: *scale,
                    alpha: *alpha,
                    theta: *theta,
                },
                p.unwrap_or(1.5),
                quadrature_nodes.unwrap_or(DEFAULT_NODES),
            ),
        }
    }
}

const DEFAULT_NODES: usize = 20;

/// A subset of `(0, inf)` bounded by `lo` and `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Region {
    /// `(0, 1]`, home of the small jumps.
    pub const SMALL: Region = Region {
        lo: 0.0,
        hi: 1.0,
        lo_closed: false,
        hi_closed: true,
    };
    /// `(1, inf)`, home of the big jumps.
    pub const BIG: Region = Region {
        lo: 1.0,
        hi: f64::INFINITY,
        lo_closed: false,
        hi_closed: false,
    };
    pub const ALL: Region = Region {
        lo: 0.0,
        hi: f64::INFINITY,
        lo_closed: false,
        hi_closed: false,
    };

    pub fn at_or_above(delta: f64) -> Region {
        Region {
            lo: delta,
            hi: f64::INFINITY,
            lo_closed: true,
            hi_closed: false,
        }
    }

    pub fn below(delta: f64) -> Region {
        Region {
            lo: 0.0,
            hi: delta,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn contains(&self, z: f64) -> bool {
        let above = if self.lo_closed { z >= self.lo } else { z > self.lo };
        let below = if self.hi_closed { z <= self.hi } else { z < self.hi };
        above && below
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Functional {
    LSmall,
    LBig,
    AlphaSmall,
    AlphaBig,
    TailMass,
    TailMean,
    SecondBelow,
}

/// Memoized values of the Lévy functionals, keyed by the exact bits of
/// the argument.
#[derive(Debug, Default)]
pub struct LevyFunctionals {
    values: Mutex<HashMap<(Functional, u64), f64>>,
}

impl LevyFunctionals {
    fn get_or_insert(&self, key: Functional, arg: f64, compute: impl FnOnce() -> f64) -> f64 {
        let k = (key, arg.to_bits());
        if let Some(v) = self.values.lock().expect("memo poisoned").get(&k) {
            return *v;
        }
        let v = compute();
        self.values.lock().expect("memo poisoned").insert(k, v);
        v
    }

    /// Number of memoized entries.
    pub fn len(&self) -> usize {
        self.values.lock().expect("memo poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The σ-finite jump measure μ together with the declared exponent `p`.
pub struct JumpMeasure {
    family: MeasureFamily,
    p: f64,
    rule: GaussLegendre,
    memo: LevyFunctionals,
}

impl fmt::Debug for JumpMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpMeasure")
            .field("family", &self.family)
            .field("p", &self.p)
            .field("quadrature_nodes", &self.rule.len())
            .finish()
    }
}

impl Clone for JumpMeasure {
    fn clone(&self) -> Self {
        Self {
            family: self.family.clone(),
            p: self.p,
            rule: self.rule.clone(),
            memo: LevyFunctionals::default(),
        }
    }
}

/// `e^{-x} - 1 + x`, accurate for small `x`.
pub(crate) fn phi(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // Taylor series, alternating, |x| < 0.1 gives 1e-17 after 10 terms.
        let mut term = x * x / 2.0;
        let mut acc = term;
        for k in 3..14 {
            term *= -x / k as f64;
            acc += term;
        }
        acc
    } else {
        (-x).exp_m1() + x
    }
}

impl JumpMeasure {
    pub fn new(family: MeasureFamily, p: f64, quadrature_nodes: usize) -> Result<Self> {
        if !(p > 1.0 && p < 2.0) {
            return Err(Error::InvalidMeasure(format!("p must lie in (1, 2), got {p}")));
        }
        if quadrature_nodes == 0 {
            return Err(Error::InvalidMeasure("quadrature_nodes must be positive".into()));
        }
        match &family {
            MeasureFamily::Atoms(atoms) => {
                for a in atoms {
                    if !(a.location > 0.0 && a.location.is_finite()) {
                        return Err(Error::InvalidMeasure(format!(
                            "atom location must be positive and finite, got {}",
                            a.location
                        )));
                    }
                    if !(a.weight > 0.0 && a.weight.is_finite()) {
                        return Err(Error::InvalidMeasure(format!(
                            "atom weight must be positive and finite, got {}",
                            a.weight
                        )));
                    }
                }
            }
            MeasureFamily::Power { scale, alpha, z_max } => {
                check_density(*scale, *alpha)?;
                if !(*z_max > 0.0) {
                    return Err(Error::InvalidMeasure(format!("z_max must be positive, got {z_max}")));
                }
                if z_max.is_infinite() && p >= *alpha {
                    return Err(Error::InvalidMeasure(format!(
                        "unbounded power density needs p < alpha for integrability (p = {p}, alpha = {alpha})"
                    )));
                }
            }
            MeasureFamily::Tempered { scale, alpha, theta } => {
                check_density(*scale, *alpha)?;
                if !(*theta > 0.0 && theta.is_finite()) {
                    return Err(Error::InvalidMeasure(format!("theta must be positive, got {theta}")));
                }
            }
        }
        let m = Self {
            family,
            p,
            rule: GaussLegendre::new(quadrature_nodes),
            memo: LevyFunctionals::default(),
        };
        let h1 = m.h1_integral();
        if !h1.is_finite() {
            return Err(Error::InvalidMeasure("integral of min(z^p, z^2) diverges".into()));
        }
        Ok(m)
    }

    pub fn atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        let atoms = atoms
            .iter()
            .map(|&(location, weight)| Atom { location, weight })
            .collect();
        Self::new(MeasureFamily::Atoms(atoms), 1.5, DEFAULT_NODES)
    }

    pub fn power(scale: f64, alpha: f64, z_max: f64) -> Result<Self> {
        let p = 0.5 * (1.0 + alpha);
        Self::new(MeasureFamily::Power { scale, alpha, z_max }, p, DEFAULT_NODES)
    }

    pub fn tempered(scale: f64, alpha: f64, theta: f64) -> Result<Self> {
        Self::new(MeasureFamily::Tempered { scale, alpha, theta }, 1.5, DEFAULT_NODES)
    }

    pub fn family(&self) -> &MeasureFamily {
        &self.family
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn functionals(&self) -> &LevyFunctionals {
        &self.memo
    }

    /// True when every jump size is bounded or tempered, so the discrete
    /// offspring weights decay at least geometrically.
    pub fn has_light_tail(&self) -> bool {
        match &self.family {
            MeasureFamily::Atoms(_) | MeasureFamily::Tempered { .. } => true,
            MeasureFamily::Power { z_max, .. } => z_max.is_finite(),
        }
    }

    /// Largest point of the support (infinite for unbounded families).
    pub fn support_max(&self) -> f64 {
        match &self.family {
            MeasureFamily::Atoms(atoms) => atoms.iter().map(|a| a.location).fold(0.0, f64::max),
            MeasureFamily::Power { z_max, .. } => *z_max,
            MeasureFamily::Tempered { .. } => f64::INFINITY,
        }
    }

    /// `∫ (z^p ∧ z²) μ(dz)`, the integrability condition on μ.
    pub fn h1_integral(&self) -> f64 {
        let p = self.p;
        match &self.family {
            MeasureFamily::Atoms(atoms) => atoms
                .iter()
                .map(|a| a.weight * a.location.powf(p).min(a.location * a.location))
                .sum(),
            MeasureFamily::Power { scale, alpha, z_max } => {
                let m = z_max.min(1.0);
                let near = scale * m.powf(2.0 - alpha) / (2.0 - alpha);
                let far = if *z_max <= 1.0 {
                    0.0
                } else if z_max.is_infinite() {
                    if p < *alpha {
                        scale / (alpha - p)
                    } else {
                        f64::INFINITY
                    }
                } else if (p - alpha).abs() < 1e-15 {
                    scale * z_max.ln()
                } else {
                    scale * (z_max.powf(p - alpha) - 1.0) / (p - alpha)
                };
                near + far
            }
            MeasureFamily::Tempered { .. } => {
                self.integrate(Region::SMALL, &|z| z * z, &[]) + self.integrate(Region::BIG, &|z| z.powf(p), &[])
            }
        }
    }

    /// `∫_region g(z) μ(dz)`. `breaks` are optional points (in `z`) where
    /// the integrand changes quickly.
    pub fn integrate<G: Fn(f64) -> f64>(&self, region: Region, g: &G, breaks: &[f64]) -> f64 {
        match &self.family {
            MeasureFamily::Atoms(atoms) => atoms
                .iter()
                .filter(|a| region.contains(a.location))
                .map(|a| a.weight * g(a.location))
                .sum(),
            MeasureFamily::Power { scale, alpha, z_max } => {
                self.integrate_density(region, g, breaks, *scale, *alpha, 0.0, *z_max)
            }
            MeasureFamily::Tempered { scale, alpha, theta } => {
                self.integrate_density(region, g, breaks, *scale, *alpha, *theta, f64::INFINITY)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn integrate_density<G: Fn(f64) -> f64>(
        &self,
        region: Region,
        g: &G,
        breaks: &[f64],
        scale: f64,
        alpha: f64,
        theta: f64,
        z_max: f64,
    ) -> f64 {
        let lo = region.lo.max(0.0);
        let hi = region.hi.min(z_max);
        if !(hi > lo) {
            return 0.0;
        }
        let mut total = 0.0;

        let a = lo;
        let b = hi.min(1.0);
        if b > a && a > 0.0 {
            // Bounded below: z = e^y keeps the integrand bounded whatever g is.
            let f = |y: f64| {
                let z = y.exp();
                g(z) * scale * z.powf(-alpha) * (-theta * z).exp()
            };
            let mut pts = vec![a.ln(), b.ln()];
            pts.extend(breaks.iter().filter(|&&z| z > a && z < b).map(|z| z.ln()));
            sort_dedup(&mut pts);
            total += adaptive(&self.rule, &f, &pts, QUAD_REL_TOL);
        } else if b > a {
            // (0, b] in t = z^(2-α); μ(dz) = C κ z^-2 e^{-θz} dt.

            let kappa = 1.0 / (2.0 - alpha);
            let to_t = |z: f64| z.powf(2.0 - alpha);
            let f = |t: f64| {
                let z = t.powf(kappa);
                if z <= 0.0 {
                    return 0.0;
                }
                let v = g(z);
                if v == 0.0 {
                    return 0.0;
                }
                v / z * (scale * kappa / z) * (-theta * z).exp()
            };
            let mut pts = vec![to_t(a), to_t(b)];
            pts.extend(breaks.iter().filter(|&&z| z > a && z < b).map(|&z| to_t(z)));
            sort_dedup(&mut pts);
            total += adaptive(&self.rule, &f, &pts, QUAD_REL_TOL);
        }

        // (max(lo, 1), hi] in s with z = a s^{-γ}, γ = 1/(α-1);
        // μ(dz) = C γ a^{-α} s^γ e^{-θz} ds.
        let a = lo.max(1.0);
        if hi > a {
            let gamma = 1.0 / (alpha - 1.0);
            let to_s = |z: f64| {
                if z.is_infinite() {
                    0.0
                } else {
                    (a / z).powf(alpha - 1.0)
                }
            };
            let pref = scale * gamma * a.powf(-alpha);
            let f = |s: f64| {
                if s <= 0.0 {
                    return 0.0;
                }
                let z = a * s.powf(-gamma);
                let w = pref * s.powf(gamma) * (-theta * z).exp();
                if w == 0.0 {
                    0.0
                } else {
                    g(z) * w
                }
            };
            let mut pts = vec![to_s(hi), 1.0];
            pts.extend(breaks.iter().filter(|&&z| z > a && z < hi).map(|&z| to_s(z)));
            sort_dedup(&mut pts);
            total += adaptive(&self.rule, &f, &pts, QUAD_REL_TOL);
        }
        total
    }

    fn check_u(u: f64) -> Result<()> {
        if u >= 0.0 && u.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "argument must be a finite non-negative real, got {u}"
            )))
        }
    }

    /// `L^{1,-}(u) = ∫_(0,1] (e^{-uz} - 1 + uz) μ(dz)`.
    pub fn l_small(&self, u: f64) -> Result<f64> {
        Self::check_u(u)?;
        Ok(self.memo.get_or_insert(Functional::LSmall, u, || {
            self.integrate(Region::SMALL, &|z| phi(u * z), &[])
        }))
    }

    /// `L^{1,+}(u) = ∫_(1,inf) (e^{-uz} - 1 + uz) μ(dz)`.
    pub fn l_big(&self, u: f64) -> Result<f64> {
        Self::check_u(u)?;
        Ok(self.memo.get_or_insert(Functional::LBig, u, || {
            self.integrate(Region::BIG, &|z| phi(u * z), &[])
        }))
    }

    /// `L(u)`, the sum of the two halves.
    pub fn l_total(&self, u: f64) -> Result<f64> {
        Ok(self.l_small(u)? + self.l_big(u)?)
    }

    /// `α_{-,N} = ∫_(0,1] z (1 - e^{-Nz}) μ(dz)`.
    pub fn alpha_small(&self, n: u64) -> f64 {
        let nf = n as f64;
        self.memo.get_or_insert(Functional::AlphaSmall, nf, || {
            self.integrate(Region::SMALL, &|z| z * -(-nf * z).exp_m1(), &[])
        })
    }

    /// `α_{+,N} = ∫_(1,inf) z (1 - e^{-Nz}) μ(dz)`.
    pub fn alpha_big(&self, n: u64) -> f64 {
        let nf = n as f64;
        self.memo.get_or_insert(Functional::AlphaBig, nf, || {
            self.integrate(Region::BIG, &|z| z * -(-nf * z).exp_m1(), &[])
        })
    }

    /// `∫_region (Nz)^k e^{-Nz} / k! μ(dz)`, the unnormalized offspring
    /// weight of class `k`.
    pub fn poisson_weight(&self, region: Region, n: u64, k: u64) -> f64 {
        let nf = n as f64;
        let kf = k as f64;
        let mut breaks = Vec::with_capacity(13);
        let sd = kf.sqrt().max(1.0);
        for j in -6..=6 {
            let z = (kf + j as f64 * sd) / nf;
            if z > 0.0 {
                breaks.push(z);
            }
        }
        let log_fact = statrs::function::gamma::ln_gamma(kf + 1.0);
        self.integrate(
            region,
            &|z| {
                let lambda = nf * z;
                if lambda <= 0.0 {
                    return if k == 0 { 1.0 } else { 0.0 };
                }
                (kf * lambda.ln() - lambda - log_fact).exp()
            },
            &breaks,
        )
    }

    /// `∫_(0,1] z² μ(dz)`.
    pub fn second_moment_small(&self) -> f64 {
        self.integrate(Region::SMALL, &|z| z * z, &[])
    }

    /// `∫_(1,inf) z μ(dz)`, the bound on `α_{+,N}`.
    pub fn first_moment_big(&self) -> f64 {
        self.integrate(Region::BIG, &|z| z, &[])
    }

    /// `(μ([δ,∞)), ∫_[δ,∞) z μ(dz), ∫_(0,δ) z² μ(dz))`.
    pub fn tail_stats(&self, delta: f64) -> Result<TailStats> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("delta must be positive, got {delta}")));
        }
        let mass = self.memo.get_or_insert(Functional::TailMass, delta, || {
            self.integrate(Region::at_or_above(delta), &|_| 1.0, &[])
        });
        let mean = self.memo.get_or_insert(Functional::TailMean, delta, || {
            self.integrate(Region::at_or_above(delta), &|z| z, &[])
        });
        let second_moment_below = self.memo.get_or_insert(Functional::SecondBelow, delta, || {
            self.integrate(Region::below(delta), &|z| z * z, &[])
        });
        Ok(TailStats {
            mass,
            mean,
            second_moment_below,
        })
    }

    /// Smallest threshold `δ` with `μ([δ,∞)) <= target`.
    pub fn threshold_for_tail_mass(&self, target: f64) -> f64 {
        match &self.family {
            MeasureFamily::Atoms(atoms) => {
                let mut locs: Vec<f64> = atoms.iter().map(|a| a.location).collect();
                locs.sort_by(f64::total_cmp);
                locs.dedup();
                for &z in &locs {
                    let mass: f64 = atoms.iter().filter(|a| a.location >= z).map(|a| a.weight).sum();
                    if mass <= target {
                        return z;
                    }
                }
                // No admissible atom: put every jump below the threshold.
                locs.last().map_or(1.0, |z| z * (1.0 + 1e-9))
            }
            _ => {
                let upper = self.support_max();
                let mass = |d: f64| self.integrate(Region::at_or_above(d), &|_| 1.0, &[]);
                let (mut lo, mut hi) = (1e-12_f64.ln(), if upper.is_finite() { upper.ln() } else { 50.0 });
                if mass(lo.exp()) <= target {
                    return lo.exp();
                }
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if mass(mid.exp()) <= target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi.exp()
            }
        }
    }

    /// Draws from μ restricted to `[δ, ∞)` and normalized.
    pub fn sample_jump_ge<R: Rng + ?Sized>(&self, delta: f64, rng: &mut R) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("delta must be positive, got {delta}")));
        }
        match &self.family {
            MeasureFamily::Atoms(atoms) => {
                let mass: f64 = atoms.iter().filter(|a| a.location >= delta).map(|a| a.weight).sum();
                if mass <= 0.0 {
                    return Err(Error::EmptyTail { delta });
                }
                let mut u = rng.random::<f64>() * mass;
                let mut last = delta;
                for a in atoms.iter().filter(|a| a.location >= delta) {
                    last = a.location;
                    if u < a.weight {
                        return Ok(a.location);
                    }
                    u -= a.weight;
                }
                Ok(last)
            }
            MeasureFamily::Power { alpha, z_max, .. } => {
                if delta >= *z_max {
                    return Err(Error::EmptyTail { delta });
                }
                Ok(sample_pareto(delta, *alpha, *z_max, rng))
            }
            MeasureFamily::Tempered { alpha, theta, .. } => {
                if theta * delta < 1.0 {
                    // Pareto proposal, accept with e^{-θ(z-δ)}.
                    loop {
                        let z = sample_pareto(delta, *alpha, f64::INFINITY, rng);
                        if rng.random::<f64>() < (-theta * (z - delta)).exp() {
                            return Ok(z);
                        }
                    }
                } else {
                    // Shifted exponential proposal, accept with (δ/z)^{1+α}.
                    loop {
                        let e: f64 = rng.sample(rand_distr::Exp1);
                        let z = delta + e / theta;
                        if rng.random::<f64>() < (delta / z).powf(1.0 + alpha) {
                            return Ok(z);
                        }
                    }
                }
            }
        }
    }
}

fn check_density(scale: f64, alpha: f64) -> Result<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidMeasure(format!("scale must be positive, got {scale}")));
    }
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::InvalidMeasure(format!("alpha must lie in (1, 2), got {alpha}")));
    }
    Ok(())
}

/// Inverse-CDF draw from the density ∝ z^{-1-α} on `[δ, z_max]`.
fn sample_pareto<R: Rng + ?Sized>(delta: f64, alpha: f64, z_max: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let a = delta.powf(-alpha);
    let b = if z_max.is_finite() { z_max.powf(-alpha) } else { 0.0 };
    (a - u * (a - b)).powf(-1.0 / alpha).min(z_max)
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));
}

/// Tail summary used by the big/small jump split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub mass: f64,
    pub mean: f64,
    pub second_moment_below: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Series oracle: ∫_0^1 (e^{-uz}-1+uz) z^{-1-α} dz = Σ_{k≥2} (-u)^k / (k! (k-α)).
    fn l_small_series(u: f64, alpha: f64) -> f64 {
        let mut term = 1.0; // (-u)^k / k!
        let mut acc = 0.0;
        for k in 1..400 {
            term *= -u / k as f64;
            if k >= 2 {
                acc += term / (k as f64 - alpha);
            }
            if k > 10 && term.abs() < 1e-30 {
                break;
            }
        }
        acc
    }

    // Γ(-α) through Γ(2-α) / ((-α)(1-α)), positive arguments only.
    fn gamma_neg_alpha(alpha: f64) -> f64 {
        statrs::function::gamma::gamma(2.0 - alpha) / (alpha * (alpha - 1.0))
    }

    #[test]
    fn l_at_zero_vanishes() {
        let m = JumpMeasure::power(1.0, 1.5, f64::INFINITY).unwrap();
        assert_eq!(m.l_small(0.0).unwrap(), 0.0);
        assert_eq!(m.l_big(0.0).unwrap(), 0.0);
    }

    #[test]
    fn single_atom_closed_forms() {
        let m = JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap();
        let e2 = (-2.0f64).exp();
        assert_relative_eq!(m.l_big(1.0).unwrap(), e2 - 1.0 + 2.0, max_relative = 1e-15);
        assert_eq!(m.l_small(1.0).unwrap(), 0.0);
        for n in [1u64, 3, 10] {
            assert_relative_eq!(
                m.alpha_big(n),
                2.0 * (1.0 - (-2.0 * n as f64).exp()),
                max_relative = 1e-15
            );
            assert_eq!(m.alpha_small(n), 0.0);
        }
        let half = JumpMeasure::atoms(&[(0.5, 1.0)]).unwrap();
        assert_relative_eq!(half.alpha_small(2), 0.5 * (1.0 - (-1.0f64).exp()), max_relative = 1e-15);
        for u in [0.1, 1.0, 10.0] {
            assert_eq!(half.l_small(u).unwrap() - half.l_total(u).unwrap(), 0.0);
        }
    }

    #[test]
    fn negative_argument_is_rejected() {
        let m = JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap();
        assert!(matches!(m.l_small(-1.0), Err(Error::Domain(_))));
        assert!(matches!(m.tail_stats(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn power_density_matches_series_and_gamma_oracles() {
        for alpha in [1.2, 1.5, 1.8] {
            let m = JumpMeasure::power(1.0, alpha, f64::INFINITY).unwrap();
            for u in [0.1, 1.0, 10.0] {
                let small = m.l_small(u).unwrap();
                assert_relative_eq!(small, l_small_series(u, alpha), max_relative = 1e-10);
                let total = gamma_neg_alpha(alpha) * u.powf(alpha);
                assert_relative_eq!(m.l_total(u).unwrap(), total, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn power_alpha_small_matches_series() {
        // α_{-,N} = Σ_{k≥1} (-1)^{k+1} N^k / (k! (k+1-α)).
        let alpha = 1.5;
        let m = JumpMeasure::power(1.0, alpha, f64::INFINITY).unwrap();
        for n in [1u64, 5, 10] {
            let nf = n as f64;
            let mut term = 1.0;
            let mut acc = 0.0;
            for k in 1..200 {
                term *= nf / k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                acc += sign * term / (k as f64 + 1.0 - alpha);
            }
            assert_relative_eq!(m.alpha_small(n), acc, max_relative = 1e-10);
        }
    }

    #[test]
    fn tail_stats_for_atoms() {
        let m = JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap();
        let t = m.tail_stats(1.0).unwrap();
        assert_eq!((t.mass, t.mean, t.second_moment_below), (1.0, 2.0, 0.0));
        let m = JumpMeasure::atoms(&[(0.5, 1.0)]).unwrap();
        let t = m.tail_stats(1.0).unwrap();
        assert_eq!((t.mass, t.mean, t.second_moment_below), (0.0, 0.0, 0.25));
        let t = m.tail_stats(1e300).unwrap();
        assert_eq!((t.mass, t.mean, t.second_moment_below), (0.0, 0.0, 0.25));
    }

    #[test]
    fn tail_stats_for_power_closed_form() {
        let (c, alpha, z_max) = (2.0, 1.5, 8.0);
        let m = JumpMeasure::power(c, alpha, z_max).unwrap();
        for delta in [0.05, 0.7, 3.0] {
            let t = m.tail_stats(delta).unwrap();
            let mass = c * (delta.powf(-alpha) - z_max.powf(-alpha)) / alpha;
            let mean = c * (delta.powf(1.0 - alpha) - z_max.powf(1.0 - alpha)) / (alpha - 1.0);
            let below = c * delta.powf(2.0 - alpha) / (2.0 - alpha);
            assert_relative_eq!(t.mass, mass, max_relative = 1e-10);
            assert_relative_eq!(t.mean, mean, max_relative = 1e-10);
            assert_relative_eq!(t.second_moment_below, below, max_relative = 1e-10);
        }
    }

    #[test]
    fn tail_sampler_mean_and_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap();
        for _ in 0..100 {
            assert_eq!(m.sample_jump_ge(1.0, &mut rng).unwrap(), 2.0);
        }
        let m = JumpMeasure::atoms(&[(1.0, 1.0), (3.0, 1.0)]).unwrap();
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| m.sample_jump_ge(0.5, &mut rng).unwrap() == 1.0)
            .count();
        let freq = ones as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 4.0 * se, "freq {freq}");

        let m = JumpMeasure::atoms(&[(0.5, 1.0)]).unwrap();
        assert!(matches!(m.sample_jump_ge(1.0, &mut rng), Err(Error::EmptyTail { .. })));
    }

    #[test]
    fn density_tail_sampler_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        for m in [
            JumpMeasure::power(1.0, 1.5, 20.0).unwrap(),
            JumpMeasure::tempered(1.0, 1.5, 0.5).unwrap(),
            JumpMeasure::tempered(1.0, 1.3, 4.0).unwrap(),
        ] {
            let delta = 0.3;
            let xs: Vec<f64> = (0..n).map(|_| m.sample_jump_ge(delta, &mut rng).unwrap()).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let t = m.tail_stats(delta).unwrap();
            let target = t.mean / t.mass;
            assert!(
                (mean - target).abs() < 4.0 * (var / n as f64).sqrt(),
                "{m:?}: {mean} vs {target}"
            );
        }
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(JumpMeasure::atoms(&[(0.0, 1.0)]).is_err());
        assert!(JumpMeasure::atoms(&[(1.0, -1.0)]).is_err());
        assert!(JumpMeasure::power(1.0, 2.0, 1.0).is_err());
        assert!(JumpMeasure::power(1.0, 1.0, 1.0).is_err());
        let unbounded = MeasureFamily::Power {
            scale: 1.0,
            alpha: 1.4,
            z_max: f64::INFINITY,
        };
        assert!(JumpMeasure::new(unbounded, 1.6, 20).is_err());
    }

    #[test]
    fn memo_records_requested_arguments() {
        let m = JumpMeasure::power(1.0, 1.5, 4.0).unwrap();
        let a = m.l_small(2.0).unwrap();
        let b = m.l_small(2.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(m.functionals().len(), 1);
    }

    #[test]
    fn threshold_for_tail_mass_is_monotone_inverse() {
        let m = JumpMeasure::power(1.0, 1.5, f64::INFINITY).unwrap();
        let d = m.threshold_for_tail_mass(100.0);
        let t = m.tail_stats(d).unwrap();
        assert_relative_eq!(t.mass, 100.0, max_relative = 1e-6);
        let atoms = JumpMeasure::atoms(&[(0.5, 300.0), (2.0, 1.0)]).unwrap();
        assert_eq!(atoms.threshold_for_tail_mass(100.0), 2.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn l_split_and_bounds(u in 0.0f64..50.0, alpha in 1.1f64..1.9, z_max in 0.5f64..20.0) {
                let m = JumpMeasure::power(1.3, alpha, z_max).unwrap();
                let small = m.l_small(u).unwrap();
                let big = m.l_big(u).unwrap();
                let total = m.l_total(u).unwrap();
                prop_assert!((total - (small + big)).abs() <= 1e-9 * total.abs().max(1e-300));
                prop_assert!(small >= 0.0);
                prop_assert!(small <= u * u / 2.0 * m.second_moment_small() * (1.0 + 1e-12));
            }

            #[test]
            fn l_is_non_decreasing(u in 0.0f64..30.0, du in 0.0f64..5.0) {
                let m = JumpMeasure::tempered(1.0, 1.6, 0.7).unwrap();
                prop_assert!(m.l_total(u + du).unwrap() >= m.l_total(u).unwrap() * (1.0 - 1e-12));
            }

            #[test]
            fn alpha_monotone_in_n(n in 1u64..200) {
                let m = JumpMeasure::power(1.0, 1.5, 6.0).unwrap();
                prop_assert!(m.alpha_small(n + 1) >= m.alpha_small(n));
                prop_assert!(m.alpha_big(n + 1) >= m.alpha_big(n) * (1.0 - 1e-14));
                prop_assert!(m.alpha_big(n) <= m.first_moment_big() * (1.0 + 1e-12));
            }
        }
    }
}
