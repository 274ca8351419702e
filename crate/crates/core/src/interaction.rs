//! The interaction drift `f` and the windowed rate sums it induces on a
//! population of ordered individuals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serialized form of an interaction function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InteractionKind {
    Zero,
    /// `a x`.
    Linear {
        a: f64,
    },
    /// `a x - b x²`; past `clip` it continues along its tangent line, which
    /// keeps the derivative bounded.
    Logistic {
        a: f64,
        b: f64,
        #[serde(default)]
        clip: Option<f64>,
    },
    /// Piecewise-linear interpolation through `(x[i], y[i])`, with
    /// `x[0] = 0`, `y[0] = 0`, extended by the last slope.
    Table {
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

/// `f` together with its growth constant `β`: `f(x + y) - f(x) <= β y`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionFunction {
    kind: InteractionKind,
    beta: f64,
    derivative_bound: Option<f64>,
}

/// Grid on which the growth condition is sampled at construction.
const GROWTH_GRID: [f64; 12] = [0.0, 0.01, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0];

impl InteractionFunction {
    pub fn new(kind: InteractionKind, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInteraction(format!("beta must be positive, got {beta}")));
        }
        match &kind {
            InteractionKind::Zero => {}
            InteractionKind::Linear { a } => finite("a", *a)?,
            InteractionKind::Logistic { a, b, clip } => {
                finite("a", *a)?;
                finite("b", *b)?;
                if let Some(c) = clip {
                    if !(*c > 0.0 && c.is_finite()) {
                        return Err(Error::InvalidInteraction(format!("clip must be positive, got {c}")));
                    }
                }
            }
            InteractionKind::Table { x, y } => {
                if x.len() != y.len() || x.len() < 2 {
                    return Err(Error::InvalidInteraction(
                        "table needs matching x and y with at least two points".into(),
                    ));
                }
                if x[0] != 0.0 || y[0] != 0.0 {
                    return Err(Error::InvalidInteraction("table must start at (0, 0)".into()));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInteraction(
                        "table abscissae must be strictly increasing and values finite".into(),
                    ));
                }
            }
        }
        let derivative_bound = match &kind {
            InteractionKind::Zero => Some(0.0),
            InteractionKind::Linear { a } => Some(a.abs()),
            InteractionKind::Logistic { a, b, clip } => clip.map(|c| a.abs().max((a - 2.0 * b * c).abs())),
            InteractionKind::Table { x, y } => Some(
                x.windows(2)
                    .zip(y.windows(2))
                    .map(|(xs, ys)| ((ys[1] - ys[0]) / (xs[1] - xs[0])).abs())
                    .fold(0.0, f64::max),
            ),
        };
        let f = Self {
            kind,
            beta,
            derivative_bound,
        };
        if f.eval(0.0) != 0.0 {
            return Err(Error::InvalidInteraction("f(0) must be 0".into()));
        }
        f.check_growth(&GROWTH_GRID)?;
        Ok(f)
    }

    pub fn zero() -> Self {
        Self::new(InteractionKind::Zero, 1.0).expect("zero drift is valid")
    }

    pub fn linear(a: f64) -> Result<Self> {
        Self::new(InteractionKind::Linear { a }, a.max(f64::EPSILON))
    }

    pub fn logistic(a: f64, b: f64) -> Result<Self> {
        Self::new(InteractionKind::Logistic { a, b, clip: None }, a.max(f64::EPSILON))
    }

    pub fn clipped_logistic(a: f64, b: f64, clip: f64) -> Result<Self> {
        Self::new(
            InteractionKind::Logistic { a, b, clip: Some(clip) },
            a.max(f64::EPSILON),
        )
    }

    pub fn kind(&self) -> &InteractionKind {
        &self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `sup |f'|` when finite.
    pub fn derivative_bound(&self) -> Option<f64> {
        self.derivative_bound
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, InteractionKind::Zero)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            InteractionKind::Zero => 0.0,
            InteractionKind::Linear { a } => a * x,
            InteractionKind::Logistic { a, b, clip } => match clip {
                Some(c) if x > *c => {
                    let fc = a * c - b * c * c;
                    fc + (a - 2.0 * b * c) * (x - c)
                }
                _ => a * x - b * x * x,
            },
            InteractionKind::Table { x: xs, y: ys } => {
                let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
                let slope = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
                ys[i - 1] + slope * (x - xs[i - 1])
            }
        }
    }

    /// `f'(x)` (right derivative at kinks).
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            InteractionKind::Zero => 0.0,
            InteractionKind::Linear { a } => *a,
            InteractionKind::Logistic { a, b, clip } => match clip {
                Some(c) if x > *c => a - 2.0 * b * c,
                _ => a - 2.0 * b * x,
            },
            InteractionKind::Table { x: xs, y: ys } => {
                let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
                (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])
            }
        }
    }

    /// Samples `f(x + y) - f(x) <= β y` over all pairs of `grid`.
    pub fn check_growth(&self, grid: &[f64]) -> Result<()> {
        for &x in grid {
            for &y in grid {
                let lhs = self.eval(x + y) - self.eval(x);
                if lhs > self.beta * y * (1.0 + 1e-12) + 1e-12 {
                    return Err(Error::InvalidInteraction(format!(
                        "growth bound fails at x = {x}, y = {y}: f(x+y) - f(x) = {lhs} > beta y = {}",
                        self.beta * y
                    )));
                }
            }
        }
        Ok(())
    }

    /// `Σ_{i=k+1}^{k'} |f(i/N) - f((i-1)/N)|` for `v = k/N <= v' = k'/N`.
    pub fn variation(&self, n: u64, k: u64, k_prime: u64) -> f64 {
        let nf = n as f64;
        (k + 1..=k_prime)
            .map(|i| (self.eval(i as f64 / nf) - self.eval((i - 1) as f64 / nf)).abs())
            .sum()
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInteraction(format!("{name} must be finite, got {v}")))
    }
}

/// Cached values `g(i) = out_scale * f(i / in_scale)` on the integers,
/// grown on demand. The per-individual interaction increment is
/// `g(i) - g(i - 1)`.
#[derive(Debug, Clone)]
pub struct IncrementTable {
    f: InteractionFunction,
    in_scale: f64,
    out_scale: f64,
    values: Vec<f64>,
}

impl IncrementTable {
    /// The rescaled model at size `N`: `g(i) = N f(i / N)`.
    pub fn scaled(f: &InteractionFunction, n: u64) -> Self {
        Self::new(f, n as f64, n as f64)
    }

    /// The unscaled model: `g(i) = f(i)`.
    pub fn unscaled(f: &InteractionFunction) -> Self {
        Self::new(f, 1.0, 1.0)
    }

    fn new(f: &InteractionFunction, in_scale: f64, out_scale: f64) -> Self {
        Self {
            f: f.clone(),
            in_scale,
            out_scale,
            values: vec![0.0],
        }
    }

    pub fn function(&self) -> &InteractionFunction {
        &self.f
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_zero()
    }

    fn ensure(&mut self, i: u64) {
        let i = i as usize;
        while self.values.len() <= i {
            let j = self.values.len() as f64;
            self.values.push(self.out_scale * self.f.eval(j / self.in_scale));
        }
    }

    /// `g(i)`.
    pub fn value(&mut self, i: u64) -> f64 {
        self.ensure(i);
        self.values[i as usize]
    }

    /// `g(i) - g(i - 1)` for `i >= 1`.
    pub fn increment(&mut self, i: u64) -> f64 {
        debug_assert!(i >= 1);
        self.ensure(i);
        self.values[i as usize] - self.values[i as usize - 1]
    }
}

/// Number of incremental updates between full recomputations.
pub const RECOMPUTE_EVERY: u64 = 1 << 20;

/// Positive and negative parts of `Σ_{i=lo+1}^{hi} (g(i) - g(i-1))`,
/// maintained as the window `(lo, hi]` moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionSums {
    lo: u64,
    hi: u64,
    plus: f64,
    minus: f64,
    updates: u64,
}

impl InteractionSums {
    pub fn new(table: &mut IncrementTable, lo: u64, hi: u64) -> Self {
        let mut s = Self {
            lo,
            hi,
            plus: 0.0,
            minus: 0.0,
            updates: 0,
        };
        s.recompute(table);
        s
    }

    /// The window of the whole population `(0, k]`.
    pub fn from_count(table: &mut IncrementTable, k: u64) -> Self {
        Self::new(table, 0, k)
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    /// Number of individuals in the window.
    pub fn count(&self) -> u64 {
        self.hi - self.lo
    }

    /// Rate of interaction births.
    pub fn plus(&self) -> f64 {
        self.plus
    }

    /// Rate of interaction deaths.
    pub fn minus(&self) -> f64 {
        self.minus
    }

    fn recompute(&mut self, table: &mut IncrementTable) {
        let (mut p, mut m) = (0.0, 0.0);
        if !table.is_zero() {
            for i in self.lo + 1..=self.hi {
                let d = table.increment(i);
                if d > 0.0 {
                    p += d;
                } else {
                    m -= d;
                }
            }
        }
        self.plus = p;
        self.minus = m;
        self.updates = 0;
    }

    fn add(&mut self, d: f64, sign: f64) {
        if d > 0.0 {
            self.plus += sign * d;
        } else {
            self.minus -= sign * d;
        }
    }

    /// Moves the upper end of the window to `hi`.
    pub fn set_hi(&mut self, table: &mut IncrementTable, hi: u64) {
        debug_assert!(hi >= self.lo);
        if table.is_zero() {
            self.hi = hi;
            return;
        }
        while self.hi < hi {
            self.hi += 1;
            let d = table.increment(self.hi);
            self.add(d, 1.0);
        }
        while self.hi > hi {
            let d = table.increment(self.hi);
            self.add(d, -1.0);
            self.hi -= 1;
        }
        self.after_update(table);
    }

    /// Moves the whole window to `(lo, lo + count]`.
    pub fn set_window(&mut self, table: &mut IncrementTable, lo: u64, count: u64) {
        if table.is_zero() {
            self.lo = lo;
            self.hi = lo + count;
            return;
        }
        let shift = lo.abs_diff(self.lo);
        if shift > count + self.count() {
            *self = Self::new(table, lo, lo + count);
            return;
        }
        while self.lo < lo {
            self.lo += 1;
            let d = table.increment(self.lo);
            self.add(d, -1.0);
        }
        while self.lo > lo {
            let d = table.increment(self.lo);
            self.add(d, 1.0);
            self.lo -= 1;
        }
        self.set_hi(table, lo + count);
    }

    fn after_update(&mut self, table: &mut IncrementTable) {
        self.updates += 1;
        if self.updates >= RECOMPUTE_EVERY {
            self.recompute(table);
        }
        self.check_telescoping(table);
    }

    /// `plus - minus = g(hi) - g(lo)`.
    pub fn check_telescoping(&self, table: &mut IncrementTable) {
        let target = table.value(self.hi) - table.value(self.lo);
        let diff = self.plus - self.minus - target;
        let scale = 1.0 + self.plus + self.minus;
        assert!(
            diff.abs() <= 1e-9 * scale,
            "interaction sums drifted: plus - minus - (g(hi) - g(lo)) = {diff}"
        );
        debug_assert!(self.plus >= -1e-9 * scale && self.minus >= -1e-9 * scale);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logistic_values_and_bounds() {
        let f = InteractionFunction::logistic(1.0, 1.0).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(1.0), 0.0);
        assert_eq!(f.eval(0.5), 0.25);
        assert_eq!(f.derivative_bound(), None);
        let g = InteractionFunction::clipped_logistic(1.0, 1.0, 2.0).unwrap();
        assert_eq!(g.derivative_bound(), Some(3.0));
        assert_eq!(g.eval(3.0), -2.0 - 3.0);
        assert_eq!(g.derivative(5.0), -3.0);
    }

    #[test]
    fn growth_violation_is_rejected() {
        assert!(InteractionFunction::new(InteractionKind::Linear { a: 2.0 }, 1.0).is_err());
        assert!(InteractionFunction::new(InteractionKind::Linear { a: -1.0 }, 0.1).is_ok());
        let table = InteractionKind::Table {
            x: vec![0.0, 1.0],
            y: vec![1.0, 0.0],
        };
        assert!(InteractionFunction::new(table, 1.0).is_err());
    }

    #[test]
    fn table_interpolates_and_extrapolates() {
        let f = InteractionFunction::new(
            InteractionKind::Table {
                x: vec![0.0, 1.0, 2.0],
                y: vec![0.0, 1.0, 0.0],
            },
            1.0,
        )
        .unwrap();
        assert_eq!(f.eval(0.5), 0.5);
        assert_eq!(f.eval(1.5), 0.5);
        assert_eq!(f.eval(3.0), -1.0);
        assert_eq!(f.derivative_bound(), Some(1.0));
    }

    #[test]
    fn variation_bound_on_logistic_grid() {
        // ‖f‖_{N,v,v'} <= 2β(v' - v) + f(v) - f(v').
        let (a, b) = (1.0, 1.0);
        let f = InteractionFunction::logistic(a, b).unwrap();
        let n = 50;
        for k in [0u64, 10, 25, 60] {
            for kp in [k, k + 1, k + 30, k + 200] {
                let (v, vp) = (k as f64 / n as f64, kp as f64 / n as f64);
                let lhs = f.variation(n, k, kp);
                let rhs = 2.0 * f.beta() * (vp - v) + f.eval(v) - f.eval(vp);
                assert!(lhs <= rhs + 1e-12, "k={k}, k'={kp}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn sums_telescope_and_respect_growth() {
        let f = InteractionFunction::logistic(2.0, 1.0).unwrap();
        let n = 20;
        let mut table = IncrementTable::scaled(&f, n);
        let mut s = InteractionSums::from_count(&mut table, 0);
        for k in [5u64, 40, 41, 17, 0, 90] {
            s.set_hi(&mut table, k);
            let nf = n as f64;
            assert_relative_eq!(s.plus() - s.minus(), nf * f.eval(k as f64 / nf), epsilon = 1e-9);
            assert!(s.plus() <= nf * f.beta() * k as f64 / nf + 1e-9);
            assert!(s.minus() <= nf * (f.beta() * k as f64 / nf - f.eval(k as f64 / nf)) + 1e-9);
        }
    }

    #[test]
    fn shifted_window_matches_fresh_sum() {
        let f = InteractionFunction::logistic(1.0, 0.5).unwrap();
        let mut table = IncrementTable::scaled(&f, 10);
        let mut s = InteractionSums::new(&mut table, 3, 12);
        for (lo, count) in [(4u64, 9u64), (2, 20), (30, 1), (0, 0), (7, 3)] {
            s.set_window(&mut table, lo, count);
            let fresh = InteractionSums::new(&mut table, lo, lo + count);
            assert_relative_eq!(s.plus(), fresh.plus(), epsilon = 1e-9);
            assert_relative_eq!(s.minus(), fresh.minus(), epsilon = 1e-9);
        }
    }

    #[test]
    fn spec_round_trip() {
        let k: InteractionKind = serde_json::from_str(r#"{"kind":"logistic","a":1,"b":1,"clip":2}"#).unwrap();
        assert_eq!(
            k,
            InteractionKind::Logistic {
                a: 1.0,
                b: 1.0,
                clip: Some(2.0)
            }
        );
        assert!(serde_json::from_str::<InteractionKind>(r#"{"kind":"linear","a":1,"z":0}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn random_walk_of_window_telescopes(steps in proptest::collection::vec(-3i64..4, 1..200)) {
                let f = InteractionFunction::logistic(1.5, 2.0).unwrap();
                let mut table = IncrementTable::scaled(&f, 7);
                let mut s = InteractionSums::from_count(&mut table, 5);
                let mut k = 5i64;
                for d in steps {
                    k = (k + d).max(0);
                    s.set_hi(&mut table, k as u64);
                }
                let target = table.value(k as u64);
                prop_assert!((s.plus() - s.minus() - target).abs() < 1e-9);
            }
        }
    }
}
