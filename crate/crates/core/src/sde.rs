//! Explicit Euler scheme for the limiting jump-diffusion and its
//! martingale-problem residual.
//!
//! Jumps at or above the threshold `δ` are drawn exactly (Poisson count,
//! sizes from the normalized tail) and compensated by their mean; the
//! compensated jumps below `δ` are either replaced by a Gaussian with the
//! same variance or dropped.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::InteractionFunction;
use crate::measure::{JumpMeasure, TailStats};
use crate::path::{PathKind, PiecewisePath};
use crate::population::RecordMode;
use crate::stats::moment_stats;

/// Target for `x μ([δ,∞)) dt` when the threshold is chosen automatically.
pub const DEFAULT_JUMPS_PER_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumpMode {
    #[default]
    DiffusionSurrogate,
    Drop,
}

/// Step size, jump threshold and small-jump treatment. Negative values are
/// always clamped to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeScheme {
    pub dt: f64,
    pub delta_jump: f64,
    pub small_jump_mode: SmallJumpMode,
}

impl SdeScheme {
    pub fn new(dt: f64, delta_jump: f64, small_jump_mode: SmallJumpMode) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::StepSize(dt));
        }
        if !(delta_jump > 0.0) {
            return Err(Error::Domain(format!(
                "jump threshold must be positive, got {delta_jump}"
            )));
        }
        Ok(Self {
            dt,
            delta_jump,
            small_jump_mode,
        })
    }

    /// Picks the smallest `δ` with `x μ([δ,∞)) dt <= 0.1`.
    pub fn with_default_delta(measure: &JumpMeasure, x: f64, dt: f64, mode: SmallJumpMode) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::StepSize(dt));
        }
        let delta = if x > 0.0 {
            measure.threshold_for_tail_mass(DEFAULT_JUMPS_PER_STEP / (x * dt))
        } else {
            1.0
        };
        Self::new(dt, delta, mode)
    }
}

/// A discretized trajectory and the big jumps it took.
#[derive(Debug, Clone, PartialEq)]
pub struct SdePath {
    pub path: PiecewisePath,
    /// `(time, size)` of every simulated jump at or above the threshold.
    pub jumps: Vec<(f64, f64)>,
}

impl SdePath {
    pub fn terminal(&self) -> f64 {
        self.path.terminal()
    }
}

/// Test functions for the martingale problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// `e^{-λ z}`.
    Exponential {
        lambda: f64,
    },
}

impl TestFunction {
    pub fn from_name(name: &str, lambda: f64) -> Result<Self> {
        match name {
            "exp" | "exponential" => Ok(TestFunction::Exponential { lambda }),
            "constant" => Ok(TestFunction::Constant { value: lambda }),
            other => Err(Error::UnsupportedTestFunction(other.to_string())),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::Exponential { lambda } => (-lambda * z).exp(),
        }
    }
}

/// Generator of the limiting process applied to a test function.
#[derive(Debug, Clone)]
pub struct Generator {
    f: InteractionFunction,
    c: f64,
    test: TestFunction,
    levy: f64,
}

impl Generator {
    pub fn new(test: TestFunction, measure: &JumpMeasure, c: f64, f: &InteractionFunction) -> Result<Self> {
        let levy = match test {
            TestFunction::Constant { .. } => 0.0,
            TestFunction::Exponential { lambda } => {
                if !(lambda >= 0.0) {
                    return Err(Error::UnsupportedTestFunction(format!("exp(-{lambda} z)")));
                }
                measure.l_total(lambda)?
            }
        };
        Ok(Self {
            f: f.clone(),
            c,
            test,
            levy,
        })
    }

    /// `F'(z) f(z) + c z F''(z) + z ∫ (F(z+u) - F(z) - u F'(z)) μ(du)`.
    pub fn apply(&self, z: f64) -> f64 {
        match self.test {
            TestFunction::Constant { .. } => 0.0,
            TestFunction::Exponential { lambda } => {
                (-lambda * z).exp() * (-lambda * self.f.eval(z) + self.c * lambda * lambda * z + z * self.levy)
            }
        }
    }

    pub fn test_function(&self) -> TestFunction {
        self.test
    }
}

/// Ensemble summary of the martingale-problem residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub mean: f64,
    pub se: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub delta: f64,
}

/// The Euler scheme for one `(μ, c, f)`.
#[derive(Debug, Clone)]
pub struct SdeSolver<'a> {
    measure: &'a JumpMeasure,
    c: f64,
    f: InteractionFunction,
    scheme: SdeScheme,
    tail: TailStats,
}

impl<'a> SdeSolver<'a> {
    pub fn new(measure: &'a JumpMeasure, c: f64, f: &InteractionFunction, scheme: SdeScheme) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("c must be non-negative, got {c}")));
        }
        let scheme = SdeScheme::new(scheme.dt, scheme.delta_jump, scheme.small_jump_mode)?;
        let tail = measure.tail_stats(scheme.delta_jump)?;
        Ok(Self {
            measure,
            c,
            f: f.clone(),
            scheme,
            tail,
        })
    }

    pub fn scheme(&self) -> SdeScheme {
        self.scheme
    }

    pub fn tail(&self) -> TailStats {
        self.tail
    }

    fn steps(&self, horizon: f64) -> usize {
        (horizon / self.scheme.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Advances a component of mass `z` by `h` with drift `drift * h`.
    fn advance<R: Rng + ?Sized>(
        &self,
        z: f64,
        drift: f64,
        h: f64,
        t_end: f64,
        rng: &mut R,
        jumps: Option<&mut Vec<(f64, f64)>>,
    ) -> Result<f64> {
        if z <= 0.0 {
            return Ok(0.0);
        }
        let mut next = z + drift * h;
        let xi: f64 = StandardNormal.sample(rng);
        next += (2.0 * self.c * z * h).sqrt() * xi;
        if self.scheme.small_jump_mode == SmallJumpMode::DiffusionSurrogate && self.tail.second_moment_below > 0.0 {
            let xi2: f64 = StandardNormal.sample(rng);
            next += (z * self.tail.second_moment_below * h).sqrt() * xi2;
        }
        if self.tail.mass > 0.0 {
            let lambda = z * self.tail.mass * h;
            let count = Poisson::new(lambda)
                .map_err(|e| Error::Domain(format!("jump count intensity {lambda}: {e}")))?
                .sample(rng) as u64;
            let mut log = jumps;
            for _ in 0..count {
                let size = self.measure.sample_jump_ge(self.scheme.delta_jump, rng)?;
                next += size;
                if let Some(log) = log.as_deref_mut() {
                    log.push((t_end, size));
                }
            }
            next -= z * self.tail.mean * h;
        }
        Ok(next.max(0.0))
    }

    fn record(path: &mut PiecewisePath, mode: &RecordMode, next_grid: &mut usize, t0: f64, t1: f64, z0: f64, z1: f64) {
        match mode {
            RecordMode::Full => path.push(t1, z1),
            RecordMode::Grid(grid) => {
                while *next_grid < grid.len() && grid[*next_grid] < t1 {
                    if grid[*next_grid] > 0.0 {
                        path.push(grid[*next_grid].max(t0), z0);
                    }
                    *next_grid += 1;
                }
            }
            RecordMode::Terminal => {}
        }
    }

    fn finish(path: &mut PiecewisePath, mode: &RecordMode, next_grid: &mut usize, horizon: f64, z: f64) {
        match mode {
            RecordMode::Full => {}
            RecordMode::Grid(grid) => {
                while *next_grid < grid.len() && grid[*next_grid] <= horizon {
                    if grid[*next_grid] > 0.0 {
                        path.push(grid[*next_grid], z);
                    }
                    *next_grid += 1;
                }
            }
            RecordMode::Terminal => {
                if horizon > 0.0 {
                    path.push(horizon, z);
                }
            }
        }
        path.close(horizon);
    }

    /// `Z^x` on `[0, horizon]`.
    pub fn simulate<R: Rng + ?Sized>(&self, x: f64, horizon: f64, mode: RecordMode, rng: &mut R) -> Result<SdePath> {
        self.simulate_observed(x, horizon, mode, rng, |_, _, _| {})
    }

    /// As [`simulate`](Self::simulate), calling `on_step(t, h, z)` with the
    /// left-point state of every step.
    pub fn simulate_observed<R: Rng + ?Sized>(
        &self,
        x: f64,
        horizon: f64,
        mode: RecordMode,
        rng: &mut R,
        mut on_step: impl FnMut(f64, f64, f64),
    ) -> Result<SdePath> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("initial value must be non-negative, got {x}")));
        }
        let mut path = PiecewisePath::new(PathKind::Constant, x);
        let mut jumps = Vec::new();
        let mut next_grid = 0;
        let mut z = x;
        let mut t = 0.0;
        let n = self.steps(horizon);
        for i in 0..n {
            let t1 = if i + 1 == n {
                horizon
            } else {
                (i + 1) as f64 * self.scheme.dt
            };
            let h = t1 - t;
            on_step(t, h, z);
            let z1 = self.advance(z, self.f.eval(z), h, t1, rng, Some(&mut jumps))?;
            Self::record(&mut path, &mode, &mut next_grid, t, t1, z, z1);
            z = z1;
            t = t1;
        }
        Self::finish(&mut path, &mode, &mut next_grid, horizon, z);
        Ok(SdePath { path, jumps })
    }

    /// `(Z^x, Z^x + V^{x,y})`, where the increment `V` has its own noise and
    /// drift `f(Z + V) - f(Z)`.
    pub fn simulate_pair<R: Rng + ?Sized>(
        &self,
        x: f64,
        y: f64,
        horizon: f64,
        mode: RecordMode,
        rng: &mut R,
    ) -> Result<(SdePath, SdePath)> {
        if !(x >= 0.0 && y >= x) {
            return Err(Error::Domain(format!("need 0 <= x <= y, got x = {x}, y = {y}")));
        }
        let mut lower = PiecewisePath::new(PathKind::Constant, x);
        let mut upper = PiecewisePath::new(PathKind::Constant, y);
        let (mut jl, mut ju) = (Vec::new(), Vec::new());
        let (mut gl, mut gu) = (0, 0);
        let (mut z, mut v) = (x, y - x);
        let mut t = 0.0;
        let n = self.steps(horizon);
        for i in 0..n {
            let t1 = if i + 1 == n {
                horizon
            } else {
                (i + 1) as f64 * self.scheme.dt
            };
            let h = t1 - t;
            let fz = self.f.eval(z);
            let z1 = self.advance(z, fz, h, t1, rng, Some(&mut jl))?;
            let mut vj = Vec::new();
            let v1 = self.advance(v, self.f.eval(z + v) - fz, h, t1, rng, Some(&mut vj))?;
            ju.extend(jl.iter().filter(|j| j.0 == t1).copied());
            ju.extend(vj);
            Self::record(&mut lower, &mode, &mut gl, t, t1, z, z1);
            Self::record(&mut upper, &mode, &mut gu, t, t1, z + v, z1 + v1);
            z = z1;
            v = v1;
            t = t1;
        }
        Self::finish(&mut lower, &mode, &mut gl, horizon, z);
        Self::finish(&mut upper, &mode, &mut gu, horizon, z + v);
        Ok((SdePath { path: lower, jumps: jl }, SdePath { path: upper, jumps: ju }))
    }

    /// One path's residual `F(Z_T) - F(Z_0) - Σ AF(Z_{t_i}) h_i`, computed
    /// while simulating.
    pub fn residual_sample<R: Rng + ?Sized>(
        &self,
        generator: &Generator,
        x: f64,
        horizon: f64,
        rng: &mut R,
    ) -> Result<f64> {
        let mut integral = 0.0;
        let p = self.simulate_observed(x, horizon, RecordMode::Terminal, rng, |_, h, z| {
            integral += generator.apply(z) * h;
        })?;
        let f = generator.test_function();
        Ok(f.eval(p.terminal()) - f.eval(x) - integral)
    }
}

/// Residual of the martingale problem over recorded full paths.
pub fn mp_residual(
    test: TestFunction,
    paths: &[SdePath],
    measure: &JumpMeasure,
    c: f64,
    f: &InteractionFunction,
    scheme: &SdeScheme,
) -> Result<ResidualReport> {
    let generator = Generator::new(test, measure, c, f)?;
    let samples: Vec<f64> = paths
        .iter()
        .map(|p| {
            let (ts, vs) = (p.path.times(), p.path.values());
            let mut integral = 0.0;
            for i in 0..ts.len().saturating_sub(1) {
                integral += generator.apply(vs[i]) * (ts[i + 1] - ts[i]);
            }
            integral += generator.apply(p.terminal()) * (p.path.horizon() - ts[ts.len() - 1]);
            test.eval(p.terminal()) - test.eval(vs[0]) - integral
        })
        .collect();
    let m = moment_stats(&samples, 1.5)?;
    Ok(ResidualReport {
        mean: m.mean,
        se: m.mean_se,
        n_paths: samples.len(),
        dt: scheme.dt,
        delta: scheme.delta_jump,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn atom2() -> JumpMeasure {
        JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap()
    }

    fn mean_se(xs: &[f64]) -> (f64, f64, f64) {
        let m = moment_stats(xs, 1.5).unwrap();
        (m.mean, m.mean_se, m.variance)
    }

    #[test]
    fn bad_step_is_rejected() {
        assert!(matches!(
            SdeScheme::new(0.0, 1.0, SmallJumpMode::Drop),
            Err(Error::StepSize(_))
        ));
        assert!(matches!(
            SdeScheme::with_default_delta(&atom2(), 1.0, -1.0, SmallJumpMode::Drop),
            Err(Error::StepSize(_))
        ));
    }

    #[test]
    fn default_delta_for_single_atom_is_the_atom() {
        let s = SdeScheme::with_default_delta(&atom2(), 1.0, 1e-3, SmallJumpMode::DiffusionSurrogate).unwrap();
        assert_eq!(s.delta_jump, 2.0);
    }

    #[test]
    fn zero_start_is_absorbed() {
        let m = atom2();
        let s = SdeScheme::new(0.01, 1.0, SmallJumpMode::Drop).unwrap();
        let solver = SdeSolver::new(&m, 1.0, &InteractionFunction::logistic(1.0, 1.0).unwrap(), s).unwrap();
        let p = solver
            .simulate(0.0, 1.0, RecordMode::Full, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        assert!(p.path.values().iter().all(|&v| v == 0.0));
        assert!(p.jumps.is_empty());
    }

    #[test]
    fn driftless_mean_is_preserved() {
        let m = JumpMeasure::atoms(&[(0.3, 2.0), (2.0, 1.0)]).unwrap();
        let s = SdeScheme::new(0.01, 1.0, SmallJumpMode::DiffusionSurrogate).unwrap();
        let solver = SdeSolver::new(&m, 1.0, &InteractionFunction::zero(), s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| {
                solver
                    .simulate(1.0, 1.0, RecordMode::Terminal, &mut rng)
                    .unwrap()
                    .terminal()
            })
            .collect();
        let (mean, se, _) = mean_se(&xs);
        assert!((mean - 1.0).abs() <= 4.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn feller_variance() {
        let m = JumpMeasure::atoms(&[]).unwrap();
        let s = SdeScheme::new(1e-3, 1.0, SmallJumpMode::Drop).unwrap();
        let solver = SdeSolver::new(&m, 1.0, &InteractionFunction::zero(), s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| {
                solver
                    .simulate(1.0, 1.0, RecordMode::Terminal, &mut rng)
                    .unwrap()
                    .terminal()
            })
            .collect();
        let (_, _, var) = mean_se(&xs);
        // SE of the sample variance from the fourth central moment.
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / xs.len() as f64;
        let se = ((m4 - var * var) / xs.len() as f64).sqrt();
        assert!((var - 2.0).abs() <= 4.0 * se, "{var} ± {se}");
    }

    #[test]
    fn pair_is_ordered_and_degenerate_when_equal() {
        let m = atom2();
        let s = SdeScheme::new(0.01, 2.0, SmallJumpMode::Drop).unwrap();
        let solver = SdeSolver::new(&m, 1.0, &InteractionFunction::logistic(1.0, 1.0).unwrap(), s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (a, b) = solver.simulate_pair(1.0, 1.0, 1.0, RecordMode::Full, &mut rng).unwrap();
        assert_eq!(a.path.values(), b.path.values());
        for _ in 0..100 {
            let (a, b) = solver.simulate_pair(0.5, 1.0, 1.0, RecordMode::Full, &mut rng).unwrap();
            assert!(a.path.values().iter().zip(b.path.values()).all(|(x, y)| x <= y));
        }
    }

    #[test]
    fn constant_test_function_has_zero_residual() {
        let m = atom2();
        let s = SdeScheme::new(0.01, 2.0, SmallJumpMode::Drop).unwrap();
        let f = InteractionFunction::zero();
        let solver = SdeSolver::new(&m, 1.0, &f, s).unwrap();
        let g = Generator::new(TestFunction::Constant { value: 3.0 }, &m, 1.0, &f).unwrap();
        let r = solver
            .residual_sample(&g, 1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap();
        assert_eq!(r, 0.0);
        let zero = solver
            .simulate(0.0, 1.0, RecordMode::Full, &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap();
        let rep = mp_residual(
            TestFunction::Exponential { lambda: 1.0 },
            &[zero.clone(), zero],
            &m,
            1.0,
            &f,
            &s,
        )
        .unwrap();
        assert_eq!(rep.mean, 0.0);
        assert!(matches!(
            TestFunction::from_name("sin", 1.0),
            Err(Error::UnsupportedTestFunction(_))
        ));
    }

    #[test]
    fn streamed_and_recorded_residuals_agree() {
        let m = atom2();
        let s = SdeScheme::new(0.01, 2.0, SmallJumpMode::Drop).unwrap();
        let f = InteractionFunction::logistic(1.0, 1.0).unwrap();
        let solver = SdeSolver::new(&m, 1.0, &f, s).unwrap();
        let test = TestFunction::Exponential { lambda: 1.0 };
        let g = Generator::new(test, &m, 1.0, &f).unwrap();
        let streamed = solver
            .residual_sample(&g, 1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(6))
            .unwrap();
        let p = solver
            .simulate(1.0, 1.0, RecordMode::Full, &mut ChaCha8Rng::seed_from_u64(6))
            .unwrap();
        let rep = mp_residual(test, &[p], &m, 1.0, &f, &s).unwrap();
        assert!((rep.mean - streamed).abs() < 1e-12);
    }

    #[test]
    fn big_jump_count_matches_intensity() {
        let m = atom2();
        let s = SdeScheme::new(0.01, 2.0, SmallJumpMode::Drop).unwrap();
        let solver = SdeSolver::new(&m, 1.0, &InteractionFunction::zero(), s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = Vec::new();
        let mut occupation = Vec::new();
        for _ in 0..5_000 {
            let mut occ = 0.0;
            let p = solver
                .simulate_observed(1.0, 1.0, RecordMode::Terminal, &mut rng, |_, h, z| occ += z * h)
                .unwrap();
            counts.push(p.jumps.len() as f64);
            occupation.push(occ);
        }
        let diffs: Vec<f64> = counts.iter().zip(&occupation).map(|(n, o)| n - o).collect();
        let (mean, se, _) = mean_se(&diffs);
        assert!(mean.abs() <= 4.0 * se, "{mean} ± {se}");
    }
}
