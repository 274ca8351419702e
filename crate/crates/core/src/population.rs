//! Exact event-driven simulation of the interacting branching population.
//!
//! The same engine drives the unscaled chain, the rescaled total-mass
//! process and the coupled family over ordered ancestral sizes. In the
//! coupled run every component owns a window of the ordered population:
//! component `j` holds the individuals `(lo_j, lo_j + k_j]`, where `lo_j` is
//! the current size of all components below it, and feels the interaction
//! increments of exactly those positions.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{IncrementTable, InteractionFunction, InteractionSums};
use crate::laws::{ModelLaws, OffspringLaw};
use crate::measure::JumpMeasure;
use crate::path::{PathKind, PiecewisePath};

/// Default cap on events per path.
pub const DEFAULT_EVENT_BUDGET: u64 = 100_000_000;

/// Which natural clock produced an offspring event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    /// Reproduction driven by jumps of size at most 1.
    NaturalSmall,
    /// Reproduction driven by jumps above 1.
    NaturalBig,
    /// Binary splitting or death.
    Binary,
    /// An arbitrary offspring law (unscaled chain).
    Offspring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// One individual replaced by `offspring` children.
    Natural {
        clock: Clock,
        offspring: u32,
    },
    InteractionBirth,
    InteractionDeath,
}

impl EventKind {
    /// Net change in the number of individuals.
    pub fn delta(&self) -> i64 {
        match self {
            EventKind::Natural { offspring, .. } => *offspring as i64 - 1,
            EventKind::InteractionBirth => 1,
            EventKind::InteractionDeath => -1,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Natural {
                clock: Clock::NaturalSmall,
                ..
            } => "natural_small",
            EventKind::Natural {
                clock: Clock::NaturalBig,
                ..
            } => "natural_big",
            EventKind::Natural {
                clock: Clock::Binary, ..
            } => "binary",
            EventKind::Natural {
                clock: Clock::Offspring,
                ..
            } => "offspring",
            EventKind::InteractionBirth => "interaction_birth",
            EventKind::InteractionDeath => "interaction_death",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopEvent {
    pub time: f64,
    pub component: u32,
    pub kind: EventKind,
}

/// Per-individual branching clocks: a total rate and an alias table over
/// `(clock, offspring)` pairs.
#[derive(Debug, Clone)]
pub struct BranchingRates {
    entries: Vec<(Clock, u32)>,
    alias: Option<WeightedAliasIndex<f64>>,
    per_capita: f64,
}

impl BranchingRates {
    /// No branching at all: the chain moves by interaction only.
    pub fn none() -> Self {
        Self {
            entries: Vec::new(),
            alias: None,
            per_capita: 0.0,
        }
    }

    fn from_entries(entries: Vec<(Clock, u32, f64)>) -> Result<Self> {
        let entries: Vec<(Clock, u32, f64)> = entries.into_iter().filter(|e| e.2 > 0.0 && e.1 != 1).collect();
        if entries.is_empty() {
            return Ok(Self::none());
        }
        let per_capita = entries.iter().map(|e| e.2).sum();
        let alias = WeightedAliasIndex::new(entries.iter().map(|e| e.2).collect())
            .map_err(|e| Error::InvalidLaw(format!("alias table: {e}")))?;
        Ok(Self {
            entries: entries.iter().map(|e| (e.0, e.1)).collect(),
            alias: Some(alias),
            per_capita,
        })
    }

    /// Rate `total_rate * law(ℓ)` of replacement by `ℓ` children.
    pub fn from_law(law: &OffspringLaw, total_rate: f64) -> Result<Self> {
        if law.prob(1) != 0.0 {
            return Err(Error::InvalidLaw("offspring law must put no mass on 1".into()));
        }
        if !(total_rate >= 0.0 && total_rate.is_finite()) {
            return Err(Error::InvalidLaw(format!(
                "total rate must be non-negative, got {total_rate}"
            )));
        }
        Self::from_entries(
            law.iter()
                .map(|(k, w)| (Clock::Offspring, k as u32, total_rate * w))
                .collect(),
        )
    }

    /// The rescaled model: rate `α_∓ π^∓(ℓ)` on the jump clocks and `cN`
    /// on each binary outcome, summing to `d_N π_N(ℓ)`.
    pub fn from_model(laws: &ModelLaws) -> Result<Self> {
        let k = &laws.constants;
        let mut entries = Vec::new();
        for (clock, alpha, law) in [
            (Clock::NaturalSmall, k.alpha_minus, &laws.pi_minus),
            (Clock::NaturalBig, k.alpha_plus, &laws.pi_plus),
        ] {
            if let Some(law) = law {
                entries.extend(law.iter().map(|(l, w)| (clock, l as u32, alpha * w)));
            }
        }
        let cn = k.binary_rate();
        entries.push((Clock::Binary, 0, cn));
        entries.push((Clock::Binary, 2, cn));
        Self::from_entries(entries)
    }

    /// Total branching rate of one individual.
    pub fn per_capita(&self) -> f64 {
        self.per_capita
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Clock, u32) {
        let alias = self.alias.as_ref().expect("no branching clocks");
        self.entries[alias.sample(rng)]
    }
}

/// State handed to observers between events.
pub struct ChainState<'a> {
    pub counts: &'a [u64],
    pub sums: &'a [InteractionSums],
}

impl ChainState<'_> {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Receives the holding intervals and events of a chain run.
pub trait Observer {
    /// The chain sat in `state` over `[from, to)`.
    fn hold(&mut self, _from: f64, _to: f64, _state: &ChainState<'_>) {}
    /// An event fired; `state` is the state after it.
    fn event(&mut self, _event: &PopEvent, _state: &ChainState<'_>) {}
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn hold(&mut self, from: f64, to: f64, state: &ChainState<'_>) {
        self.0.hold(from, to, state);
        self.1.hold(from, to, state);
    }
    fn event(&mut self, event: &PopEvent, state: &ChainState<'_>) {
        self.0.event(event, state);
        self.1.event(event, state);
    }
}

impl Observer for () {}

/// Runs the chain from `counts` to `horizon`.
pub fn run_chain<R: Rng + ?Sized, O: Observer>(
    counts: &mut [u64],
    rates: &BranchingRates,
    table: &mut IncrementTable,
    horizon: f64,
    budget: u64,
    rng: &mut R,
    obs: &mut O,
) -> Result<u64> {
    let m = counts.len();
    let mut sums = Vec::with_capacity(m);
    let mut lo = 0u64;
    for &k in counts.iter() {
        sums.push(InteractionSums::new(table, lo, lo + k));
        lo += k;
    }
    let r = rates.per_capita();
    let mut comp_rate = vec![0.0; m];
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        let mut total = 0.0;
        for j in 0..m {
            comp_rate[j] = r * counts[j] as f64 + sums[j].plus() + sums[j].minus();
            total += comp_rate[j];
        }
        let state = ChainState { counts, sums: &sums };
        if !(total > 0.0) {
            obs.hold(t, horizon, &state);
            return Ok(events);
        }
        let e: f64 = Exp1.sample(rng);
        let next = t + e / total;
        if next >= horizon {
            obs.hold(t, horizon, &state);
            return Ok(events);
        }
        obs.hold(t, next, &state);
        t = next;

        let mut u = rng.random::<f64>() * total;
        let mut j = 0;
        while j + 1 < m && u >= comp_rate[j] {
            u -= comp_rate[j];
            j += 1;
        }
        let natural = r * counts[j] as f64;
        let kind = if u < natural {
            let (clock, offspring) = rates.sample(rng);
            EventKind::Natural { clock, offspring }
        } else if u < natural + sums[j].plus() {
            EventKind::InteractionBirth
        } else {
            EventKind::InteractionDeath
        };
        let k = counts[j] as i64 + kind.delta();
        debug_assert!(k >= 0);
        counts[j] = k.max(0) as u64;

        let mut lo = sums[j].lo();
        sums[j].set_hi(table, lo + counts[j]);
        lo += counts[j];
        for i in j + 1..m {
            sums[i].set_window(table, lo, counts[i]);
            lo += counts[i];
        }

        events += 1;
        if events > budget {
            return Err(Error::EventBudget { budget, time: t });
        }
        let ev = PopEvent {
            time: t,
            component: j as u32,
            kind,
        };
        obs.event(&ev, &ChainState { counts, sums: &sums });
    }
}

/// How much of a path to keep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    /// Every breakpoint.
    Full,
    /// Values at the given times (ascending, within the horizon).
    Grid(Vec<f64>),
    /// Only the initial and terminal values.
    Terminal,
}

/// Records the partial sums `Σ_{i<=j} counts[i] * scale` of every component.
pub struct PathRecorder {
    mode: RecordMode,
    scale: f64,
    paths: Vec<PiecewisePath>,
    next_grid: usize,
    last: Vec<f64>,
    log: Option<Vec<PopEvent>>,
}

impl PathRecorder {
    pub fn new(mode: RecordMode, counts: &[u64], scale: f64, keep_log: bool) -> Self {
        let mut acc = 0u64;
        let last: Vec<f64> = counts
            .iter()
            .map(|k| {
                acc += k;
                acc as f64 * scale
            })
            .collect();
        Self {
            paths: last
                .iter()
                .map(|&v| PiecewisePath::new(PathKind::Constant, v))
                .collect(),
            mode,
            scale,
            next_grid: 0,
            last,
            log: keep_log.then(Vec::new),
        }
    }

    fn flush_grid(&mut self, upto: f64, inclusive: bool) {
        if let RecordMode::Grid(grid) = &self.mode {
            while self.next_grid < grid.len() {
                let g = grid[self.next_grid];
                if g > upto || (g == upto && !inclusive) {
                    break;
                }
                if g > 0.0 {
                    for (p, v) in self.paths.iter_mut().zip(&self.last) {
                        p.push(g, *v);
                    }
                }
                self.next_grid += 1;
            }
        }
    }

    pub fn finish(mut self, horizon: f64) -> (Vec<PiecewisePath>, Option<Vec<PopEvent>>) {
        self.flush_grid(horizon, true);
        if self.mode == RecordMode::Terminal {
            for (p, v) in self.paths.iter_mut().zip(&self.last) {
                if horizon > 0.0 {
                    p.push(horizon, *v);
                }
            }
        }
        for p in &mut self.paths {
            p.close(horizon);
        }
        (self.paths, self.log)
    }
}

impl Observer for PathRecorder {
    fn hold(&mut self, _from: f64, to: f64, _state: &ChainState<'_>) {
        // Grid points in the holding interval see the pre-event value.
        self.flush_grid(to, false);
    }

    fn event(&mut self, event: &PopEvent, state: &ChainState<'_>) {
        let mut acc = 0u64;
        for (j, &k) in state.counts.iter().enumerate() {
            acc += k;
            self.last[j] = acc as f64 * self.scale;
        }
        if self.mode == RecordMode::Full {
            for (j, p) in self.paths.iter_mut().enumerate().skip(event.component as usize) {
                p.push(event.time, self.last[j]);
            }
        }
        if let Some(log) = &mut self.log {
            log.push(*event);
        }
    }
}

/// Realized squared jumps and compensator of the small-jump, binary and
/// interaction parts of the rescaled process.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QvSample {
    pub realized: f64,
    pub compensator: f64,
}

impl QvSample {
    pub fn difference(&self) -> f64 {
        self.realized - self.compensator
    }
}

/// Streams the quadratic-variation bookkeeping of a single-component run.
#[derive(Debug, Clone)]
pub struct QvTracker {
    n: f64,
    c: f64,
    small_second_moment: f64,
    sample: QvSample,
}

impl QvTracker {
    pub fn new(n: u64, c: f64, small_second_moment: f64) -> Self {
        Self {
            n: n as f64,
            c,
            small_second_moment,
            sample: QvSample::default(),
        }
    }

    pub fn sample(&self) -> QvSample {
        self.sample
    }

    fn accrue(&mut self, dt: f64, k: u64, plus: f64, minus: f64) {
        let z = k as f64 / self.n;
        let rate = (2.0 * self.c + self.small_second_moment) * z + (plus + minus) / (self.n * self.n);
        self.sample.compensator += rate * dt;
    }

    fn record(&mut self, kind: &EventKind) {
        let counted = !matches!(
            kind,
            EventKind::Natural {
                clock: Clock::NaturalBig | Clock::Offspring,
                ..
            }
        );
        if counted {
            let d = kind.delta() as f64 / self.n;
            self.sample.realized += d * d;
        }
    }
}

impl Observer for QvTracker {
    fn hold(&mut self, from: f64, to: f64, state: &ChainState<'_>) {
        self.accrue(to - from, state.counts[0], state.sums[0].plus(), state.sums[0].minus());
    }

    fn event(&mut self, event: &PopEvent, _state: &ChainState<'_>) {
        self.record(&event.kind);
    }
}

/// A path together with its optional event log.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedPath {
    pub path: PiecewisePath,
    pub log: Option<Vec<PopEvent>>,
}

/// `[N x]`, guarded against `N x` landing just below an integer.
pub fn initial_count(n: u64, x: f64) -> u64 {
    (n as f64 * x * (1.0 + 4.0 * f64::EPSILON)).floor() as u64
}

/// The unscaled chain started from `m` individuals, each replaced by `ℓ`
/// children at rate `total_rate * nu(ℓ)`, with interaction increments
/// `f(j) - f(j - 1)`.
pub fn simulate_unscaled<R: Rng + ?Sized>(
    m: u64,
    nu: &OffspringLaw,
    total_rate: f64,
    f: &InteractionFunction,
    horizon: f64,
    rng: &mut R,
) -> Result<PiecewisePath> {
    let rates = BranchingRates::from_law(nu, total_rate)?;
    let mut table = IncrementTable::unscaled(f);
    let mut counts = [m];
    let mut rec = PathRecorder::new(RecordMode::Full, &counts, 1.0, false);
    run_chain(
        &mut counts,
        &rates,
        &mut table,
        horizon,
        DEFAULT_EVENT_BUDGET,
        rng,
        &mut rec,
    )?;
    Ok(rec.finish(horizon).0.remove(0))
}

/// The rescaled model at one `(μ, c, f, N)`.
#[derive(Debug, Clone)]
pub struct ScaledModel {
    laws: ModelLaws,
    rates: BranchingRates,
    f: InteractionFunction,
    n: u64,
    small_second_moment: f64,
    budget: u64,
}

impl ScaledModel {
    pub fn new(measure: &JumpMeasure, c: f64, f: &InteractionFunction, n: u64) -> Result<Self> {
        let laws = ModelLaws::build(measure, n, c)?;
        let rates = BranchingRates::from_model(&laws)?;
        Ok(Self {
            laws,
            rates,
            f: f.clone(),
            n,
            small_second_moment: measure.second_moment_small(),
            budget: DEFAULT_EVENT_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn laws(&self) -> &ModelLaws {
        &self.laws
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn interaction(&self) -> &InteractionFunction {
        &self.f
    }

    pub fn rates(&self) -> &BranchingRates {
        &self.rates
    }

    pub fn table(&self) -> IncrementTable {
        IncrementTable::scaled(&self.f, self.n)
    }

    /// Runs one component from `[N x]` with a custom observer.
    pub fn run<R: Rng + ?Sized, O: Observer>(&self, x: f64, horizon: f64, rng: &mut R, obs: &mut O) -> Result<u64> {
        let mut counts = [initial_count(self.n, x)];
        run_chain(
            &mut counts,
            &self.rates,
            &mut self.table(),
            horizon,
            self.budget,
            rng,
            obs,
        )
    }

    /// `Z^{N,x}` on `[0, horizon]`.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        x: f64,
        horizon: f64,
        mode: RecordMode,
        keep_log: bool,
        rng: &mut R,
    ) -> Result<RecordedPath> {
        let mut counts = [initial_count(self.n, x)];
        let mut rec = PathRecorder::new(mode, &counts, 1.0 / self.n as f64, keep_log);
        run_chain(
            &mut counts,
            &self.rates,
            &mut self.table(),
            horizon,
            self.budget,
            rng,
            &mut rec,
        )?;
        let (mut paths, log) = rec.finish(horizon);
        Ok(RecordedPath {
            path: paths.remove(0),
            log,
        })
    }

    /// `(Z^{N,x_1}, ..., Z^{N,x_n})` built from the lowest process and the
    /// increments between consecutive starting points.
    pub fn simulate_coupled<R: Rng + ?Sized>(
        &self,
        xs: &[f64],
        horizon: f64,
        mode: RecordMode,
        rng: &mut R,
    ) -> Result<Vec<PiecewisePath>> {
        let mut counts = coupled_counts(self.n, xs)?;
        let mut rec = PathRecorder::new(mode, &counts, 1.0 / self.n as f64, false);
        run_chain(
            &mut counts,
            &self.rates,
            &mut self.table(),
            horizon,
            self.budget,
            rng,
            &mut rec,
        )?;
        Ok(rec.finish(horizon).0)
    }

    /// Realized minus compensated quadratic variation over `[0, horizon]`.
    pub fn qv_sample<R: Rng + ?Sized>(&self, x: f64, horizon: f64, rng: &mut R) -> Result<QvSample> {
        let mut qv = self.qv_tracker();
        self.run(x, horizon, rng, &mut qv)?;
        Ok(qv.sample())
    }

    pub fn qv_tracker(&self) -> QvTracker {
        QvTracker::new(self.n, self.laws.constants.c, self.small_second_moment)
    }

    /// Replays a recorded path and its log through the quadratic-variation
    /// bookkeeping.
    pub fn empirical_qv(&self, recorded: &RecordedPath) -> Result<QvSample> {
        let log = recorded.log.as_ref().ok_or(Error::MissingLog)?;
        let mut table = self.table();
        let mut qv = self.qv_tracker();
        let nf = self.n as f64;
        let mut k = (recorded.path.values()[0] * nf).round() as u64;
        let mut sums = InteractionSums::from_count(&mut table, k);
        let mut t = 0.0;
        for ev in log {
            qv.accrue(ev.time - t, k, sums.plus(), sums.minus());
            qv.record(&ev.kind);
            k = (k as i64 + ev.kind.delta()) as u64;
            sums.set_hi(&mut table, k);
            t = ev.time;
        }
        qv.accrue(recorded.path.horizon() - t, k, sums.plus(), sums.minus());
        Ok(qv.sample())
    }
}

/// Initial counts of the lowest process and of each increment.
pub fn coupled_counts(n: u64, xs: &[f64]) -> Result<Vec<u64>> {
    if xs.is_empty() {
        return Err(Error::Domain("at least one starting point is required".into()));
    }
    if xs.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::Domain("starting points must be finite and non-negative".into()));
    }
    if xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("starting points must be ascending".into()));
    }
    let mut prev = 0u64;
    Ok(xs
        .iter()
        .map(|&x| {
            let k = initial_count(n, x);
            let d = k - prev;
            prev = k;
            d
        })
        .collect())
}
