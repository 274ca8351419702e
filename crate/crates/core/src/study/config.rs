//! Study configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::interaction::{InteractionFunction, InteractionKind};
use crate::measure::{JumpMeasure, MeasureSpec};
use crate::sde::SmallJumpMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Population,
    Coupled,
    Sde,
    Contour,
    Converge,
    Girsanov,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Population => "population",
            Scenario::Coupled => "coupled",
            Scenario::Sde => "sde",
            Scenario::Contour => "contour",
            Scenario::Converge => "converge",
            Scenario::Girsanov => "girsanov",
        }
    }
}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub mu: MeasureSpec,
    pub c: f64,
    #[serde(default = "zero_kind")]
    pub f: InteractionKind,
    /// Growth constant of `f`; derived from `f` when omitted.
    #[serde(default)]
    pub beta: Option<f64>,
}

fn zero_kind() -> InteractionKind {
    InteractionKind::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub n: OneOrMany<u64>,
    #[serde(default = "one_x")]
    pub x: OneOrMany<f64>,
    /// Time horizon `T` of population and SDE runs.
    #[serde(default = "one")]
    pub horizon: f64,
    /// Reflection level of contours.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Contour time of reweighting runs.
    #[serde(default)]
    pub s_max: Option<f64>,
    /// Number of recorded times (population, SDE) or levels (contour).
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Level at which contour local times are compared.
    #[serde(default = "half")]
    pub level: f64,
    /// Times of the growth-bound checks; defaults to `T/4, T/2, T`.
    #[serde(default)]
    pub check_times: Option<Vec<f64>>,
}

fn one_x() -> OneOrMany<f64> {
    OneOrMany::One(1.0)
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_grid() -> usize {
    101
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Big-jump threshold of the SDE scheme; chosen from the tail mass when
    /// omitted.
    #[serde(default)]
    pub delta_jump: Option<f64>,
    #[serde(default)]
    pub small_jump_mode: SmallJumpMode,
    /// Rate `λ` of the test function `e^{-λ z}` of residual checks.
    #[serde(default = "one")]
    pub test_lambda: f64,
    /// Final KS threshold of convergence studies.
    #[serde(default = "default_ks_threshold")]
    pub ks_threshold: f64,
    /// Significance level of KS law-equivalence checks.
    #[serde(default = "default_ks_alpha")]
    pub ks_alpha: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_ks_threshold() -> f64 {
    0.05
}

fn default_ks_alpha() -> f64 {
    0.001
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            delta_jump: None,
            small_jump_mode: SmallJumpMode::default(),
            test_lambda: 1.0,
            ks_threshold: default_ks_threshold(),
            ks_alpha: default_ks_alpha(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one_worker")]
    pub worker_count: usize,
}

fn one_worker() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "default_max_paths")]
    pub max_exported_paths: u64,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_max_paths() -> u64 {
    100
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
            max_exported_paths: default_max_paths(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub model: ModelConfig,
    pub scale: ScaleConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Default growth constant: the largest slope `f` can have on `[0, ∞)`.
fn default_beta(kind: &InteractionKind) -> f64 {
    let b = match kind {
        InteractionKind::Zero => 1.0,
        InteractionKind::Linear { a } => *a,
        InteractionKind::Logistic { a, .. } => *a,
        InteractionKind::Table { x, y } => x
            .windows(2)
            .zip(y.windows(2))
            .map(|(xs, ys)| (ys[1] - ys[0]) / (xs[1] - xs[0]))
            .fold(0.0, f64::max),
    };
    b.max(f64::EPSILON)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: StudyConfig = serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn measure(&self) -> Result<JumpMeasure> {
        self.model
            .mu
            .build()
            .map_err(|e| Error::config("model.mu", e.to_string()))
    }

    pub fn interaction(&self) -> Result<InteractionFunction> {
        let beta = self.model.beta.unwrap_or_else(|| default_beta(&self.model.f));
        InteractionFunction::new(self.model.f.clone(), beta).map_err(|e| Error::config("model.f", e.to_string()))
    }

    pub fn ns(&self) -> Vec<u64> {
        self.scale.n.to_vec()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.scale.x.to_vec()
    }

    pub fn gamma(&self) -> Result<f64> {
        self.scale
            .gamma
            .ok_or_else(|| Error::config("scale.gamma", "required for this scenario"))
    }

    pub fn s_max(&self) -> Result<f64> {
        self.scale
            .s_max
            .ok_or_else(|| Error::config("scale.s_max", "required for this scenario"))
    }

    pub fn check_times(&self) -> Vec<f64> {
        let t = self.scale.horizon;
        self.scale
            .check_times
            .clone()
            .unwrap_or_else(|| vec![0.25 * t, 0.5 * t, t])
    }

    /// Checks every field, reporting the first problem with its path.
    pub fn validate(&self) -> Result<()> {
        if self.mc.n_paths == 0 {
            return Err(Error::config("mc.n_paths", "must be at least 1"));
        }
        if self.mc.worker_count == 0 {
            return Err(Error::config("mc.worker_count", "must be at least 1"));
        }
        positive("model.c", self.model.c)?;
        if let Some(b) = self.model.beta {
            positive("model.beta", b)?;
        }
        self.measure()?;
        self.interaction()?;

        let ns = self.ns();
        if ns.is_empty() {
            return Err(Error::config("scale.n", "must not be empty"));
        }
        if ns.contains(&0) {
            return Err(Error::config("scale.n", "entries must be at least 1"));
        }
        if self.scenario == Scenario::Converge && ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "scale.n",
                "must be strictly increasing for convergence studies",
            ));
        }
        let xs = self.xs();
        if xs.is_empty() {
            return Err(Error::config("scale.x", "must not be empty"));
        }
        for (i, &x) in xs.iter().enumerate() {
            positive(&format!("scale.x[{i}]"), x)?;
        }
        if self.scenario == Scenario::Coupled && xs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("scale.x", "must be ascending for coupled runs"));
        }
        positive("scale.horizon", self.scale.horizon)?;
        if let Some(g) = self.scale.gamma {
            positive("scale.gamma", g)?;
        }
        if let Some(s) = self.scale.s_max {
            positive("scale.s_max", s)?;
        }
        if self.scale.grid < 2 {
            return Err(Error::config("scale.grid", "must be at least 2"));
        }
        for (i, &t) in self.check_times().iter().enumerate() {
            if !(t >= 0.0 && t <= self.scale.horizon) {
                return Err(Error::config(
                    format!("scale.check_times[{i}]"),
                    "must lie in [0, horizon]",
                ));
            }
        }
        match self.scenario {
            Scenario::Contour => {
                let g = self.gamma()?;
                positive("scale.level", self.scale.level)?;
                if self.scale.level >= g {
                    return Err(Error::config("scale.level", "must lie below scale.gamma"));
                }
            }
            Scenario::Girsanov => {
                self.gamma()?;
                self.s_max()?;
                if self.interaction()?.derivative_bound().is_none() {
                    return Err(Error::config("model.f", "reweighting needs a bounded derivative"));
                }
            }
            _ => {}
        }
        positive("numerics.dt", self.numerics.dt)?;
        if let Some(d) = self.numerics.delta_jump {
            positive("numerics.delta_jump", d)?;
        }
        positive("numerics.test_lambda", self.numerics.test_lambda)?;
        positive("numerics.ks_threshold", self.numerics.ks_threshold)?;
        if !(self.numerics.ks_alpha > 0.0 && self.numerics.ks_alpha < 1.0) {
            return Err(Error::config("numerics.ks_alpha", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Hash of the settings that determine the results; the seed, worker
    /// count and output directory are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.mc.master_seed = 0;
        c.mc.worker_count = 1;
        c.output.directory = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "scenario": "population",
        "model": {"mu": {"family": "atoms", "atoms": [[2.0, 1.0]]}, "c": 1.0},
        "scale": {"n": 10},
        "mc": {"n_paths": 5}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = StudyConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.ns(), vec![10]);
        assert_eq!(c.xs(), vec![1.0]);
        assert_eq!(c.numerics.dt, 1e-3);
        assert_eq!(c.output.max_exported_paths, 100);
        assert_eq!(c.check_times(), vec![0.25, 0.5, 1.0]);
        assert!(c.interaction().unwrap().is_zero());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("\"n_paths\"", "\"n_path\"");
        assert!(matches!(StudyConfig::from_json(&bad), Err(Error::Config { .. })));
        let bad = MINIMAL.replace("\"c\": 1.0", "\"c\": 1.0, \"sigma\": 2");
        assert!(StudyConfig::from_json(&bad).is_err());
    }

    fn field_of(text: &str) -> String {
        match StudyConfig::from_json(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(
            field_of(&MINIMAL.replace("\"n_paths\": 5", "\"n_paths\": 0")),
            "mc.n_paths"
        );
        assert_eq!(field_of(&MINIMAL.replace("\"c\": 1.0", "\"c\": -1.0")), "model.c");
        assert_eq!(field_of(&MINIMAL.replace("[[2.0, 1.0]]", "[[-2.0, 1.0]]")), "model.mu");
        let conv = MINIMAL
            .replace("\"population\"", "\"converge\"")
            .replace("\"n\": 10", "\"n\": [50, 10]");
        assert_eq!(field_of(&conv), "scale.n");
        let gir = MINIMAL.replace("\"population\"", "\"girsanov\"");
        assert_eq!(field_of(&gir), "scale.gamma");
        let x = MINIMAL.replace("\"n\": 10", "\"n\": 10, \"x\": [1.0, 0.0]");
        assert_eq!(field_of(&x), "scale.x[1]");
    }

    #[test]
    fn unbounded_derivative_is_rejected_for_reweighting() {
        let text = MINIMAL
            .replace("\"population\"", "\"girsanov\"")
            .replace(
                "\"c\": 1.0",
                "\"c\": 1.0, \"f\": {\"kind\": \"logistic\", \"a\": 1.0, \"b\": 1.0}",
            )
            .replace("\"n\": 10", "\"n\": 10, \"gamma\": 2.0, \"s_max\": 1.0");
        assert_eq!(field_of(&text), "model.f");
    }

    #[test]
    fn hash_ignores_seed_workers_and_directory() {
        let a = StudyConfig::from_json(MINIMAL).unwrap();
        let mut b = a.clone();
        b.mc.master_seed = 99;
        b.mc.worker_count = 4;
        b.output.directory = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.mc.n_paths = 6;
        assert_ne!(a.hash(), b.hash());
    }
}
