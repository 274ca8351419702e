//! Declarative Monte Carlo studies: configuration, dispatch to the
//! simulators, statistical checks and file emission.
//!
//! Every path draws from its own stream keyed by the master seed, an
//! ensemble tag and the path index, and results are merged in index order,
//! so a study's output does not depend on the worker count.

macro_rules! row {
    ($($v:expr),* $(,)?) => {
        vec![$($v.to_string()),*]
    };
}

pub mod config;
mod emit;
mod report;

pub use config::{
    Format, McConfig, ModelConfig, NumericsConfig, OneOrMany, OutputConfig, ScaleConfig, Scenario, StudyConfig,
};
pub use emit::{emit, Manifest, ManifestEntry, MANIFEST_FILE, REPORT_FILE};
pub use report::{Check, FailureSummary, Provenance, StudyOutput, StudyReport, Table};

use std::collections::BTreeMap;

use crate::contour::{
    build_planar_forest, contour_from_forest, direct_contour, girsanov_weight, local_time_profile, ContourParams,
    ContourPath, ForestParams,
};
use crate::error::Result;
use crate::interaction::{IncrementTable, InteractionFunction};
use crate::laws::ModelLaws;
use crate::measure::JumpMeasure;
use crate::path::PiecewisePath;
use crate::population::{initial_count, PathRecorder, RecordMode, ScaledModel};
use crate::rng::{path_rng, run_ensemble, scenario_tag, PathRng};
use crate::sde::{Generator, SdeScheme, SdeSolver, TestFunction};
use crate::stats::{ks_critical_value, ks_two_sample, moment_stats};

/// Number of per-path failure messages kept in the report.
const FAILURE_EXAMPLES: usize = 5;

/// Runs the study described by `config` with its configured worker count.
pub fn run_study(config: &StudyConfig) -> Result<StudyOutput> {
    config.validate()?;
    let mut study = Study {
        cfg: config,
        workers: config.mc.worker_count,
        statistics: BTreeMap::new(),
        checks: Vec::new(),
        failures: FailureSummary::default(),
        tables: Vec::new(),
        documents: Vec::new(),
    };
    match config.scenario {
        Scenario::Population => study.population()?,
        Scenario::Coupled => study.coupled()?,
        Scenario::Sde => study.sde()?,
        Scenario::Contour => study.contour()?,
        Scenario::Converge => study.converge()?,
        Scenario::Girsanov => study.girsanov()?,
    }
    if study.failures.count > 0 {
        study.checks.push(Check::at_most(
            "paths_completed",
            "failed paths <= 0",
            study.failures.count as f64,
            0.0,
        ));
    }
    Ok(StudyOutput {
        report: StudyReport {
            scenario: config.scenario,
            n_paths: config.mc.n_paths,
            statistics: study.statistics,
            checks: study.checks,
            failures: study.failures,
            provenance: Provenance {
                config_hash: config.hash(),
                master_seed: config.mc.master_seed,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        },
        tables: study.tables,
        documents: study.documents,
    })
}

struct Study<'a> {
    cfg: &'a StudyConfig,
    workers: usize,
    statistics: BTreeMap<String, f64>,
    checks: Vec<Check>,
    failures: FailureSummary,
    tables: Vec<Table>,
    documents: Vec<(String, serde_json::Value)>,
}

/// Mean, standard error and variance of a sample; NaN when it is empty.
fn summary(xs: &[f64]) -> (f64, f64, f64) {
    match moment_stats(xs, 1.5) {
        Ok(m) => (m.mean, m.mean_se, m.variance),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN),
    }
}

fn mean_check(name: &str, sample: &[f64], target: f64) -> Check {
    let (mean, se, _) = summary(sample);
    Check::at_most(
        name,
        format!("|mean - {target}| <= 4 SE"),
        (mean - target).abs(),
        4.0 * se,
    )
}

/// `grid` equally spaced times on `[0, horizon]` merged with `extra`.
fn record_times(horizon: f64, grid: usize, extra: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = (0..grid)
        .map(|k| horizon * k as f64 / (grid - 1) as f64)
        .chain(extra.iter().copied())
        .collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn path_rows(table: &mut Table, run_id: usize, path_id: u64, times: &[f64], path: &PiecewisePath) {
    for &t in times {
        table.push(row![run_id, path_id, t, path.value_at(t)]);
    }
}

fn contour_rows(table: &mut Table, run_id: usize, path_id: u64, contour: &ContourPath) {
    for (s, h) in contour.path.times().iter().zip(contour.path.values()) {
        table.push(row![run_id, path_id, s, h]);
    }
}

impl Study<'_> {
    /// Runs `job` for every path of an ensemble and keeps the successes in
    /// path order; failures are counted in the report.
    fn ensemble<T, F>(&mut self, tag: &str, job: F) -> Vec<(u64, T)>
    where
        T: Send,
        F: Fn(u64, &mut PathRng) -> Result<T> + Sync + Send,
    {
        let seed = self.cfg.mc.master_seed;
        let tag_hash = scenario_tag(tag);
        let results = run_ensemble(self.cfg.mc.n_paths, self.workers, |i| {
            let mut rng = path_rng(seed, tag_hash, i);
            job(i, &mut rng)
        });
        let mut ok = Vec::with_capacity(results.len());
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => ok.push((i as u64, v)),
                Err(e) => {
                    self.failures.count += 1;
                    if self.failures.examples.len() < FAILURE_EXAMPLES {
                        self.failures.examples.push((i as u64, format!("{tag}: {e}")));
                    }
                }
            }
        }
        ok
    }

    fn exported(&self, path_id: u64) -> bool {
        path_id < self.cfg.output.max_exported_paths
    }

    fn stat(&mut self, name: &str, value: f64) {
        self.statistics.insert(name.to_string(), value);
    }

    fn model_parts(&self) -> Result<(JumpMeasure, InteractionFunction)> {
        Ok((self.cfg.measure()?, self.cfg.interaction()?))
    }

    fn population(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let (mu, f) = self.model_parts()?;
        let n = cfg.ns()[0];
        let x = cfg.xs()[0];
        let horizon = cfg.scale.horizon;
        let model = ScaledModel::new(&mu, cfg.model.c, &f, n)?;
        let check_times = cfg.check_times();
        let times = record_times(horizon, cfg.scale.grid, &check_times);
        let z0 = initial_count(n, x) as f64 / n as f64;

        let runs = self.ensemble("population", |_, rng| {
            let counts = [initial_count(n, x)];
            let rec = PathRecorder::new(RecordMode::Grid(times.clone()), &counts, 1.0 / n as f64, false);
            let mut obs = (rec, model.qv_tracker());
            model.run(x, horizon, rng, &mut obs)?;
            let (rec, qv) = obs;
            let path = rec.finish(horizon).0.remove(0);
            Ok((path, qv.sample().difference()))
        });

        let mut paths = Table::new("paths", &["run_id", "path_id", "t", "value"]);
        let mut moments = Table::new("moments", &["t", "mean", "se", "variance"]);
        for &t in &times {
            let sample: Vec<f64> = runs.iter().map(|(_, (p, _))| p.value_at(t)).collect();
            let (mean, se, var) = summary(&sample);
            moments.push(row![t, mean, se, var]);
            if check_times.contains(&t) {
                let bound = x * (f.beta() * t).exp();
                self.checks.push(Check::at_most(
                    format!("growth_bound_t={t}"),
                    "mean(Z_t) - x exp(beta t) <= 4 SE",
                    mean - bound,
                    4.0 * se,
                ));
            }
        }
        let terminal: Vec<f64> = runs.iter().map(|(_, (p, _))| p.terminal()).collect();
        let qv: Vec<f64> = runs.iter().map(|(_, (_, q))| *q).collect();
        let (mean, se, var) = summary(&terminal);
        self.stat("initial_value", z0);
        self.stat("terminal_mean", mean);
        self.stat("terminal_se", se);
        self.stat("terminal_variance", var);
        let (qm, qse, _) = summary(&qv);
        self.stat("qv_difference_mean", qm);
        self.stat("qv_difference_se", qse);
        if f.is_zero() {
            self.checks.push(mean_check("critical_martingale", &terminal, z0));
        }
        self.checks.push(mean_check("quadratic_variation", &qv, 0.0));
        for (i, (p, _)) in &runs {
            if self.exported(*i) {
                path_rows(&mut paths, 0, *i, &times, p);
            }
        }
        self.tables.push(paths);
        self.tables.push(moments);
        Ok(())
    }

    fn coupled(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let (mu, f) = self.model_parts()?;
        let n = cfg.ns()[0];
        let xs = cfg.xs();
        let horizon = cfg.scale.horizon;
        let model = ScaledModel::new(&mu, cfg.model.c, &f, n)?;
        let runs = self.ensemble("coupled", |_, rng| {
            model.simulate_coupled(&xs, horizon, RecordMode::Full, rng)
        });
        let mut violations = 0u64;
        for (_, comps) in &runs {
            let mut times: Vec<f64> = comps.iter().flat_map(|p| p.times().iter().copied()).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let ordered = times
                .iter()
                .all(|&t| comps.windows(2).all(|w| w[0].value_at(t) <= w[1].value_at(t)));
            violations += u64::from(!ordered);
        }
        self.checks.push(Check::at_most(
            "ordering",
            "paths with Z^{x_i} > Z^{x_{i+1}} at some event time <= 0",
            violations as f64,
            0.0,
        ));
        let mut paths = Table::new("paths", &["run_id", "path_id", "t", "value"]);
        for (k, x) in xs.iter().enumerate() {
            let terminal: Vec<f64> = runs.iter().map(|(_, c)| c[k].terminal()).collect();
            let (mean, se, _) = summary(&terminal);
            self.stat(&format!("terminal_mean_x={x}"), mean);
            self.stat(&format!("terminal_se_x={x}"), se);
        }
        for (i, comps) in &runs {
            if self.exported(*i) {
                for (k, p) in comps.iter().enumerate() {
                    path_rows(&mut paths, k, *i, p.times(), p);
                }
            }
        }
        self.tables.push(paths);
        Ok(())
    }

    fn scheme(&self, mu: &JumpMeasure, x: f64, dt: f64) -> Result<SdeScheme> {
        let mode = self.cfg.numerics.small_jump_mode;
        match self.cfg.numerics.delta_jump {
            Some(d) => SdeScheme::new(dt, d, mode),
            None => SdeScheme::with_default_delta(mu, x, dt, mode),
        }
    }

    fn sde(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let (mu, f) = self.model_parts()?;
        let x = cfg.xs()[0];
        let horizon = cfg.scale.horizon;
        let dt = cfg.numerics.dt;
        let scheme = self.scheme(&mu, x, dt)?;
        let half = SdeScheme::new(dt / 2.0, scheme.delta_jump, scheme.small_jump_mode)?;
        let solver = SdeSolver::new(&mu, cfg.model.c, &f, scheme)?;
        let solver_half = SdeSolver::new(&mu, cfg.model.c, &f, half)?;
        let test = TestFunction::Exponential {
            lambda: cfg.numerics.test_lambda,
        };
        let generator = Generator::new(test, &mu, cfg.model.c, &f)?;
        let times = record_times(horizon, cfg.scale.grid, &[]);

        let runs = self.ensemble("sde", |_, rng| {
            let mut integral = 0.0;
            let p = solver.simulate_observed(x, horizon, RecordMode::Grid(times.clone()), rng, |_, h, z| {
                integral += generator.apply(z) * h;
            })?;
            let residual = test.eval(p.terminal()) - test.eval(x) - integral;
            Ok((p.path, residual))
        });
        let half_runs = self.ensemble("sde/half-step", |_, rng| {
            solver_half.residual_sample(&generator, x, horizon, rng)
        });

        let residuals: Vec<f64> = runs.iter().map(|(_, (_, r))| *r).collect();
        let residuals_half: Vec<f64> = half_runs.iter().map(|(_, r)| *r).collect();
        let (m, se, _) = summary(&residuals);
        let (m_half, se_half, _) = summary(&residuals_half);
        let bias = 0.5 * dt * (m - m_half).abs() / (dt / 2.0);
        self.stat("residual_mean", m);
        self.stat("residual_se", se);
        self.stat("residual_mean_half_step", m_half);
        self.stat("residual_se_half_step", se_half);
        self.stat("delta_jump", scheme.delta_jump);
        self.checks.push(Check::at_most(
            "martingale_residual",
            "|mean R| <= 4 SE + 0.5 dt |mean R(dt) - mean R(dt/2)| / (dt/2)",
            m.abs(),
            4.0 * se + bias,
        ));
        let terminal: Vec<f64> = runs.iter().map(|(_, (p, _))| p.terminal()).collect();
        let (tm, tse, tvar) = summary(&terminal);
        self.stat("terminal_mean", tm);
        self.stat("terminal_se", tse);
        self.stat("terminal_variance", tvar);
        if f.is_zero() {
            self.checks.push(mean_check("critical_martingale", &terminal, x));
        }
        for (name, mean, se, n_paths, dt) in [
            ("residual", m, se, residuals.len(), dt),
            ("residual_half_step", m_half, se_half, residuals_half.len(), dt / 2.0),
        ] {
            self.documents.push((
                name.to_string(),
                serde_json::json!({
                    "mean": mean, "se": se, "n_paths": n_paths, "dt": dt, "delta": scheme.delta_jump
                }),
            ));
        }
        let mut paths = Table::new("paths", &["run_id", "path_id", "t", "value"]);
        for (i, (p, _)) in &runs {
            if self.exported(*i) {
                path_rows(&mut paths, 0, *i, &times, p);
            }
        }
        self.tables.push(paths);
        Ok(())
    }

    fn contour(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let (mu, f) = self.model_parts()?;
        let n = cfg.ns()[0];
        let x = cfg.xs()[0];
        let c = cfg.model.c;
        let gamma = cfg.gamma()?;
        let level = cfg.scale.level;
        let grid = cfg.scale.grid;
        let m = initial_count(n, x);
        let laws = ModelLaws::build(&mu, n, c)?;
        let forest_params = ForestParams::rescaled(&laws, IncrementTable::scaled(&f, n))?;
        let direct_params = ContourParams::new(&laws, &f, gamma, f64::INFINITY, m)?;
        let slope = direct_params.slope;
        let levels: Vec<f64> = (0..grid).map(|k| gamma * (k as f64 + 0.5) / grid as f64).collect();
        let max_export = cfg.output.max_exported_paths;

        let forests = self.ensemble("contour/forest", |i, rng| {
            let mut params = forest_params.clone();
            let forest = build_planar_forest(m, &mut params, gamma, rng)?;
            let contour = contour_from_forest(&forest, slope)?;
            let profile = local_time_profile(&contour, &levels, c, n)?;
            let mismatches = levels
                .iter()
                .zip(&profile.crossings)
                .filter(|(&t, &k)| k % 2 != 0 || k / 2 != forest.alive_at(t))
                .count() as u64;
            let at_level = local_time_profile(&contour, &[level], c, n)?.local_time[0];
            let keep = (i < max_export).then_some((contour, profile.local_time));
            let doc = (i == 0 && max_export > 0)
                .then(|| serde_json::to_value(&forest))
                .transpose()?;
            Ok((mismatches, at_level, keep, doc))
        });
        let directs = self.ensemble("contour/direct", |i, rng| {
            let mut params = direct_params.clone();
            let d = direct_contour(&mut params, rng)?;
            let at_level = local_time_profile(&d.contour, &[level], c, n)?.local_time[0];
            Ok((at_level, (i < max_export).then_some(d.contour)))
        });

        let mismatches: u64 = forests.iter().map(|(_, r)| r.0).sum();
        self.checks.push(Check::at_most(
            "ray_knight",
            "levels where crossing pairs differ from the living population <= 0",
            mismatches as f64,
            0.0,
        ));
        let a: Vec<f64> = forests.iter().map(|(_, r)| r.1).collect();
        let b: Vec<f64> = directs.iter().map(|(_, r)| r.0).collect();
        let ks = ks_two_sample(&a, &b)?;
        let crit = ks_critical_value(cfg.numerics.ks_alpha, a.len(), b.len());
        self.checks.push(Check::at_most(
            "contour_law",
            format!(
                "KS(forest L, direct L) <= critical value at level {}",
                cfg.numerics.ks_alpha
            ),
            ks,
            crit,
        ));
        let (fm, fse, _) = summary(&a);
        let (dm, dse, _) = summary(&b);
        self.stat("local_time_mean_forest", fm);
        self.stat("local_time_se_forest", fse);
        self.stat("local_time_mean_direct", dm);
        self.stat("local_time_se_direct", dse);
        self.stat("ks", ks);
        self.stat("ks_critical_value", crit);
        self.stat("level", level);

        let mut contours = Table::new("contour", &["run_id", "path_id", "s", "h"]);
        let mut local = Table::new("local_time", &["path_id", "t", "l"]);
        for (i, (_, _, keep, doc)) in forests {
            if let Some((contour, lt)) = keep {
                contour_rows(&mut contours, 0, i, &contour);
                for (t, l) in levels.iter().zip(lt) {
                    local.push(row![i, t, l]);
                }
            }
            if let Some(doc) = doc {
                self.documents.push(("forest".to_string(), doc));
            }
        }
        for (i, (_, keep)) in directs {
            if let Some(contour) = keep {
                contour_rows(&mut contours, 1, i, &contour);
            }
        }
        self.tables.push(contours);
        self.tables.push(local);
        Ok(())
    }

    fn converge(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let (mu, f) = self.model_parts()?;
        let x = cfg.xs()[0];
        let horizon = cfg.scale.horizon;
        let scheme = self.scheme(&mu, x, cfg.numerics.dt)?;
        let solver = SdeSolver::new(&mu, cfg.model.c, &f, scheme)?;
        let limit: Vec<f64> = self
            .ensemble("converge/sde", |_, rng| {
                Ok(solver.simulate(x, horizon, RecordMode::Terminal, rng)?.terminal())
            })
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        let (lm, lse, _) = summary(&limit);
        self.stat("sde_terminal_mean", lm);
        self.stat("sde_terminal_se", lse);

        let mut table = Table::new("convergence", &["n", "ks", "critical_value", "mean", "se", "sde_mean"]);
        let mut ks_values = Vec::new();
        for n in cfg.ns() {
            let model = ScaledModel::new(&mu, cfg.model.c, &f, n)?;
            let sample: Vec<f64> = self
                .ensemble(&format!("converge/population/n={n}"), |_, rng| {
                    Ok(model
                        .simulate(x, horizon, RecordMode::Terminal, false, rng)?
                        .path
                        .terminal())
                })
                .into_iter()
                .map(|(_, v)| v)
                .collect();
            let ks = ks_two_sample(&sample, &limit)?;
            let crit = ks_critical_value(cfg.numerics.ks_alpha, sample.len(), limit.len());
            let (m, se, _) = summary(&sample);
            table.push(row![n, ks, crit, m, se, lm]);
            self.stat(&format!("ks_n={n}"), ks);
            ks_values.push(ks);
        }
        let inversions = ks_values.windows(2).filter(|w| w[1] > w[0]).count();
        self.checks.push(Check::at_most(
            "ks_monotone",
            "increases of KS along the N sequence <= 1",
            inversions as f64,
            1.0,
        ));
        let last = *ks_values.last().expect("at least one N");
        self.checks.push(Check::below(
            "ks_final",
            "KS at the largest N < threshold",
            last,
            cfg.numerics.ks_threshold,
        ));
        self.tables.push(table);
        Ok(())
    }

    fn girsanov(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let (mu, f) = self.model_parts()?;
        let n = cfg.ns()[0];
        let c = cfg.model.c;
        let laws = ModelLaws::build(&mu, n, c)?;
        let base = ContourParams::new(
            &laws,
            &InteractionFunction::zero(),
            cfg.gamma()?,
            cfg.s_max()?,
            u64::MAX,
        )?;
        let max_export = cfg.output.max_exported_paths;
        let runs = self.ensemble("girsanov", |i, rng| {
            let mut params = base.clone();
            let d = direct_contour(&mut params, rng)?;
            let w = girsanov_weight(&d.contour, &f, n, c)?;
            Ok((w, (i < max_export).then_some(d.contour)))
        });
        let weights: Vec<f64> = runs.iter().map(|(_, (w, _))| w.weight()).collect();
        let (m, se, var) = summary(&weights);
        self.stat("weight_mean", m);
        self.stat("weight_se", se);
        self.stat("weight_variance", var);
        self.checks.push(mean_check("girsanov_mean", &weights, 1.0));
        let mut table = Table::new(
            "weights",
            &["path_id", "log_weight", "weight", "binary_births", "binary_deaths"],
        );
        let mut contours = Table::new("contour", &["run_id", "path_id", "s", "h"]);
        for (i, (w, keep)) in &runs {
            table.push(row![i, w.log_weight(), w.weight(), w.binary_births, w.binary_deaths]);
            if let Some(contour) = keep {
                contour_rows(&mut contours, 0, *i, contour);
            }
        }
        self.tables.push(table);
        self.tables.push(contours);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(scenario: &str, extra_scale: &str, f: &str, n_paths: u64) -> StudyConfig {
        StudyConfig::from_json(&format!(
            r#"{{
                "scenario": "{scenario}",
                "model": {{"mu": {{"family": "atoms", "atoms": [[2.0, 1.0]]}}, "c": 1.0, "f": {f}}},
                "scale": {{"grid": 11 {extra_scale}}},
                "mc": {{"n_paths": {n_paths}, "master_seed": 7}}
            }}"#
        ))
        .unwrap()
    }

    const ZERO: &str = r#"{"kind": "zero"}"#;
    const LOGISTIC: &str = r#"{"kind": "logistic", "a": 1.0, "b": 1.0}"#;
    const CLIPPED: &str = r#"{"kind": "logistic", "a": 1.0, "b": 1.0, "clip": 2.0}"#;

    #[test]
    fn every_scenario_runs_and_passes() {
        let cases = [
            config("population", r#", "n": 10"#, LOGISTIC, 200),
            config("coupled", r#", "n": 10, "x": [0.5, 1.0, 2.0]"#, LOGISTIC, 50),
            config("sde", r#", "n": 10"#, ZERO, 200),
            config("contour", r#", "n": 10, "gamma": 1.5"#, LOGISTIC, 200),
            config("converge", r#", "n": [5, 20]"#, ZERO, 200).with_threshold(0.5),
            config("girsanov", r#", "n": 10, "gamma": 1.5, "s_max": 0.5"#, CLIPPED, 200),
        ];
        for cfg in cases {
            let out = run_study(&cfg).unwrap();
            assert!(out.report.passed(), "{:?}: {:#?}", cfg.scenario, out.report.checks);
            assert!(!out.report.checks.is_empty());
            assert_eq!(out.report.failures.count, 0);
        }
    }

    impl StudyConfig {
        fn with_threshold(mut self, t: f64) -> Self {
            self.numerics.ks_threshold = t;
            self
        }
    }

    #[test]
    fn reports_do_not_depend_on_workers() {
        let mut cfg = config("contour", r#", "n": 10, "gamma": 1.5"#, LOGISTIC, 40);
        let a = run_study(&cfg).unwrap();
        cfg.mc.worker_count = 4;
        let b = run_study(&cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.tables, b.tables);
    }

    #[test]
    fn exported_paths_are_grouped_by_path() {
        let mut cfg = config("population", r#", "n": 10"#, ZERO, 10);
        cfg.output.max_exported_paths = 100;
        let out = run_study(&cfg).unwrap();
        let paths = out.tables.iter().find(|t| t.name == "paths").unwrap();
        let ids: std::collections::BTreeSet<&str> = paths.rows.iter().map(|r| r[1].as_str()).collect();
        assert_eq!(ids.len(), 10);
        // 11 grid times plus the growth check at T/4
        assert_eq!(paths.rows.len(), 10 * 12);
    }

    #[test]
    fn budget_failures_are_summarized() {
        let cfg = config("population", r#", "n": 10"#, ZERO, 3);
        let mu = cfg.measure().unwrap();
        let model = ScaledModel::new(&mu, 1.0, &InteractionFunction::zero(), 10)
            .unwrap()
            .with_budget(1);
        let mut study = Study {
            cfg: &cfg,
            workers: 1,
            statistics: BTreeMap::new(),
            checks: Vec::new(),
            failures: FailureSummary::default(),
            tables: Vec::new(),
            documents: Vec::new(),
        };
        let ok = study.ensemble("budget", |_, rng| {
            model.simulate(1.0, 1.0, RecordMode::Terminal, false, rng)
        });
        assert!(ok.is_empty());
        assert_eq!(study.failures.count, 3);
        assert!(study.failures.examples[0].1.contains("budget"));
    }
}
