//! Time-indexed path records.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    /// Right-continuous step function.
    Constant,
    /// Linear interpolation between breakpoints.
    Linear,
}

/// A path on `[0, horizon]` stored by its breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePath {
    kind: PathKind,
    times: Vec<f64>,
    values: Vec<f64>,
    horizon: f64,
}

impl PiecewisePath {
    pub fn new(kind: PathKind, initial: f64) -> Self {
        Self {
            kind,
            times: vec![0.0],
            values: vec![initial],
            horizon: 0.0,
        }
    }

    /// Appends a breakpoint. Times must increase; a step path may record
    /// several values at one time, the last one wins.
    pub fn push(&mut self, t: f64, value: f64) {
        let last = *self.times.last().expect("path has an initial point");
        assert!(t >= last, "path times must not decrease ({t} after {last})");
        if t == last && self.kind == PathKind::Constant {
            *self.values.last_mut().unwrap() = value;
        } else {
            self.times.push(t);
            self.values.push(value);
        }
        self.horizon = self.horizon.max(t);
    }

    /// Extends the time range without adding a breakpoint.
    pub fn close(&mut self, horizon: f64) {
        self.horizon = self.horizon.max(horizon);
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.values[0];
        }
        match self.kind {
            PathKind::Constant => self.values[i - 1],
            PathKind::Linear => {
                if i == self.times.len() {
                    return self.values[i - 1];
                }
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let (v0, v1) = (self.values[i - 1], self.values[i]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
