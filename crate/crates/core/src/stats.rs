//! Two-sample Kolmogorov–Smirnov distance and streaming moment summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `sup_x |F_a(x) - F_b(x)|` for the empirical CDFs of `a` and `b`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample critical value `c(α) sqrt((n + m)/(n m))` with
/// `c(α) = sqrt(-ln(α/2)/2)`.
pub fn ks_critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// Mean, unbiased variance and `E|X|^p` with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub p: f64,
    pub p_moment: f64,
    pub mean_se: f64,
    pub variance_se: f64,
    pub p_moment_se: f64,
}

impl MomentStats {
    pub fn relative_se(&self) -> f64 {
        if self.mean == 0.0 {
            0.0
        } else {
            self.mean_se / self.mean.abs()
        }
    }
}

/// Welford accumulator for mean, variance and the `p`-th absolute moment.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
    p_sum: f64,
}

impl Welford {
    fn push(&mut self, x: f64, p: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
        self.p_sum += x.abs().powf(p);
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    fn p_moment(&self) -> f64 {
        self.p_sum / self.n as f64
    }
}

const BATCHES: usize = 20;

/// Single pass over `sample`; the variance and `p`-moment errors come from
/// the spread of [`BATCHES`] contiguous batch estimates.
pub fn moment_stats(sample: &[f64], p: f64) -> Result<MomentStats> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sample.len();
    let batches = BATCHES.min(n / 2).max(1);
    let mut all = Welford::default();
    let mut batch = vec![Welford::default(); batches];
    for (i, &x) in sample.iter().enumerate() {
        all.push(x, p);
        batch[i * batches / n].push(x, p);
    }
    let spread = |values: Vec<f64>| -> f64 {
        if values.len() < 2 {
            return 0.0;
        }
        let mut w = Welford::default();
        for v in values {
            w.push(v, 1.0);
        }
        (w.variance() / w.n as f64).sqrt()
    };
    let variance = all.variance();
    Ok(MomentStats {
        n,
        mean: all.mean,
        variance,
        p,
        p_moment: all.p_moment(),
        mean_se: (variance / n as f64).sqrt(),
        variance_se: spread(batch.iter().map(Welford::variance).collect()),
        p_moment_se: spread(batch.iter().map(Welford::p_moment).collect()),
    })
}
