//! Empirical laws and the Wasserstein-1 distance between them.

use serde::Serialize;

use crate::error::{Error, Result};

/// A finite sample, kept sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The left-continuous quantile `inf {x : F(x) >= q}` for `q` in `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.samples.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.samples[idx - 1]
    }

    pub fn mean(&self) -> f64 {
        self.summary().mean
    }

    pub fn variance(&self) -> f64 {
        self.summary().variance
    }

    /// Empirical survival function `P(X >= x)`.
    pub fn survival(&self, x: f64) -> f64 {
        let below = self.samples.partition_point(|&y| y < x);
        (self.samples.len() - below) as f64 / self.samples.len() as f64
    }

    pub fn summary(&self) -> Summary {
        Summary::of(&self.samples)
    }
}

/// Sample moments with their standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub se_mean: f64,
    /// `sqrt((m4 - s^4) / count)`, the delta-method error of the variance.
    pub se_variance: f64,
}

impl Summary {
    /// Two-pass moments; an empty slice gives NaNs and a single value zero spreads.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m4) = (0.0, 0.0);
        for &x in xs {
            let d2 = (x - mean) * (x - mean);
            m2 += d2;
            m4 += d2 * d2;
        }
        let variance = if xs.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
        let m4 = m4 / n;
        let m2n = m2 / n;
        Summary {
            count: xs.len(),
            mean,
            variance,
            se_mean: (variance / n).sqrt(),
            se_variance: ((m4 - m2n * m2n).max(0.0) / n).sqrt(),
        }
    }
}

/// `d1(a, b) = ∫₀¹ |F_a⁻¹(q) - F_b⁻¹(q)| dq`.
///
/// Both quantile functions are step functions, with jumps at multiples of
/// `1/|a|` and `1/|b|`; the integral is summed exactly over the merged grid.
pub fn wasserstein1(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xs, ys) = (a.samples(), b.samples());
    if xs.len() == ys.len() {
        return xs.iter().zip(ys).map(|(x, y)| (x - y).abs()).sum::<f64>() / xs.len() as f64;
    }
    let (m, n) = (xs.len() as u128, ys.len() as u128);
    // breakpoints i/m and j/n compared as i*n vs j*m
    let (mut i, mut j) = (0usize, 0usize);
    let mut last = 0u128;
    let mut total = 0.0;
    while i < xs.len() && j < ys.len() {
        let next_a = (i as u128 + 1) * n;
        let next_b = (j as u128 + 1) * m;
        let next = next_a.min(next_b);
        total += (next - last) as f64 * (xs[i] - ys[j]).abs();
        last = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    total / (m * n) as f64
}

/// [`wasserstein1`] on raw samples.
pub fn wasserstein1_samples(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = EmpiricalDistribution::new(a.to_vec())?;
    let b = EmpiricalDistribution::new(b.to_vec())?;
    Ok(wasserstein1(&a, &b))
}
