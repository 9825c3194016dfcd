//! Experiment configuration, read from JSON.
//!
//! ```json
//! {
//!   "regime": { "kind": "lambda_over_n", "lambda_values": [2.0] },
//!   "n_values": [1000, 10000],
//!   "replicates": 10000,
//!   "seed": 1,
//!   "depth": 25,
//!   "output": "results.csv",
//!   "format": "csv"
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragmentation::{DEFAULT_DEPTH, MAX_DEPTH};
use crate::limit_laws::{DEFAULT_GENERATIONS, MIN_POOL_SIZE};

/// Upper limit on `n * R` summed over the grid, about an hour of single-core work.
pub const MAX_WORK: f64 = 1e10;

/// Which scaling of `p` with `n` a sweep explores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// `p = c` for each `c`.
    FixedC { c_values: Vec<f64> },
    /// `p = n^(-beta)` with `0 < beta < 1`, so `p -> 0` and `np -> inf`.
    VanishingP { beta: f64 },
    /// `p = lambda / n`.
    LambdaOverN { lambda_values: Vec<f64> },
    /// Merge sort with `p = lambda / n`; data only.
    MergesortExploratory { lambda_values: Vec<f64> },
    /// `p = kappa / (n (ln n)^gamma)`, so `np -> 0`; data only.
    Np0Exploratory { kappa: f64, gamma: f64 },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::FixedC { .. } => "fixed_c",
            Regime::VanishingP { .. } => "vanishing_p",
            Regime::LambdaOverN { .. } => "lambda_over_n",
            Regime::MergesortExploratory { .. } => "mergesort_exploratory",
            Regime::Np0Exploratory { .. } => "np0_exploratory",
        }
    }

    /// Exploratory regimes produce data but are never gated.
    pub fn is_exploratory(&self) -> bool {
        matches!(self, Regime::MergesortExploratory { .. } | Regime::Np0Exploratory { .. })
    }

    /// The grid parameters (`c`, `beta`, `lambda` or `kappa`).
    pub fn parameters(&self) -> Vec<f64> {
        match self {
            Regime::FixedC { c_values } => c_values.clone(),
            Regime::VanishingP { beta } => vec![*beta],
            Regime::LambdaOverN { lambda_values } | Regime::MergesortExploratory { lambda_values } => {
                lambda_values.clone()
            }
            Regime::Np0Exploratory { kappa, .. } => vec![*kappa],
        }
    }

    /// `p` at grid parameter `param` and size `n`.
    pub fn p(&self, param: f64, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Regime::FixedC { .. } => param,
            Regime::VanishingP { beta } => nf.powf(-beta),
            Regime::LambdaOverN { .. } | Regime::MergesortExploratory { .. } => param / nf,
            Regime::Np0Exploratory { gamma, .. } => param / (nf * nf.ln().powf(*gamma)),
        }
    }

    /// Human-readable rule for `p(n)`, echoed into the metadata.
    pub fn rule(&self) -> String {
        match self {
            Regime::FixedC { .. } => "p = c (fixed)".into(),
            Regime::VanishingP { beta } => format!("p = n^(-{beta}); n p = n^(1-{beta}) -> infinity"),
            Regime::LambdaOverN { .. } => "p = lambda / n".into(),
            Regime::MergesortExploratory { .. } => "merge sort, p = lambda / n".into(),
            Regime::Np0Exploratory { gamma, .. } => format!("p = kappa / (n (ln n)^{gamma}); n p -> 0"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_depth() -> usize {
    DEFAULT_DEPTH
}

fn default_generations() -> usize {
    DEFAULT_GENERATIONS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub regime: Regime,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Size of the `X_c` pool; defaults to `max(replicates, 1000)`.
    #[serde(default)]
    pub pool_size: Option<usize>,
    #[serde(default = "default_generations")]
    pub generations: usize,
    /// Fragmentation depth for the `p -> 0` limit laws.
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size.unwrap_or(self.replicates.max(MIN_POOL_SIZE))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_values.is_empty() {
            return fail("n_values is empty".into());
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 2) {
            return fail(format!("n = {n} is below 2"));
        }
        if self.replicates < 2 {
            return fail("replicates must be at least 2".into());
        }
        if self.depth > MAX_DEPTH {
            return fail(format!("depth {} exceeds {MAX_DEPTH}", self.depth));
        }
        if self.generations == 0 {
            return fail("generations must be at least 1".into());
        }
        if self.pool_size() < MIN_POOL_SIZE {
            return fail(format!("pool_size must be at least {MIN_POOL_SIZE}"));
        }
        let params = self.regime.parameters();
        if params.is_empty() {
            return fail("the parameter grid is empty".into());
        }
        match &self.regime {
            Regime::FixedC { c_values } => {
                if let Some(c) = c_values.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
                    return fail(format!("c = {c} is outside (0, 1]"));
                }
            }
            Regime::VanishingP { beta } => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return fail(format!("beta = {beta} must lie in (0, 1) so that n p -> infinity"));
                }
            }
            Regime::LambdaOverN { lambda_values } | Regime::MergesortExploratory { lambda_values } => {
                if let Some(l) = lambda_values.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                    return fail(format!("lambda = {l} must be positive"));
                }
            }
            Regime::Np0Exploratory { kappa, gamma } => {
                if !(*kappa > 0.0 && kappa.is_finite() && gamma.is_finite()) {
                    return fail("kappa must be positive and gamma finite".into());
                }
            }
        }
        for &param in &params {
            for &n in &self.n_values {
                let p = self.regime.p(param, n);
                if !(p > 0.0 && p <= 1.0) {
                    return fail(format!("p = {p} at n = {n} is outside (0, 1]"));
                }
            }
        }
        let work: f64 = params.len() as f64 * self.n_values.iter().map(|&n| n as f64).sum::<f64>() * self.replicates as f64;
        if work > MAX_WORK {
            return fail(format!("budget guard: sum of n * R = {work:.3e} exceeds {MAX_WORK:.0e}"));
        }
        Ok(())
    }
}
