//! Regime sweeps: simulate `X_{n,p}` on a grid, compare with the limit law.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, OutputFormat, Regime};
use super::empirical::{wasserstein1, EmpiricalDistribution, Summary};
use crate::error::Result;
use crate::fragmentation::sample_x_hat;
use crate::limit_laws::{mean_var_xc, sample_x_lambda_many, sample_xc_pool};
use crate::moments::mergesort_series;
use crate::noisy_sort::{normalized, sample_mergesort_inversions, ErrorModel, QuicksortSampler};
use crate::rng::{par_draws, SeedPath};
use crate::tolerances;

/// Which erring sort produces the inversions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Quicksort,
    Mergesort,
}

/// `R` independent draws of `I(n,p)`; replicate `r` uses substream `seed.child(r)`.
pub fn simulate_inversions(n: usize, p: f64, replicates: usize, seed: SeedPath, algorithm: Algorithm) -> Result<Vec<u64>> {
    ErrorModel::new(p, seed.stream())?;
    Ok((0..replicates)
        .into_par_iter()
        .map_init(QuicksortSampler::new, |sampler, r| {
            let mut model = ErrorModel::new(p, seed.child(r as u64).stream()).expect("p checked above");
            match algorithm {
                Algorithm::Quicksort => sampler.inversions(n, &mut model),
                Algorithm::Mergesort => sample_mergesort_inversions(n, &mut model),
            }
        })
        .collect())
}

/// `R` draws of `X_{n,p}`.
pub fn simulate_x(n: usize, p: f64, replicates: usize, seed: SeedPath) -> Result<Vec<f64>> {
    Ok(simulate_inversions(n, p, replicates, seed, Algorithm::Quicksort)?
        .into_iter()
        .map(|i| normalized(i, n, p))
        .collect())
}

/// `count` draws of the `p -> 0, np -> inf` limit law at fragmentation depth `depth`.
pub fn sample_x_hat_many(depth: usize, count: usize, seed: SeedPath) -> Result<Vec<f64>> {
    sample_x_hat(depth, &mut seed.stream())?;
    Ok(par_draws(count, seed, |rng| sample_x_hat(depth, rng).expect("depth checked above")))
}

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub regime: &'static str,
    /// `c`, `beta`, `lambda` or `kappa`.
    pub param: f64,
    pub n: usize,
    pub p: f64,
    #[serde(flatten)]
    pub summary: Summary,
    pub theory_mean: Option<f64>,
    pub theory_variance: Option<f64>,
    pub d1: Option<f64>,
    pub limit_samples: Option<usize>,
    pub zero_fraction: f64,
    /// Mean of `ln I / ln n` over runs with `I > 0`.
    pub log_ratio_mean: Option<f64>,
    pub mean_gate: Option<bool>,
    pub variance_gate: Option<bool>,
    /// `mean <= 1 + 3 se`.
    pub bound_gate: Option<bool>,
    pub seed: u64,
    pub limit_seed: Option<u64>,
}

pub const CSV_COLUMNS: [&str; 21] = [
    "regime",
    "param",
    "n",
    "p",
    "replicates",
    "mean",
    "variance",
    "se_mean",
    "se_variance",
    "theory_mean",
    "theory_variance",
    "d1",
    "limit_samples",
    "zero_fraction",
    "log_ratio_mean",
    "mean_gate",
    "variance_gate",
    "bound_gate",
    "seed",
    "limit_seed",
    "status",
];

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl Row {
    pub fn passed(&self) -> bool {
        [self.mean_gate, self.variance_gate, self.bound_gate]
            .iter()
            .all(|g| g.unwrap_or(true))
    }

    fn csv_line(&self) -> String {
        let s = &self.summary;
        let status = if self.mean_gate.is_none() {
            "data"
        } else if self.passed() {
            "pass"
        } else {
            "fail"
        };
        [
            self.regime.to_string(),
            self.param.to_string(),
            self.n.to_string(),
            self.p.to_string(),
            s.count.to_string(),
            s.mean.to_string(),
            s.variance.to_string(),
            s.se_mean.to_string(),
            s.se_variance.to_string(),
            opt(self.theory_mean),
            opt(self.theory_variance),
            opt(self.d1),
            opt(self.limit_samples),
            self.zero_fraction.to_string(),
            opt(self.log_ratio_mean),
            opt(self.mean_gate),
            opt(self.variance_gate),
            opt(self.bound_gate),
            self.seed.to_string(),
            opt(self.limit_seed),
            status.to_string(),
        ]
        .join(",")
    }
}

/// Results of [`run_regime`]. Everything except `timings` is a function of the config.
#[derive(Clone, Debug)]
pub struct RegimeReport {
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    /// Wall-clock seconds per row, in row order.
    pub timings: Vec<f64>,
}

impl RegimeReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(Row::passed)
    }

    pub fn csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn metadata(&self) -> Value {
        json!({
            "package": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "regime": self.config.regime.name(),
            "p_rule": self.config.regime.rule(),
            "exploratory": self.config.regime.is_exploratory(),
            "master_seed": self.config.seed,
            "seed_scheme": "replicate r of grid point (i, n) uses SeedPath::new(seed).label(regime).label(\"sort\").child(i).child(n).child(r)",
            "columns": CSV_COLUMNS,
            "config": self.config,
            "gates": {
                "mean_sigmas": tolerances::MEAN_SIGMAS,
                "variance_relative": tolerances::VARIANCE_RELATIVE,
                "variance_sigmas": tolerances::VARIANCE_SIGMAS,
            },
            "passed": self.passed(),
        })
    }

    pub fn json(&self) -> Value {
        json!({ "metadata": self.metadata(), "rows": self.rows })
    }

    /// Writes the table (`out`, CSV) plus `<out>.meta.json`, or a single JSON
    /// document, and the wall times to `<out>.timing.json`.
    pub fn write(&self, out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        let mut written = vec![out.to_path_buf()];
        match format {
            OutputFormat::Csv => {
                std::fs::write(out, self.csv())?;
                let meta = sidecar(out, "meta.json");
                std::fs::write(&meta, pretty(&self.metadata())?)?;
                written.push(meta);
            }
            OutputFormat::Json => std::fs::write(out, pretty(&self.json())?)?,
        }
        let timing = sidecar(out, "timing.json");
        let mut f = std::fs::File::create(&timing)?;
        let entries: Vec<Value> = self
            .rows
            .iter()
            .zip(&self.timings)
            .map(|(r, t)| json!({ "param": r.param, "n": r.n, "seconds": t }))
            .collect();
        f.write_all(pretty(&Value::Array(entries))?.as_bytes())?;
        written.push(timing);
        Ok(written)
    }
}

pub(crate) fn pretty(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// `<out>.<suffix>` next to `out`.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    out.with_file_name(name)
}

fn limit_sample(config: &ExperimentConfig, param: f64, seed: SeedPath) -> Result<Option<Vec<f64>>> {
    let r = config.replicates;
    Ok(match config.regime {
        Regime::FixedC { .. } => Some(sample_xc_pool(param, config.pool_size(), config.generations, seed)?.samples().to_vec()),
        Regime::VanishingP { .. } => Some(sample_x_hat_many(config.depth, r, seed)?),
        Regime::LambdaOverN { .. } => Some(sample_x_lambda_many(param, config.depth, r, seed)?),
        _ => None,
    })
}

fn theory(regime: &Regime, param: f64) -> Result<(Option<f64>, Option<f64>)> {
    Ok(match regime {
        Regime::FixedC { .. } => {
            let (m, v) = mean_var_xc(param)?;
            (Some(m), Some(v))
        }
        Regime::VanishingP { .. } => (Some(1.0), Some(1.0 / 12.0)),
        Regime::LambdaOverN { .. } => (Some(1.0), Some(1.0 / 12.0 + 1.0 / (3.0 * param))),
        Regime::MergesortExploratory { .. } => (Some(mergesort_series(1e-12)?), None),
        Regime::Np0Exploratory { .. } => (None, None),
    })
}

/// Runs every `(parameter, n)` grid point of `config`.
///
/// The limit-law sample for a parameter is shared across all `n`, so the
/// `d1` column traces convergence against one fixed reference.
pub fn run_regime(config: &ExperimentConfig) -> Result<RegimeReport> {
    config.validate()?;
    let regime = &config.regime;
    let root = SeedPath::new(config.seed).label(regime.name());
    let algorithm = match regime {
        Regime::MergesortExploratory { .. } => Algorithm::Mergesort,
        _ => Algorithm::Quicksort,
    };
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (i, &param) in regime.parameters().iter().enumerate() {
        let limit_seed = root.label("limit").child(i as u64);
        let limit = limit_sample(config, param, limit_seed)?.map(EmpiricalDistribution::new).transpose()?;
        let (theory_mean, theory_variance) = theory(regime, param)?;
        for &n in &config.n_values {
            let start = Instant::now();
            let p = regime.p(param, n);
            let seed = root.label("sort").child(i as u64).child(n as u64);
            let inversions = simulate_inversions(n, p, config.replicates, seed, algorithm)?;
            let xs: Vec<f64> = inversions.iter().map(|&k| normalized(k, n, p)).collect();
            let empirical = EmpiricalDistribution::new(xs)?;
            let summary = empirical.summary();
            let positive: Vec<f64> = inversions
                .iter()
                .filter(|&&k| k > 0)
                .map(|&k| (k as f64).ln() / (n as f64).ln())
                .collect();
            let zero_fraction = (inversions.len() - positive.len()) as f64 / inversions.len() as f64;
            let gated = !regime.is_exploratory();
            rows.push(Row {
                regime: regime.name(),
                param,
                n,
                p,
                summary,
                theory_mean,
                theory_variance,
                d1: limit.as_ref().map(|l| wasserstein1(&empirical, l)),
                limit_samples: limit.as_ref().map(EmpiricalDistribution::len),
                zero_fraction,
                log_ratio_mean: (matches!(regime, Regime::Np0Exploratory { .. }) && !positive.is_empty())
                    .then(|| positive.iter().sum::<f64>() / positive.len() as f64),
                mean_gate: theory_mean.filter(|_| gated).map(|m| tolerances::mean_ok(&summary, m)),
                variance_gate: theory_variance.filter(|_| gated).map(|v| tolerances::variance_ok(&summary, v)),
                bound_gate: gated.then(|| tolerances::mean_at_most(&summary, 1.0)),
                seed: seed.value(),
                limit_seed: limit.as_ref().map(|_| limit_seed.value()),
            });
            timings.push(start.elapsed().as_secs_f64());
        }
    }
    Ok(RegimeReport {
        config: config.clone(),
        rows,
        timings,
    })
}
