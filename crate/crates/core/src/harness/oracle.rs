//! Exact enumeration against Monte Carlo for small inputs.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::empirical::Summary;
use crate::error::Result;
use crate::inversions::{exact_expected_inversions, exact_expected_toll, toll_expectation_formula};
use crate::moments::ratio;
use crate::noisy_sort::{ErrorModel, QuicksortSampler};
use crate::rng::{SeedPath, CHUNK};
use crate::tolerances::{within_sigmas, ORACLE_SIGMAS};

pub const ORACLE_SIZES: std::ops::RangeInclusive<usize> = 2..=6;
pub const DEFAULT_ORACLE_RUNS: usize = 1_000_000;

/// `p` values of the suite, as exact fractions.
pub fn oracle_probabilities() -> Vec<BigRational> {
    vec![ratio(0, 1), ratio(1, 4), ratio(1, 2), ratio(3, 4)]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub n: usize,
    pub p: String,
    pub exact_mean: String,
    pub mc_mean: f64,
    pub se: f64,
    pub mc_pass: bool,
    pub toll_exact: String,
    pub toll_formula: String,
    pub toll_pass: bool,
}

impl OracleRow {
    pub fn passed(&self) -> bool {
        self.mc_pass && self.toll_pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub runs: usize,
    pub seed: u64,
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(OracleRow::passed)
    }

    pub fn failures(&self) -> Vec<&OracleRow> {
        self.rows.iter().filter(|r| !r.passed()).collect()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("n,p,exact_mean,mc_mean,se,mc_pass,toll_exact,toll_formula,toll_pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.n, r.p, r.exact_mean, r.mc_mean, r.se, r.mc_pass, r.toll_exact, r.toll_formula, r.toll_pass
            ));
        }
        out
    }

    pub fn json(&self) -> Value {
        json!({ "runs": self.runs, "seed": self.seed, "sigmas": ORACLE_SIGMAS, "passed": self.passed(), "rows": self.rows })
    }
}

/// `runs` draws of `I(n,p)`, slot `i` from substream `seed.child(i / CHUNK)`.
pub fn monte_carlo_inversions(n: usize, p: f64, runs: usize, seed: SeedPath) -> Result<Vec<u64>> {
    ErrorModel::new(p, seed.stream())?;
    let mut out = vec![0u64; runs];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut model = ErrorModel::new(p, seed.child(c as u64).stream()).expect("p checked above");
        let mut sampler = QuicksortSampler::new();
        for slot in chunk {
            *slot = sampler.inversions(n, &mut model);
        }
    });
    Ok(out)
}

/// For every `n` in 2..=6 and `p` in {0, 1/4, 1/2, 3/4}: the Monte Carlo mean
/// of `I(n,p)` against exact enumeration (4 standard errors), and the exact
/// first-step toll against its closed form (rational equality).
pub fn run_oracle_suite(runs: usize, seed: u64) -> Result<OracleReport> {
    let root = SeedPath::new(seed).label("oracle");
    let mut rows = Vec::new();
    for n in ORACLE_SIZES {
        for (i, p) in oracle_probabilities().into_iter().enumerate() {
            let pf = p.to_f64().expect("small fraction");
            let exact = exact_expected_inversions(n, &p)?;
            let draws = monte_carlo_inversions(n, pf, runs, root.child(n as u64).child(i as u64))?;
            let xs: Vec<f64> = draws.iter().map(|&k| k as f64).collect();
            let s = Summary::of(&xs);
            let exact_f = exact.to_f64().expect("finite");
            let toll_exact = exact_expected_toll(n, &p)?;
            let toll_formula = toll_expectation_formula(n, &p);
            rows.push(OracleRow {
                n,
                p: p.to_string(),
                exact_mean: exact.to_string(),
                mc_mean: s.mean,
                se: s.se_mean,
                mc_pass: within_sigmas(s.mean, s.se_mean, exact_f, ORACLE_SIGMAS),
                toll_pass: toll_exact == toll_formula,
                toll_exact: toll_exact.to_string(),
                toll_formula: toll_formula.to_string(),
            });
        }
    }
    Ok(OracleReport { runs, seed, rows })
}
