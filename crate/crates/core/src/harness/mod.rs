//! Experiment harness: configuration, regime sweeps, oracle checks and the
//! Wasserstein-1 statistics used to compare samples with limit laws.

pub mod config;
pub mod empirical;
pub mod oracle;
pub mod regime;

pub use config::{ExperimentConfig, OutputFormat, Regime};
pub use empirical::{wasserstein1, wasserstein1_samples, EmpiricalDistribution, Summary};
pub use oracle::{run_oracle_suite, OracleReport};
pub use regime::{run_regime, simulate_x, RegimeReport, Row};
