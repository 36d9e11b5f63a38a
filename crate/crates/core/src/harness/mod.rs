//! Benchmark orchestration behind the `contact-bench` CLI: configuration,
//! error studies against the closed-form solutions, verification reports and
//! CSV/JSON emission.

mod config;
mod output;
mod run;

pub use config::{BenchmarkConfig, Command, MomentumInit, Scenario};
pub use output::{
    emit_csv, emit_json, emit_simulation_csv, write_csv, write_json, write_simulation_csv, CSV_HEADER,
    SIMULATION_HEADER,
};
pub use run::{
    exact_solution, run_bea, run_benchmark, run_contact_check, run_convergence, run_simulate, BeaRow,
    BenchmarkOutcome, BenchmarkRecord, CellFailure, ContactCheckRow, ConvergenceRow, Report, SimulationRecord,
};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Regularized relative error `(10 + x*)/(10 + x) - 1` of the approximation
/// `x_star` against the exact value `x`.
pub fn error_metric(x_star: f64, x: f64) -> Result<f64> {
    let denominator = 10.0 + x;
    if denominator <= 0.1 || !denominator.is_finite() {
        return Err(Error::DomainError { denominator });
    }
    Ok((10.0 + x_star) / denominator - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        assert_eq!(error_metric(0.37, 0.37).unwrap(), 0.0);
        assert!((error_metric(0.1, 0.0).unwrap() - 0.01).abs() < 1e-16);
        assert!((error_metric(0.0, 0.1).unwrap() + 0.1 / 10.1).abs() < 1e-16);
    }

    #[test]
    fn metric_guards_denominator() {
        assert!(matches!(error_metric(0.0, -9.95), Err(Error::DomainError { .. })));
        assert!(matches!(error_metric(0.0, -12.0), Err(Error::DomainError { .. })));
        assert!(error_metric(0.0, -9.8).is_ok());
    }
}
