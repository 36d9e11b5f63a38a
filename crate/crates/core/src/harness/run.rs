use rayon::prelude::*;
use serde::Serialize;

use super::config::{BenchmarkConfig, MomentumInit};
use super::{error_metric, VERSION};
use crate::bea::{
    convergence_order_estimate, defect_order_estimate, fit_slope, interpolation_gap, Defect, ModifiedMethod,
    ModifiedSystem, MAX_ORDER,
};
use crate::continuous::contact_hamiltonian;
use crate::error::Result;
use crate::exact::{exact_damped_solution, exact_forced_solution};
use crate::geometry::{contactness_check, random_states, DEFAULT_FD_EPS};
use crate::integrators::{integrate_with, leapfrog_momentum_from_contact, IntegrateOptions, StepperId, VncStart};
use crate::system::{ContactState, OscillatorSystem, Trajectory};

/// JSON report envelope.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T> {
    pub config: BenchmarkConfig,
    pub results: Vec<T>,
    pub version: &'static str,
}

impl<T> Report<T> {
    fn new(config: &BenchmarkConfig, results: Vec<T>) -> Self {
        Self {
            config: config.clone(),
            results,
            version: VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRecord {
    pub method: StepperId,
    pub alpha: f64,
    pub h: f64,
    pub t: f64,
    pub x_num: f64,
    pub x_exact: f64,
    pub err: f64,
    #[serde(rename = "H_num")]
    pub h_num: f64,
}

/// A `(method, α)` cell that could not be completed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub method: StepperId,
    pub alpha: f64,
    pub message: String,
    /// Whether the failure came from the numerics rather than the setup.
    pub numerical: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkOutcome {
    pub records: Vec<BenchmarkRecord>,
    pub failures: Vec<CellFailure>,
}

impl BenchmarkOutcome {
    /// Records of one cell, in time order.
    pub fn cell(&self, method: StepperId, alpha: f64) -> Vec<&BenchmarkRecord> {
        self.records
            .iter()
            .filter(|r| r.method == method && r.alpha == alpha)
            .collect()
    }

    /// `max |err|` of one cell, `None` if it has no records.
    pub fn max_abs_err(&self, method: StepperId, alpha: f64) -> Option<f64> {
        let cell = self.cell(method, alpha);
        (!cell.is_empty()).then(|| cell.iter().fold(0.0f64, |m, r| m.max(r.err.abs())))
    }
}

/// Position and velocity of the closed-form solution of `sys` started from
/// `(x0, v0)` at `t = 0`.
pub fn exact_solution(sys: &OscillatorSystem, x0: f64, v0: f64, t: f64) -> Result<(f64, f64)> {
    match sys.forcing() {
        Some(f) => exact_forced_solution(sys.alpha(), f.amplitude, f.frequency, x0, v0, t),
        None => Ok(exact_damped_solution(sys.alpha(), x0, v0, t)),
    }
}

fn cells(config: &BenchmarkConfig) -> Vec<(StepperId, f64)> {
    config
        .methods
        .iter()
        .flat_map(|&m| config.alpha_list.iter().map(move |&a| (m, a)))
        .collect()
}

fn trajectory(config: &BenchmarkConfig, method: StepperId, sys: &OscillatorSystem, h: f64, n: usize) -> Result<Trajectory> {
    let mut initial = config.initial_state();
    if method == StepperId::Leapfrog && config.momentum_init == MomentumInit::LeapfrogPi {
        initial.p = leapfrog_momentum_from_contact(sys, initial.t, &initial.x, &initial.p, h);
    }
    let vnc_start = if method == StepperId::Vnc && sys.damping() == crate::system::DampingKind::LinearZ {
        VncStart::Seeded(vec![exact_solution(sys, config.x0, config.p0, h)?.0])
    } else {
        VncStart::Taylor
    };
    let options = IntegrateOptions {
        vnc_start,
        skip_diagnostics: true,
    };
    integrate_with(method, sys, &initial, h, n, &options)
}

fn benchmark_cell(config: &BenchmarkConfig, method: StepperId, alpha: f64) -> Result<Vec<BenchmarkRecord>> {
    let sys = config.system_for(method, alpha)?;
    let traj = trajectory(config, method, &sys, config.h, config.n_steps())?;
    traj.states
        .iter()
        .map(|s| {
            let x_exact = exact_solution(&sys, config.x0, config.p0, s.t)?.0;
            Ok(BenchmarkRecord {
                method,
                alpha,
                h: config.h,
                t: s.t,
                x_num: s.x[0],
                x_exact,
                err: error_metric(s.x[0], x_exact)?,
                h_num: contact_hamiltonian(&sys, s),
            })
        })
        .collect()
}

/// Runs every `(method, α)` cell. Cells run in parallel; a failing cell is
/// reported in `failures` and the others still run. Records are ordered by
/// `(method, α, t)`.
pub fn run_benchmark(config: &BenchmarkConfig) -> BenchmarkOutcome {
    let results: Vec<_> = cells(config)
        .into_par_iter()
        .map(|(m, a)| ((m, a), benchmark_cell(config, m, a)))
        .collect();
    let mut outcome = BenchmarkOutcome::default();
    for ((method, alpha), result) in results {
        match result {
            Ok(records) => outcome.records.extend(records),
            Err(e) => outcome.failures.push(CellFailure {
                method,
                alpha,
                numerical: e.is_numerical(),
                message: e.to_string(),
            }),
        }
    }
    outcome.records.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.t.total_cmp(&b.t))
    });
    outcome
        .failures
        .sort_by(|a, b| a.method.cmp(&b.method).then(a.alpha.total_cmp(&b.alpha)));
    outcome
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRecord {
    pub method: StepperId,
    pub alpha: f64,
    pub h: f64,
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub z: f64,
    #[serde(rename = "H")]
    pub hamiltonian: f64,
}

/// Plain trajectories of every `(method, α)` cell; the first failure aborts.
pub fn run_simulate(config: &BenchmarkConfig) -> Result<Vec<SimulationRecord>> {
    let per_cell = cells(config)
        .into_par_iter()
        .map(|(method, alpha)| {
            let sys = config.system_for(method, alpha)?;
            let traj = trajectory(config, method, &sys, config.h, config.n_steps())?;
            Ok(traj
                .states
                .iter()
                .map(|s| SimulationRecord {
                    method,
                    alpha,
                    h: config.h,
                    t: s.t,
                    x: s.x[0],
                    p: s.p[0],
                    z: s.z,
                    hamiltonian: contact_hamiltonian(&sys, s),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactCheckRow {
    pub method: StepperId,
    pub alpha: f64,
    pub h: f64,
    pub samples: usize,
    pub seed: u64,
    pub max_pullback_residual: f64,
    pub max_factor_gap: f64,
    pub min_measured_factor: f64,
    pub max_measured_factor: f64,
}

/// Contactness check over `samples` seeded states (components in `[-2, 2]`)
/// for every `(method, α, h)`.
pub fn run_contact_check(config: &BenchmarkConfig) -> Result<Report<ContactCheckRow>> {
    let states = random_states(config.seed, config.samples, 1, 2.0);
    let jobs: Vec<(StepperId, f64, f64)> = cells(config)
        .into_iter()
        .flat_map(|(m, a)| config.h_list.iter().map(move |&h| (m, a, h)))
        .collect();
    let rows = jobs
        .into_par_iter()
        .map(|(method, alpha, h)| {
            contact_check_row(config, &states, method, alpha, h).map_err(|e| e.in_cell(format!("{method} alpha={alpha} h={h}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report::new(config, rows))
}

fn contact_check_row(
    config: &BenchmarkConfig,
    states: &[ContactState],
    method: StepperId,
    alpha: f64,
    h: f64,
) -> Result<ContactCheckRow> {
    let sys = config.system_for(method, alpha)?;
    let mut row = ContactCheckRow {
        method,
        alpha,
        h,
        samples: states.len(),
        seed: config.seed,
        max_pullback_residual: 0.0,
        max_factor_gap: 0.0,
        min_measured_factor: f64::INFINITY,
        max_measured_factor: f64::NEG_INFINITY,
    };
    for s in states {
        let r = contactness_check(method, &sys, s, h, DEFAULT_FD_EPS)?;
        row.max_pullback_residual = row.max_pullback_residual.max(r.pullback_residual);
        row.max_factor_gap = row.max_factor_gap.max(r.factor_gap());
        row.min_measured_factor = row.min_measured_factor.min(r.measured_factor);
        row.max_measured_factor = row.max_measured_factor.max(r.measured_factor);
    }
    Ok(row)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeaRow {
    pub method: StepperId,
    pub alpha: f64,
    pub order: usize,
    pub x_slope: f64,
    pub z_slope: f64,
    pub slope: f64,
    pub x_fit_residual: f64,
    pub z_fit_residual: f64,
    pub defects: Vec<Defect>,
    /// Slope of the gap between trajectory and modified solution, for the
    /// highest truncation only.
    pub interpolation_slope: Option<f64>,
}

/// Defect slopes of every truncation `k = 0..=2` for each contact method
/// and `α`, from `(x0, p0, z0)` over `[0, t_final]`.
pub fn run_bea(config: &BenchmarkConfig) -> Result<Report<BeaRow>> {
    let jobs: Vec<(StepperId, f64, usize)> = cells(config)
        .into_iter()
        .flat_map(|(m, a)| (0..=MAX_ORDER).map(move |k| (m, a, k)))
        .collect();
    let rows = jobs
        .into_par_iter()
        .map(|(method, alpha, order)| {
            bea_row(config, method, alpha, order).map_err(|e| e.in_cell(format!("{method} alpha={alpha} k={order}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report::new(config, rows))
}

fn bea_row(config: &BenchmarkConfig, method: StepperId, alpha: f64, order: usize) -> Result<BeaRow> {
    let sys = config.system_for(method, alpha)?;
    let modified = ModifiedSystem::for_system(ModifiedMethod::from_stepper(method)?, order, &sys)?;
    let est = defect_order_estimate(&modified, &config.h_list, config.t_final, [config.x0, config.p0, config.z0])?;
    let interpolation_slope = if order == MAX_ORDER {
        let gaps = config
            .h_list
            .iter()
            .map(|&h| interpolation_gap(&modified, &config.initial_state(), h, config.t_final))
            .collect::<Result<Vec<_>>>()?;
        Some(fit_slope(&config.h_list, &gaps)?.slope)
    } else {
        None
    };
    Ok(BeaRow {
        method,
        alpha,
        order,
        x_slope: est.x_fit.slope,
        z_slope: est.z_fit.slope,
        slope: est.slope(),
        x_fit_residual: est.x_fit.residual,
        z_fit_residual: est.z_fit.residual,
        defects: est.defects,
        interpolation_slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub method: StepperId,
    pub alpha: f64,
    pub t_final: f64,
    pub h_list: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub fit_residual: f64,
}

/// Global-error slopes at `t_final` against the closed-form solution.
pub fn run_convergence(config: &BenchmarkConfig) -> Result<Report<ConvergenceRow>> {
    let rows = cells(config)
        .into_par_iter()
        .map(|(method, alpha)| convergence_row(config, method, alpha).map_err(|e| e.in_cell(format!("{method} alpha={alpha}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report::new(config, rows))
}

fn convergence_row(config: &BenchmarkConfig, method: StepperId, alpha: f64) -> Result<ConvergenceRow> {
    let sys = config.system_for(method, alpha)?;
    let target = exact_solution(&sys, config.x0, config.p0, config.t_final)?;
    let (errors, fit) = convergence_order_estimate(
        method,
        &sys,
        &config.initial_state(),
        |_| target,
        &config.h_list,
        config.t_final,
    )?;
    Ok(ConvergenceRow {
        method,
        alpha,
        t_final: config.t_final,
        h_list: config.h_list.clone(),
        errors,
        slope: fit.slope,
        fit_residual: fit.residual,
    })
}
