//! Numerical checks that one-step maps are contact transformations.
//!
//! A map `s ↦ s⁺` on `(x, p, z)` is contact for `η = dz - p·dx` when
//! `η(s⁺)·J = c·η(s)` for the Jacobian `J` and some scalar `c`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::continuous::contact_hamiltonian;
use crate::error::{Error, Result};
use crate::integrators::{
    discrete_lagrangian_for, leapfrog_momentum_from_contact, one_step, StepperId,
};
use crate::system::{max_abs_diff, ContactState, DampingKind, OscillatorSystem, Trajectory};
use crate::variational::{discrete_conformal_factor, DiscreteLagrangian, Window};

pub const DEFAULT_FD_EPS: f64 = 1e-6;

/// Outcome of [`contactness_check`] at one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactCheckReport {
    pub point: ContactState,
    pub pullback_residual: f64,
    pub measured_factor: f64,
    pub predicted_factor: f64,
    pub fd_step: f64,
}

impl ContactCheckReport {
    pub fn factor_gap(&self) -> f64 {
        (self.measured_factor - self.predicted_factor).abs()
    }
}

/// Central-difference Jacobian of an arbitrary map on `(x, p, z)`.
pub fn map_jacobian<F>(mut map: F, state: &ContactState, fd_eps: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&ContactState) -> Result<ContactState>,
{
    if fd_eps.is_nan() || fd_eps <= 0.0 {
        return Err(Error::Config(format!("fd_eps must be positive, got {fd_eps}")));
    }
    let coords = state.to_coords();
    let m = coords.len();
    let mut jac = DMatrix::zeros(m, m);
    for j in 0..m {
        let step = fd_eps * coords[j].abs().max(1.0);
        let mut fwd = coords.clone();
        let mut bwd = coords.clone();
        fwd[j] += step;
        bwd[j] -= step;
        let out_f = map(&ContactState::from_coords(state.t, &fwd))?.to_coords();
        let out_b = map(&ContactState::from_coords(state.t, &bwd))?.to_coords();
        for i in 0..m {
            jac[(i, j)] = (out_f[i] - out_b[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

pub fn one_step_jacobian(
    stepper: StepperId,
    sys: &OscillatorSystem,
    state: &ContactState,
    h: f64,
    fd_eps: f64,
) -> Result<DMatrix<f64>> {
    map_jacobian(|s| one_step(stepper, sys, s, h), state, fd_eps)
}

/// Row covector of `dz - p·dx` at `s`, ordered as `(x, p, z)`.
pub fn contact_form(state: &ContactState) -> Vec<f64> {
    let n = state.dim();
    let mut eta = vec![0.0; 2 * n + 1];
    for (e, p) in eta.iter_mut().zip(&state.p) {
        *e = -p;
    }
    eta[2 * n] = 1.0;
    eta
}

/// Pullback residual `‖η(s⁺)J - cη(s)‖∞` and the measured factor `c`.
pub fn pullback(state: &ContactState, next: &ContactState, jac: &DMatrix<f64>) -> (f64, f64) {
    let eta_next = contact_form(next);
    let eta = contact_form(state);
    let m = eta.len();
    let w: Vec<f64> = (0..m)
        .map(|j| (0..m).map(|i| eta_next[i] * jac[(i, j)]).sum())
        .collect();
    let c = w[m - 1];
    let residual = w
        .iter()
        .zip(&eta)
        .map(|(w, e)| (w - c * e).abs())
        .fold(0.0, f64::max);
    (residual, c)
}

/// Measures how far one step of `stepper` from `state` is from being a
/// contact map, and pairs the measured factor with the predicted one.
///
/// Contact steppers predict `(1 + hD₃L)/(1 - hD₄L)` on the step's window.
/// The reference methods are compared with the exact flow's factor
/// `exp(-h·∂H/∂z)`, with the rate averaged over the step.
pub fn contactness_check(
    stepper: StepperId,
    sys: &OscillatorSystem,
    state: &ContactState,
    h: f64,
    fd_eps: f64,
) -> Result<ContactCheckReport> {
    let next = one_step(stepper, sys, state, h)?;
    let jac = one_step_jacobian(stepper, sys, state, h, fd_eps)?;
    let (pullback_residual, measured_factor) = pullback(state, &next, &jac);
    let predicted_factor = match discrete_lagrangian_for(stepper, sys) {
        Some(lag) => conformal_factor_prediction(&lag?, &step_window(state, &next, h))?,
        None => (-0.5 * h * (sys.damping_rate(state.z) + sys.damping_rate(next.z))).exp(),
    };
    Ok(ContactCheckReport {
        point: state.clone(),
        pullback_residual,
        measured_factor,
        predicted_factor,
        fd_step: fd_eps,
    })
}

fn step_window<'a>(state: &'a ContactState, next: &'a ContactState, h: f64) -> Window<'a> {
    Window::new(&state.x, &next.x, state.z, next.z, state.t, h)
}

/// `(1 + hD₃L)/(1 - hD₄L)` for the window of one step.
pub fn conformal_factor_prediction<L: DiscreteLagrangian + ?Sized>(lag: &L, w: &Window<'_>) -> Result<f64> {
    discrete_conformal_factor(lag, w)
}

/// Running product of the per-step factors along a trajectory.
pub fn cumulative_conformal<L: DiscreteLagrangian + ?Sized>(traj: &Trajectory, lag: &L) -> Result<Vec<f64>> {
    crate::integrators::cumulative_factors(lag, &traj.states, traj.h)
}

/// Deviation of `H` from its decay law.
///
/// Linear damping: `H_j - H₀e^{-α(t_j - t₀)}`, one entry per state.
/// Quadratic damping: `(H_{j+1} - H_j)/h + αz_{j+½}H_{j+½}` with midpoint
/// averages, one entry per step.
pub fn hamiltonian_decay_report(traj: &Trajectory, sys: &OscillatorSystem) -> Vec<f64> {
    let hs: Vec<f64> = traj.states.iter().map(|s| contact_hamiltonian(sys, s)).collect();
    let Some(first) = traj.states.first() else {
        return Vec::new();
    };
    match sys.damping() {
        DampingKind::LinearZ => traj
            .states
            .iter()
            .zip(&hs)
            .map(|(s, h)| h - hs[0] * (-sys.alpha() * (s.t - first.t)).exp())
            .collect(),
        DampingKind::QuadraticZ => traj
            .states
            .windows(2)
            .zip(hs.windows(2))
            .map(|(s, h)| {
                let dt = s[1].t - s[0].t;
                let z_mid = 0.5 * (s[0].z + s[1].z);
                let h_mid = 0.5 * (h[0] + h[1]);
                (h[1] - h[0]) / dt + sys.alpha() * z_mid * h_mid
            })
            .collect(),
    }
}

/// Largest position gap between two trajectories.
pub fn trajectory_gap(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.states
        .iter()
        .zip(&b.states)
        .map(|(s, r)| max_abs_diff(&s.x, &r.x))
        .fold(0.0, f64::max))
}

/// Max over `j` of `|π_j - π(p_j, x_j)|` where `π(p, x)` is the leapfrog
/// momentum whose trajectory shares the contact trajectory's positions.
pub fn pi_p_relation_check(
    contact: &Trajectory,
    leapfrog: &Trajectory,
    sys: &OscillatorSystem,
    h: f64,
) -> Result<f64> {
    let gap = trajectory_gap(contact, leapfrog)?;
    if gap > 1e-10 {
        return Err(Error::MismatchedTrajectories { gap });
    }
    Ok(contact
        .states
        .iter()
        .zip(&leapfrog.states)
        .map(|(c, l)| max_abs_diff(&l.p, &leapfrog_momentum_from_contact(sys, c.t, &c.x, &c.p, h)))
        .fold(0.0, f64::max))
}

/// `count` states with `x`, `p`, `z` uniform in `[-range, range]` and
/// `t` uniform in `[0, 2π)`, reproducible from `seed`.
pub fn random_states(seed: u64, count: usize, dim: usize, range: f64) -> Vec<ContactState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            let x = (0..dim).map(|_| rng.gen_range(-range..=range)).collect();
            let p = (0..dim).map(|_| rng.gen_range(-range..=range)).collect();
            let z = rng.gen_range(-range..=range);
            ContactState { t, x, p, z }
        })
        .collect()
}
