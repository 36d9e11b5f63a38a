//! Newton iterations shared by the implicit solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::system::inf_norm;

pub const MAX_ITERATIONS: usize = 50;

/// Relative finite-difference step for Jacobians of user-supplied maps.
pub const JACOBIAN_STEP: f64 = 1e-7;

/// Scalar Newton on `g(u) = 0` where `step(u)` returns `(g(u), g'(u))`.
///
/// Converged once `|g| <= tol(u)`; one extra update is then applied so the
/// returned root sits at roundoff level. A derivative smaller than
/// `min_slope` in magnitude is reported through `on_singular`.
pub fn scalar<G, T>(
    mut step: G,
    guess: f64,
    tol: T,
    min_slope: f64,
    on_singular: fn(f64) -> Error,
) -> Result<f64>
where
    G: FnMut(f64) -> (f64, f64),
    T: Fn(f64) -> f64,
{
    let mut u = guess;
    let mut last = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let (g, slope) = step(u);
        if !g.is_finite() || !slope.is_finite() {
            break;
        }
        if slope.abs() < min_slope {
            return Err(on_singular(slope));
        }
        let converged = g.abs() <= tol(u);
        u -= g / slope;
        last = g.abs();
        if converged {
            return Ok(u);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: last,
    })
}

/// Newton on `F(u) = 0` for `u ∈ ℝⁿ` with a central-difference Jacobian.
///
/// Terminates when `‖F‖∞ <= tol` (after one polishing update, as in
/// [`scalar`]), when the update has shrunk to roundoff
/// relative to `u`, or when the residual stops decreasing after an update
/// below `√ε` relative to `u` (the residual is then at its noise floor, as
/// happens with finite-difference partials).
pub fn system<F>(mut residual: F, guess: Vec<f64>, tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = guess.len();
    let mut u = guess;
    let mut r = residual(&u)?;
    for _ in 0..MAX_ITERATIONS {
        let converged = inf_norm(&r) <= tol;
        if converged && r.iter().all(|v| *v == 0.0) {
            return Ok(u);
        }
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = JACOBIAN_STEP * u[j].abs().max(1.0);
            let mut fwd = u.clone();
            let mut bwd = u.clone();
            fwd[j] += step;
            bwd[j] -= step;
            let rf = residual(&fwd)?;
            let rb = residual(&bwd)?;
            for i in 0..n {
                jac[(i, j)] = (rf[i] - rb[i]) / (2.0 * step);
            }
        }
        let delta = jac
            .lu()
            .solve(&DVector::from_column_slice(&r))
            .ok_or(Error::SingularJacobian)?;
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        for (ui, di) in u.iter_mut().zip(delta.iter()) {
            *ui -= di;
        }
        if converged {
            return Ok(u);
        }
        let previous = inf_norm(&r);
        r = residual(&u)?;
        let scale = inf_norm(&u).max(1.0);
        let step = delta.amax();
        if step <= 16.0 * f64::EPSILON * scale
            || (step <= f64::EPSILON.sqrt() * scale && inf_norm(&r) > 0.5 * previous)
        {
            return Ok(u);
        }
    }
    if inf_norm(&r) <= tol {
        return Ok(u);
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: inf_norm(&r),
    })
}
