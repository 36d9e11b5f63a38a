//! Continuous Herglotz/contact theory: Lagrangian, contact Hamiltonian,
//! contact vector field, generalized Euler-Lagrange residual and energy.

use nalgebra::DMatrix;

use crate::error::{ensure_all_finite, ensure_finite, Error, Result};
use crate::system::{dot, ContactState, OscillatorSystem};

/// A Lagrangian `𝓛(t, x, ẋ, z)` for the Herglotz variational principle
/// `ż = 𝓛`.
pub trait HerglotzLagrangian {
    fn value(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> f64;
    fn d_x(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> Vec<f64>;
    fn d_v(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> Vec<f64>;
    fn d_z(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> f64;

    /// `d/dt ∂𝓛/∂ẋ` along a curve through `(t, x, v, z)` with acceleration
    /// `a` and `ż = zdot`. The default differentiates `d_v` along the
    /// direction `(1, v, a, zdot)` by central differences.
    fn d_v_rate(&self, t: f64, x: &[f64], v: &[f64], a: &[f64], z: f64, zdot: f64) -> Vec<f64> {
        let scale = x
            .iter()
            .chain(v)
            .map(|c| c.abs())
            .fold(t.abs().max(z.abs()).max(1.0), f64::max);
        let eps = 1e-6 * scale;
        let shifted = |sign: f64| {
            let e = sign * eps;
            let xs: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi + e * vi).collect();
            let vs: Vec<f64> = v.iter().zip(a).map(|(vi, ai)| vi + e * ai).collect();
            self.d_v(t + e, &xs, &vs, z + e * zdot)
        };
        let fwd = shifted(1.0);
        let bwd = shifted(-1.0);
        fwd.iter()
            .zip(&bwd)
            .map(|(f, b)| (f - b) / (2.0 * eps))
            .collect()
    }
}

impl HerglotzLagrangian for OscillatorSystem {
    fn value(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> f64 {
        0.5 * dot(v, v) - self.potential().value(x) - self.damping_term(z)
            + self.force(t) * x.iter().sum::<f64>()
    }

    fn d_x(&self, t: f64, x: &[f64], _v: &[f64], _z: f64) -> Vec<f64> {
        let f = self.force(t);
        self.grad_v(x).into_iter().map(|g| f - g).collect()
    }

    fn d_v(&self, _t: f64, _x: &[f64], v: &[f64], _z: f64) -> Vec<f64> {
        v.to_vec()
    }

    fn d_z(&self, _t: f64, _x: &[f64], _v: &[f64], z: f64) -> f64 {
        -self.damping_rate(z)
    }

    fn d_v_rate(&self, _t: f64, _x: &[f64], _v: &[f64], a: &[f64], _z: f64, _zdot: f64) -> Vec<f64> {
        a.to_vec()
    }
}

/// `∂²𝓛/∂ẋ²` by central differences of `d_v`.
pub fn velocity_hessian<L: HerglotzLagrangian + ?Sized>(
    lag: &L,
    t: f64,
    x: &[f64],
    v: &[f64],
    z: f64,
) -> DMatrix<f64> {
    let n = v.len();
    let mut hess = DMatrix::zeros(n, n);
    for j in 0..n {
        let step = 1e-6 * v[j].abs().max(1.0);
        let mut fwd = v.to_vec();
        let mut bwd = v.to_vec();
        fwd[j] += step;
        bwd[j] -= step;
        let gf = lag.d_v(t, x, &fwd, z);
        let gb = lag.d_v(t, x, &bwd, z);
        for i in 0..n {
            hess[(i, j)] = (gf[i] - gb[i]) / (2.0 * step);
        }
    }
    hess
}

/// Regularity of the Lagrangian at a point: nonsingular velocity Hessian.
pub fn is_regular<L: HerglotzLagrangian + ?Sized>(
    lag: &L,
    t: f64,
    x: &[f64],
    v: &[f64],
    z: f64,
) -> bool {
    velocity_hessian(lag, t, x, v, z).determinant().abs() > 1e-12
}

pub fn eval_lagrangian(
    sys: &OscillatorSystem,
    t: f64,
    x: &[f64],
    v: &[f64],
    z: f64,
) -> Result<f64> {
    check_point(t, x, v, z)?;
    Ok(sys.value(t, x, v, z))
}

/// `H = ½|p|² + V(x) + D(z) - f(t)·Σx`.
pub fn contact_hamiltonian(sys: &OscillatorSystem, state: &ContactState) -> f64 {
    0.5 * dot(&state.p, &state.p) + sys.potential().value(&state.x) + sys.damping_term(state.z)
        - sys.force(state.t) * state.x.iter().sum::<f64>()
}

/// Time derivative of `(x, p, z)` under the contact Hamiltonian flow.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactVelocity {
    pub dx: Vec<f64>,
    pub dp: Vec<f64>,
    pub dz: f64,
}

/// `(∂H/∂p, -∂H/∂x - p ∂H/∂z, p·∂H/∂p - H)`.
pub fn contact_vector_field(sys: &OscillatorSystem, state: &ContactState) -> ContactVelocity {
    let h = contact_hamiltonian(sys, state);
    let h_z = sys.damping_rate(state.z);
    let f = sys.force(state.t);
    let grad = sys.grad_v(&state.x);
    let dp = grad
        .iter()
        .zip(&state.p)
        .map(|(g, p)| -(g - f) - p * h_z)
        .collect();
    ContactVelocity {
        dx: state.p.clone(),
        dp,
        dz: dot(&state.p, &state.p) - h,
    }
}

/// `∂𝓛/∂x - d/dt ∂𝓛/∂ẋ + ∂𝓛/∂z · ∂𝓛/∂ẋ`, zero on solutions.
///
/// `zdot` must agree with `𝓛(t, x, v, z)` to `1e-10` (relative to
/// `max(1, |𝓛|)`), otherwise the point does not lie on a Herglotz curve.
pub fn continuous_gel_residual<L: HerglotzLagrangian + ?Sized>(
    lag: &L,
    t: f64,
    x: &[f64],
    v: &[f64],
    a: &[f64],
    z: f64,
    zdot: f64,
) -> Result<Vec<f64>> {
    check_point(t, x, v, z)?;
    ensure_all_finite(a, "a")?;
    ensure_finite(zdot, "zdot")?;
    if a.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: a.len(),
        });
    }
    let lagrangian = lag.value(t, x, v, z);
    if (zdot - lagrangian).abs() > 1e-10 * lagrangian.abs().max(1.0) {
        return Err(Error::InconsistentAction { zdot, lagrangian });
    }
    let dx = lag.d_x(t, x, v, z);
    let dv = lag.d_v(t, x, v, z);
    let dz = lag.d_z(t, x, v, z);
    let rate = lag.d_v_rate(t, x, v, a, z, zdot);
    Ok(dx
        .iter()
        .zip(&rate)
        .zip(&dv)
        .map(|((dxi, ri), dvi)| dxi - ri + dz * dvi)
        .collect())
}

/// `E = ∂𝓛/∂ẋ · ẋ - 𝓛`.
pub fn energy<L: HerglotzLagrangian + ?Sized>(
    lag: &L,
    t: f64,
    x: &[f64],
    v: &[f64],
    z: f64,
) -> f64 {
    dot(&lag.d_v(t, x, v, z), v) - lag.value(t, x, v, z)
}

fn check_point(t: f64, x: &[f64], v: &[f64], z: f64) -> Result<()> {
    ensure_finite(t, "t")?;
    ensure_all_finite(x, "x")?;
    ensure_all_finite(v, "v")?;
    ensure_finite(z, "z")?;
    if v.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: v.len(),
        });
    }
    Ok(())
}
