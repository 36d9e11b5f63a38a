//! Discrete Herglotz variational principle.
//!
//! A discrete Lagrangian `L(x_j, x_{j+1}, z_j, z_{j+1}; t_j, h)` defines the
//! action update `z_{j+1} - z_j = h L` and, through stationarity of the final
//! action, the discrete generalized Euler-Lagrange equations
//!
//! ```text
//! D₁L(x_j, x_{j+1}, z_j, z_{j+1})
//!   + D₂L(x_{j-1}, x_j, z_{j-1}, z_j) · (1 + h D₃L(j, j+1)) / (1 - h D₄L(j-1, j)) = 0.
//! ```
//!
//! The two discrete Legendre transforms
//! `p⁻ = h D₂L / (1 - h D₄L)` and `p⁺ = -h D₁L / (1 + h D₃L)` agree on
//! solutions, which turns the two-step recursion into a one-step map on
//! `(x, p, z)`. That map scales the contact form `dz - p·dx` by
//! `(1 + h D₃L) / (1 - h D₄L)`.

use nalgebra::DMatrix;

use crate::error::{ensure_all_finite, Error, Result};
use crate::newton;
use crate::system::{dot, inf_norm, ContactState, DampingKind, OscillatorSystem};

/// Solver tolerance on the discrete equations.
pub const TOLERANCE: f64 = 1e-12;

/// Arguments of one evaluation of a discrete Lagrangian: the pair of
/// consecutive points `(x_j, z_j)`, `(x_{j+1}, z_{j+1})` at times `t` and
/// `t + h`.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub x: &'a [f64],
    pub x_next: &'a [f64],
    pub z: f64,
    pub z_next: f64,
    pub t: f64,
    pub h: f64,
}

impl<'a> Window<'a> {
    pub fn new(x: &'a [f64], x_next: &'a [f64], z: f64, z_next: f64, t: f64, h: f64) -> Self {
        Self {
            x,
            x_next,
            z,
            z_next,
            t,
            h,
        }
    }

    pub fn t_next(&self) -> f64 {
        self.t + self.h
    }
}

fn fd_step(c: f64) -> f64 {
    newton::JACOBIAN_STEP * c.abs().max(1.0)
}

/// A discrete Lagrangian and its partial derivatives `D₁..D₄`.
///
/// The default partials are central differences of [`value`](Self::value);
/// implementors with closed forms should override them.
pub trait DiscreteLagrangian {
    fn value(&self, w: &Window<'_>) -> f64;

    /// Whether `D₄L` can be nonzero. When false, the action update is
    /// explicit.
    fn depends_on_z_next(&self) -> bool;

    fn d1(&self, w: &Window<'_>) -> Vec<f64> {
        (0..w.x.len())
            .map(|i| {
                let step = fd_step(w.x[i]);
                let mut fwd = w.x.to_vec();
                let mut bwd = w.x.to_vec();
                fwd[i] += step;
                bwd[i] -= step;
                (self.value(&Window { x: &fwd, ..*w }) - self.value(&Window { x: &bwd, ..*w }))
                    / (2.0 * step)
            })
            .collect()
    }

    fn d2(&self, w: &Window<'_>) -> Vec<f64> {
        (0..w.x_next.len())
            .map(|i| {
                let step = fd_step(w.x_next[i]);
                let mut fwd = w.x_next.to_vec();
                let mut bwd = w.x_next.to_vec();
                fwd[i] += step;
                bwd[i] -= step;
                (self.value(&Window { x_next: &fwd, ..*w })
                    - self.value(&Window { x_next: &bwd, ..*w }))
                    / (2.0 * step)
            })
            .collect()
    }

    fn d3(&self, w: &Window<'_>) -> f64 {
        let step = fd_step(w.z);
        (self.value(&Window { z: w.z + step, ..*w }) - self.value(&Window { z: w.z - step, ..*w }))
            / (2.0 * step)
    }

    fn d4(&self, w: &Window<'_>) -> f64 {
        if !self.depends_on_z_next() {
            return 0.0;
        }
        let step = fd_step(w.z_next);
        (self.value(&Window {
            z_next: w.z_next + step,
            ..*w
        }) - self.value(&Window {
            z_next: w.z_next - step,
            ..*w
        })) / (2.0 * step)
    }
}

/// The discretizations of the damped oscillator Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    /// `-αz_j`: first order, explicit in `z`.
    FirstOrder,
    /// `-α(z_j + z_{j+1})/2`: second order.
    Symmetric,
    /// `-¼α(z_j² + z_{j+1}²)` for quadratic-in-z damping.
    QuadraticZ,
}

/// `½|Δx/h|² - (V(x_j) + V(x_{j+1}))/2 - (damping) + (f(t_j)Σx_j + f(t_{j+1})Σx_{j+1})/2`.
#[derive(Debug, Clone)]
pub struct OscillatorLagrangian {
    sys: OscillatorSystem,
    scheme: Discretization,
}

impl OscillatorLagrangian {
    pub fn new(sys: &OscillatorSystem, scheme: Discretization) -> Result<Self> {
        let expected = match scheme {
            Discretization::FirstOrder | Discretization::Symmetric => DampingKind::LinearZ,
            Discretization::QuadraticZ => DampingKind::QuadraticZ,
        };
        if sys.damping() != expected {
            return Err(Error::InvalidSystem(format!(
                "{scheme:?} discretization needs {expected:?} damping"
            )));
        }
        Ok(Self {
            sys: sys.clone(),
            scheme,
        })
    }

    pub fn first_order(sys: &OscillatorSystem) -> Result<Self> {
        Self::new(sys, Discretization::FirstOrder)
    }

    pub fn symmetric(sys: &OscillatorSystem) -> Result<Self> {
        Self::new(sys, Discretization::Symmetric)
    }

    pub fn quadratic_z(sys: &OscillatorSystem) -> Result<Self> {
        Self::new(sys, Discretization::QuadraticZ)
    }

    pub fn scheme(&self) -> Discretization {
        self.scheme
    }

    pub fn system(&self) -> &OscillatorSystem {
        &self.sys
    }

    /// The `z`-independent part of `L`.
    pub fn kinetic_potential_part(&self, w: &Window<'_>) -> f64 {
        let h = w.h;
        let dx: Vec<f64> = w.x_next.iter().zip(w.x).map(|(b, a)| (b - a) / h).collect();
        let v = self.sys.potential();
        0.5 * dot(&dx, &dx) - 0.5 * (v.value(w.x) + v.value(w.x_next))
            + 0.5
                * (self.sys.force(w.t) * w.x.iter().sum::<f64>()
                    + self.sys.force(w.t_next()) * w.x_next.iter().sum::<f64>())
    }
}

impl DiscreteLagrangian for OscillatorLagrangian {
    fn value(&self, w: &Window<'_>) -> f64 {
        let alpha = self.sys.alpha();
        let damping = match self.scheme {
            Discretization::FirstOrder => alpha * w.z,
            Discretization::Symmetric => 0.5 * alpha * (w.z + w.z_next),
            Discretization::QuadraticZ => 0.25 * alpha * (w.z * w.z + w.z_next * w.z_next),
        };
        self.kinetic_potential_part(w) - damping
    }

    fn depends_on_z_next(&self) -> bool {
        self.scheme != Discretization::FirstOrder
    }

    fn d1(&self, w: &Window<'_>) -> Vec<f64> {
        let h2 = w.h * w.h;
        let half_force = 0.5 * self.sys.force(w.t);
        let grad = self.sys.grad_v(w.x);
        w.x_next
            .iter()
            .zip(w.x)
            .zip(grad)
            .map(|((b, a), g)| -(b - a) / h2 - 0.5 * g + half_force)
            .collect()
    }

    fn d2(&self, w: &Window<'_>) -> Vec<f64> {
        let h2 = w.h * w.h;
        let half_force = 0.5 * self.sys.force(w.t_next());
        let grad = self.sys.grad_v(w.x_next);
        w.x_next
            .iter()
            .zip(w.x)
            .zip(grad)
            .map(|((b, a), g)| (b - a) / h2 - 0.5 * g + half_force)
            .collect()
    }

    fn d3(&self, w: &Window<'_>) -> f64 {
        let alpha = self.sys.alpha();
        match self.scheme {
            Discretization::FirstOrder => -alpha,
            Discretization::Symmetric => -0.5 * alpha,
            Discretization::QuadraticZ => -0.5 * alpha * w.z,
        }
    }

    fn d4(&self, w: &Window<'_>) -> f64 {
        let alpha = self.sys.alpha();
        match self.scheme {
            Discretization::FirstOrder => 0.0,
            Discretization::Symmetric => -0.5 * alpha,
            Discretization::QuadraticZ => -0.5 * alpha * w.z_next,
        }
    }
}

/// Three consecutive points of a discrete curve centred at `t_cur`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTriple {
    pub x_prev: Vec<f64>,
    pub x_cur: Vec<f64>,
    pub x_next: Vec<f64>,
    pub z_prev: f64,
    pub z_cur: f64,
    pub z_next: f64,
    pub t_cur: f64,
    pub h: f64,
}

impl StepTriple {
    pub fn prev_window(&self) -> Window<'_> {
        Window::new(&self.x_prev, &self.x_cur, self.z_prev, self.z_cur, self.t_cur - self.h, self.h)
    }

    pub fn next_window(&self) -> Window<'_> {
        Window::new(&self.x_cur, &self.x_next, self.z_cur, self.z_next, self.t_cur, self.h)
    }

    /// The triple centred on state `j` of `states` (needs `1 <= j < len - 1`).
    pub fn from_states(states: &[ContactState], j: usize, h: f64) -> Self {
        Self {
            x_prev: states[j - 1].x.clone(),
            x_cur: states[j].x.clone(),
            x_next: states[j + 1].x.clone(),
            z_prev: states[j - 1].z,
            z_cur: states[j].z,
            z_next: states[j + 1].z,
            t_cur: states[j].t,
            h,
        }
    }
}

fn singular(denominator: f64) -> Error {
    Error::SingularUpdate { denominator }
}

fn checked_denominator(value: f64) -> Result<f64> {
    if value.abs() < TOLERANCE || !value.is_finite() {
        Err(singular(value))
    } else {
        Ok(value)
    }
}

/// Solves `z_{j+1} = z_j + h L(x_j, x_{j+1}, z_j, z_{j+1})` for `z_{j+1}`.
///
/// Explicit when `L` ignores `z_{j+1}`; otherwise Newton from the predictor
/// `z_j + h L(x_j, x_{j+1}, z_j, z_j)`, which picks the root continuous as
/// `h → 0`.
pub fn solve_z_update<L: DiscreteLagrangian + ?Sized>(
    lag: &L,
    x: &[f64],
    x_next: &[f64],
    z: f64,
    t: f64,
    h: f64,
) -> Result<f64> {
    let window = |z_next: f64| Window::new(x, x_next, z, z_next, t, h);
    let predictor = z + h * lag.value(&window(z));
    if !lag.depends_on_z_next() {
        return Ok(predictor);
    }
    newton::scalar(
        |z_next| {
            let w = window(z_next);
            (z_next - z - h * lag.value(&w), 1.0 - h * lag.d4(&w))
        },
        predictor,
        |z_next| TOLERANCE * (1.0 + z_next.abs()),
        TOLERANCE,
        singular,
    )
}

/// Residual of the discrete generalized Euler-Lagrange equations on a triple.
pub fn dgel_residual<L: DiscreteLagrangian + ?Sized>(lag: &L, triple: &StepTriple) -> Result<Vec<f64>> {
    let prev = triple.prev_window();
    let next = triple.next_window();
    let h = triple.h;
    let denominator = checked_denominator(1.0 - h * lag.d4(&prev))?;
    let factor = (1.0 + h * lag.d3(&next)) / denominator;
    let d1 = lag.d1(&next);
    let d2 = lag.d2(&prev);
    Ok(d1.iter().zip(&d2).map(|(a, b)| a + b * factor).collect())
}

/// Solves the discrete Euler-Lagrange equations for `(x_{j+1}, z_{j+1})`
/// given the two previous points. `t` is the time of `x_cur`; the default
/// guess is `2 x_cur - x_prev`.
#[allow(clippy::too_many_arguments)]
pub fn solve_next_position<L: DiscreteLagrangian + ?Sized>(
    lag: &L,
    x_prev: &[f64],
    x_cur: &[f64],
    z_prev: f64,
    z_cur: f64,
    t: f64,
    h: f64,
    guess: Option<&[f64]>,
) -> Result<(Vec<f64>, f64)> {
    ensure_all_finite(x_prev, "x_prev")?;
    ensure_all_finite(x_cur, "x_cur")?;
    let guess = guess.map_or_else(
        || x_cur.iter().zip(x_prev).map(|(c, p)| 2.0 * c - p).collect(),
        <[f64]>::to_vec,
    );
    let prev = Window::new(x_prev, x_cur, z_prev, z_cur, t - h, h);
    let denominator = checked_denominator(1.0 - h * lag.d4(&prev))?;
    let d2_prev = lag.d2(&prev);
    let x_next = newton::system(
        |x_next| {
            let z_next = solve_z_update(lag, x_cur, x_next, z_cur, t, h)?;
            let next = Window::new(x_cur, x_next, z_cur, z_next, t, h);
            let factor = (1.0 + h * lag.d3(&next)) / denominator;
            Ok(lag
                .d1(&next)
                .iter()
                .zip(&d2_prev)
                .map(|(a, b)| a + b * factor)
                .collect())
        },
        guess,
        TOLERANCE,
    )?;
    let z_next = solve_z_update(lag, x_cur, &x_next, z_cur, t, h)?;
    Ok((x_next, z_next))
}

/// `p⁻ = h D₂L / (1 - h D₄L)`: momentum at the end of the window.
pub fn legendre_minus<L: DiscreteLagrangian + ?Sized>(lag: &L, w: &Window<'_>) -> Result<Vec<f64>> {
    let denominator = checked_denominator(1.0 - w.h * lag.d4(w))?;
    Ok(lag.d2(w).into_iter().map(|d| w.h * d / denominator).collect())
}

/// `p⁺ = -h D₁L / (1 + h D₃L)`: momentum at the start of the window.
pub fn legendre_plus<L: DiscreteLagrangian + ?Sized>(lag: &L, w: &Window<'_>) -> Result<Vec<f64>> {
    let denominator = checked_denominator(1.0 + w.h * lag.d3(w))?;
    Ok(lag.d1(w).into_iter().map(|d| -w.h * d / denominator).collect())
}

/// `(1 + h D₃L) / (1 - h D₄L)` on the step's own window.
pub fn discrete_conformal_factor<L: DiscreteLagrangian + ?Sized>(lag: &L, w: &Window<'_>) -> Result<f64> {
    let denominator = checked_denominator(1.0 - w.h * lag.d4(w))?;
    Ok((1.0 + w.h * lag.d3(w)) / denominator)
}

/// The contact map `(x_j, p_j, z_j) ↦ (x_{j+1}, p_{j+1}, z_{j+1})`: solve
/// `p_j = p⁺(x_j, x_{j+1})` for `x_{j+1}`, then read off `p_{j+1} = p⁻`.
pub fn position_momentum_step<L: DiscreteLagrangian + ?Sized>(
    lag: &L,
    state: &ContactState,
    h: f64,
) -> Result<ContactState> {
    state.validate()?;
    let (t, x, p, z) = (state.t, &state.x, &state.p, state.z);
    let guess: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + h * pi).collect();
    let tol = TOLERANCE * inf_norm(p).max(1.0);
    let x_next = newton::system(
        |x_next| {
            let z_next = solve_z_update(lag, x, x_next, z, t, h)?;
            let p_plus = legendre_plus(lag, &Window::new(x, x_next, z, z_next, t, h))?;
            Ok(p_plus.iter().zip(p).map(|(a, b)| a - b).collect())
        },
        guess,
        tol,
    )?;
    let z_next = solve_z_update(lag, x, &x_next, z, t, h)?;
    let p_next = legendre_minus(lag, &Window::new(x, &x_next, z, z_next, t, h))?;
    Ok(ContactState {
        t: t + h,
        x: x_next,
        p: p_next,
        z: z_next,
    })
}

/// Largest relative mismatch between the partials `D₁..D₄` and central
/// differences of `L` at the window.
pub fn partials_mismatch<L: DiscreteLagrangian + ?Sized>(lag: &L, w: &Window<'_>) -> f64 {
    struct ValueOnly<'a, L: ?Sized>(&'a L);
    impl<L: DiscreteLagrangian + ?Sized> DiscreteLagrangian for ValueOnly<'_, L> {
        fn value(&self, w: &Window<'_>) -> f64 {
            self.0.value(w)
        }
        fn depends_on_z_next(&self) -> bool {
            true
        }
    }
    let fd = ValueOnly(lag);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let mut worst = 0.0f64;
    for (a, b) in lag.d1(w).iter().zip(fd.d1(w)) {
        worst = worst.max(rel(*a, b));
    }
    for (a, b) in lag.d2(w).iter().zip(fd.d2(w)) {
        worst = worst.max(rel(*a, b));
    }
    worst.max(rel(lag.d3(w), fd.d3(w))).max(rel(lag.d4(w), fd.d4(w)))
}

/// Mixed Hessian `D₁D₂L` by central differences of `D₂L` in `x_j`.
pub fn cross_hessian<L: DiscreteLagrangian + ?Sized>(lag: &L, w: &Window<'_>) -> DMatrix<f64> {
    let n = w.x.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let step = 1e-5 * w.x[j].abs().max(1.0);
        let mut fwd = w.x.to_vec();
        let mut bwd = w.x.to_vec();
        fwd[j] += step;
        bwd[j] -= step;
        let gf = lag.d2(&Window { x: &fwd, ..*w });
        let gb = lag.d2(&Window { x: &bwd, ..*w });
        for i in 0..n {
            m[(i, j)] = (gf[i] - gb[i]) / (2.0 * step);
        }
    }
    m
}

pub fn is_nondegenerate<L: DiscreteLagrangian + ?Sized>(lag: &L, w: &Window<'_>) -> bool {
    cross_hessian(lag, w).determinant().abs() > 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    fn damped(alpha: f64) -> OscillatorSystem {
        OscillatorSystem::damped_harmonic(alpha).unwrap()
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        assert!(f(lo) * f(hi) <= 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The first-order closed-form stepper written out directly.
    fn first_order_closed_form(alpha: f64, h: f64, x: f64, p: f64) -> (f64, f64) {
        let xn = x + h * (1.0 - h * alpha) * p - 0.5 * h * h * x;
        let pn = (1.0 - h * alpha) * p - 0.5 * h * (xn + x);
        (xn, pn)
    }

    #[test]
    fn z_update_first_order_example() {
        let lag = OscillatorLagrangian::first_order(&damped(0.1)).unwrap();
        let z = solve_z_update(&lag, &[1.0], &[0.995], 0.0, 0.0, 0.1).unwrap();
        assert!((z + 0.049625625).abs() < 1e-15, "{z}");
    }

    #[test]
    fn z_update_fixed_point_at_origin() {
        let lag = OscillatorLagrangian::first_order(&damped(0.1)).unwrap();
        assert_eq!(solve_z_update(&lag, &[0.0], &[0.0], 0.0, 0.0, 0.1).unwrap(), 0.0);
        let lag = OscillatorLagrangian::symmetric(&damped(0.1)).unwrap();
        assert_eq!(solve_z_update(&lag, &[0.0], &[0.0], 0.0, 0.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn z_update_quadratic_matches_bisection() {
        let sys = OscillatorSystem::quadratic_harmonic(0.1).unwrap();
        let lag = OscillatorLagrangian::quadratic_z(&sys).unwrap();
        let z = solve_z_update(&lag, &[0.0], &[0.0], 1.0, 0.0, 0.1).unwrap();
        let oracle = bisect(|u| u - 1.0 - 0.1 * (-0.025 - 0.025 * u * u), 0.0, 2.0);
        assert!((z - oracle).abs() < 1e-14, "{z} vs {oracle}");
        assert!((z - 0.9950248140).abs() < 1e-9);
        let w = Window::new(&[0.0], &[0.0], 1.0, z, 0.0, 0.1);
        assert!((z - 1.0 - 0.1 * lag.value(&w)).abs() <= 1e-12 * (1.0 + z.abs()));
    }

    #[test]
    fn z_update_reports_singular_update() {
        // 1 - h·D₄L = 1 + h·α·z/2 vanishes at z_next = -2/(hα)
        struct Degenerate;
        impl DiscreteLagrangian for Degenerate {
            fn value(&self, w: &Window<'_>) -> f64 {
                w.z_next / w.h
            }
            fn depends_on_z_next(&self) -> bool {
                true
            }
            fn d4(&self, w: &Window<'_>) -> f64 {
                1.0 / w.h
            }
        }
        let err = solve_z_update(&Degenerate, &[0.0], &[0.0], 1.0, 0.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::SingularUpdate { .. }));
    }

    #[test]
    fn z_update_reports_no_convergence() {
        // z_next = 1 + h·(z_next² + 1)/h has no real root
        struct NoRoot;
        impl DiscreteLagrangian for NoRoot {
            fn value(&self, w: &Window<'_>) -> f64 {
                (w.z_next * w.z_next + 1.0 - w.z) / w.h
            }
            fn depends_on_z_next(&self) -> bool {
                true
            }
        }
        let err = solve_z_update(&NoRoot, &[0.0], &[0.0], 0.0, 0.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. } | Error::SingularUpdate { .. }));
    }

    #[test]
    fn dgel_vanishes_on_leapfrog_points() {
        let h = 0.1;
        let lag = OscillatorLagrangian::symmetric(&damped(0.0)).unwrap();
        // classical Verlet from (1, 0)
        let mut xs = vec![1.0];
        let (mut x, mut p) = (1.0, 0.0);
        for _ in 0..2 {
            let half = p - 0.5 * h * x;
            x += h * half;
            p = half - 0.5 * h * x;
            xs.push(x);
        }
        let triple = StepTriple {
            x_prev: vec![xs[0]],
            x_cur: vec![xs[1]],
            x_next: vec![xs[2]],
            z_prev: 0.0,
            z_cur: 0.0,
            z_next: 0.0,
            t_cur: h,
            h,
        };
        assert!(dgel_residual(&lag, &triple).unwrap()[0].abs() <= 1e-12);
    }

    fn first_order_triple(alpha: f64, h: f64) -> (OscillatorLagrangian, StepTriple) {
        let lag = OscillatorLagrangian::first_order(&damped(alpha)).unwrap();
        let (x1, p1) = first_order_closed_form(alpha, h, 1.0, 0.0);
        let (x2, _) = first_order_closed_form(alpha, h, x1, p1);
        let z1 = solve_z_update(&lag, &[1.0], &[x1], 0.0, 0.0, h).unwrap();
        let z2 = solve_z_update(&lag, &[x1], &[x2], z1, h, h).unwrap();
        let triple = StepTriple {
            x_prev: vec![1.0],
            x_cur: vec![x1],
            x_next: vec![x2],
            z_prev: 0.0,
            z_cur: z1,
            z_next: z2,
            t_cur: h,
            h,
        };
        (lag, triple)
    }

    #[test]
    fn dgel_vanishes_on_closed_form_outputs() {
        let (lag, triple) = first_order_triple(0.1, 0.1);
        assert!(dgel_residual(&lag, &triple).unwrap()[0].abs() <= 1e-12);
    }

    #[test]
    fn dgel_perturbation_is_first_order() {
        let (lag, mut triple) = first_order_triple(0.1, 0.1);
        triple.x_next[0] += 1e-3;
        let w = triple.next_window();
        let cross = cross_hessian(&lag, &w)[(0, 0)];
        let r = dgel_residual(&lag, &triple).unwrap()[0];
        // D₁L depends on x_next through -Δx/h², i.e. the cross Hessian
        assert!((r - 1e-3 * cross).abs() < 1e-9, "{r} vs {}", 1e-3 * cross);
        assert!(r.abs() > 0.05);
    }

    #[test]
    fn solve_next_position_reproduces_closed_form() {
        let (lag, triple) = first_order_triple(0.1, 0.1);
        let (x_next, z_next) = solve_next_position(
            &lag,
            &triple.x_prev,
            &triple.x_cur,
            triple.z_prev,
            triple.z_cur,
            triple.t_cur,
            triple.h,
            None,
        )
        .unwrap();
        assert!((x_next[0] - triple.x_next[0]).abs() <= 1e-12);
        assert!((z_next - triple.z_next).abs() <= 1e-12);

        let (x_next, _) =
            solve_next_position(&lag, &[1.0], &[0.995], 0.0, -0.049625625, 0.1, 0.1, Some(&[0.98]))
                .unwrap();
        let (x1, p1) = first_order_closed_form(0.1, 0.1, 1.0, 0.0);
        let (x2, _) = first_order_closed_form(0.1, 0.1, x1, p1);
        assert!((x_next[0] - x2).abs() <= 1e-12);
    }

    #[test]
    fn solve_next_position_undamped_is_leapfrog() {
        let h = 0.1;
        let lag = OscillatorLagrangian::symmetric(&damped(0.0)).unwrap();
        let x1 = 1.0 - 0.5 * h * h;
        let (x2, _) = solve_next_position(&lag, &[1.0], &[x1], 0.0, 0.0, h, h, None).unwrap();
        // Störmer: x₂ = 2x₁ - x₀ - h² x₁
        assert!((x2[0] - (2.0 * x1 - 1.0 - h * h * x1)).abs() <= 1e-14);
    }

    #[test]
    fn solve_next_position_quadratic_self_consistent() {
        let sys = OscillatorSystem::quadratic_harmonic(0.4).unwrap();
        let lag = OscillatorLagrangian::quadratic_z(&sys).unwrap();
        let h = 0.1;
        let (x0, x1, z0) = (0.7, 0.76, -0.3);
        let z1 = solve_z_update(&lag, &[x0], &[x1], z0, 0.0, h).unwrap();
        let (x2, z2) = solve_next_position(&lag, &[x0], &[x1], z0, z1, h, h, None).unwrap();
        let triple = StepTriple {
            x_prev: vec![x0],
            x_cur: vec![x1],
            x_next: x2,
            z_prev: z0,
            z_cur: z1,
            z_next: z2,
            t_cur: h,
            h,
        };
        assert!(dgel_residual(&lag, &triple).unwrap()[0].abs() <= 1e-12);
    }

    #[test]
    fn legendre_minus_examples() {
        let w = Window::new(&[1.0], &[0.995], 0.0, 0.0, 0.0, 0.1);
        let first = OscillatorLagrangian::first_order(&damped(0.1)).unwrap();
        assert!((legendre_minus(&first, &w).unwrap()[0] + 0.09975).abs() < 1e-15);

        let sym = OscillatorLagrangian::symmetric(&damped(0.1)).unwrap();
        let p = legendre_minus(&sym, &w).unwrap()[0];
        assert!((p + 0.09975 / 1.005).abs() < 1e-15);
        assert!((p + 0.099253731).abs() < 1e-9);

        let undamped = OscillatorLagrangian::symmetric(&damped(0.0)).unwrap();
        let p = legendre_minus(&undamped, &w).unwrap()[0];
        assert!((p - (-0.005 / 0.1 - 0.05 * 0.995)).abs() < 1e-15);
    }

    #[test]
    fn legendre_plus_examples() {
        let first = OscillatorLagrangian::first_order(&damped(0.1)).unwrap();
        let w = Window::new(&[1.0], &[0.995], 0.0, -0.049625625, 0.0, 0.1);
        assert!(legendre_plus(&first, &w).unwrap()[0].abs() < 1e-15);

        let undamped = OscillatorLagrangian::first_order(&damped(0.0)).unwrap();
        let p = legendre_plus(&undamped, &w).unwrap()[0];
        assert_eq!(p, -0.1 * undamped.d1(&w)[0]);
    }

    #[test]
    fn legendre_transforms_agree_on_solutions() {
        for lag in [
            OscillatorLagrangian::first_order(&damped(0.3)).unwrap(),
            OscillatorLagrangian::symmetric(&damped(0.3)).unwrap(),
        ] {
            let state = ContactState::scalar(0.0, 0.8, -0.2, 0.1);
            let s1 = position_momentum_step(&lag, &state, 0.1).unwrap();
            let s2 = position_momentum_step(&lag, &s1, 0.1).unwrap();
            let minus = legendre_minus(&lag, &Window::new(&state.x, &s1.x, state.z, s1.z, 0.0, 0.1)).unwrap();
            let plus = legendre_plus(&lag, &Window::new(&s1.x, &s2.x, s1.z, s2.z, 0.1, 0.1)).unwrap();
            assert!((minus[0] - plus[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn legendre_plus_singular() {
        // 1 + h·D₃L = 1 - hα = 0 at hα = 1
        let lag = OscillatorLagrangian::first_order(&damped(10.0)).unwrap();
        let w = Window::new(&[1.0], &[0.9], 0.0, 0.0, 0.0, 0.1);
        assert!(matches!(legendre_plus(&lag, &w), Err(Error::SingularUpdate { .. })));
    }

    #[test]
    fn step_fixed_point() {
        for lag in [
            OscillatorLagrangian::first_order(&damped(0.1)).unwrap(),
            OscillatorLagrangian::symmetric(&damped(0.1)).unwrap(),
        ] {
            let s = position_momentum_step(&lag, &ContactState::scalar(0.0, 0.0, 0.0, 0.0), 0.1).unwrap();
            assert_eq!(s, ContactState::scalar(0.1, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn step_matches_first_order_closed_form() {
        let lag = OscillatorLagrangian::first_order(&damped(0.1)).unwrap();
        let s = position_momentum_step(&lag, &ContactState::scalar(0.0, 1.0, 0.0, 0.0), 0.1).unwrap();
        assert!((s.x[0] - 0.995).abs() < 1e-15);
        assert!((s.p[0] + 0.09975).abs() < 1e-15);
        assert!((s.z + 0.049625625).abs() < 1e-15);
    }

    #[test]
    fn conformal_factor_examples() {
        let w = Window::new(&[1.0], &[0.995], 0.3, 0.2, 0.0, 0.1);
        let first = OscillatorLagrangian::first_order(&damped(0.1)).unwrap();
        assert!((discrete_conformal_factor(&first, &w).unwrap() - 0.99).abs() < 1e-15);
        let sym = OscillatorLagrangian::symmetric(&damped(0.1)).unwrap();
        let c = discrete_conformal_factor(&sym, &w).unwrap();
        assert!((c - 0.995 / 1.005).abs() < 1e-15);
        assert!((c - 0.990049751).abs() < 1e-9);
        let undamped = OscillatorLagrangian::symmetric(&damped(0.0)).unwrap();
        assert_eq!(discrete_conformal_factor(&undamped, &w).unwrap(), 1.0);
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let forced = OscillatorSystem::forced_harmonic(0.3, 0.5, 0.8).unwrap();
        let quad = OscillatorSystem::quadratic_harmonic(0.3).unwrap();
        let lags = [
            OscillatorLagrangian::first_order(&damped(0.3)).unwrap(),
            OscillatorLagrangian::symmetric(&forced).unwrap(),
            OscillatorLagrangian::quadratic_z(&quad).unwrap(),
        ];
        let w = Window::new(&[0.7, -0.2], &[0.75, -0.1], 0.4, 0.35, 1.2, 0.1);
        for lag in &lags {
            assert!(partials_mismatch(lag, &w) <= 1e-6);
            assert!(is_nondegenerate(lag, &w));
        }
    }

    #[test]
    fn discretization_must_match_damping() {
        let quad = OscillatorSystem::quadratic_harmonic(0.3).unwrap();
        assert!(OscillatorLagrangian::first_order(&quad).is_err());
        assert!(OscillatorLagrangian::quadratic_z(&damped(0.3)).is_err());
    }

    #[test]
    fn generic_engine_with_finite_difference_partials() {
        // value-only wrapper exercises the default partials and the FD Jacobian
        struct ValueOnly(OscillatorLagrangian);
        impl DiscreteLagrangian for ValueOnly {
            fn value(&self, w: &Window<'_>) -> f64 {
                self.0.value(w)
            }
            fn depends_on_z_next(&self) -> bool {
                true
            }
        }
        let exact = OscillatorLagrangian::symmetric(&damped(0.2)).unwrap();
        let approx = ValueOnly(exact.clone());
        let state = ContactState::new(0.0, vec![0.9, -0.4], vec![0.1, 0.3], 0.05).unwrap();
        let a = position_momentum_step(&exact, &state, 0.1).unwrap();
        let b = position_momentum_step(&approx, &state, 0.1).unwrap();
        for (u, v) in a.to_coords().iter().zip(b.to_coords()) {
            assert!((u - v).abs() < 1e-6, "{a:?} {b:?}");
        }
    }
}
