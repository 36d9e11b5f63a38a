//! Closed-form contact steppers, reference methods and the trajectory driver.
//!
//! All steppers act on [`ContactState`]. Leapfrog keeps its staggered
//! half-step momentum in [`LeapfrogState`] and VNC, a two-step method, keeps
//! the previous position in [`VncState`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::continuous::{contact_hamiltonian, contact_vector_field, energy};
use crate::error::{Error, Result};
use crate::system::{ContactState, DampingKind, Diagnostics, OscillatorSystem, Trajectory};
use crate::variational::{
    discrete_conformal_factor, solve_z_update, DiscreteLagrangian, OscillatorLagrangian, Window,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StepperId {
    #[serde(rename = "contact1")]
    Contact1,
    #[serde(rename = "contact2")]
    Contact2,
    #[serde(rename = "contact-quad-z")]
    ContactQuadZ,
    #[serde(rename = "contact2-forced")]
    Contact2Forced,
    #[serde(rename = "leapfrog")]
    Leapfrog,
    #[serde(rename = "vnc")]
    Vnc,
    #[serde(rename = "ruth3")]
    Ruth3,
    #[serde(rename = "rk4")]
    Rk4,
}

impl StepperId {
    pub const ALL: [StepperId; 8] = [
        StepperId::Contact1,
        StepperId::Contact2,
        StepperId::ContactQuadZ,
        StepperId::Contact2Forced,
        StepperId::Leapfrog,
        StepperId::Vnc,
        StepperId::Ruth3,
        StepperId::Rk4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StepperId::Contact1 => "contact1",
            StepperId::Contact2 => "contact2",
            StepperId::ContactQuadZ => "contact-quad-z",
            StepperId::Contact2Forced => "contact2-forced",
            StepperId::Leapfrog => "leapfrog",
            StepperId::Vnc => "vnc",
            StepperId::Ruth3 => "ruth3",
            StepperId::Rk4 => "rk4",
        }
    }

    /// Whether the stepper is derived from a discrete Herglotz Lagrangian.
    pub fn is_contact(self) -> bool {
        matches!(
            self,
            StepperId::Contact1 | StepperId::Contact2 | StepperId::ContactQuadZ | StepperId::Contact2Forced
        )
    }
}

impl fmt::Display for StepperId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepperId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StepperId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// The discrete Lagrangian a contact stepper is built from.
pub fn discrete_lagrangian_for(
    stepper: StepperId,
    sys: &OscillatorSystem,
) -> Option<Result<OscillatorLagrangian>> {
    match stepper {
        StepperId::Contact1 => Some(OscillatorLagrangian::first_order(sys)),
        StepperId::Contact2 | StepperId::Contact2Forced => Some(OscillatorLagrangian::symmetric(sys)),
        StepperId::ContactQuadZ => Some(OscillatorLagrangian::quadratic_z(sys)),
        _ => None,
    }
}

fn unsupported(method: &'static str, reason: impl Into<String>) -> Error {
    Error::UnsupportedSystem {
        method,
        reason: reason.into(),
    }
}

fn require_linear(sys: &OscillatorSystem, method: &'static str) -> Result<()> {
    if sys.damping() != DampingKind::LinearZ {
        return Err(unsupported(method, "needs linear damping"));
    }
    Ok(())
}

fn require_unforced(sys: &OscillatorSystem, method: &'static str) -> Result<()> {
    if sys.forcing().is_some() {
        return Err(unsupported(method, "does not take forcing"));
    }
    Ok(())
}

fn advanced(state: &ContactState, h: f64, x: Vec<f64>, p: Vec<f64>, z: f64) -> ContactState {
    ContactState {
        t: state.t + h,
        x,
        p,
        z,
    }
}

/// First-order contact integrator from `L = ½(Δx/h)² - (V(x_j)+V(x_{j+1}))/2 - αz_j`.
pub fn contact1_step(sys: &OscillatorSystem, state: &ContactState, h: f64) -> Result<ContactState> {
    require_linear(sys, "contact1")?;
    require_unforced(sys, "contact1")?;
    let shrink = 1.0 - h * sys.alpha();
    let grad = sys.grad_v(&state.x);
    let x: Vec<f64> = state
        .x
        .iter()
        .zip(&state.p)
        .zip(&grad)
        .map(|((x, p), g)| x + h * shrink * p - 0.5 * h * h * g)
        .collect();
    let grad_next = sys.grad_v(&x);
    let p = state
        .p
        .iter()
        .zip(grad.iter().zip(&grad_next))
        .map(|(p, (g0, g1))| shrink * p - 0.5 * h * (g1 + g0))
        .collect();
    let lag = OscillatorLagrangian::first_order(sys)?;
    let z = solve_z_update(&lag, &state.x, &x, state.z, state.t, h)?;
    Ok(advanced(state, h, x, p, z))
}

/// Second-order contact integrator from the discrete Lagrangian with
/// `-α(z_j + z_{j+1})/2`.
pub fn contact2_step(sys: &OscillatorSystem, state: &ContactState, h: f64) -> Result<ContactState> {
    require_unforced(sys, "contact2")?;
    symmetric_step(sys, state, h, "contact2")
}

/// Second-order contact integrator with external forcing `f(t)`; with no
/// forcing it coincides with [`contact2_step`].
pub fn contact2_forced_step(sys: &OscillatorSystem, state: &ContactState, h: f64) -> Result<ContactState> {
    symmetric_step(sys, state, h, "contact2-forced")
}

fn symmetric_step(
    sys: &OscillatorSystem,
    state: &ContactState,
    h: f64,
    method: &'static str,
) -> Result<ContactState> {
    require_linear(sys, method)?;
    let half_damp = 0.5 * h * sys.alpha();
    let denominator = 1.0 + half_damp;
    if denominator <= 0.0 {
        return Err(Error::StepTooLarge { h, denominator });
    }
    let (f0, f1) = (sys.force(state.t), sys.force(state.t + h));
    let grad = sys.grad_v(&state.x);
    let x: Vec<f64> = state
        .x
        .iter()
        .zip(&state.p)
        .zip(&grad)
        .map(|((x, p), g)| x + h * (1.0 - half_damp) * p - 0.5 * h * h * (g - f0))
        .collect();
    let grad_next = sys.grad_v(&x);
    let p = state
        .p
        .iter()
        .zip(grad.iter().zip(&grad_next))
        .map(|(p, (g0, g1))| {
            ((1.0 - half_damp) * p - 0.5 * h * (g1 + g0) + 0.5 * h * (f1 + f0)) / denominator
        })
        .collect();
    // z_{j+1}(1 + hα/2) = z_j(1 - hα/2) + h·(z-free part of L)
    let lag = OscillatorLagrangian::symmetric(sys)?;
    let free = lag.kinetic_potential_part(&Window::new(&state.x, &x, 0.0, 0.0, state.t, h));
    let z = ((1.0 - half_damp) * state.z + h * free) / denominator;
    Ok(advanced(state, h, x, p, z))
}

/// Implicit contact integrator for `𝓛 = ½ẋ² - V(x) - ½αz²`.
pub fn contact_quad_z_step(sys: &OscillatorSystem, state: &ContactState, h: f64) -> Result<ContactState> {
    if sys.damping() != DampingKind::QuadraticZ {
        return Err(unsupported("contact-quad-z", "needs quadratic damping"));
    }
    let alpha = sys.alpha();
    let shrink = 1.0 - 0.5 * h * alpha * state.z;
    let grad = sys.grad_v(&state.x);
    let x: Vec<f64> = state
        .x
        .iter()
        .zip(&state.p)
        .zip(&grad)
        .map(|((x, p), g)| x + h * shrink * p - 0.5 * h * h * g)
        .collect();
    let lag = OscillatorLagrangian::quadratic_z(sys)?;
    let z = solve_z_update(&lag, &state.x, &x, state.z, state.t, h)?;
    let denominator = 1.0 + 0.5 * h * alpha * z;
    if denominator.abs() < 1e-12 {
        return Err(Error::SingularUpdate { denominator });
    }
    let grad_next = sys.grad_v(&x);
    let p = state
        .p
        .iter()
        .zip(grad.iter().zip(&grad_next))
        .map(|(p, (g0, g1))| (shrink * p - 0.5 * h * (g0 + g1)) / denominator)
        .collect();
    Ok(advanced(state, h, x, p, z))
}

/// Leapfrog state: `state.p` holds the integer-step momentum `π_j`, and
/// `pi_half` the most recent half-step momentum `π_{j+½}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeapfrogState {
    pub state: ContactState,
    pub pi_half: Vec<f64>,
}

impl LeapfrogState {
    pub fn new(state: ContactState) -> Self {
        let pi_half = state.p.clone();
        Self { state, pi_half }
    }
}

/// Integer-step leapfrog momentum `π_j` whose leapfrog trajectory shares its
/// x-history with the second-order contact trajectory started from `p_j`:
/// `π_j = (1 - h²α²/4) p_j - (h²α/4)(V'(x_j) - f(t_j))`.
pub fn leapfrog_momentum_from_contact(
    sys: &OscillatorSystem,
    t: f64,
    x: &[f64],
    p: &[f64],
    h: f64,
) -> Vec<f64> {
    let alpha = sys.alpha();
    let f = sys.force(t);
    let scale = 1.0 - 0.25 * h * h * alpha * alpha;
    sys.grad_v(x)
        .iter()
        .zip(p)
        .map(|(g, p)| scale * p - 0.25 * h * h * alpha * (g - f))
        .collect()
}

/// Three-stage leapfrog with damping treated implicitly in the half-step
/// momentum and forcing added to the acceleration.
pub fn leapfrog_step(sys: &OscillatorSystem, leap: &LeapfrogState, h: f64) -> Result<LeapfrogState> {
    let state = &leap.state;
    let gamma = sys.damping_rate(state.z);
    let (f0, f1) = (sys.force(state.t), sys.force(state.t + h));
    let grad = sys.grad_v(&state.x);
    let pi_half: Vec<f64> = state
        .p
        .iter()
        .zip(&grad)
        .map(|(pi, g)| (pi - 0.5 * h * (g - f0)) / (1.0 + 0.5 * h * gamma))
        .collect();
    let x: Vec<f64> = state.x.iter().zip(&pi_half).map(|(x, ph)| x + h * ph).collect();
    let grad_next = sys.grad_v(&x);
    let pi: Vec<f64> = pi_half
        .iter()
        .zip(&grad_next)
        .map(|(ph, g)| ph - 0.5 * h * (g + gamma * ph - f1))
        .collect();
    let z = trapezoid_action(sys, state, &x, &pi, h)?;
    Ok(LeapfrogState {
        state: advanced(state, h, x, pi, z),
        pi_half,
    })
}

/// Ruth's third-order kick-drift coefficients `(kick, drift)`.
const RUTH3: [(f64, f64); 3] = [(7.0 / 24.0, 2.0 / 3.0), (3.0 / 4.0, -2.0 / 3.0), (-1.0 / 24.0, 1.0)];

/// Ruth3 with the damping force evaluated at the freshest momentum.
pub fn ruth3_step(sys: &OscillatorSystem, state: &ContactState, h: f64) -> Result<ContactState> {
    let gamma = sys.damping_rate(state.z);
    let mut x = state.x.clone();
    let mut p = state.p.clone();
    let mut t = state.t;
    for (kick, drift) in RUTH3 {
        let f = sys.force(t);
        let grad = sys.grad_v(&x);
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi += kick * h * (-g - gamma * *pi + f);
        }
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += drift * h * pi;
        }
        t += drift * h;
    }
    let z = trapezoid_action(sys, state, &x, &p, h)?;
    Ok(advanced(state, h, x, p, z))
}

/// Classical RK4 on the contact vector field `(ẋ, ṗ, ż)`.
pub fn rk4_step(sys: &OscillatorSystem, state: &ContactState, h: f64) -> Result<ContactState> {
    let n = state.dim();
    let field = |t: f64, coords: &[f64]| {
        let v = contact_vector_field(sys, &ContactState::from_coords(t, coords));
        let mut out = v.dx;
        out.extend(v.dp);
        out.push(v.dz);
        out
    };
    let y0 = state.to_coords();
    let shift = |k: &[f64], c: f64| -> Vec<f64> { y0.iter().zip(k).map(|(y, k)| y + c * k).collect() };
    let k1 = field(state.t, &y0);
    let k2 = field(state.t + 0.5 * h, &shift(&k1, 0.5 * h));
    let k3 = field(state.t + 0.5 * h, &shift(&k2, 0.5 * h));
    let k4 = field(state.t + h, &shift(&k3, h));
    let y: Vec<f64> = (0..2 * n + 1)
        .map(|i| y0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let next = ContactState::from_coords(state.t + h, &y);
    Ok(next)
}

/// Two-point state of the VNC recursion: `state` holds `x_{j+1}` (with a
/// second-order momentum estimate) and `x_prev` holds `x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VncState {
    pub x_prev: Vec<f64>,
    pub state: ContactState,
}

/// How the VNC recursion obtains its second point.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum VncStart {
    /// `x₁ = x₀ + hp₀ - (h²/2)(V'(x₀) + αp₀ - f(t₀))`.
    #[default]
    Taylor,
    /// `x₁` supplied, e.g. from the exact solution.
    Seeded(Vec<f64>),
}

/// Builds the two-point state `(x₀, x₁)` from an initial state.
pub fn vnc_bootstrap(
    sys: &OscillatorSystem,
    initial: &ContactState,
    h: f64,
    start: &VncStart,
) -> Result<VncState> {
    require_linear(sys, "vnc")?;
    let alpha = sys.alpha();
    let f0 = sys.force(initial.t);
    let x1 = match start {
        VncStart::Taylor => {
            let grad = sys.grad_v(&initial.x);
            initial
                .x
                .iter()
                .zip(&initial.p)
                .zip(&grad)
                .map(|((x, p), g)| x + h * p - 0.5 * h * h * (g + alpha * p - f0))
                .collect()
        }
        VncStart::Seeded(x1) => {
            if x1.len() != initial.dim() {
                return Err(Error::DimensionMismatch {
                    expected: initial.dim(),
                    got: x1.len(),
                });
            }
            x1.clone()
        }
    };
    // trapezoidal consistency x₁ = x₀ + h(p₀ + p₁)/2
    let p1: Vec<f64> = x1
        .iter()
        .zip(&initial.x)
        .zip(&initial.p)
        .map(|((x1, x0), p0)| 2.0 * (x1 - x0) / h - p0)
        .collect();
    let z1 = trapezoid_action(sys, initial, &x1, &p1, h)?;
    Ok(VncState {
        x_prev: initial.x.clone(),
        state: advanced(initial, h, x1, p1, z1),
    })
}

/// `(x_{j+2} - 2x_{j+1} + x_j)/h² + α(x_{j+2} - x_j)/(2h) + V'(x_{j+1}) - f(t_{j+1}) = 0`
/// solved for `x_{j+2}`.
pub fn vnc_step(sys: &OscillatorSystem, two: &VncState, h: f64) -> Result<VncState> {
    require_linear(sys, "vnc")?;
    let alpha = sys.alpha();
    let cur = &two.state;
    let f = sys.force(cur.t);
    let grad = sys.grad_v(&cur.x);
    let h2 = h * h;
    let denominator = 1.0 / h2 + alpha / (2.0 * h);
    let x: Vec<f64> = cur
        .x
        .iter()
        .zip(&two.x_prev)
        .zip(&grad)
        .map(|((x1, x0), g)| ((2.0 * x1 - x0) / h2 + alpha * x0 / (2.0 * h) - g + f) / denominator)
        .collect();
    let p: Vec<f64> = x
        .iter()
        .zip(&cur.x)
        .zip(&two.x_prev)
        .map(|((x2, x1), x0)| (3.0 * x2 - 4.0 * x1 + x0) / (2.0 * h))
        .collect();
    let z = trapezoid_action(sys, cur, &x, &p, h)?;
    Ok(VncState {
        x_prev: cur.x.clone(),
        state: advanced(cur, h, x, p, z),
    })
}

/// Action of the reference methods: trapezoidal quadrature of `ż = 𝓛` along
/// the computed `(x, v)`, implicit in the damping term.
fn trapezoid_action(
    sys: &OscillatorSystem,
    from: &ContactState,
    x: &[f64],
    v: &[f64],
    h: f64,
) -> Result<f64> {
    let free = |t: f64, x: &[f64], v: &[f64]| {
        0.5 * crate::system::dot(v, v) - sys.potential().value(x) + sys.force(t) * x.iter().sum::<f64>()
    };
    let rhs = from.z
        + 0.5 * h * (free(from.t, &from.x, &from.p) - sys.damping_term(from.z) + free(from.t + h, x, v));
    match sys.damping() {
        DampingKind::LinearZ => Ok(rhs / (1.0 + 0.5 * h * sys.alpha())),
        DampingKind::QuadraticZ => {
            // (hα/4) z² + z - rhs = 0, root continuous as h → 0
            let disc = 1.0 + h * sys.alpha() * rhs;
            if disc < 0.0 {
                return Err(Error::SingularUpdate { denominator: disc });
            }
            Ok(2.0 * rhs / (1.0 + disc.sqrt()))
        }
    }
}

/// One step of any single-step method. Leapfrog is run from `π = state.p`
/// with its stored half-step discarded; VNC is two-step and rejected.
pub fn one_step(stepper: StepperId, sys: &OscillatorSystem, state: &ContactState, h: f64) -> Result<ContactState> {
    match stepper {
        StepperId::Contact1 => contact1_step(sys, state, h),
        StepperId::Contact2 => contact2_step(sys, state, h),
        StepperId::ContactQuadZ => contact_quad_z_step(sys, state, h),
        StepperId::Contact2Forced => contact2_forced_step(sys, state, h),
        StepperId::Leapfrog => Ok(leapfrog_step(sys, &LeapfrogState::new(state.clone()), h)?.state),
        StepperId::Ruth3 => ruth3_step(sys, state, h),
        StepperId::Rk4 => rk4_step(sys, state, h),
        StepperId::Vnc => Err(unsupported("vnc", "two-step method has no one-step map")),
    }
}

/// Options for [`integrate_with`].
#[derive(Debug, Clone, Default)]
pub struct IntegrateOptions {
    pub vnc_start: VncStart,
    /// Skip diagnostics (H, E, conformal products).
    pub skip_diagnostics: bool,
}

pub fn integrate(
    stepper: StepperId,
    sys: &OscillatorSystem,
    initial: &ContactState,
    h: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    integrate_with(stepper, sys, initial, h, n_steps, &IntegrateOptions::default())
}

/// Applies `stepper` `n_steps` times from `initial`. Sample times are set to
/// `t₀ + j·h` exactly.
pub fn integrate_with(
    stepper: StepperId,
    sys: &OscillatorSystem,
    initial: &ContactState,
    h: f64,
    n_steps: usize,
    options: &IntegrateOptions,
) -> Result<Trajectory> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("step size must be positive, got {h}")));
    }
    initial.validate()?;
    let t0 = initial.t;
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(initial.clone());
    let fail = |step: usize| move |e: Error| Error::StepFailed {
        step,
        source: Box::new(e),
    };
    let stamp = |mut s: ContactState, j: usize| {
        s.t = t0 + j as f64 * h;
        s
    };
    match stepper {
        StepperId::Leapfrog => {
            let mut leap = LeapfrogState::new(initial.clone());
            for j in 0..n_steps {
                leap = leapfrog_step(sys, &leap, h).map_err(fail(j))?;
                leap.state = stamp(leap.state, j + 1);
                states.push(leap.state.clone());
            }
        }
        StepperId::Vnc => {
            if n_steps > 0 {
                let mut two = vnc_bootstrap(sys, initial, h, &options.vnc_start).map_err(fail(0))?;
                two.state = stamp(two.state, 1);
                states.push(two.state.clone());
                for j in 1..n_steps {
                    two = vnc_step(sys, &two, h).map_err(fail(j))?;
                    two.state = stamp(two.state, j + 1);
                    states.push(two.state.clone());
                }
            }
        }
        _ => {
            let mut state = initial.clone();
            for j in 0..n_steps {
                state = stamp(one_step(stepper, sys, &state, h).map_err(fail(j))?, j + 1);
                states.push(state.clone());
            }
        }
    }
    let diagnostics = if options.skip_diagnostics {
        None
    } else {
        Some(diagnostics(stepper, sys, &states, h)?)
    };
    Ok(Trajectory {
        states,
        h,
        method_id: stepper.as_str().to_string(),
        diagnostics,
    })
}

fn diagnostics(
    stepper: StepperId,
    sys: &OscillatorSystem,
    states: &[ContactState],
    h: f64,
) -> Result<Diagnostics> {
    let hamiltonian = states.iter().map(|s| contact_hamiltonian(sys, s)).collect();
    let energy = states.iter().map(|s| energy(sys, s.t, &s.x, &s.p, s.z)).collect();
    let conformal = match discrete_lagrangian_for(stepper, sys) {
        Some(lag) => Some(cumulative_factors(&lag?, states, h)?),
        None => None,
    };
    Ok(Diagnostics {
        hamiltonian,
        energy,
        conformal,
    })
}

/// Running product of `(1 + hD₃L)/(1 - hD₄L)` over consecutive windows,
/// starting from 1.
pub fn cumulative_factors<L: DiscreteLagrangian + ?Sized>(
    lag: &L,
    states: &[ContactState],
    h: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(states.len());
    let mut product = 1.0;
    if !states.is_empty() {
        out.push(product);
    }
    for pair in states.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        product *= discrete_conformal_factor(lag, &Window::new(&a.x, &b.x, a.z, b.z, a.t, h))?;
        out.push(product);
    }
    Ok(out)
}
