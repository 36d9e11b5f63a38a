//! Backward error analysis of the two linear-damping contact integrators on
//! the damped harmonic oscillator `𝓛 = ½v² - ½x² - αz`.
//!
//! The modified equations are truncated after the `hᵏ` term. A solution of
//! the `k`-truncation, sampled at `t_j = jh`, satisfies the integrator's
//! difference equations up to a defect of order `h^{k+1}`.

use serde::{Deserialize, Serialize};

use crate::continuous::HerglotzLagrangian;
use crate::error::{Error, Result};
use crate::integrators::{integrate_with, IntegrateOptions, StepperId};
use crate::system::{ContactState, DampingKind, OscillatorSystem};
use crate::variational::{dgel_residual, DiscreteLagrangian, OscillatorLagrangian, StepTriple, Window};

/// Internal RK4 steps per sample when integrating a modified system.
pub const SUBSTEPS: usize = 100;

pub const MAX_ORDER: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModifiedMethod {
    Contact1,
    Contact2,
}

impl ModifiedMethod {
    pub fn stepper(self) -> StepperId {
        match self {
            ModifiedMethod::Contact1 => StepperId::Contact1,
            ModifiedMethod::Contact2 => StepperId::Contact2,
        }
    }

    pub fn from_stepper(stepper: StepperId) -> Result<Self> {
        match stepper {
            StepperId::Contact1 => Ok(ModifiedMethod::Contact1),
            StepperId::Contact2 => Ok(ModifiedMethod::Contact2),
            other => Err(Error::UnsupportedSystem {
                method: other.as_str(),
                reason: "no closed-form modified equations".into(),
            }),
        }
    }
}

/// Truncated modified equations `ẍ = f_mod(x, ẋ)`, `ż = 𝓛_mod(x, ẋ, z)` of
/// one method at one damping rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifiedSystem {
    pub method: ModifiedMethod,
    pub order: usize,
    pub alpha: f64,
}

impl ModifiedSystem {
    pub fn new(method: ModifiedMethod, order: usize, alpha: f64) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::Config(format!("truncation order {order} exceeds {MAX_ORDER}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidSystem(format!("damping must be finite and non-negative, got {alpha}")));
        }
        Ok(Self { method, order, alpha })
    }

    /// The modified system of `sys`, which must be the unforced harmonic
    /// oscillator with linear damping.
    pub fn for_system(method: ModifiedMethod, order: usize, sys: &OscillatorSystem) -> Result<Self> {
        let method_id = method.stepper().as_str();
        let reject = |reason: &str| Error::UnsupportedSystem {
            method: method_id,
            reason: reason.into(),
        };
        if !sys.potential().is_harmonic() {
            return Err(reject("modified equations are only known for the harmonic potential"));
        }
        if sys.damping() != DampingKind::LinearZ {
            return Err(reject("modified equations need linear damping"));
        }
        if sys.forcing().is_some() {
            return Err(reject("modified equations are only known without forcing"));
        }
        Self::new(method, order, sys.alpha())
    }

    pub fn accel(&self, x: f64, v: f64, _z: f64, h: f64) -> f64 {
        let a = self.alpha;
        let mut acc = -x - a * v;
        match self.method {
            ModifiedMethod::Contact1 => {
                if self.order >= 1 {
                    acc -= 0.5 * h * a * a * v;
                }
                if self.order >= 2 {
                    acc -= h * h / 12.0 * ((a * a + 1.0) * x + 4.0 * a.powi(3) * v);
                }
            }
            ModifiedMethod::Contact2 => {
                if self.order >= 2 {
                    acc -= h * h / 12.0 * (a.powi(3) * v + a * a * x + x);
                }
            }
        }
        acc
    }

    /// Contact1: `𝓛 + (hα/2)𝓛 - (h²/24)((4α²-1)x² - (5α²-2)v² - 4αxv + 8α³z)`.
    /// Contact2: `𝓛 - (h²/24)((α²-1)x² - (2α²-2)v² - 4αxv + 2α³z)`.
    /// The `h²` terms carry the sign fixed by the defect condition; see the
    /// `literal_second_order_sign_loses_an_order` test.
    pub fn zdot(&self, x: f64, v: f64, z: f64, h: f64) -> f64 {
        let a = self.alpha;
        let lag = lagrangian(a, x, v, z);
        let mut zdot = lag;
        match self.method {
            ModifiedMethod::Contact1 => {
                if self.order >= 1 {
                    zdot += 0.5 * h * a * lag;
                }
                if self.order >= 2 {
                    zdot -= h * h / 24.0
                        * ((4.0 * a * a - 1.0) * x * x - (5.0 * a * a - 2.0) * v * v - 4.0 * a * x * v
                            + 8.0 * a.powi(3) * z);
                }
            }
            ModifiedMethod::Contact2 => {
                if self.order >= 2 {
                    zdot -= h * h / 24.0
                        * ((a * a - 1.0) * x * x - (2.0 * a * a - 2.0) * v * v - 4.0 * a * x * v
                            + 2.0 * a.powi(3) * z);
                }
            }
        }
        zdot
    }
}

fn lagrangian(alpha: f64, x: f64, v: f64, z: f64) -> f64 {
    0.5 * v * v - 0.5 * x * x - alpha * z
}

/// Right-hand side of a modified system in `(x, v, z)`.
pub trait ModifiedDynamics {
    fn accel(&self, x: f64, v: f64, z: f64, h: f64) -> f64;
    fn zdot(&self, x: f64, v: f64, z: f64, h: f64) -> f64;
}

impl ModifiedDynamics for ModifiedSystem {
    fn accel(&self, x: f64, v: f64, z: f64, h: f64) -> f64 {
        ModifiedSystem::accel(self, x, v, z, h)
    }

    fn zdot(&self, x: f64, v: f64, z: f64, h: f64) -> f64 {
        ModifiedSystem::zdot(self, x, v, z, h)
    }
}

pub fn modified_accel(method: ModifiedMethod, alpha: f64, x: f64, v: f64, z: f64, h: f64, k: usize) -> Result<f64> {
    Ok(ModifiedSystem::new(method, k, alpha)?.accel(x, v, z, h))
}

pub fn modified_zdot(method: ModifiedMethod, alpha: f64, x: f64, v: f64, z: f64, h: f64, k: usize) -> Result<f64> {
    Ok(ModifiedSystem::new(method, k, alpha)?.zdot(x, v, z, h))
}

/// `(1 + hα/2)(½v² - ½x² - αz)`: the first-order modified Lagrangian of
/// Contact1, a rescaling of the original one.
pub fn modified_lagrangian_contact1(alpha: f64, x: f64, v: f64, z: f64, h: f64) -> f64 {
    (1.0 + 0.5 * h * alpha) * lagrangian(alpha, x, v, z)
}

/// [`modified_lagrangian_contact1`] as a Herglotz Lagrangian in any
/// dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact1ModifiedLagrangian {
    pub alpha: f64,
    pub h: f64,
}

impl Contact1ModifiedLagrangian {
    fn scale(&self) -> f64 {
        1.0 + 0.5 * self.h * self.alpha
    }
}

impl HerglotzLagrangian for Contact1ModifiedLagrangian {
    fn value(&self, _t: f64, x: &[f64], v: &[f64], z: f64) -> f64 {
        let kinetic: f64 = v.iter().map(|v| 0.5 * v * v).sum();
        let potential: f64 = x.iter().map(|x| 0.5 * x * x).sum();
        self.scale() * (kinetic - potential - self.alpha * z)
    }

    fn d_x(&self, _t: f64, x: &[f64], _v: &[f64], _z: f64) -> Vec<f64> {
        x.iter().map(|x| -self.scale() * x).collect()
    }

    fn d_v(&self, _t: f64, _x: &[f64], v: &[f64], _z: f64) -> Vec<f64> {
        v.iter().map(|v| self.scale() * v).collect()
    }

    fn d_z(&self, _t: f64, _x: &[f64], _v: &[f64], _z: f64) -> f64 {
        -self.scale() * self.alpha
    }

    fn d_v_rate(&self, _t: f64, _x: &[f64], _v: &[f64], a: &[f64], _z: f64, _zdot: f64) -> Vec<f64> {
        a.iter().map(|a| self.scale() * a).collect()
    }
}

/// Samples `(x, v, z)` at `t_j = jh`, `j = 0..=n`, of a modified system
/// integrated by RK4 with step `h / SUBSTEPS`.
pub fn sample_modified<D: ModifiedDynamics + ?Sized>(
    dyn_: &D,
    initial: [f64; 3],
    h: f64,
    n: usize,
) -> Result<Vec<[f64; 3]>> {
    let dt = h / SUBSTEPS as f64;
    let field = |s: [f64; 3]| [s[1], dyn_.accel(s[0], s[1], s[2], h), dyn_.zdot(s[0], s[1], s[2], h)];
    let shift = |s: [f64; 3], k: [f64; 3], c: f64| [s[0] + c * k[0], s[1] + c * k[1], s[2] + c * k[2]];
    let mut s = initial;
    let mut out = Vec::with_capacity(n + 1);
    out.push(s);
    for _ in 0..n {
        for _ in 0..SUBSTEPS {
            let k1 = field(s);
            let k2 = field(shift(s, k1, 0.5 * dt));
            let k3 = field(shift(s, k2, 0.5 * dt));
            let k4 = field(shift(s, k3, dt));
            for i in 0..3 {
                s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        if s.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("modified solution"));
        }
        out.push(s);
    }
    Ok(out)
}

/// Largest defects of sampled points in the integrator's difference
/// equations: `(z_{j+1} - z_j)/h - L(x_j, x_{j+1}, z_j, z_{j+1})` and the
/// discrete generalized Euler-Lagrange residual. For both contact methods the
/// latter equals `F - (x_{j+1} - 2x_j + x_{j-1})/h²` with
/// `F = -x_j - α̃((x_j - x_{j-1})/h - (h/2)x_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub h: f64,
    pub x_defect: f64,
    pub z_defect: f64,
}

impl Defect {
    pub fn max(&self) -> f64 {
        self.x_defect.max(self.z_defect)
    }
}

pub fn sample_defect<L: DiscreteLagrangian + ?Sized>(lag: &L, samples: &[[f64; 3]], h: f64) -> Result<Defect> {
    let states: Vec<ContactState> = samples
        .iter()
        .enumerate()
        .map(|(j, s)| ContactState::scalar(j as f64 * h, s[0], s[1], s[2]))
        .collect();
    let mut z_defect: f64 = 0.0;
    for pair in states.windows(2) {
        let w = Window::new(&pair[0].x, &pair[1].x, pair[0].z, pair[1].z, pair[0].t, h);
        z_defect = z_defect.max(((pair[1].z - pair[0].z) / h - lag.value(&w)).abs());
    }
    let mut x_defect: f64 = 0.0;
    for j in 1..states.len().saturating_sub(1) {
        let r = dgel_residual(lag, &StepTriple::from_states(&states, j, h))?;
        x_defect = x_defect.max(r[0].abs());
    }
    Ok(Defect { h, x_defect, z_defect })
}

/// Defect of the `k`-truncated modified system of `method` started from
/// `(x₀, v₀, z₀)` over `[0, t_final]`.
pub fn max_defect(modified: &ModifiedSystem, initial: [f64; 3], h: f64, t_final: f64) -> Result<Defect> {
    max_defect_of(modified, modified.method, modified.alpha, initial, h, t_final)
}

fn max_defect_of<D: ModifiedDynamics + ?Sized>(
    dyn_: &D,
    method: ModifiedMethod,
    alpha: f64,
    initial: [f64; 3],
    h: f64,
    t_final: f64,
) -> Result<Defect> {
    let sys = OscillatorSystem::damped_harmonic(alpha)?;
    let lag = match method {
        ModifiedMethod::Contact1 => OscillatorLagrangian::first_order(&sys)?,
        ModifiedMethod::Contact2 => OscillatorLagrangian::symmetric(&sys)?,
    };
    let n = steps_for(t_final, h)?;
    let samples = sample_modified(dyn_, initial, h, n)?;
    sample_defect(&lag, &samples, h)
}

fn steps_for(t_final: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Config(format!("need h > 0 and t_final > 0, got h={h}, t_final={t_final}")));
    }
    let n = (t_final / h).round();
    if n < 2.0 {
        return Err(Error::Config(format!("t_final={t_final} covers fewer than two steps of h={h}")));
    }
    Ok(n as usize)
}

/// Least-squares line through `(ln h, ln e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
}

pub fn fit_slope(hs: &[f64], errors: &[f64]) -> Result<SlopeFit> {
    if hs.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: hs.len(),
            got: errors.len(),
        });
    }
    if hs.len() < 2 {
        return Err(Error::Config("a slope needs at least two step sizes".into()));
    }
    if hs.iter().chain(errors).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::NonFinite("log-log data (values must be positive)"));
    }
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("step sizes must not all be equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
    })
}

/// Defect slopes of one truncation over a sweep of step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectOrder {
    pub method: ModifiedMethod,
    pub order: usize,
    pub alpha: f64,
    pub defects: Vec<Defect>,
    pub x_fit: SlopeFit,
    pub z_fit: SlopeFit,
}

impl DefectOrder {
    /// The smaller of the two slopes.
    pub fn slope(&self) -> f64 {
        self.x_fit.slope.min(self.z_fit.slope)
    }
}

pub fn defect_order_estimate(
    modified: &ModifiedSystem,
    h_list: &[f64],
    t_final: f64,
    initial: [f64; 3],
) -> Result<DefectOrder> {
    defect_order_of(modified, modified.method, modified.order, modified.alpha, h_list, t_final, initial)
}

fn defect_order_of<D: ModifiedDynamics + ?Sized>(
    dyn_: &D,
    method: ModifiedMethod,
    order: usize,
    alpha: f64,
    h_list: &[f64],
    t_final: f64,
    initial: [f64; 3],
) -> Result<DefectOrder> {
    if h_list.len() < 3 {
        return Err(Error::Config("defect slopes need at least three step sizes".into()));
    }
    let defects = h_list
        .iter()
        .map(|&h| max_defect_of(dyn_, method, alpha, initial, h, t_final))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = defects.iter().map(|d| d.x_defect).collect();
    let z: Vec<f64> = defects.iter().map(|d| d.z_defect).collect();
    Ok(DefectOrder {
        method,
        order,
        alpha,
        x_fit: fit_slope(h_list, &x)?,
        z_fit: fit_slope(h_list, &z)?,
        defects,
    })
}

/// Global-error slope at `t_final` of `stepper` against `exact(t) = (x, ẋ)`.
/// The error is `max(|x - x*|, |p - ẋ*|)` at `t_final`: the position alone
/// can sit near a zero crossing of its leading error term.
pub fn convergence_order_estimate<F>(
    stepper: StepperId,
    sys: &OscillatorSystem,
    initial: &ContactState,
    exact: F,
    h_list: &[f64],
    t_final: f64,
) -> Result<(Vec<f64>, SlopeFit)>
where
    F: Fn(f64) -> (f64, f64),
{
    let (x_star, v_star) = exact(initial.t + t_final);
    let options = IntegrateOptions {
        skip_diagnostics: true,
        ..Default::default()
    };
    let errors = h_list
        .iter()
        .map(|&h| {
            let n = steps_for(t_final, h)?;
            let traj = integrate_with(stepper, sys, initial, h, n, &options)?;
            let last = traj.last().ok_or(Error::NonFinite("empty trajectory"))?;
            Ok((last.x[0] - x_star).abs().max((last.p[0] - v_star).abs()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let fit = fit_slope(h_list, &errors)?;
    Ok((errors, fit))
}

/// Largest gap in `x` and `z` over `[0, t_final]` between a stepper's
/// trajectory and the `k`-truncated modified solution through the same first
/// two positions.
pub fn interpolation_gap(modified: &ModifiedSystem, initial: &ContactState, h: f64, t_final: f64) -> Result<f64> {
    if initial.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: initial.dim(),
        });
    }
    let sys = OscillatorSystem::damped_harmonic(modified.alpha)?;
    let n = steps_for(t_final, h)?;
    let options = IntegrateOptions {
        skip_diagnostics: true,
        ..Default::default()
    };
    let traj = integrate_with(modified.method.stepper(), &sys, initial, h, n, &options)?;
    let (x0, z0, x1) = (initial.x[0], initial.z, traj.states[1].x[0]);
    // x(h) is affine in v₀; a secant step on two probes finds v₀ exactly,
    // a second pass removes roundoff
    let miss = |v0: f64| -> Result<f64> { Ok(sample_modified(modified, [x0, v0, z0], h, 1)?[1][0] - x1) };
    let mut v0 = initial.p[0];
    for _ in 0..2 {
        let (a, b) = (miss(v0)?, miss(v0 + 1e-3)?);
        if a == b {
            break;
        }
        v0 -= a * 1e-3 / (b - a);
    }
    let samples = sample_modified(modified, [x0, v0, z0], h, n)?;
    Ok(samples
        .iter()
        .zip(&traj.states)
        .map(|(s, d)| (s[0] - d.x[0]).abs().max((s[2] - d.z).abs()))
        .fold(0.0, f64::max))
}
