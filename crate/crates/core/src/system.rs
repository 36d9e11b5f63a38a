//! Domain types: phase-space points, oscillator problem definitions and
//! trajectories.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_all_finite, ensure_finite, Error, Result};

/// A point `(t, x, p, z)` of extended contact phase space in Darboux
/// coordinates, with contact form `dz - p·dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactState {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub z: f64,
}

impl ContactState {
    pub fn new(t: f64, x: Vec<f64>, p: Vec<f64>, z: f64) -> Result<Self> {
        let state = Self { t, x, p, z };
        state.validate()?;
        Ok(state)
    }

    /// One-degree-of-freedom state.
    pub fn scalar(t: f64, x: f64, p: f64, z: f64) -> Self {
        Self {
            t,
            x: vec![x],
            p: vec![p],
            z,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if self.p.len() != self.x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x.len(),
                got: self.p.len(),
            });
        }
        ensure_finite(self.t, "t")?;
        ensure_all_finite(&self.x, "x")?;
        ensure_all_finite(&self.p, "p")?;
        ensure_finite(self.z, "z")
    }

    /// Flattened `(x, p, z)` coordinates, length `2n + 1`.
    pub fn to_coords(&self) -> Vec<f64> {
        let mut coords = Vec::with_capacity(2 * self.dim() + 1);
        coords.extend_from_slice(&self.x);
        coords.extend_from_slice(&self.p);
        coords.push(self.z);
        coords
    }

    pub fn from_coords(t: f64, coords: &[f64]) -> Self {
        let n = (coords.len() - 1) / 2;
        Self {
            t,
            x: coords[..n].to_vec(),
            p: coords[n..2 * n].to_vec(),
            z: coords[2 * n],
        }
    }
}

type ScalarField = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorField = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Potential energy `V(x)` together with its gradient.
#[derive(Clone)]
pub enum Potential {
    /// `V(x) = ½|x|²` (unit mass, unit frequency).
    Harmonic,
    Custom {
        name: String,
        value: Arc<ScalarField>,
        gradient: Arc<VectorField>,
    },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Harmonic => f.write_str("Harmonic"),
            Potential::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

impl Potential {
    pub fn custom<V, G>(name: impl Into<String>, value: V, gradient: G) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Potential::Custom {
            name: name.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    pub fn is_harmonic(&self) -> bool {
        matches!(self, Potential::Harmonic)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Harmonic => 0.5 * dot(x, x),
            Potential::Custom { value, .. } => value(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Potential::Harmonic => x.to_vec(),
            Potential::Custom { gradient, .. } => gradient(x),
        }
    }

    /// Largest relative deviation between the supplied gradient and a
    /// central-difference gradient of `V` over `samples` random points of
    /// `[-range, range]^dim`. The step is `1e-6·max(1, |x_i|)`.
    pub fn gradient_check<R: Rng>(
        &self,
        rng: &mut R,
        dim: usize,
        samples: usize,
        range: f64,
    ) -> f64 {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-range..=range)).collect();
            let analytic = self.gradient(&x);
            for i in 0..dim {
                let step = 1e-6 * x[i].abs().max(1.0);
                let mut fwd = x.clone();
                let mut bwd = x.clone();
                fwd[i] += step;
                bwd[i] -= step;
                let numeric = (self.value(&fwd) - self.value(&bwd)) / (2.0 * step);
                let rel = (numeric - analytic[i]).abs() / analytic[i].abs().max(1.0);
                worst = worst.max(rel);
            }
        }
        worst
    }
}

/// How the action enters the Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingKind {
    /// `-αz`: Rayleigh (linear-in-velocity) friction.
    LinearZ,
    /// `-½αz²`.
    QuadraticZ,
}

/// External forcing `f(t) = β sin(ωt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    pub amplitude: f64,
    pub frequency: f64,
}

impl Forcing {
    pub fn new(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t).sin()
    }
}

/// A (possibly forced) damped oscillator with unit mass.
///
/// The Herglotz Lagrangian is
/// `½|v|² - V(x) - D(z) + f(t)·Σx`, with `D(z) = αz` or `½αz²`.
#[derive(Debug, Clone)]
pub struct OscillatorSystem {
    potential: Potential,
    damping: DampingKind,
    alpha: f64,
    forcing: Option<Forcing>,
}

impl OscillatorSystem {
    pub fn new(
        potential: Potential,
        damping: DampingKind,
        alpha: f64,
        forcing: Option<Forcing>,
    ) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidSystem(format!(
                "damping strength must be finite and non-negative, got {alpha}"
            )));
        }
        if let Some(f) = forcing {
            if !f.amplitude.is_finite() || !f.frequency.is_finite() {
                return Err(Error::InvalidSystem("non-finite forcing parameters".into()));
            }
            if damping == DampingKind::QuadraticZ {
                return Err(Error::InvalidSystem(
                    "forcing is only supported with linear damping".into(),
                ));
            }
        }
        Ok(Self {
            potential,
            damping,
            alpha,
            forcing,
        })
    }

    /// Harmonic potential, linear damping, no forcing.
    pub fn damped_harmonic(alpha: f64) -> Result<Self> {
        Self::new(Potential::Harmonic, DampingKind::LinearZ, alpha, None)
    }

    /// Harmonic potential, quadratic-in-z damping.
    pub fn quadratic_harmonic(alpha: f64) -> Result<Self> {
        Self::new(Potential::Harmonic, DampingKind::QuadraticZ, alpha, None)
    }

    /// Harmonic potential, linear damping, forcing `β sin(ωt)`.
    pub fn forced_harmonic(alpha: f64, beta: f64, omega: f64) -> Result<Self> {
        Self::new(
            Potential::Harmonic,
            DampingKind::LinearZ,
            alpha,
            Some(Forcing::new(beta, omega)),
        )
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn damping(&self) -> DampingKind {
        self.damping
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn forcing(&self) -> Option<Forcing> {
        self.forcing
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.potential.clone(), self.damping, alpha, self.forcing)
    }

    /// `f(t)`, zero when unforced.
    pub fn force(&self, t: f64) -> f64 {
        self.forcing.map_or(0.0, |f| f.value(t))
    }

    /// `D(z)`: the action-dependent part subtracted from the Lagrangian.
    pub fn damping_term(&self, z: f64) -> f64 {
        match self.damping {
            DampingKind::LinearZ => self.alpha * z,
            DampingKind::QuadraticZ => 0.5 * self.alpha * z * z,
        }
    }

    /// `D'(z)`, the friction coefficient multiplying the velocity.
    pub fn damping_rate(&self, z: f64) -> f64 {
        match self.damping {
            DampingKind::LinearZ => self.alpha,
            DampingKind::QuadraticZ => self.alpha * z,
        }
    }

    pub fn grad_v(&self, x: &[f64]) -> Vec<f64> {
        self.potential.gradient(x)
    }
}

/// Per-sample diagnostics recorded alongside a trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub hamiltonian: Vec<f64>,
    pub energy: Vec<f64>,
    /// Running product of discrete conformal factors (contact steppers only).
    pub conformal: Option<Vec<f64>>,
}

/// States sampled at `t_j = t₀ + j·h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<ContactState>,
    pub h: f64,
    pub method_id: String,
    pub diagnostics: Option<Diagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn positions(&self, component: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.x[component]).collect()
    }

    pub fn last(&self) -> Option<&ContactState> {
        self.states.last()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn inf_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}
