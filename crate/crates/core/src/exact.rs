//! Closed-form solutions of `ẍ = -x - αẋ (+ β sin ωt)`.

use crate::error::{Error, Result};

/// Half-width of the band around `α = 2` treated as critically damped.
const CRITICAL_BAND: f64 = 1e-8;

/// Basis functions of the homogeneous equation with `γ = α/2` and
/// `d = 1 - γ²`: `C` solves `C'' = -dC, C(0) = 1, C'(0) = 0` and `S` solves
/// `S'' = -dS, S(0) = 0, S'(0) = 1`.
fn basis(alpha: f64, t: f64) -> (f64, f64, f64) {
    let gamma = 0.5 * alpha;
    let d = (1.0 - gamma) * (1.0 + gamma);
    let (c, s) = if (alpha - 2.0).abs() < CRITICAL_BAND {
        // critical branch: series in d keeps continuity across the band
        let mut c = 0.0;
        let mut s = 0.0;
        let mut term_c = 1.0;
        let mut term_s = t;
        for k in 0..30 {
            c += term_c;
            s += term_s;
            let k2 = 2.0 * k as f64;
            term_c *= -d * t * t / ((k2 + 1.0) * (k2 + 2.0));
            term_s *= -d * t * t / ((k2 + 2.0) * (k2 + 3.0));
            if term_c.abs() < 1e-18 && term_s.abs() < 1e-18 {
                break;
            }
        }
        (c, s)
    } else if d > 0.0 {
        let w = d.sqrt();
        ((w * t).cos(), (w * t).sin() / w)
    } else {
        let mu = (-d).sqrt();
        ((mu * t).cosh(), (mu * t).sinh() / mu)
    };
    (c, s, d)
}

/// Position and velocity at time `t` of the damped unit-frequency oscillator
/// started from `(x0, v0)` at `t = 0`.
pub fn exact_damped_solution(alpha: f64, x0: f64, v0: f64, t: f64) -> (f64, f64) {
    let gamma = 0.5 * alpha;
    let (c, s, d) = basis(alpha, t);
    let decay = (-gamma * t).exp();
    let b = v0 + gamma * x0;
    let x = decay * (x0 * c + b * s);
    let v = -gamma * x + decay * (-x0 * d * s + b * c);
    (x, v)
}

/// Particular solution `β[(1-ω²) sin ωt - αω cos ωt]/((1-ω²)² + α²ω²)` and
/// its derivative.
fn particular(alpha: f64, beta: f64, omega: f64, t: f64) -> (f64, f64) {
    let detune = 1.0 - omega * omega;
    let denom = detune * detune + alpha * alpha * omega * omega;
    let (sin, cos) = (omega * t).sin_cos();
    let x = beta * (detune * sin - alpha * omega * cos) / denom;
    let v = beta * omega * (detune * cos + alpha * omega * sin) / denom;
    (x, v)
}

/// Solution of the forced problem with `f(t) = β sin(ωt)`.
pub fn exact_forced_solution(
    alpha: f64,
    beta: f64,
    omega: f64,
    x0: f64,
    v0: f64,
    t: f64,
) -> Result<(f64, f64)> {
    if alpha == 0.0 && omega.abs() == 1.0 {
        return Err(Error::Resonance);
    }
    let (xp0, vp0) = particular(alpha, beta, omega, 0.0);
    let (xh, vh) = exact_damped_solution(alpha, x0 - xp0, v0 - vp0, t);
    let (xp, vp) = particular(alpha, beta, omega, t);
    Ok((xh + xp, vh + vp))
}
