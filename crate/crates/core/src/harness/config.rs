use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::integrators::StepperId;
use crate::system::{ContactState, OscillatorSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Damped,
    Forced,
}

/// How the leapfrog method's momentum is initialized from `p0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumInit {
    /// `π₀ = p₀`.
    #[default]
    ContactP,
    /// `π₀` chosen so that leapfrog and Contact2 share their positions.
    LeapfrogPi,
}

/// The harness entry points; each has its own defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Benchmark,
    ContactCheck,
    Bea,
    Convergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub scenario: Scenario,
    pub alpha_list: Vec<f64>,
    pub h: f64,
    pub t_final: f64,
    pub beta: f64,
    pub omega: f64,
    pub methods: Vec<StepperId>,
    pub x0: f64,
    pub p0: f64,
    pub z0: f64,
    pub momentum_init: MomentumInit,
    pub seed: u64,
    /// Step sizes for the sweeps of `contact-check`, `bea` and `convergence`.
    pub h_list: Vec<f64>,
    /// Random states per cell for `contact-check`.
    pub samples: usize,
}

const SWEEP: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

impl BenchmarkConfig {
    pub fn defaults(command: Command) -> Self {
        use StepperId::*;
        let base = Self {
            scenario: Scenario::Damped,
            alpha_list: vec![0.01, 0.1, 2.0, 5.0],
            h: 0.1,
            t_final: 100.0,
            beta: 0.5,
            omega: 0.8,
            methods: vec![Contact1, Contact2, Leapfrog, Vnc, Ruth3, Rk4],
            x0: 1.0,
            p0: 0.0,
            z0: 0.0,
            momentum_init: MomentumInit::ContactP,
            seed: 0,
            h_list: SWEEP.to_vec(),
            samples: 100,
        };
        match command {
            Command::Benchmark => base,
            Command::Simulate => Self {
                alpha_list: vec![0.1],
                methods: vec![Contact2],
                ..base
            },
            Command::ContactCheck => Self {
                alpha_list: vec![0.5],
                methods: vec![Contact1, Contact2, ContactQuadZ, Contact2Forced, Ruth3, Rk4],
                h_list: vec![0.2, 0.1, 0.05],
                ..base
            },
            Command::Bea => Self {
                alpha_list: vec![0.5],
                t_final: 1.0,
                methods: vec![Contact1, Contact2],
                ..base
            },
            Command::Convergence => Self {
                alpha_list: vec![0.5],
                t_final: 1.0,
                methods: vec![Contact1, Contact2, Vnc, Ruth3, Rk4],
                ..base
            },
        }
    }

    /// Overlays a JSON object on the defaults of `command`. Without an
    /// explicit `methods` list the forced scenario swaps Contact1/Contact2
    /// for the forced second-order stepper.
    pub fn from_json(command: Command, overrides: &Value) -> Result<Self> {
        let Value::Object(fields) = overrides else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let mut merged = serde_json::to_value(Self::defaults(command))?;
        let target = merged.as_object_mut().expect("config serializes to an object");
        for (key, value) in fields {
            target.insert(key.clone(), value.clone());
        }
        let mut config: Self =
            serde_json::from_value(merged).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        if !fields.contains_key("methods") && config.scenario == Scenario::Forced {
            let mut methods: Vec<StepperId> = config
                .methods
                .iter()
                .copied()
                .filter(|m| !matches!(m, StepperId::Contact1 | StepperId::Contact2))
                .collect();
            if !methods.contains(&StepperId::Contact2Forced) {
                methods.insert(0, StepperId::Contact2Forced);
            }
            methods.sort();
            config.methods = methods;
        }
        Ok(config)
    }

    pub fn from_json_str(command: Command, text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        Self::from_json(command, &value)
    }

    pub fn validate(&self, command: Command) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.alpha_list.is_empty() {
            return bad("alpha_list is empty".into());
        }
        if let Some(a) = self.alpha_list.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return bad(format!("alpha must be finite and non-negative, got {a}"));
        }
        if self.methods.is_empty() {
            return bad("methods is empty".into());
        }
        for (name, v) in [("x0", self.x0), ("p0", self.p0), ("z0", self.z0), ("omega", self.omega)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.scenario == Scenario::Forced {
            if !(self.beta >= 0.0 && self.beta.is_finite()) {
                return bad(format!("beta must be finite and non-negative, got {}", self.beta));
            }
            if self.alpha_list.contains(&0.0) && self.omega.abs() == 1.0 {
                return bad("alpha = 0 with omega = 1 is resonant".into());
            }
        }
        match command {
            Command::Simulate | Command::Benchmark => {
                check_grid(self.h, self.t_final)?;
                if command == Command::Benchmark && self.methods.contains(&StepperId::ContactQuadZ) {
                    return bad("contact-quad-z has no closed-form reference solution to benchmark against".into());
                }
            }
            Command::ContactCheck => {
                check_steps(&self.h_list, 1)?;
                if self.samples == 0 {
                    return bad("samples must be at least 1".into());
                }
                if self.methods.contains(&StepperId::Vnc) {
                    return bad("vnc is a two-step method and has no one-step map to check".into());
                }
            }
            Command::Bea | Command::Convergence => {
                check_steps(&self.h_list, if command == Command::Bea { 3 } else { 2 })?;
                for &h in &self.h_list {
                    check_grid(h, self.t_final)?;
                }
                if command == Command::Bea {
                    if let Some(m) = self.methods.iter().find(|m| !matches!(m, StepperId::Contact1 | StepperId::Contact2)) {
                        return bad(format!("bea supports contact1 and contact2 only, got {m}"));
                    }
                    if self.scenario == Scenario::Forced {
                        return bad("bea needs the unforced scenario".into());
                    }
                }
                if command == Command::Convergence && self.methods.contains(&StepperId::ContactQuadZ) {
                    return bad("contact-quad-z has no closed-form reference solution".into());
                }
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.h).round() as usize
    }

    pub fn initial_state(&self) -> ContactState {
        ContactState::scalar(0.0, self.x0, self.p0, self.z0)
    }

    /// The system integrated by `method` at damping `alpha`.
    pub fn system_for(&self, method: StepperId, alpha: f64) -> Result<OscillatorSystem> {
        match (method, self.scenario) {
            (StepperId::ContactQuadZ, _) => OscillatorSystem::quadratic_harmonic(alpha),
            (StepperId::Contact2Forced, _) | (_, Scenario::Forced) => {
                OscillatorSystem::forced_harmonic(alpha, self.beta, self.omega)
            }
            _ => OscillatorSystem::damped_harmonic(alpha),
        }
    }
}

fn check_steps(h_list: &[f64], min_len: usize) -> Result<()> {
    if h_list.len() < min_len {
        return Err(Error::Config(format!("h_list needs at least {min_len} entries")));
    }
    if let Some(h) = h_list.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
        return Err(Error::Config(format!("step sizes must be positive, got {h}")));
    }
    Ok(())
}

fn check_grid(h: f64, t_final: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Config(format!("h must be positive, got {h}")));
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::Config(format!("t_final must be positive, got {t_final}")));
    }
    let ratio = t_final / h;
    if (ratio - ratio.round()).abs() > 1e-9 {
        return Err(Error::Config(format!("t_final = {t_final} is not a whole number of steps h = {h}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn empty_object_gives_defaults() {
        let c = BenchmarkConfig::from_json(Command::Benchmark, &json!({})).unwrap();
        assert_eq!(c, BenchmarkConfig::defaults(Command::Benchmark));
        assert_eq!(c.alpha_list, vec![0.01, 0.1, 2.0, 5.0]);
        assert_eq!(c.n_steps(), 1000);
        c.validate(Command::Benchmark).unwrap();
    }

    #[test]
    fn fields_override_defaults() {
        let c = BenchmarkConfig::from_json(
            Command::Benchmark,
            &json!({"alpha_list": [0.3], "methods": ["rk4", "contact-quad-z"], "momentum_init": "leapfrog_pi"}),
        )
        .unwrap();
        assert_eq!(c.alpha_list, vec![0.3]);
        assert_eq!(c.methods, vec![StepperId::Rk4, StepperId::ContactQuadZ]);
        assert_eq!(c.momentum_init, MomentumInit::LeapfrogPi);
        assert!(c.validate(Command::Benchmark).is_err());
    }

    #[test]
    fn unknown_fields_and_methods_are_rejected() {
        assert!(matches!(
            BenchmarkConfig::from_json(Command::Benchmark, &json!({"alpah_list": [0.1]})),
            Err(Error::Config(_))
        ));
        assert!(BenchmarkConfig::from_json(Command::Benchmark, &json!({"methods": ["euler"]})).is_err());
        assert!(BenchmarkConfig::from_json(Command::Benchmark, &json!([1, 2])).is_err());
        assert!(BenchmarkConfig::from_json_str(Command::Benchmark, "{not json").is_err());
    }

    #[test]
    fn forced_scenario_defaults_to_forced_stepper() {
        let c = BenchmarkConfig::from_json(Command::Benchmark, &json!({"scenario": "forced"})).unwrap();
        assert_eq!(
            c.methods,
            vec![StepperId::Contact2Forced, StepperId::Leapfrog, StepperId::Vnc, StepperId::Ruth3, StepperId::Rk4]
        );
        let explicit =
            BenchmarkConfig::from_json(Command::Benchmark, &json!({"scenario": "forced", "methods": ["contact1"]})).unwrap();
        assert_eq!(explicit.methods, vec![StepperId::Contact1]);
    }

    #[test]
    fn grid_must_be_integral() {
        let mut c = BenchmarkConfig::defaults(Command::Benchmark);
        c.t_final = 10.05;
        c.h = 0.1;
        assert!(c.validate(Command::Benchmark).is_err());
        c.t_final = 10.0;
        c.validate(Command::Benchmark).unwrap();
        c.h = 0.0;
        assert!(c.validate(Command::Benchmark).is_err());
    }

    #[test]
    fn forced_validation() {
        let mut c = BenchmarkConfig::defaults(Command::Benchmark);
        c.scenario = Scenario::Forced;
        c.beta = -1.0;
        assert!(c.validate(Command::Benchmark).is_err());
        c.beta = 0.5;
        c.alpha_list = vec![0.0, 0.1];
        c.omega = 1.0;
        assert!(c.validate(Command::Benchmark).is_err());
        c.omega = 0.8;
        c.validate(Command::Benchmark).unwrap();
    }

    #[test]
    fn command_specific_rules() {
        let mut c = BenchmarkConfig::defaults(Command::Bea);
        c.validate(Command::Bea).unwrap();
        c.h_list = vec![0.1, 0.05];
        assert!(c.validate(Command::Bea).is_err());
        c.h_list = SWEEP.to_vec();
        c.methods = vec![StepperId::Rk4];
        assert!(c.validate(Command::Bea).is_err());

        let mut c = BenchmarkConfig::defaults(Command::ContactCheck);
        c.validate(Command::ContactCheck).unwrap();
        c.methods.push(StepperId::Vnc);
        assert!(c.validate(Command::ContactCheck).is_err());

        BenchmarkConfig::defaults(Command::Convergence).validate(Command::Convergence).unwrap();
        BenchmarkConfig::defaults(Command::Simulate).validate(Command::Simulate).unwrap();
    }

    #[test]
    fn systems_follow_method_and_scenario() {
        let c = BenchmarkConfig::defaults(Command::ContactCheck);
        assert!(c.system_for(StepperId::Contact2Forced, 0.5).unwrap().forcing().is_some());
        assert!(c.system_for(StepperId::Contact2, 0.5).unwrap().forcing().is_none());
        assert_eq!(
            c.system_for(StepperId::ContactQuadZ, 0.5).unwrap().damping(),
            crate::system::DampingKind::QuadraticZ
        );
    }

    #[test]
    fn round_trips_through_json() {
        let c = BenchmarkConfig::defaults(Command::ContactCheck);
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"momentum_init\":\"contact_p\""));
        assert!(text.contains("\"contact-quad-z\""));
        assert_eq!(BenchmarkConfig::from_json_str(Command::ContactCheck, &text).unwrap(), c);
    }
}
