use contact_vi::exact::{exact_damped_solution, exact_forced_solution};
use contact_vi::geometry::{cumulative_conformal, trajectory_gap};
use contact_vi::harness::{self, BenchmarkConfig, Command, Scenario};
use contact_vi::integrators::{integrate, StepperId};
use contact_vi::variational::OscillatorLagrangian;
use contact_vi::{ContactState, OscillatorSystem};

fn start() -> ContactState {
    ContactState::scalar(0.0, 1.0, 0.0, 0.0)
}

#[test]
fn closed_form_solutions_agree_with_a_fine_rk4_run() {
    // under-, critically and over-damped
    for alpha in [0.1, 2.0, 5.0] {
        let sys = OscillatorSystem::damped_harmonic(alpha).unwrap();
        let traj = integrate(StepperId::Rk4, &sys, &ContactState::scalar(0.0, 1.0, 0.3, 0.0), 1e-3, 3000).unwrap();
        let (x, v) = exact_damped_solution(alpha, 1.0, 0.3, 3.0);
        let last = traj.last().unwrap();
        assert!((last.x[0] - x).abs() < 1e-12, "alpha={alpha}");
        assert!((last.p[0] - v).abs() < 1e-12, "alpha={alpha}");
    }
    let sys = OscillatorSystem::forced_harmonic(0.3, 0.8, 1.7).unwrap();
    let traj = integrate(StepperId::Rk4, &sys, &start(), 1e-3, 3000).unwrap();
    let (x, _) = exact_forced_solution(0.3, 0.8, 1.7, 1.0, 0.0, 3.0).unwrap();
    assert!((traj.last().unwrap().x[0] - x).abs() < 1e-12);
}

#[test]
fn contact2_positions_coincide_with_the_two_step_scheme() {
    // For linear damping the symmetric discrete Herglotz equations are the
    // central-difference recursion, and both methods start from the same
    // second-order Taylor position.
    for alpha in [0.01, 0.1, 2.0, 5.0] {
        let sys = OscillatorSystem::damped_harmonic(alpha).unwrap();
        let c2 = integrate(StepperId::Contact2, &sys, &start(), 0.1, 1000).unwrap();
        let vnc = integrate(StepperId::Vnc, &sys, &start(), 0.1, 1000).unwrap();
        assert!(trajectory_gap(&c2, &vnc).unwrap() < 1e-12, "alpha={alpha}");
    }
}

#[test]
fn cumulative_conformal_product_follows_the_discrete_rate() {
    let (h, alpha) = (0.1, 0.4);
    let sys = OscillatorSystem::damped_harmonic(alpha).unwrap();
    let traj = integrate(StepperId::Contact2, &sys, &start(), h, 200).unwrap();
    let lag = OscillatorLagrangian::symmetric(&sys).unwrap();
    let products = cumulative_conformal(&traj, &lag).unwrap();
    let rate: f64 = (1.0 - 0.5 * h * alpha) / (1.0 + 0.5 * h * alpha);
    for (j, c) in products.iter().enumerate() {
        assert!((c - rate.powi(j as i32)).abs() <= 1e-13 * (j as f64 + 1.0), "j={j}");
    }
    let from_integrator = traj.diagnostics.as_ref().unwrap().conformal.as_ref().unwrap();
    assert_eq!(&products, from_integrator);
}

#[test]
fn benchmark_errors_are_small_and_second_order_for_contact2() {
    let run = |h: f64| {
        let config = BenchmarkConfig {
            h,
            t_final: 10.0,
            alpha_list: vec![0.5],
            methods: vec![StepperId::Contact2],
            ..BenchmarkConfig::defaults(Command::Benchmark)
        };
        let out = harness::run_benchmark(&config);
        assert!(out.failures.is_empty());
        out.max_abs_err(StepperId::Contact2, 0.5).unwrap()
    };
    let (coarse, fine) = (run(0.1), run(0.05));
    assert!(coarse < 1e-3, "{coarse}");
    assert!((coarse / fine).log2() > 1.9, "{coarse} {fine}");
}

#[test]
fn forced_scenario_tracks_the_forced_solution() {
    let config = BenchmarkConfig {
        scenario: Scenario::Forced,
        t_final: 20.0,
        beta: 0.5,
        omega: 2.0,
        alpha_list: vec![0.1, 1.0],
        methods: vec![StepperId::Contact2Forced, StepperId::Rk4],
        ..BenchmarkConfig::defaults(Command::Benchmark)
    };
    config.validate(Command::Benchmark).unwrap();
    let out = harness::run_benchmark(&config);
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    for alpha in [0.1, 1.0] {
        assert!(out.max_abs_err(StepperId::Contact2Forced, alpha).unwrap() < 5e-3);
        assert!(out.max_abs_err(StepperId::Rk4, alpha).unwrap() < 1e-5);
    }
}

#[test]
fn benchmark_csv_round_trips_the_records() {
    let config = BenchmarkConfig {
        t_final: 5.0,
        ..BenchmarkConfig::defaults(Command::Benchmark)
    };
    let out = harness::run_benchmark(&config);
    let mut buf = Vec::new();
    harness::write_csv(&out.records, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(reader.headers().unwrap(), harness::CSV_HEADER.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), out.records.len());
    for (row, rec) in rows.iter().zip(&out.records) {
        assert_eq!(&row[0], rec.method.as_str());
        let parsed: Vec<f64> = (1..8).map(|i| row[i].parse().unwrap()).collect();
        assert_eq!(parsed, [rec.alpha, rec.h, rec.t, rec.x_num, rec.x_exact, rec.err, rec.h_num]);
    }
}

#[test]
fn reports_serialize_their_config_and_version() {
    let config = BenchmarkConfig {
        methods: vec![StepperId::Contact1],
        ..BenchmarkConfig::defaults(Command::Convergence)
    };
    let report = harness::run_convergence(&config).unwrap();
    let mut buf = Vec::new();
    harness::write_json(&report, &mut buf).unwrap();
    let value: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    let back = BenchmarkConfig::from_json(Command::Convergence, &value["config"]).unwrap();
    assert_eq!(back, config);
    assert_eq!(value["version"], harness::VERSION);
    let slope = value["results"][0]["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() <= 0.15, "{slope}");
}
