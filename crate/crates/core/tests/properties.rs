use proptest::prelude::*;

use contact_vi::bea::{modified_accel, modified_zdot, ModifiedMethod};
use contact_vi::geometry::{contactness_check, DEFAULT_FD_EPS};
use contact_vi::harness::error_metric;
use contact_vi::integrators::{one_step, StepperId};
use contact_vi::variational::{discrete_conformal_factor, OscillatorLagrangian, Window};
use contact_vi::{ContactState, OscillatorSystem};

fn state() -> impl Strategy<Value = ContactState> {
    (0.0..6.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(t, x, p, z)| ContactState::scalar(t, x, p, z))
}

fn system(method: StepperId, alpha: f64) -> OscillatorSystem {
    match method {
        StepperId::ContactQuadZ => OscillatorSystem::quadratic_harmonic(alpha),
        StepperId::Contact2Forced => OscillatorSystem::forced_harmonic(alpha, 0.7, 1.3),
        _ => OscillatorSystem::damped_harmonic(alpha),
    }
    .unwrap()
}

fn contact_method() -> impl Strategy<Value = StepperId> {
    prop::sample::select(vec![
        StepperId::Contact1,
        StepperId::Contact2,
        StepperId::ContactQuadZ,
        StepperId::Contact2Forced,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contact_steppers_preserve_the_contact_structure(
        method in contact_method(),
        s in state(),
        alpha in 0.0..2.0f64,
        h in 0.01..0.2f64,
    ) {
        let report = contactness_check(method, &system(method, alpha), &s, h, DEFAULT_FD_EPS).unwrap();
        prop_assert!(report.pullback_residual <= 1e-6, "{report:?}");
        prop_assert!(report.factor_gap() <= 1e-6, "{report:?}");
    }

    #[test]
    fn linear_damping_shrinks_the_contact_form(
        method in prop::sample::select(vec![StepperId::Contact1, StepperId::Contact2]),
        s in state(),
        alpha in 0.01..2.0f64,
        h in 0.01..0.2f64,
    ) {
        let report = contactness_check(method, &system(method, alpha), &s, h, DEFAULT_FD_EPS).unwrap();
        prop_assert!(report.measured_factor < 1.0 && report.measured_factor > 0.0);
    }

    #[test]
    fn undamped_contact_steppers_are_leapfrog(s in state(), h in 0.01..0.2f64) {
        let sys = OscillatorSystem::damped_harmonic(0.0).unwrap();
        let lf = one_step(StepperId::Leapfrog, &sys, &s, h).unwrap();
        for m in [StepperId::Contact1, StepperId::Contact2] {
            let c = one_step(m, &sys, &s, h).unwrap();
            prop_assert!((c.x[0] - lf.x[0]).abs() <= 1e-14);
            prop_assert!((c.p[0] - lf.p[0]).abs() <= 1e-14);
        }
    }

    #[test]
    fn origin_is_a_fixed_point_in_phase_space(
        method in prop::sample::select(vec![
            StepperId::Contact1, StepperId::Contact2, StepperId::ContactQuadZ,
            StepperId::Leapfrog, StepperId::Ruth3, StepperId::Rk4,
        ]),
        alpha in 0.0..2.0f64,
        h in 0.01..0.2f64,
    ) {
        let next = one_step(method, &system(method, alpha), &ContactState::scalar(0.0, 0.0, 0.0, 0.0), h).unwrap();
        prop_assert_eq!(next.x[0], 0.0);
        prop_assert_eq!(next.p[0], 0.0);
    }

    #[test]
    fn discrete_factor_is_one_without_damping(
        x0 in -2.0..2.0f64, x1 in -2.0..2.0f64, z in -2.0..2.0f64, h in 0.01..0.2f64,
    ) {
        let sys = OscillatorSystem::damped_harmonic(0.0).unwrap();
        for lag in [OscillatorLagrangian::first_order(&sys).unwrap(), OscillatorLagrangian::symmetric(&sys).unwrap()] {
            let f = discrete_conformal_factor(&lag, &Window::new(&[x0], &[x1], z, z, 0.0, h)).unwrap();
            prop_assert!((f - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn first_order_modified_action_rate_is_a_rescaling(
        alpha in 0.0..2.0f64, x in -2.0..2.0f64, v in -2.0..2.0f64, z in -2.0..2.0f64, h in 0.0..0.2f64,
    ) {
        let rate = modified_zdot(ModifiedMethod::Contact1, alpha, x, v, z, h, 1).unwrap();
        let lagrangian = 0.5 * v * v - 0.5 * x * x - alpha * z;
        prop_assert!((rate - (1.0 + 0.5 * h * alpha) * lagrangian).abs() <= 1e-15 * lagrangian.abs().max(1.0));
    }

    #[test]
    fn modified_equations_reduce_to_the_original_at_zero_step(
        method in prop::sample::select(vec![ModifiedMethod::Contact1, ModifiedMethod::Contact2]),
        k in 0usize..=2,
        alpha in 0.0..2.0f64, x in -2.0..2.0f64, v in -2.0..2.0f64, z in -2.0..2.0f64,
    ) {
        let accel = modified_accel(method, alpha, x, v, z, 0.0, k).unwrap();
        let rate = modified_zdot(method, alpha, x, v, z, 0.0, k).unwrap();
        prop_assert!((accel - (-x - alpha * v)).abs() <= 1e-15);
        prop_assert!((rate - (0.5 * v * v - 0.5 * x * x - alpha * z)).abs() <= 1e-15);
    }

    #[test]
    fn error_metric_vanishes_only_on_agreement(x in -9.0..100.0f64, d in -1.0..1.0f64) {
        prop_assert_eq!(error_metric(x, x).unwrap(), 0.0);
        let e = error_metric(x + d, x).unwrap();
        prop_assert_eq!(e == 0.0, (10.0 + x + d) == (10.0 + x));
        prop_assert_eq!(e > 0.0, d > 0.0 && (10.0 + x + d) != (10.0 + x));
    }

    #[test]
    fn error_metric_rejects_small_denominators(x in -1e3..-9.9f64, x_star in -10.0..10.0f64) {
        prop_assert!(error_metric(x_star, x).is_err());
    }
}
