use ffscale_core::fockspace::{coherent_state, default_dim, fidelity, tensor};
use ffscale_core::integrator::Tolerances;
use ffscale_core::kpo::{self, KpoSystemSpec, ScheduleKind};
use ffscale_core::propagator::{self, DriveKind, EvolveOptions};
use ffscale_core::pulses::RampSpec;
use ffscale_core::timescaling::{ScaledClock, DEFAULT_SOLVER_TOL};
use ffscale_core::units::mhz;
use ffscale_core::{Complex64, Error};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coherent_states_are_normalized(re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let alpha = Complex64::new(re, im);
        let psi = coherent_state(alpha, default_dim(alpha.norm())).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
        prop_assert!((psi.mean_photon_number(0) - alpha.norm_sqr()).abs() < 1e-8);
    }

    #[test]
    fn clock_is_monotone_and_hits_endpoints(t_ramp in 2.0f64..40.0, ratio in 1.5f64..20.0) {
        let clock = ScaledClock::new(mhz(200.0), mhz(200.0 / ratio), mhz(80.0), t_ramp, DEFAULT_SOLVER_TOL).unwrap();
        prop_assert_eq!(clock.t_final, 0.5 * (clock.ratio() + 1.0) * t_ramp);
        let mut prev = -1.0;
        for k in 0..=50 {
            let t = if k == 50 { clock.t_final } else { clock.t_final * k as f64 / 50.0 };
            let lam = clock.lambda_of(t).unwrap();
            prop_assert!(lam > prev);
            prev = lam;
        }
        prop_assert!((prev - t_ramp).abs() <= 1e-10 * t_ramp);
        let s = clock.scaling_factor(clock.t_final).unwrap();
        prop_assert!((s * clock.ratio() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fast_forward_beats_reference_at_short_ramps() {
    let spec = RampSpec::from_mhz(0.0, 120.0, 10.0, 30.0).unwrap();
    let dim = propagator::ramp_dim(&spec).unwrap();
    let tol = Tolerances::default();
    let ff = propagator::drive_ramp_infidelity(&spec, DriveKind::FastForward, dim, tol).unwrap();
    let reference = propagator::drive_ramp_infidelity(&spec, DriveKind::Reference, dim, tol).unwrap();
    assert!(ff < 1e-6, "{ff}");
    assert!(reference > 0.5, "{reference}");
}

#[test]
fn constant_drive_leaves_ground_state_in_place() {
    let spec = RampSpec::from_mhz(60.0, 60.0, 10.0, 30.0).unwrap();
    let dim = 30;
    let h = propagator::reference_hamiltonian(&spec, dim).unwrap();
    let psi0 = coherent_state(Complex64::new(2.0, 0.0), dim).unwrap();
    let run = propagator::evolve(&h, &psi0, &EvolveOptions::default()).unwrap();
    assert!(1.0 - fidelity(&psi0, &run.final_state).unwrap() < 1e-9);
}

#[test]
fn infeasible_clock_is_rejected() {
    let err = ScaledClock::new(mhz(20.0), mhz(200.0), mhz(80.0), 1.0, DEFAULT_SOLVER_TOL).unwrap_err();
    assert!(err.is_infeasible(), "{err}");
    assert!(matches!(err, Error::InfeasibleSchedule { .. }));
}

#[test]
fn kpo_logical_state_is_product_of_coherent_states() {
    let spec = KpoSystemSpec::reference_device();
    let [a1, a2] = spec.alphas();
    assert!((a1 - 2.0).abs() < 1e-12 && (a2 - 2.0).abs() < 1e-12);
    let dims = [26, 26, 12];
    let psi = kpo::logical_state(&spec, 1, 1, dims).unwrap();
    let c = kpo::sector_coupler_amplitude(&spec, 1, 1, spec.delta_i).unwrap();
    let expected = tensor(&[
        coherent_state(Complex64::new(-a1, 0.0), dims[0]).unwrap(),
        coherent_state(Complex64::new(-a2, 0.0), dims[1]).unwrap(),
        coherent_state(Complex64::new(c, 0.0), dims[2]).unwrap(),
    ])
    .unwrap();
    assert!(1.0 - fidelity(&psi, &expected).unwrap() < 1e-12);
}

#[test]
fn kpo_fast_forward_beats_linear_sweep() {
    let spec = KpoSystemSpec::reference_device();
    let tol = Tolerances::default();
    let ff = kpo::run_displacement_point(&spec, 22.0, ScheduleKind::FfTs, tol).unwrap();
    let lin = kpo::run_displacement_point(&spec, 22.0, ScheduleKind::Linear, tol).unwrap();
    assert!(ff.infidelity * 10.0 < lin.infidelity, "{} vs {}", ff.infidelity, lin.infidelity);
    assert!(ff.coupler_fidelity > 0.9999);
    assert!(ff.norm_drift < 1e-6);
}
