mod common;

use common::{physical_model, Family};
use num_complex::Complex64;
use phasecov::conditions::{
    infer_rate_constraints, predicates_parts, Condition, DynamicsClass, InferenceError, RegionCell,
    EPS_PRED,
};
use phasecov::evolution::{evolve_unchecked, integrate_kernels, TimeGrid};
use phasecov::indicators::{
    derivative, l1_series, map_spectrum_series, purity_rate_series, trace_distance_series, Probes,
    EPS_SIGN,
};
use phasecov::rates::RateSample;
use phasecov::Execution;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn trace_distances_equal_map_eigenvalue_moduli() {
    let grid = TimeGrid::with_step(10.0, 1e-2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for family in [Family::Commutative, Family::Unital] {
        for _ in 0..5 {
            let (model, desc) = physical_model(&mut rng, family, &grid);
            let t = integrate_kernels(&model, &grid, Execution::Parallel).unwrap();
            let class = DynamicsClass::commutative(0.5);
            let times = grid.times();
            let (xy, z) = trace_distance_series(&times, &t.kernels, EPS_SIGN).unwrap();
            let (off, ez) = map_spectrum_series(&times, &t.kernels, &class, EPS_SIGN).unwrap();
            for k in 0..times.len() {
                assert!((xy.values[k] - off.values[k]).abs() < 1e-13, "{desc}");
                assert!((z.values[k] - ez.values[k]).abs() < 1e-13, "{desc}");
            }
        }
    }
}

#[test]
fn l1_coherence_scales_with_the_coherence_eigenvalue() {
    let grid = TimeGrid::with_step(10.0, 1e-2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let (model, _) = physical_model(&mut rng, Family::General, &grid);
    let t = integrate_kernels(&model, &grid, Execution::Parallel).unwrap();
    let probes =
        Probes::for_class(&DynamicsClass::General, Complex64::new(0.3, 0.2), None).unwrap();
    let traj = evolve_unchecked(&t, &probes.coherence);
    let l1 = l1_series(&traj, EPS_SIGN).unwrap();
    let (xy, _) = trace_distance_series(&grid.times(), &t.kernels, EPS_SIGN).unwrap();
    let a0 = probes.coherence.alpha().norm();
    for k in 0..l1.len() {
        assert!((l1.values[k] - 2.0 * a0 * xy.values[k]).abs() < 1e-14);
    }
}

#[test]
fn purity_rate_matches_its_closed_form() {
    let grid = TimeGrid::with_step(10.0, 2.5e-4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..5 {
        let (model, desc) = physical_model(&mut rng, Family::Unital, &grid);
        let t = integrate_kernels(&model, &grid, Execution::Parallel).unwrap();
        let probes = Probes::default_for(&DynamicsClass::Unital).unwrap();
        let traj = evolve_unchecked(&t, &probes.coherence);
        let s = purity_rate_series(&traj, &DynamicsClass::Unital, "coherence", EPS_SIGN).unwrap();
        let reference = s.reference.as_ref().unwrap();
        let n = s.len();
        for (d, r) in s.derivative[1..n - 1].iter().zip(&reference[1..n - 1]) {
            assert!((d - r).abs() < 1e-5, "{desc}: {d} vs {r}");
        }
    }
}

#[test]
fn central_differences_are_exact_for_quadratics() {
    let h = 0.1;
    let v: Vec<f64> = (0..20).map(|k| (k as f64 * h).powi(2)).collect();
    let d = derivative(&v, h).unwrap();
    for (k, d) in d.iter().enumerate() {
        assert!((d - 2.0 * k as f64 * h).abs() < 1e-12, "{k}");
    }
}

fn sample(gamma_prime: f64, gamma3: f64) -> RateSample {
    RateSample {
        t: 0.0,
        gamma1: 0.5 * gamma_prime,
        gamma2: 0.5 * gamma_prime,
        gamma3,
        omega: 0.0,
    }
}

fn class_strategy() -> impl Strategy<Value = DynamicsClass> {
    prop_oneof![
        Just(DynamicsClass::General),
        (0.0f64..1.0).prop_map(DynamicsClass::commutative),
        Just(DynamicsClass::Unital),
    ]
}

proptest! {
    #[test]
    fn region_implications(gp in -5.0f64..5.0, g3 in -5.0f64..5.0) {
        let c = RegionCell::new(gp, g3, EPS_PRED);
        if c.get(Condition::Bloch) {
            prop_assert!(c.get(Condition::Trace1) || c.get(Condition::Trace2));
        }
        if c.get(Condition::Trace1) && c.get(Condition::Trace2) {
            prop_assert!(c.get(Condition::Bloch));
        }
        prop_assert_eq!(c.get(Condition::L1), c.get(Condition::Trace1));
        for (a, b) in [
            (Condition::Trace1, Condition::Purity1),
            (Condition::Trace2, Condition::Purity2),
            (Condition::Trace1, Condition::Entropy1),
            (Condition::Trace2, Condition::Eigen2),
            (Condition::Trace1, Condition::Singular1),
        ] {
            prop_assert_eq!(c.get(a), c.get(b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn class_narrowing_only_adds_verdicts(gp in -5.0f64..5.0, g3 in -5.0f64..5.0, kappa in 0.0f64..1.0) {
        let general = predicates_parts(gp, g3, &DynamicsClass::General, EPS_PRED);
        let commutative = predicates_parts(gp, g3, &DynamicsClass::commutative(kappa), EPS_PRED);
        let unital = predicates_parts(gp, g3, &DynamicsClass::Unital, EPS_PRED);
        for c in Condition::ALL {
            if let Some(v) = general.get(c).as_option() {
                prop_assert_eq!(commutative.get(c).as_option(), Some(v));
                prop_assert_eq!(unital.get(c).as_option(), Some(v));
            }
            if let Some(v) = commutative.get(c).as_option() {
                prop_assert_eq!(unital.get(c).as_option(), Some(v));
            }
        }
    }

    #[test]
    fn inferred_constraints_hold_for_the_observed_rates(
        gp in -5.0f64..5.0, g3 in -5.0f64..5.0, class in class_strategy(), mask in 0u16..4096,
    ) {
        let verdicts = predicates_parts(gp, g3, &class, 0.0);
        let observed: Vec<(Condition, bool)> = Condition::ALL
            .into_iter()
            .filter(|c| mask & (1 << (*c as u16)) != 0)
            .filter_map(|c| verdicts.get(c).as_option().map(|v| (c, v)))
            .collect();
        let constraints = infer_rate_constraints(&observed, &class).unwrap();
        for k in &constraints {
            prop_assert!(k.is_satisfied(&sample(gp, g3)), "{k} for γ′={gp}, γ3={g3}");
        }
    }
}

#[test]
fn contradictory_observations_are_rejected() {
    let class = DynamicsClass::Unital;
    assert!(matches!(
        infer_rate_constraints(
            &[(Condition::Trace1, true), (Condition::Purity1, false)],
            &class
        ),
        Err(InferenceError::Contradictory(..))
    ));
    assert!(matches!(
        infer_rate_constraints(
            &[
                (Condition::Bloch, true),
                (Condition::Trace1, false),
                (Condition::Trace2, false)
            ],
            &class
        ),
        Err(InferenceError::Inconsistent(_))
    ));
    assert!(matches!(
        infer_rate_constraints(&[(Condition::Purity1, true)], &DynamicsClass::General),
        Err(InferenceError::NotApplicable(Condition::Purity1))
    ));
}

#[test]
fn hidden_negative_dephasing_is_exposed() {
    // bloch detected while the population form is not: γ₃ must be negative
    let out = infer_rate_constraints(
        &[(Condition::Bloch, true), (Condition::Trace2, false)],
        &DynamicsClass::General,
    )
    .unwrap();
    let negative_gamma3 = out
        .iter()
        .any(|k| !k.is_satisfied(&sample(0.0, 1.0)) && k.is_satisfied(&sample(0.0, -1.0)));
    assert!(negative_gamma3, "{out:?}");
}
