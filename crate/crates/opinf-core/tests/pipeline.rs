//! Cross-module properties: quadratic-form identities under projection,
//! end-to-end inference on reduced coordinates, and proptest invariants.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use opinf_core::dynamics::{simulate, QuadraticModel};
use opinf_core::fom::build_synthetic;
use opinf_core::opinf::{assemble, fit_plain};
use opinf_core::pod::{assemble_snapshots, galerkin_reduce, pod_basis, project_trajectory};
use opinf_core::quadform::{compress_square, compressed_len, expand_quadratic, kron_square};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn intrusive_reduction_reproduces_full_model_on_basis_range() {
    // Simulate the full model from an initial condition inside span(V) with
    // zero input: the Galerkin model must track the projection while the
    // state stays (approximately) in the subspace for short horizons.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let family = build_synthetic(16, 11);
    let model = family.model(0.6);

    // Basis from a short trajectory.
    let x0 = DVector::from_fn(16, |_, _| rng.gen_range(0.0..1.0));
    let inputs = DMatrix::from_fn(1, 120, |_, _| rng.gen_range(0.0..2.0));
    let traj = simulate(&model, &x0, &inputs, 1e-3).unwrap();
    let snapshots = assemble_snapshots([&traj.states]).unwrap();
    let basis = pod_basis(&snapshots, 6).unwrap();

    let reduced = galerkin_reduce(&model, &basis.v).unwrap();
    let x0r = project_trajectory(&DMatrix::from_column_slice(16, 1, x0.as_slice()), &basis.v)
        .unwrap()
        .column(0)
        .into_owned();
    let rt = simulate(&reduced, &x0r, &inputs, 1e-3).unwrap();
    assert!(!rt.diverged);
    let lifted_err = (&basis.v * &rt.states - &traj.states).norm() / traj.states.norm();
    assert!(lifted_err < 0.1, "lifted error {lifted_err}");
}

#[test]
fn inference_on_projected_data_matches_galerkin_for_exact_subspace() {
    // When the snapshots span an invariant-enough subspace and data is
    // exact Euler output of the reduced dynamics, plain least squares
    // recovers the Galerkin operators.
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let n_full = 12;
    let family = build_synthetic(n_full, 5);
    let model = family.model(0.5);
    let basis = {
        let x0 = DVector::from_fn(n_full, |_, _| rng.gen_range(0.0..1.0));
        let inputs = DMatrix::from_fn(1, 200, |_, _| rng.gen_range(0.0..2.0));
        let traj = simulate(&model, &x0, &inputs, 1e-3).unwrap();
        pod_basis(&traj.states, 4).unwrap()
    };
    let reduced = galerkin_reduce(&model, &basis.v).unwrap();

    // Generate data from the reduced model itself (identity projection in
    // reduced coordinates), then fit.
    let mut projected = Vec::new();
    let mut inputs_all = Vec::new();
    for _ in 0..3 {
        let x0 = DVector::from_fn(4, |_, _| rng.gen_range(-0.5..0.5));
        let inputs = DMatrix::from_fn(1, 150, |_, _| rng.gen_range(0.0..2.0));
        let traj = simulate(&reduced, &x0, &inputs, 1e-3).unwrap();
        assert!(!traj.diverged);
        projected.push(traj.states);
        inputs_all.push(inputs);
    }
    let data = assemble(&projected, &inputs_all, 1e-3, false).unwrap();
    let report = fit_plain(&data);
    let err = (&report.model.a - &reduced.a).norm() / reduced.a.norm();
    assert!(err < 1e-7, "A recovery error {err}");
    let err = (&report.model.f - &reduced.f).norm() / reduced.f.norm().max(1e-12);
    assert!(err < 1e-6, "F recovery error {err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compressed_and_kron_actions_agree(
        seed in 0u64..1_000,
        n in 1usize..6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = DMatrix::from_fn(n, compressed_len(n), |_, _| rng.gen_range(-1.0..1.0));
        let h = expand_quadratic(&f);
        let x = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let lhs = &f * compress_square(&x);
        let rhs = &h * kron_square(&x);
        let scale = lhs.norm().max(1e-12);
        prop_assert!((lhs - rhs).norm() <= 1e-13 * scale.max(1.0));
        prop_assert_eq!(f.norm(), h.norm());
    }

    #[test]
    fn simulate_is_deterministic_and_flags_are_consistent(
        seed in 0u64..500,
        steps in 0usize..40,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3;
        let model = QuadraticModel::new(
            DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0)),
            DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0)),
            DMatrix::from_fn(n, compressed_len(n), |_, _| rng.gen_range(-1.0..1.0)),
        ).unwrap();
        let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let inputs = DMatrix::from_fn(1, steps, |_, _| rng.gen_range(-1.0..1.0));
        let a = simulate(&model, &x0, &inputs, 0.05).unwrap();
        let b = simulate(&model, &x0, &inputs, 0.05).unwrap();
        prop_assert_eq!(a.diverged, b.diverged);
        // NaN columns defeat direct equality; compare the finite prefix.
        for k in 0..=steps {
            let ca = a.states.column(k);
            let cb = b.states.column(k);
            let both_nan = ca.iter().all(|v| v.is_nan()) && cb.iter().all(|v| v.is_nan());
            prop_assert!(both_nan || ca == cb);
            prop_assert!(both_nan == (a.diverged && ca.iter().all(|v| v.is_nan())));
        }
        let finite = a.states.iter().all(|v| v.is_finite());
        prop_assert_eq!(finite, !a.diverged);
    }
}

#[test]
fn galerkin_identity_holds_on_many_random_reductions() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for trial in 0..100 {
        let big = 3 + trial % 4;
        let small = 1 + trial % big.min(3);
        let model = QuadraticModel::new(
            DMatrix::from_fn(big, big, |_, _| rng.gen_range(-1.0..1.0)),
            DMatrix::from_fn(big, 1, |_, _| rng.gen_range(-1.0..1.0)),
            DMatrix::from_fn(big, compressed_len(big), |_, _| rng.gen_range(-1.0..1.0)),
        )
        .unwrap();
        let snapshots = DMatrix::from_fn(big, 3 * big, |_, _| rng.gen_range(-1.0..1.0));
        let v = pod_basis(&snapshots, small).unwrap().v;
        let reduced = galerkin_reduce(&model, &v).unwrap();
        let h = expand_quadratic(&model.f);
        let xr = DVector::from_fn(small, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = &reduced.f * compress_square(&xr);
        let rhs = v.transpose() * &h * kron_square(&(&v * &xr));
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12, max_relative = 1e-12);
    }
}
