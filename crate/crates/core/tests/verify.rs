mod common;

use std::sync::Arc;

use homoclinic::functional::{grad_phi, phi, FunctionalContext};
use homoclinic::lattice::{BlockVector, PeriodicCoefficients, Window};
use homoclinic::nonlinearity::family_radial_rational;
use homoclinic::operators::assemble;
use homoclinic::solver::SolveOptions;
use homoclinic::verify::{
    energy_identity_check, residual_dhs, verify_orbit, window_stability, VerifyTolerances,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn manufactured_solution_passes_every_check() {
    let coeffs = PeriodicCoefficients::model();
    let nl = Arc::new(common::manufactured(&coeffs));
    let window = Window::zero_pad(20);
    let ctx = FunctionalContext::new(assemble(window, &coeffs).unwrap(), nl).unwrap();
    let x = BlockVector::from_fn(window, 1, |n, b| b.copy_from_slice(&common::target(n)));

    let res = residual_dhs(&coeffs, ctx.nonlinearity(), &x);
    assert!(res.inf_norm < 1e-12, "residual {}", res.inf_norm);
    assert!(grad_phi(&ctx, &x).unwrap().linf_norm() < 1e-12);

    let stab = window_stability(&ctx, &x, &SolveOptions::default()).unwrap();
    assert!(stab.drift.unwrap() < 1e-12, "{stab:?}");

    let report = verify_orbit(
        &ctx,
        &x,
        &VerifyTolerances::default(),
        Some(&SolveOptions::default()),
    )
    .unwrap();
    assert!(report.passed, "{report:#?}");
    assert!(report.energy_identity_defect < 1e-12);
    assert!((report.decay.rate - 0.5).abs() < 1e-6, "{:?}", report.decay);

    let zero = BlockVector::zeros(window, 1);
    assert_eq!(
        residual_dhs(&coeffs, ctx.nonlinearity(), &zero).inf_norm,
        0.0
    );
    assert_eq!(energy_identity_check(&ctx, &zero).unwrap(), 0.0);
    let rejected = verify_orbit(
        &ctx,
        &zero,
        &VerifyTolerances::default(),
        Some(&SolveOptions::default()),
    )
    .unwrap();
    assert!(!rejected.passed && !rejected.checks.nontrivial);
    assert!(rejected.window_stability.is_none());
}

#[test]
fn corrupted_entry_is_localized() {
    let coeffs = PeriodicCoefficients::model();
    let nl = common::manufactured(&coeffs);
    let mut x = BlockVector::from_fn(Window::zero_pad(20), 1, |n, b| {
        b.copy_from_slice(&common::target(n))
    });
    x.block_mut(20)[0] += 0.1;
    let res = residual_dhs(&coeffs, &nl, &x);
    assert!(res.inf_norm > 1e-3);
    for (n, r) in x.window().nodes().zip(&res.node_norms) {
        if n.abs() > 1 {
            assert!(*r < 1e-12, "node {n}: {r}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residual_agrees_with_gradient(seed in any::<u64>(), n in 1usize..4, t in 1usize..4, m in 0usize..12, scale in 0.01f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = common::random_coefficients(&mut rng, n, t);
        let nu = coeffs.big_lambda0() + 3.0;
        let ctx = common::context(&coeffs, Window::zero_pad(m), Arc::new(family_radial_rational(nu).unwrap()));
        let x = common::random_vector(&mut rng, ctx.window(), n).scaled(scale);
        let g = grad_phi(&ctx, &x).unwrap();
        let res = residual_dhs(&coeffs, ctx.nonlinearity(), &x);
        for (a, b) in g.block_norms().zip(&res.node_norms) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
        prop_assert!((g.linf_norm() - res.inf_norm).abs() <= 1e-12 * (1.0 + res.inf_norm));

        let e = energy_identity_check(&ctx, &x).unwrap();
        let half = 0.5 * g.l2_inner(&x).unwrap().abs();
        prop_assert!((e - half).abs() <= 1e-12 * (1.0 + half));
        prop_assert!(phi(&ctx, &x).unwrap().is_finite());
    }
}
