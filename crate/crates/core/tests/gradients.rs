mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snqs::loss::{initial_overlap_params, step_fidelity_params, ExactOperators};
use snqs::*;

fn prop(l: usize, dt: f64) -> PropagatorSpec {
    PropagatorSpec::new(HamiltonianSpec::new(l, 1.0, 0.3, 0.3).unwrap(), dt, 2).unwrap()
}

#[test]
fn step_fidelity_matches_dense_formula() {
    let l = 3;
    let p = prop(l, 0.01);
    let u = taylor(&hamiltonian(l, 1.0, 0.3, 0.3), 0.01, 2);
    let w = WindowSpec::new(0.0, 1.0, 3).unwrap();
    let c = random_tensor(l, 2, w, 0.3, 11);
    let r = step_fidelity_exact(&c, 0.2, 0.21, &p).unwrap();
    let a = rbm_vector(&rbm_at(&c, c.as_slice(), 0.2));
    let b = rbm_vector(&rbm_at(&c, c.as_slice(), 0.21));
    assert!((r.value - fidelity(&a, &b, &u)).abs() < 1e-12);
    assert_eq!(r.statistical_error, 0.0);
}

#[test]
fn initial_overlap_matches_infidelity() {
    let l = 3;
    let w = WindowSpec::new(0.0, 1.0, 2).unwrap();
    let c = random_tensor(l, 1, w, 0.4, 5);
    let target = build_initial_state(l).unwrap();
    let r = initial_overlap(&c, 0.0, &InitialTarget::Dense(target.clone()), None).unwrap();
    let psi = densify_rbm(&c.materialize(0.0)).unwrap();
    assert!((r.value - (1.0 - infidelity(&psi, &target).unwrap())).abs() < 1e-12);
}

#[test]
fn orthogonal_target_is_flagged() {
    // the RBM state is all weight on one configuration, the target on another
    let mut p = RbmParams::zeros(2, 1);
    p.a = vec![C64::new(40.0, 0.0), C64::new(40.0, 0.0)];
    let target = StateVector::new(2, vec![C64::new(1.0, 0.0), C64::default(), C64::default(), C64::default()]).unwrap();
    let err = initial_overlap_params(&p, &InitialTarget::Dense(target), None);
    assert!(err.is_err() || err.unwrap().value < 1e-30);
}

#[test]
fn gradient_matches_finite_differences_small_instance() {
    let (l, q, k, dt) = (3, 2, 3, 0.05);
    let h = hamiltonian(l, 1.0, 0.3, 0.3);
    let u = taylor(&h, dt, 2);
    let w = WindowSpec::new(0.0, 0.3, q).unwrap();
    let c = random_tensor(l, 1, w, 0.3, 21);
    let target = random_rbm(l, 1, 0.2, 4);
    let tv = rbm_vector(&target);
    let ev = LossEvaluator::new(prop(l, dt), LossMode::Exact, GradientForm::NegLog).unwrap();
    let out = ev.interval_loss(&c, 0.05, k, &InitialTarget::Rbm(target), 0).unwrap();
    let oracle = oracle_loss(&c, c.as_slice(), 0.05, dt, k, &u, &tv);
    assert!((out.loss - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
    let fd = fd_gradient(c.as_slice(), 1e-4, |x| oracle_loss(&c, x, 0.05, dt, k, &u, &tv));
    let err = max_rel_error(&out.gradient, &fd);
    assert!(err <= 1e-6, "max relative error {err:e}");
}

#[test]
fn product_form_gradient_matches_finite_differences() {
    let (l, q, k, dt) = (2, 3, 2, 0.1);
    let u = taylor(&hamiltonian(l, 1.0, 0.3, 0.3), dt, 2);
    let w = WindowSpec::new(-0.1, 0.4, q).unwrap();
    let c = random_tensor(l, 2, w, 0.25, 8);
    let tv = rbm_vector(&RbmParams::zeros(l, 2));
    let ev = LossEvaluator::new(prop(l, dt), LossMode::Exact, GradientForm::Product).unwrap();
    let out = ev.interval_loss(&c, 0.0, k, &InitialTarget::Rbm(RbmParams::zeros(l, 2)), 0).unwrap();
    let f = |x: &[C64]| 1.0 - (-oracle_loss(&c, x, 0.0, dt, k, &u, &tv)).exp();
    assert!((out.loss - f(c.as_slice())).abs() < 1e-12);
    let fd = fd_gradient(c.as_slice(), 1e-4, f);
    let err = max_rel_error(&out.gradient, &fd);
    assert!(err <= 1e-6, "max relative error {err:e}");
}

#[test]
fn full_basis_samples_reproduce_exact_mode() {
    let l = 3;
    let p = prop(l, 0.02);
    let prev = random_rbm(l, 1, 0.3, 1);
    let next = random_rbm(l, 1, 0.3, 2);
    let ops = ExactOperators::taylor(&p).unwrap();
    let exact = step_fidelity_params(&prev, &next, &ops).unwrap();
    let sp = SampleSet::exact(&prev).unwrap();
    let sn = SampleSet::exact(&next).unwrap();
    let mc = snqs::loss::step_fidelity_params_mc(&prev, &next, &p, &sp, &sn).unwrap();
    assert!((exact.value - mc.value).abs() < 1e-12);
    for (a, b) in exact.grad_t_prime.iter().zip(&mc.grad_t_prime) {
        assert!((a - b).norm() < 1e-11);
    }
    for (a, b) in exact.grad_t_double_prime.iter().zip(&mc.grad_t_double_prime) {
        assert!((a - b).norm() < 1e-11);
    }
    assert_eq!(mc.statistical_error, 0.0);
}

#[test]
fn normalization_invariance() {
    let l = 3;
    let w = WindowSpec::new(0.0, 1.0, 2).unwrap();
    let c = random_tensor(l, 1, w, 0.3, 3);
    let target = InitialTarget::Rbm(random_rbm(l, 1, 0.2, 9));
    let ev = LossEvaluator::new(prop(l, 0.02), LossMode::Exact, GradientForm::NegLog).unwrap();
    let base = ev.interval_loss(&c, 0.1, 3, &target, 0).unwrap();
    // adding a constant to every visible bias times a fixed spin sum is not
    // global; a global factor is a constant added to the log-amplitude, which
    // a hidden unit with zero weights provides through its bias
    let mut shifted = c.clone();
    let l_m = l + l; // first hidden bias index
    let q = c.basis_size();
    let z = shifted.get(l_m, 0) + C64::new(0.7, 1.3);
    shifted.set(l_m, 0, z);
    // zero weights of that hidden unit so only the global factor changes
    let mut zeroed = c.clone();
    for i in 0..l {
        for k in 0..q {
            zeroed.set(2 * l + i, k, C64::default());
            shifted.set(2 * l + i, k, C64::default());
        }
    }
    let a = ev.interval_loss(&zeroed, 0.1, 3, &target, 0).unwrap();
    let b = ev.interval_loss(&shifted, 0.1, 3, &target, 0).unwrap();
    assert!(base.loss.is_finite());
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((a.loss - b.loss).abs() < 1e-12);
}

#[test]
fn exact_unitary_keeps_fidelities_below_one() {
    let l = 4;
    let hs = HamiltonianSpec::new(l, 1.0, 0.3, 0.3).unwrap();
    let p = PropagatorSpec::new(hs.clone(), 0.05, 2).unwrap();
    let ops = ExactOperators::exact(&ExactEvolver::new(&hs).unwrap(), 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..10 {
        let prev = random_rbm(l, 1, rng.random_range(0.05..0.5), trial);
        let next = random_rbm(l, 1, rng.random_range(0.05..0.5), 100 + trial);
        let r = step_fidelity_params(&prev, &next, &ops).unwrap();
        assert!(r.value > 0.0 && r.value <= 1.0, "{}", r.value);
    }
    // exact-evolved target: fidelity is one
    let psi = random_rbm(l, 1, 0.3, 77);
    let ev = LossEvaluator::with_operators(p, ops, GradientForm::NegLog).unwrap();
    let (loss, _, _) = ev.step_loss(&psi, &psi, 0).unwrap();
    assert!(loss > 0.0);
}
