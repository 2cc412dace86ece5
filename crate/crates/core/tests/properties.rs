mod common;

use common::*;
use proptest::prelude::*;
use snqs::output::{checkpoint_text, parse_checkpoint, parse_trajectory_csv, trajectory_csv};
use snqs::*;

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn tensor(q: usize, t_start: f64, width: f64) -> impl Strategy<Value = CoeffTensor> {
    let n = param_count(2, 1) * q;
    prop::collection::vec(complex(), n).prop_map(move |v| {
        CoeffTensor::from_raw(2, 1, WindowSpec::new(t_start, t_start + width, q).unwrap(), v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn handoff_keeps_value_and_derivatives_continuous(
        (q, c) in (1usize..=7).prop_flat_map(|q| (Just(q), tensor(q, -0.5, 1.5)))
    ) {
        let w = *c.window();
        let next = c.handoff(w.next()).unwrap();
        prop_assert_eq!(next.window().t_start, w.t_end);
        for j in 0..c.n_params() {
            let a = &c.as_slice()[j * q..(j + 1) * q];
            let b = &next.as_slice()[j * q..(j + 1) * q];
            for n in 0..q {
                let da = poly_derivative(a, &w, w.t_end, n);
                let db = poly_derivative(b, next.window(), w.t_end, n);
                prop_assert!((da - db).norm() <= 1e-8 * da.norm().max(1.0), "n={} {} vs {}", n, da, db);
            }
        }
    }

    #[test]
    fn materialize_is_linear(a in tensor(4, 0.0, 2.0), b in tensor(4, 0.0, 2.0), t in 0.0..2.0f64) {
        let sum = a.add(&b).unwrap().materialize_flat(t);
        let (x, y) = (a.materialize_flat(t), b.materialize_flat(t));
        for k in 0..sum.len() {
            prop_assert!((sum[k] - x[k] - y[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn amplitude_ratios_are_consistent(seed in any::<u64>(), bits in 0u64..64, site in 0usize..6) {
        let p = random_rbm(6, 2, 0.5, seed);
        let x = SpinConfig::from_bits(bits, 6).unwrap();
        let y = x.flipped(site);
        let direct = (p.log_amplitude(&y).unwrap() - p.log_amplitude(&x).unwrap()).exp();
        let ratio = p.amplitude_ratio(&y, &x).unwrap();
        let inc = p.amplitude_ratio_incremental(&y, &x, &p.theta(&x));
        prop_assert!((ratio - direct).norm() < 1e-10 * direct.norm().max(1.0));
        prop_assert!((inc - direct).norm() < 1e-10 * direct.norm().max(1.0));
        let back = p.amplitude_ratio(&x, &y).unwrap();
        prop_assert!((ratio * back - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn log_derivatives_match_finite_differences(seed in any::<u64>(), bits in 0u64..16) {
        let p = random_rbm(4, 1, 0.4, seed);
        let x = SpinConfig::from_bits(bits, 4).unwrap();
        let o = p.log_derivatives(&x).unwrap();
        let flat = p.flatten();
        let h = 1e-6;
        for k in 0..flat.len() {
            let mut plus = flat.clone();
            let mut minus = flat.clone();
            plus[k] += h;
            minus[k] -= h;
            let f = |v: &[C64]| RbmParams::from_flat(4, 1, v).unwrap().log_amplitude(&x).unwrap();
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            prop_assert!((fd - o[k]).norm() < 1e-7);
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact(c in tensor(3, 2.0, 2.0), end in 2.0..4.0f64, idx in 0usize..5) {
        let ck = WindowCheckpoint { window: idx, trained_end: end, coeffs: c };
        prop_assert_eq!(parse_checkpoint(&checkpoint_text(&ck)).unwrap(), ck);
    }

    #[test]
    fn trajectory_round_trip_is_exact(
        rows in prop::collection::vec((0.0..10.0f64, -1.0..1.0f64, prop::option::of(0.0..1.0f64), any::<bool>()), 0..20)
    ) {
        let rows: Vec<TrajectoryRow> = rows
            .into_iter()
            .map(|(t, sx_mid, infidelity, extrapolated)| TrajectoryRow { t, sx_mid, infidelity, extrapolated })
            .collect();
        prop_assert_eq!(parse_trajectory_csv(&trajectory_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn config_round_trips_through_text(
        l in 2usize..=14,
        alpha in 1usize..=4,
        q in 1usize..=7,
        hx in -1.0..1.0f64,
        hz in -1.0..1.0f64,
        dt_idx in 0usize..3,
        k in 1usize..=12,
        ipw in 1usize..=5,
        n_int in 0usize..=20,
        seed in 0u64..(i64::MAX as u64),
        mc in any::<bool>(),
        lr in 1e-5..1e-1f64,
    ) {
        let dt = [0.005, 0.01, 0.02][dt_idx];
        let tau = dt * k as f64;
        let grid = TimeGrid { dt, tau, window: tau * ipw as f64, t_max: tau * n_int as f64 };
        prop_assume!(grid.validate().is_ok());
        let model = ModelConfig { sites: l, coupling: 1.0, h_x: hx, h_z: hz };
        let mut cfg = RunConfig::new(model, AnsatzConfig { alpha, basis_size: q, init_noise: 1e-2 }, grid);
        cfg.seed = seed;
        cfg.mode = if mc { Mode::Mc } else { Mode::Exact };
        cfg.train.adam.lr = lr;
        cfg.eval_times = vec![0.5 * tau, tau * 3.5];
        cfg.out = Some("runs/a b".into());
        let back = parse_config(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn weight_decay_shrinks_geometrically(decay in 0.0..0.5f64, lr in 1e-4..1e-1f64, steps in 1usize..20) {
        let cfg = AdamWConfig { weight_decay: decay, ..Default::default() };
        let mut state = AdamWState::new(3, cfg);
        let start = vec![C64::new(1.0, -2.0), C64::new(0.5, 0.25), C64::new(-3.0, 0.0)];
        let mut p = start.clone();
        for _ in 0..steps {
            adamw_step(&mut state, &mut p, &[C64::default(); 3], lr).unwrap();
        }
        let f = (1.0 - lr * decay).powi(steps as i32);
        for (a, b) in p.iter().zip(&start) {
            prop_assert!((a - b * f).norm() < 1e-12);
        }
        prop_assert_eq!(state.steps_taken(), steps as u64);
    }

    #[test]
    fn cosine_schedule_is_monotone_and_bounded(base in 1e-5..1.0f64, total in 1usize..1000) {
        let mut last = f64::INFINITY;
        for e in 0..=total {
            let v = lr_schedule(e, base, SchedulePolicy::Cosine, total);
            prop_assert!(v <= last + 1e-15 && v >= base / 100.0 - 1e-15);
            last = v;
        }
        prop_assert!((lr_schedule(0, base, SchedulePolicy::Cosine, total) - base).abs() < 1e-15);
        prop_assert!((lr_schedule(total, base, SchedulePolicy::Cosine, total) - base / 100.0).abs() < 1e-12);
    }
}
