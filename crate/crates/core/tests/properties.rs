use d2d_traj::*;
use proptest::prelude::*;

fn vec2(range: f64) -> impl Strategy<Value = Vec2> {
    (-range..range, -range..range).prop_map(|(x, y)| Vec2::new(x, y))
}

fn huber(mu: f64, v: f64) -> LossSpec {
    LossSpec::huber(mu, v).unwrap()
}

fn central_difference(spec: &LossSpec, x: Vec2, lead: Vec2) -> Vec2 {
    let h = 1e-6 * (x - lead).norm().max(1.0);
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    Vec2::new(
        (spec.value(x + ex, lead) - spec.value(x - ex, lead)) / (2.0 * h),
        (spec.value(x + ey, lead) - spec.value(x - ey, lead)) / (2.0 * h),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gradient_matches_finite_differences(
        mu in 0.0..=1.0f64,
        v in 0.1..5.0f64,
        lead in vec2(20.0),
        dir in 0.0..std::f64::consts::TAU,
        // radii straddling the knee often
        radius_factor in prop_oneof![0.0..3.0f64, 0.99..1.01f64],
    ) {
        let spec = huber(mu, v);
        let x = lead + Vec2::new(dir.cos(), dir.sin()) * (radius_factor * v);
        let g = loss_grad(&spec, x, lead);
        let fd = central_difference(&spec, x, lead);
        prop_assert!((g - fd).norm() <= 1e-6 * g.norm().max(1.0), "{g:?} vs {fd:?}");

        let sq = LossSpec::squared();
        let g = loss_grad(&sq, x, lead);
        let fd = central_difference(&sq, x, lead);
        prop_assert!((g - fd).norm() <= 1e-6 * g.norm().max(1.0));
    }

    #[test]
    fn huber_piecewise_and_projection_forms_agree(
        mu in 0.0..=1.0f64,
        v in 0.1..5.0f64,
        x in vec2(20.0),
        lead in vec2(20.0),
    ) {
        let r = x - lead;
        let d = r.norm();
        let piecewise = if d <= v { r } else { r * mu + r * ((1.0 - mu) * v / d) };
        let g = loss_grad(&huber(mu, v), x, lead);
        prop_assert!((g - piecewise).norm() <= 1e-12 * (1.0 + d));
    }

    #[test]
    fn huber_is_strongly_convex(
        mu in 0.0..=1.0f64,
        v in 0.1..5.0f64,
        x in vec2(20.0),
        y in vec2(20.0),
        lead in vec2(20.0),
    ) {
        let spec = huber(mu, v);
        let lhs = spec.value(y, lead);
        let rhs = spec.value(x, lead) + spec.grad(x, lead).dot(y - x) + 0.5 * mu * (y - x).norm_sq();
        prop_assert!(lhs >= rhs - 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn ogd_step_respects_speed_under_assumptions(
        mu in 1e-4..=1.0f64,
        v in 0.1..5.0f64,
        x in vec2(50.0),
        lead in vec2(50.0),
        slack in 1.0..3.0f64,
    ) {
        let spec = huber(mu, v);
        let r = (x - lead).norm().max(1e-9);
        let cfg = OgdConfig { gamma: min_gamma(&spec, r, v) * slack, loss: spec, schedule: LambdaSchedule::LinearDown, region: Region::Unbounded };
        prop_assert!(verify_assumptions(&cfg, r, v).all_hold());
        let step = ogd_step(x, lead, &cfg) - x;
        prop_assert!(step.norm() <= v * (1.0 + 1e-12));
    }

    #[test]
    fn squared_step_is_plain_gradient_step(x in vec2(50.0), lead in vec2(50.0), gamma in 2.0..10.0f64) {
        let cfg = OgdConfig { gamma, loss: LossSpec::squared(), schedule: LambdaSchedule::LinearDown, region: Region::Unbounded };
        let expected = x - (x - lead) * (2.0 / gamma);
        prop_assert!((ogd_step(x, lead, &cfg) - expected).norm() <= 1e-12 * (1.0 + x.norm()));
    }

    #[test]
    fn path_length_translation_and_scaling(
        pts in prop::collection::vec(vec2(10.0), 1..20),
        shift in vec2(100.0),
        scale in 0.1..10.0f64,
    ) {
        let base = squared_path_length(&Trajectory::new(pts.clone()).unwrap());
        let moved = squared_path_length(&Trajectory::new(pts.iter().map(|p| *p + shift).collect()).unwrap());
        let scaled = squared_path_length(&Trajectory::new(pts.iter().map(|p| *p * scale).collect()).unwrap());
        prop_assert!((base - moved).abs() <= 1e-9 * (1.0 + base));
        prop_assert!((scaled - base * scale * scale).abs() <= 1e-9 * (1.0 + scaled));
    }

    #[test]
    fn self_regret_is_zero(pts in prop::collection::vec(vec2(10.0), 1..20), lead in vec2(10.0)) {
        let traj = Trajectory::new(pts.clone()).unwrap();
        let loss = TimeVaryingLoss::new(huber(0.3, 1.0), vec![lead; pts.len()]);
        prop_assert_eq!(offline_regret(&loss, &traj, &traj).unwrap(), 0.0);
    }

    #[test]
    fn reachability_is_monotone_in_slots(
        pos in vec2(50.0),
        dest in vec2(50.0),
        v in 0.1..5.0f64,
        k in 0usize..100,
    ) {
        for norm in [NormKind::Euclidean, NormKind::Manhattan] {
            if reachability_check(pos, dest, v, k, norm) {
                prop_assert!(reachability_check(pos, dest, v, k + 1, norm));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn online_runs_stay_feasible(
        seed_peer in vec2(30.0),
        peer_vel in vec2(0.5),
        dest in vec2(30.0),
        mu in 0.01..=1.0f64,
        horizon in 2usize..30,
        v in 0.5..3.0f64,
    ) {
        let peer: Vec<Vec2> = (0..horizon).map(|t| seed_peer + peer_vel * t as f64).collect();
        let scenario = Scenario::new(Vec2::ZERO, vec![dest; horizon], peer, v, horizon, 0, NormKind::Euclidean).unwrap();
        let spec = huber(mu, v);
        let cfg = OgdConfig {
            gamma: min_gamma(&spec, scenario.region_diameter, v),
            loss: spec,
            schedule: LambdaSchedule::LinearDown,
            region: Region::Unbounded,
        };
        let run = ogd_run(&scenario, &cfg).unwrap();
        prop_assert!(check_velocity_feasible(&run.trajectory, v, NormKind::Euclidean, 1e-6 * v));
    }

    #[test]
    fn mpc_with_reachable_stream_never_fails(
        start in vec2(10.0),
        dest in vec2(10.0),
        peer in vec2(20.0),
        extra in 0usize..6,
        norm in prop_oneof![Just(NormKind::Euclidean), Just(NormKind::Manhattan)],
    ) {
        let v = 1.0;
        let slots = travel_time(start, dest, v, norm).unwrap() + 1 + extra;
        let scenario = Scenario::new(start, vec![dest; slots], vec![peer; slots], v, slots, 0, norm).unwrap();
        let (traj, _) = mpc_run(&scenario, &SolverSettings::default()).unwrap();
        prop_assert!(check_velocity_feasible(&traj, v, norm, 1e-6 * v));
        prop_assert_eq!(traj.first(), start);
        prop_assert_eq!(traj.last(), dest);
    }

    #[test]
    fn benchmark_never_loses_to_online(
        seed_peer in vec2(30.0),
        peer_vel in vec2(0.5),
        dest in vec2(30.0),
        mu in 0.05..=1.0f64,
        horizon in 2usize..12,
    ) {
        let v = 1.0;
        let peer: Vec<Vec2> = (0..horizon).map(|t| seed_peer + peer_vel * t as f64).collect();
        let scenario = Scenario::new(Vec2::ZERO, vec![dest; horizon], peer, v, horizon, 0, NormKind::Euclidean).unwrap();
        let spec = huber(mu, v);
        let cfg = OgdConfig {
            gamma: min_gamma(&spec, scenario.region_diameter, v),
            loss: spec,
            schedule: LambdaSchedule::LinearDown,
            region: Region::Unbounded,
        };
        let eval = evaluate_regret(&scenario, &cfg, &SolverSettings::default()).unwrap();
        let r = eval.report;
        prop_assert!(r.offline_regret >= -r.epsilon_solver - 1e-9);
        prop_assert!(r.dynamic_regret >= 0.0);
        prop_assert!(r.offline_regret <= r.dynamic_regret + 1e-12);
        prop_assert!(check_velocity_feasible(&eval.benchmark.trajectory, v, NormKind::Euclidean, 1e-6 * v));
    }
}

#[test]
fn huber_knee_is_continuous() {
    for mu in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
        for v in [0.2, 1.0, 3.7] {
            let below = v * (1.0 - 1e-15);
            let above = v * (1.0 + 1e-15);
            let f_lo = huber_value(below, mu, v).unwrap();
            let f_hi = huber_value(above, mu, v).unwrap();
            assert!((f_lo - f_hi).abs() <= 1e-12, "value jump at mu={mu}, v={v}");
            // slope of both branches at the knee
            let left = v;
            let right = v * (1.0 - mu) + mu * v;
            assert!((left - right).abs() <= 1e-12);
            let spec = LossSpec::huber(mu, v).unwrap();
            let g_lo = spec.grad(Vec2::new(below, 0.0), Vec2::ZERO);
            let g_hi = spec.grad(Vec2::new(above, 0.0), Vec2::ZERO);
            assert!((g_lo - g_hi).norm() <= 1e-12);
        }
    }
}
