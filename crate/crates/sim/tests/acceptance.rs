//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use d2d_sim::bounds::run_suite;
use d2d_sim::runner::{run_direct, run_mpc, run_offline, run_ogd};
use d2d_sim::{execute, write_output, Algorithm, Command, PeerGenerator, Preset, ScenarioFile};
use d2d_traj::{
    huber_value, loss_grad, min_gamma, reachability_check, solve_benchmark, sublinearity_probe, BenchmarkProblem,
    Error, LambdaSchedule, LossSpec, MpcRunner, NormKind, OgdConfig, Region, Scenario, SolverSettings, TimeVaryingLoss,
    Trajectory, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn mbps(bps: f64) -> f64 {
    bps / 1e6
}

fn crossing_paths() -> Outcome {
    let started = Instant::now();
    let file = Preset::Fig1.load().unwrap();
    let direct = run_direct(&file).unwrap().summary.average_rate_bps;
    let delays = [1, 3, 5];
    let rates: Vec<f64> = delays.iter().map(|&d| run_offline(&file, d).unwrap().summary.average_rate_bps).collect();
    let elapsed = started.elapsed();

    let increasing = rates.windows(2).all(|w| w[1] > w[0]);
    let above_direct = rates.iter().all(|r| *r > direct);
    let targets = [1.1, 1.9, 2.8, 3.5];
    let all: Vec<f64> = std::iter::once(direct).chain(rates.iter().copied()).map(mbps).collect();
    let errors: Vec<f64> = all.iter().zip(targets).map(|(r, t)| r / t - 1.0).collect();
    let calibrated = errors.iter().all(|e| e.abs() <= 0.20);
    let detail = format!(
        "rates {:.3}/{:.3}/{:.3}/{:.3} Mbps vs 1.1/1.9/2.8/3.5, relative errors {:+.1}%/{:+.1}%/{:+.1}%/{:+.1}%, \
         increasing={increasing} above_direct={above_direct} {:.2?}",
        all[0],
        all[1],
        all[2],
        all[3],
        100.0 * errors[0],
        100.0 * errors[1],
        100.0 * errors[2],
        100.0 * errors[3],
        elapsed
    );
    outcome(increasing && above_direct && calibrated && within(elapsed, 60), detail)
}

fn slow_peer_gap() -> Outcome {
    let started = Instant::now();
    let file = Preset::Fig4.load().unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for delta in [1, 4] {
        let off = run_offline(&file, delta).unwrap().summary.average_rate_bps;
        let mpc = run_mpc(&file, delta).unwrap().summary.average_rate_bps;
        let gap = (mpc - off).abs() / off;
        pass &= gap <= 0.01;
        parts.push(format!(
            "delta {delta}: mpc {:.4} offline {:.4} Mbps gap {:.3}%",
            mbps(mpc),
            mbps(off),
            100.0 * gap
        ));
    }
    let elapsed = started.elapsed();
    outcome(pass && within(elapsed, 120), format!("{} {:.2?}", parts.join(", "), elapsed))
}

fn regret_bounds() -> Outcome {
    let started = Instant::now();
    let cases = run_suite(0, 100, &SolverSettings::default()).unwrap();
    let elapsed = started.elapsed();
    let assumptions = cases.iter().filter(|c| !c.assumptions_hold).count();
    let regret = cases.iter().filter(|c| !c.bound_satisfied).count();
    let gap = cases.iter().filter(|c| !c.gap_satisfied).count();
    let worst_gap = cases.iter().map(|c| c.iterate_gap_sq / c.gap_bound).fold(0.0, f64::max);
    let worst_regret = cases.iter().map(|c| c.offline_regret / c.theorem_bound).fold(0.0, f64::max);
    outcome(
        assumptions == 0 && regret == 0 && gap == 0 && within(elapsed, 300),
        format!(
            "{} cases: assumption failures {assumptions}, regret-bound failures {regret} (worst ratio {worst_regret:.3}), \
             iterate-gap failures {gap} (worst ratio {worst_gap:.3}) {:.2?}",
            cases.len(),
            elapsed
        ),
    )
}

fn sublinearity() -> Outcome {
    let family = |h: usize| {
        let peer: Vec<Vec2> = (0..h).map(|k| Vec2::new(5.0, 0.0) + Vec2::new(0.3, 0.4) * k.min(10) as f64).collect();
        let scenario = Scenario::new(Vec2::ZERO, vec![Vec2::new(12.0, 9.0); h], peer, 1.0, h, 0, NormKind::Euclidean)?;
        let loss = LossSpec::huber(0.1, 1.0)?.with_region_diameter(scenario.region_diameter);
        let gamma = min_gamma(&loss, scenario.region_diameter, 1.0);
        Ok((scenario, OgdConfig { gamma, loss, schedule: LambdaSchedule::LinearDown, region: Region::Unbounded }))
    };
    let rows = sublinearity_probe(&[20, 40, 80, 160], family, &SolverSettings::default()).unwrap();
    let per_slot: Vec<f64> = rows.iter().map(|r| r.regret_per_slot).collect();
    let nonincreasing = per_slot.windows(2).all(|w| w[1] <= w[0] * 1.05);
    let halved = per_slot[3] <= 0.5 * per_slot[0];
    outcome(
        nonincreasing && halved,
        format!(
            "Reg/T' = {:.4}, {:.4}, {:.4}, {:.4} for T' = 20, 40, 80, 160",
            per_slot[0], per_slot[1], per_slot[2], per_slot[3]
        ),
    )
}

/// Steps the rolling-horizon planner and checks, slot by slot, that it
/// fails exactly when the destination is out of reach.
fn jump_case(slots: usize, delta: usize, jump_slot: usize, target: Vec2) -> (bool, bool) {
    let speed = 1.0;
    let n = slots + delta;
    let mut dest = vec![Vec2::new((slots - 1) as f64 * 0.5, 0.0); n];
    for d in dest.iter_mut().skip(jump_slot - 1) {
        *d = target;
    }
    let peer = vec![Vec2::new(2.0, 3.0); n];
    let scenario = Scenario::new(Vec2::ZERO, dest, peer, speed, slots, delta, NormKind::Euclidean).unwrap();
    let mut runner = MpcRunner::new(&scenario, SolverSettings::default()).unwrap();
    loop {
        let state = runner.state();
        let t = state.current_slot();
        let reachable = reachability_check(
            state.position(),
            scenario.destination_at(t),
            speed,
            state.remaining_slots(),
            scenario.norm,
        );
        match runner.step() {
            Ok(_) if reachable => {}
            Err(Error::Infeasible { slot, .. }) if !reachable && slot == t => return (true, true),
            _ => return (!reachable, false),
        }
        if runner.is_done() {
            return (false, true);
        }
    }
}

fn feasibility() -> Outcome {
    let mut checked = 0;
    let mut infeasible_runs = Vec::new();
    for preset in Preset::ALL {
        let out = execute(Command::SweepDelta, &preset.load().unwrap()).unwrap();
        for run in out.all_runs() {
            checked += 1;
            if !run.summary.velocity_feasible {
                infeasible_runs.push(format!(
                    "{} {} delta {}",
                    preset.name(),
                    run.summary.algorithm.name(),
                    run.summary.excess_delay
                ));
            }
        }
    }
    for seed in 0..10 {
        let mut file = Preset::Fig4.load().unwrap();
        file.peer_kind = d2d_sim::config::PeerKind::RandomWalk;
        file.peer_max_step_units = Some(3.0);
        file.seed = seed;
        let out = execute(Command::Compare, &file).unwrap();
        for run in out.all_runs() {
            checked += 1;
            if !run.summary.velocity_feasible {
                infeasible_runs.push(format!("random walk {seed} {}", run.summary.algorithm.name()));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut agree = 0;
    let mut positives = 0;
    let mut negatives = 0;
    for i in 0..20 {
        let slots = rng.gen_range(6..14);
        let delta = rng.gen_range(0..4);
        let n = slots + delta;
        let jump_slot = rng.gen_range(2..=n / 2);
        let heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let dir = Vec2::new(heading.cos(), heading.sin());
        // Beyond the reach of any position, or inside the reach of every one.
        let radius = if i % 2 == 0 {
            (n - 1) as f64 + rng.gen_range(1.0..10.0)
        } else {
            rng.gen_range(0.0..1.0) * (n + 1 - 2 * jump_slot) as f64
        };
        let (raised, consistent) = jump_case(slots, delta, jump_slot, dir * radius);
        if raised == (i % 2 == 0) && consistent {
            agree += 1;
        }
        if raised {
            positives += 1;
        } else {
            negatives += 1;
        }
    }
    outcome(
        infeasible_runs.is_empty() && agree == 20 && positives == 10 && negatives == 10,
        format!(
            "{checked} runs velocity-feasible except {:?}; jump cases: {agree}/20 match reachability ({positives} infeasible, {negatives} feasible)",
            infeasible_runs
        ),
    )
}

fn central_difference(spec: &LossSpec, x: Vec2, lead: Vec2) -> Vec2 {
    let h = 1e-6 * (x - lead).norm().max(1.0);
    let (ex, ey) = (Vec2::new(h, 0.0), Vec2::new(0.0, h));
    Vec2::new(
        (spec.value(x + ex, lead) - spec.value(x - ex, lead)) / (2.0 * h),
        (spec.value(x + ey, lead) - spec.value(x - ey, lead)) / (2.0 * h),
    )
}

/// Projection onto `{x_0 = start, |x_{k+1} - x_k| <= v}` by cyclic
/// single-edge projections with Dykstra corrections.
fn edge_dykstra(start: Vec2, z: &[Vec2], v: f64) -> Vec<Vec2> {
    let n = z.len();
    let mut x = z.to_vec();
    let mut corr = vec![(Vec2::ZERO, Vec2::ZERO); n];
    for _ in 0..20_000 {
        let before = x.clone();
        for k in 0..n {
            let (ca, cb) = corr[k];
            let a = if k == 0 { start } else { x[k - 1] + ca };
            let b = x[k] + cb;
            let (pa, pb) = if k == 0 {
                let d = b - a;
                let len = d.norm();
                (a, if len <= v { b } else { a + d * (v / len) })
            } else {
                let d = b - a;
                let len = d.norm();
                if len <= v {
                    (a, b)
                } else {
                    let mid = (a + b) * 0.5;
                    let half = d * (0.5 * v / len);
                    (mid - half, mid + half)
                }
            };
            if k > 0 {
                x[k - 1] = pa;
            }
            x[k] = pb;
            corr[k] = (if k == 0 { Vec2::ZERO } else { a - pa }, b - pb);
        }
        let moved = x.iter().zip(&before).map(|(p, q)| (*p - *q).norm()).fold(0.0, f64::max);
        if moved < 1e-15 {
            break;
        }
    }
    x
}

fn oracle_benchmark(start: Vec2, leads: &[Vec2], spec: &LossSpec, v: f64) -> f64 {
    let mut x = vec![start; leads.len() - 1];
    let step = 1.0 / spec.lipschitz;
    for _ in 0..4000 {
        let z: Vec<Vec2> = x.iter().enumerate().map(|(i, p)| *p - loss_grad(spec, *p, leads[i + 1]) * step).collect();
        x = edge_dykstra(start, &z, v);
    }
    let mut points = vec![start];
    points.extend(x);
    TimeVaryingLoss::new(*spec, leads.to_vec()).cumulative(&Trajectory::new(points).unwrap()).unwrap()
}

fn numerics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_fd: f64 = 0.0;
    let mut worst_forms: f64 = 0.0;
    for i in 0..1000 {
        let mu = rng.gen_range(0.0..=1.0);
        let v = rng.gen_range(0.1..5.0);
        let spec = if i % 5 == 4 { LossSpec::squared() } else { LossSpec::huber(mu, v).unwrap() };
        let lead = Vec2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
        let heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let radius = if i % 2 == 0 { rng.gen_range(0.99..1.01) * v } else { rng.gen_range(0.0..3.0) * v };
        let x = lead + Vec2::new(heading.cos(), heading.sin()) * radius;
        let g = loss_grad(&spec, x, lead);
        worst_fd = worst_fd.max((g - central_difference(&spec, x, lead)).norm() / g.norm().max(1.0));

        let r = x - lead;
        let d = r.norm();
        let piecewise = if d <= v { r } else { r * mu + r * ((1.0 - mu) * v / d) };
        let huber = LossSpec::huber(mu, v).unwrap();
        worst_forms = worst_forms.max((loss_grad(&huber, x, lead) - piecewise).norm() / (1.0 + d));
    }

    let mut worst_knee: f64 = 0.0;
    for _ in 0..200 {
        let mu = rng.gen_range(0.0..=1.0);
        let v = rng.gen_range(0.1..5.0);
        let below = v * (1.0 - f64::EPSILON);
        let above = v * (1.0 + f64::EPSILON);
        let value_jump = (huber_value(above, mu, v).unwrap() - huber_value(below, mu, v).unwrap()).abs();
        let spec = LossSpec::huber(mu, v).unwrap();
        let slope = |d: f64| loss_grad(&spec, Vec2::new(d, 0.0), Vec2::ZERO).x;
        let slope_jump = (slope(above) - slope(below)).abs();
        worst_knee = worst_knee.max(value_jump.max(slope_jump) / v.max(1.0));
    }

    let mut worst_oracle: f64 = 0.0;
    let settings = SolverSettings::default();
    for i in 0..20 {
        let slots = rng.gen_range(4..=6);
        let v = rng.gen_range(0.5..2.0);
        let start = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let leads: Vec<Vec2> =
            (0..slots).map(|_| Vec2::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0))).collect();
        let spec = if i % 4 == 3 { LossSpec::squared() } else { LossSpec::huber(rng.gen_range(0.01..1.0), v).unwrap() };
        let problem = BenchmarkProblem { start, leads: leads.clone(), speed: v, loss: spec, norm: NormKind::Euclidean };
        let solved = solve_benchmark(&problem, &settings).unwrap();
        worst_oracle = worst_oracle.max((solved.objective - oracle_benchmark(start, &leads, &spec, v)).abs());
    }
    outcome(
        worst_fd <= 1e-6 && worst_forms <= 1e-12 && worst_knee <= 1e-12 && worst_oracle <= 1e-3,
        format!(
            "finite differences {worst_fd:.2e}, two-form gap {worst_forms:.2e}, knee jump {worst_knee:.2e}, \
             benchmark vs edge-projection oracle {worst_oracle:.2e}"
        ),
    )
}

fn terminal_distance() -> Outcome {
    let file = Preset::Fig5.load().unwrap();
    let delays = [0, 1, 2, 4, 8];
    let mut speed = 0.0;
    let mut distances = Vec::new();
    for d in delays {
        let (run, _) = run_ogd(&file, d).unwrap();
        assert_eq!(run.summary.algorithm, Algorithm::Ogd);
        distances.push(run.summary.terminal_distance);
        speed = file.user_one().unwrap().speed;
    }
    let decreasing = distances.windows(2).all(|w| w[1] <= w[0] * 1.05);
    let arrives = distances[4] <= speed;
    outcome(
        decreasing && arrives,
        format!(
            "terminal distance {} for delta 0, 1, 2, 4, 8; speed {speed:.3}",
            distances.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("d2d-acceptance-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn compare_bytes(file: &ScenarioFile, label: &str) -> Result<usize, String> {
    let a = scratch_dir(&format!("{label}-a"));
    let b = scratch_dir(&format!("{label}-b"));
    let first =
        write_output(&execute(Command::Compare, file).map_err(|e| e.to_string())?, &a).map_err(|e| e.to_string())?;
    write_output(&execute(Command::Compare, file).map_err(|e| e.to_string())?, &b).map_err(|e| e.to_string())?;
    for path in &first {
        let name = path.file_name().unwrap();
        let x = std::fs::read(path).unwrap();
        let y = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{label}: {} differs", name.to_string_lossy()));
        }
    }
    let _ = std::fs::remove_dir_all(&a);
    let _ = std::fs::remove_dir_all(&b);
    Ok(first.len())
}

fn determinism() -> Outcome {
    let mut walk = Preset::Fig4.load().unwrap();
    walk.peer_kind = d2d_sim::config::PeerKind::RandomWalk;
    walk.peer_max_step_units = Some(2.0);
    walk.seed = 1234;
    let mut files = 0;
    for (file, label) in [(Preset::Fig4.load().unwrap(), "fig4"), (walk, "random-walk")] {
        match compare_bytes(&file, label) {
            Ok(n) => files += n,
            Err(e) => return outcome(false, e),
        }
    }
    let stream = PeerGenerator::BoundedRandomWalk { start: Vec2::ZERO, max_step: 1.0, seed: 9 };
    let same = stream.generate(50) == stream.generate(50);
    outcome(same, format!("{files} report files byte-identical across repeated compare runs"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("cooperative crossing-paths rates", crossing_paths),
        ("rolling-horizon vs offline gap on the slow-peer preset", slow_peer_gap),
        ("regret and iterate-gap bounds on 100 seeded scenarios", regret_bounds),
        ("regret per slot shrinks for a bounded path length", sublinearity),
        ("feasibility and exact infeasibility reporting", feasibility),
        ("numerical correctness", numerics),
        ("online terminal distance falls with delay", terminal_distance),
        ("byte-identical compare reports", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        if !result.pass {
            failed += 1;
        }
        println!("[{}] criterion {}: {name}: {}", if result.pass { "PASS" } else { "FAIL" }, i + 1, result.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
