//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use lipwalk_core::sim::{
    measure_gait, simulate_2d, simulate_3d, stride_headings, GaitChange, SimOptions, Vec2,
    WalkTrace, WorldState,
};
use lipwalk_core::{
    flow, flow_numeric, inplace_step_length, lfpc_2d, orbital_energy, period1_fixed_point,
    period2_fixed_point, poincare_map, region_scan, return_map_jacobian, special_b, step_constants,
    Axis, Gait3DParams, LegParams, ModelParams, PendulumState, StepConstants,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        // NaN fails the check.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn model() -> ModelParams {
    ModelParams::new(10.0, 1.0).unwrap()
}

fn consts(t: f64) -> StepConstants {
    step_constants(t, &model()).unwrap()
}

fn constants() -> Check {
    let m = model();
    let g = special_b(&consts(0.3), &m).map_err(|e| e.to_string())?;
    for (name, got, want) in [
        ("T_c", m.t_c(), 0.3162),
        ("b_min", g.b_min, 0.1397),
        ("b_cp", g.b_cp, 0.3162),
        ("b_db", g.b_db, 0.4278),
        ("b_max", g.b_max, 0.7159),
    ] {
        ensure!(
            (got - want).abs() <= 5e-5,
            "{name} = {got}, expected {want} ± 5e-5"
        );
    }
    Ok(())
}

/// Last-step lengths of a 20-step 2D walk from rest.
fn simulated_lengths(a1: f64, a2: f64) -> (f64, f64) {
    let legs = [LegParams::new(a1, 0.3), LegParams::new(a2, 0.3)];
    let trace = simulate_2d(
        &WorldState::at_rest(),
        legs,
        0.3,
        20,
        &[],
        &SimOptions::default(),
        &model(),
    )
    .unwrap();
    let m = measure_gait(&trace).unwrap();
    let n = m.step_lengths.len();
    // step 19 is leg 1, step 20 is leg 2
    (m.step_lengths[n - 2], m.step_lengths[n - 1])
}

fn gait_golden_values() -> Check {
    let (m, sc) = (model(), consts(0.3));
    let near = |got: f64, want: f64| (got - want).abs() <= 0.01;

    let p1 = period1_fixed_point(&LegParams::new(0.2, 0.3), &sc, &m).map_err(|e| e.to_string())?;
    let d = p1.step_lengths.as_vec()[0];
    ensure!(near(d, -0.35), "case 1: d = {d}");

    let (d1, d2) = inplace_step_length(0.2, 0.3, &sc, &m).map_err(|e| e.to_string())?;
    ensure!(near(d1, 0.69) && near(d2, -0.69), "case 2: ({d1}, {d2})");

    for (case, a2, want) in [(3, 0.4, (-0.87, -0.18)), (4, -0.4, (1.2, -0.86))] {
        let p2 = period2_fixed_point(&LegParams::new(0.2, 0.3), &LegParams::new(a2, 0.3), &sc, &m)
            .map_err(|e| e.to_string())?;
        let d = p2.step_lengths.as_vec();
        ensure!(
            near(d[0], want.0) && near(d[1], want.1),
            "case {case}: ({}, {})",
            d[0],
            d[1]
        );
    }

    // the simulated walks settle onto the same gaits
    for (a1, a2, want) in [
        (0.2, 0.2, (-0.35, -0.35)),
        (0.2, -0.2, (0.69, -0.69)),
        (0.2, 0.4, (-0.87, -0.18)),
        (0.2, -0.4, (1.2, -0.86)),
    ] {
        let (d1, d2) = simulated_lengths(a1, a2);
        ensure!(
            near(d1, want.0) && near(d2, want.1),
            "simulated ({a1}, {a2}): ({d1}, {d2})"
        );
    }
    Ok(())
}

fn fig5_trace(b: f64) -> Vec<f64> {
    let init = WorldState::relative(Vec2::new(-0.3, 0.0), Vec2::new(2.0, 0.0));
    simulate_2d(
        &init,
        [LegParams::new(0.0, b); 2],
        0.3,
        20,
        &[],
        &SimOptions::sampled(100.0),
        &model(),
    )
    .unwrap()
    .touchdown_velocities_x()
}

fn fig5_behaviours() -> Check {
    let m = model();
    let g = special_b(&consts(0.3), &m).unwrap();

    let v = fig5_trace(g.b_min);
    for (k, vk) in v.iter().enumerate().skip(1) {
        ensure!(
            (vk.abs() - v[0].abs()).abs() < 1e-6,
            "b_min: |v{k}| = {vk} vs {}",
            v[0]
        );
    }

    let v = fig5_trace(g.b_cp);
    let ratio = (-0.3 / m.t_c()).exp();
    for (k, w) in v.windows(2).enumerate() {
        ensure!(w[1] > 0.0 && w[0] > 0.0, "b_cp: sign change at step {k}");
        ensure!(
            (w[1] / w[0] - ratio).abs() < 1e-6,
            "b_cp: ratio {} at step {k}, expected {ratio}",
            w[1] / w[0]
        );
    }

    let v = fig5_trace(g.b_db);
    ensure!(
        (v[0] - 1.9283).abs() < 1e-4,
        "b_db: first touchdown {}",
        v[0]
    );
    for (k, vk) in v.iter().enumerate().skip(1) {
        ensure!(vk.abs() < 1e-9, "b_db: v{k} = {vk}");
    }

    let v = fig5_trace(0.5);
    let l2 = consts(0.3).c_t - 0.5 * consts(0.3).s_t / m.t_c();
    for (k, w) in v.windows(2).enumerate() {
        ensure!(w[0] * w[1] < 0.0, "b=0.5: no sign flip at step {k}");
        ensure!(
            ((w[1] / w[0]).abs() - l2.abs()).abs() < 1e-6,
            "b=0.5: |ratio| {} vs |λ₂| {}",
            (w[1] / w[0]).abs(),
            l2.abs()
        );
    }
    ensure!(v[19].abs() < v[0].abs(), "b=0.5: no decay");

    let v = fig5_trace(g.b_max);
    for (k, w) in v.windows(2).enumerate() {
        ensure!(w[0] * w[1] < 0.0, "b_max: no sign flip at step {k}");
        ensure!(
            (w[1].abs() - v[0].abs()).abs() < 1e-6,
            "b_max: |v| drifted to {}",
            w[1]
        );
    }
    Ok(())
}

fn oracle_equivalence() -> Check {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(0x11f0);
    for i in 0..1000 {
        let s = PendulumState::new(rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0));
        let t = rng.gen_range(0.0..=0.5);
        let closed = flow(s, t, &m).unwrap();
        let rk = flow_numeric(s, t, &m, 1e-5).unwrap();
        ensure!(
            (closed.x - rk.x).abs() < 1e-6 && (closed.v - rk.v).abs() < 1e-6,
            "case {i}: closed {closed:?} vs rk4 {rk:?}"
        );
        let drift = (orbital_energy(closed, &m) - orbital_energy(s, &m)).abs();
        ensure!(drift < 1e-9, "case {i}: energy drift {drift}");
    }
    Ok(())
}

fn fd_jacobian(q: PendulumState, leg: &LegParams, sc: &StepConstants) -> [[f64; 2]; 2] {
    let m = model();
    let h = 1e-6;
    let f = |q| poincare_map(q, leg, sc, &m);
    let px = f(PendulumState::new(q.x + h, q.v));
    let mx = f(PendulumState::new(q.x - h, q.v));
    let pv = f(PendulumState::new(q.x, q.v + h));
    let mv = f(PendulumState::new(q.x, q.v - h));
    [
        [(px.x - mx.x) / (2.0 * h), (pv.x - mv.x) / (2.0 * h)],
        [(px.v - mx.v) / (2.0 * h), (pv.v - mv.v) / (2.0 * h)],
    ]
}

/// One step via closed-form flow plus the placement law, independent of
/// the return-map code path.
fn step_by_flow(q: PendulumState, leg: &LegParams, t: f64) -> PendulumState {
    let minus = flow(q, t, &model()).unwrap();
    PendulumState::new(-lfpc_2d(minus.v, leg).x_f, minus.v)
}

fn return_map_properties() -> Check {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(0x2e7);
    for set in 0..100 {
        let t = rng.gen_range(0.1..0.6);
        let sc = consts(t);
        let g = special_b(&sc, &m).unwrap();
        let b1 = rng.gen_range(g.b_min..g.b_max);
        let b2 = rng.gen_range(g.b_min..g.b_max);
        let l1 = LegParams::new(rng.gen_range(-0.5..0.5), b1);
        let l2 = LegParams::new(rng.gen_range(-0.5..0.5), b2);

        let j = return_map_jacobian(&l1, &sc, &m);
        ensure!(
            j.determinant().abs() < 1e-9,
            "set {set}: det {}",
            j.determinant()
        );
        let mut previous: Option<[[f64; 2]; 2]> = None;
        for _ in 0..5 {
            let q = PendulumState::new(rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0));
            let fd = fd_jacobian(q, &l1, &sc);
            for r in 0..2 {
                for c in 0..2 {
                    ensure!(
                        (fd[r][c] - j.0[r][c]).abs() < 1e-6,
                        "set {set}: J[{r}][{c}] analytic {} vs fd {}",
                        j.0[r][c],
                        fd[r][c]
                    );
                    if let Some(p) = previous {
                        ensure!(
                            (p[r][c] - fd[r][c]).abs() < 1e-6,
                            "set {set}: J depends on state"
                        );
                    }
                }
            }
            previous = Some(fd);
        }

        let p1 = period1_fixed_point(&l1, &sc, &m).map_err(|e| format!("set {set}: {e}"))?;
        let q = step_by_flow(p1.state(), &l1, t);
        ensure!(
            (q.x - p1.x0).abs() < 1e-9 && (q.v - p1.v0).abs() < 1e-9,
            "set {set}: period-1 closure off by ({}, {})",
            q.x - p1.x0,
            q.v - p1.v0
        );
        let p2 = period2_fixed_point(&l1, &l2, &sc, &m).map_err(|e| format!("set {set}: {e}"))?;
        let q = step_by_flow(step_by_flow(p2.state(), &l1, t), &l2, t);
        ensure!(
            (q.x - p2.x0).abs() < 1e-9 && (q.v - p2.v0).abs() < 1e-9,
            "set {set}: period-2 closure off by ({}, {})",
            q.x - p2.x0,
            q.v - p2.v0
        );
    }
    Ok(())
}

fn stability_region() -> Check {
    let m = model();
    let grid = region_scan(Axis::new(0.1, 0.6, 50), Axis::new(0.0, 1.0, 50), &m)
        .map_err(|e| e.to_string())?;
    let init = WorldState::relative(Vec2::new(-0.3, 0.0), Vec2::new(2.0, 0.0));
    let a = 0.1;
    let (mut checked, mut skipped) = (0, 0);
    for cell in &grid.cells {
        if (cell.lambda2.abs() - 1.0).abs() < 1e-6 {
            skipped += 1;
            continue;
        }
        let sc = consts(cell.t);
        let leg = LegParams::new(a, cell.b);
        let v_star = period1_fixed_point(&leg, &sc, &m)
            .map_err(|e| format!("T={} b={}: {e}", cell.t, cell.b))?
            .v0;
        let trace = simulate_2d(&init, [leg; 2], cell.t, 50, &[], &SimOptions::default(), &m)
            .map_err(|e| e.to_string())?;
        let v = trace.touchdown_velocities_x();
        let first = (v[0] - v_star).abs();
        let last = (v[49] - v_star).abs();
        let curve = grid
            .curves
            .iter()
            .find(|c| c.t == cell.t)
            .expect("curve per row");
        let inside = cell.b > curve.b_min && cell.b < curve.b_max;
        if inside {
            ensure!(
                last < first,
                "T={} b={} inside the criterion but deviation grew {first} -> {last}",
                cell.t,
                cell.b
            );
        } else {
            ensure!(
                last > first,
                "T={} b={} outside the criterion but deviation shrank {first} -> {last}",
                cell.t,
                cell.b
            );
        }
        checked += 1;
    }
    ensure!(checked + skipped == 2500, "grid size {}", checked + skipped);
    let widths: Vec<f64> = grid.curves.iter().map(|c| c.b_max - c.b_min).collect();
    for w in widths.windows(2) {
        ensure!(w[1] < w[0], "width not decreasing: {} then {}", w[0], w[1]);
    }
    Ok(())
}

fn gait3(a_l: f64, a_w: f64, theta: f64, b: f64) -> Gait3DParams {
    Gait3DParams {
        a_l,
        a_w,
        theta,
        b,
        period: 0.3,
    }
}

fn run3d(initial: &WorldState, schedule: &[GaitChange], n: usize) -> WalkTrace {
    simulate_3d(
        initial,
        schedule,
        n,
        &[],
        &SimOptions::sampled(100.0),
        &model(),
    )
    .unwrap()
}

fn rotate(theta: f64, p: Vec2) -> Vec2 {
    let (s, c) = theta.sin_cos();
    Vec2::new(c * p.x + s * p.y, -s * p.x + c * p.y)
}

fn structure_3d() -> Check {
    let m = model();
    let b_db = special_b(&consts(0.3), &m).unwrap().b_db;

    // θ = 0 with no lateral offset is the 2D walk on the y axis
    let init3 = WorldState::relative(Vec2::new(0.0, -0.1), Vec2::new(0.0, 0.8));
    let init2 = WorldState::relative(Vec2::new(-0.1, 0.0), Vec2::new(0.8, 0.0));
    let t3 = run3d(
        &init3,
        &[GaitChange {
            from_step: 0,
            gait: gait3(0.2, 0.0, 0.0, 0.5),
        }],
        20,
    );
    let t2 = simulate_2d(
        &init2,
        [LegParams::new(-0.2, 0.5); 2],
        0.3,
        20,
        &[],
        &SimOptions::sampled(100.0),
        &m,
    )
    .unwrap();
    for (s3, s2) in t3.steps.iter().zip(&t2.steps) {
        ensure!(
            s3.before.y == s2.before.x && s3.after.y == s2.after.x,
            "step {} differs",
            s3.index
        );
        ensure!(
            s3.footprint.y == s2.footprint.x,
            "footprint {} differs",
            s3.index
        );
        ensure!(
            s3.footprint.x == 0.0 && s3.before.x.v == 0.0,
            "x axis moved"
        );
    }
    ensure!(t3.samples.len() == t2.samples.len(), "sample counts differ");
    for (a, b) in t3.samples.iter().zip(&t2.samples) {
        ensure!(
            a.t == b.t && a.com.y == b.com.x && a.vel.y == b.vel.x,
            "sample at {} differs",
            a.t
        );
        ensure!(a.com.x == 0.0, "x axis moved");
    }

    // a constant heading is the θ = 0 walk rotated
    let v0 = Vec2::new(0.3, 0.6);
    let base_init = WorldState::relative(Vec2::new(0.05, -0.1), v0);
    let base = run3d(
        &base_init,
        &[GaitChange {
            from_step: 0,
            gait: gait3(0.2, 0.1, 0.0, b_db),
        }],
        20,
    );
    for theta in [0.3, -1.2, PI / 4.0, 2.5] {
        let init = WorldState::relative(rotate(theta, base_init.com), rotate(theta, v0));
        let turned = run3d(
            &init,
            &[GaitChange {
                from_step: 0,
                gait: gait3(0.2, 0.1, theta, b_db),
            }],
            20,
        );
        for (r, b) in turned.steps.iter().zip(&base.steps) {
            let want = rotate(theta, b.footprint);
            ensure!(
                (r.footprint - want).norm() < 1e-9,
                "θ={theta}: footprint {} off by {}",
                r.index,
                (r.footprint - want).norm()
            );
        }
        for (r, b) in turned.samples.iter().zip(&base.samples) {
            let want = rotate(theta, b.com);
            ensure!(
                (r.com - want).norm() < 1e-9,
                "θ={theta}: CoM at t={} off",
                r.t
            );
        }
    }

    // circle walk: +10° every two steps
    let schedule: Vec<GaitChange> = (0..20)
        .map(|j| GaitChange {
            from_step: 2 * j,
            gait: gait3(0.2, 0.1, (10.0 * j as f64).to_radians(), b_db),
        })
        .collect();
    let trace = run3d(&WorldState::at_rest(), &schedule, 40);
    let strides = stride_headings(&trace);
    // strides between footprints of the same leg, aligned with the schedule
    let aligned: Vec<f64> = strides.iter().copied().skip(1).step_by(2).collect();
    ensure!(aligned.len() >= 18, "only {} strides", aligned.len());
    for (k, w) in aligned.windows(2).enumerate().skip(2) {
        let turn = (w[1] - w[0] + PI).rem_euclid(2.0 * PI) - PI;
        ensure!(
            (turn.to_degrees() - 10.0).abs() <= 0.5,
            "circle walk: heading step {k} turned {}°",
            turn.to_degrees()
        );
    }
    Ok(())
}

fn step_length_proportionality() -> Check {
    let m = model();
    let b_db = special_b(&consts(0.3), &m).unwrap().b_db;
    let settled = |a_l: f64| {
        let trace = run3d(
            &WorldState::at_rest(),
            &[GaitChange {
                from_step: 0,
                gait: gait3(a_l, 0.1, 0.0, b_db),
            }],
            20,
        );
        let g = measure_gait(&trace).unwrap();
        (g.step_lengths[19], g.step_lengths[18], g.step_widths[19])
    };
    let (d1, d1_prev, _) = settled(0.2);
    let (d2, _, _) = settled(0.4);
    ensure!(
        (d1 - d1_prev).abs() < 1e-9,
        "step length not settled: {d1_prev} then {d1}"
    );
    ensure!(
        (d2 - 2.0 * d1).abs() < 1e-6,
        "a_l=0.4 gives {d2}, a_l=0.2 gives {d1}"
    );
    Ok(())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("constants (T_c, b_min, b_cp, b_db, b_max)", constants),
        ("gait golden values (cases 1-4)", gait_golden_values),
        ("speed curves for five b values", fig5_behaviours),
        (
            "closed-form vs RK4 oracle, energy conservation",
            oracle_equivalence,
        ),
        (
            "return map Jacobian, determinant, fixed-point closure",
            return_map_properties,
        ),
        ("stability region 50x50 simulation sweep", stability_region),
        (
            "3D structure: embedding, rotation, circle walk",
            structure_3d,
        ),
        (
            "step length proportional to a_l",
            step_length_proportionality,
        ),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(()) => println!("PASS  {name}  ({ms:.1} ms)"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}  ({ms:.1} ms): {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
