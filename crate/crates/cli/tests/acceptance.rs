//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skatesim::reward::{style_reward, FootState};
use skatesim::transition::{pushing_reference_pose, steering_reference_pose};
use skatesim::{
    bezier_point, construct_truck_rotation, eval_bezier, eval_transition, evaluate_phase_rewards,
    evaluate_regularization, identify, identify_from_peaks, plan_transition,
    simulate_constant_lean, simulate_free_decay, slerp, steering_from_tilt, tilt_reference,
    wrap_angle, BoardState, ControlPointPolicy, HumanoidSnapshot, JointLimits, PeakDetection,
    PhaseCommands, PhaseKind, PhaseSchedule, Quat, RewardConfig, SteeringCommand, TiltModel,
    TruckGeometry, Vec3,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    ((value - target) / target).abs() <= rel
}

fn board_identification(inputs: (f64, f64, f64, f64), k: f64, d: f64) -> Outcome {
    let (inertia, period, phi1, phi2) = inputs;
    let r = identify_from_peaks(phi1, phi2, period, inertia).map_err(|e| e.to_string())?;
    ensure(within(r.stiffness, k, 0.01), || {
        format!("k = {} vs {k}", r.stiffness)
    })?;
    ensure(within(r.damping, d, 0.01), || {
        format!("d = {} vs {d}", r.damping)
    })?;
    Ok(format!("k = {:.4}, d = {:.4}", r.stiffness, r.damping))
}

fn criterion_1() -> Outcome {
    board_identification((7.15e-3, 0.107, 0.614, 0.0108), 34.835, 0.540)
}

fn criterion_2() -> Outcome {
    board_identification((8.70e-3, 0.185, 0.583, 0.0081), 14.677, 0.402)
}

fn criterion_3() -> Outcome {
    let (mut worst_sigma, mut worst_residual) = (0.0f64, 0.0f64);
    for i in 0..100 {
        for j in 0..100 {
            let rake = 0.1 + 1.3 * (i as f64 + 0.5) / 100.0;
            let gamma = -0.2 + 0.4 * (j as f64 + 0.5) / 100.0;
            let g = TruckGeometry::default()
                .with_rake(rake)
                .map_err(|e| e.to_string())?;
            let closed = steering_from_tilt(gamma, &g).map_err(|e| e.to_string())?;
            let c = construct_truck_rotation(gamma, &g).map_err(|e| e.to_string())?;
            let independent = oracle::steering(rake, gamma, g.truck_height, g.half_width);
            worst_sigma = worst_sigma
                .max((closed - c.steering_angle()).abs())
                .max((closed - independent).abs());
            worst_residual = worst_residual.max(c.contact_residual.abs());
        }
    }
    ensure(worst_sigma < 1e-9, || {
        format!("max steering gap {worst_sigma:e}")
    })?;
    ensure(worst_residual < 1e-12, || {
        format!("max contact residual {worst_residual:e}")
    })?;
    Ok(format!(
        "max |dsigma| = {worst_sigma:.1e}, max residual = {worst_residual:.1e}"
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let detect = PeakDetection {
        noise_floor: 1e-12,
        ..PeakDetection::default()
    };
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let zeta: f64 = rng.gen_range(0.05..0.9);
        let wn = rng.gen_range(20.0..=100.0);
        let inertia = rng.gen_range(5e-3..=1.5e-2);
        let m: TiltModel<f64> =
            TiltModel::from_modal(inertia, wn, zeta).map_err(|e| e.to_string())?;
        let period = m.damped_period().ok_or("overdamped model")?;
        let trace =
            simulate_free_decay(&m, 0.15, 2.5 * period, 0.002).map_err(|e| e.to_string())?;
        let id = identify(&trace, inertia, &detect).map_err(|e| e.to_string())?;
        let ek = ((id.stiffness - m.stiffness) / m.stiffness).abs();
        let ed = ((id.damping - m.damping) / m.damping).abs();
        ensure(ek <= 0.02 && ed <= 0.02, || {
            format!("zeta {zeta:.3}, wn {wn:.1}: k err {ek:.4}, d err {ed:.4}")
        })?;
        worst = worst.max(ek).max(ed);
    }
    Ok(format!("worst relative error {:.3}%", 100.0 * worst))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 100 {
        let l: f64 = rng.gen_range(0.3..1.0);
        let rake: f64 = rng.gen_range(0.2..1.3);
        let v: f64 = rng.gen_range(0.5..3.0);
        let dpsi: f64 = rng.gen_range(-1.0..1.0);
        let dt: f64 = rng.gen_range(0.5..4.0);
        if (l * dpsi / (v * dt * rake.tan())).abs() >= 0.2f64.sin() {
            continue;
        }
        let g = TruckGeometry::new(rake, 0.09, 0.07, l).map_err(|e| e.to_string())?;
        let cmd = SteeringCommand::new(0.0, dt, 0.3, 0.2).map_err(|e| e.to_string())?;
        let gamma = tilt_reference(dpsi, v, &cmd, &g);
        let steps = 1000;
        let traj = simulate_constant_lean(
            BoardState::gliding(v, 0.0),
            gamma,
            &g,
            dt / steps as f64,
            steps,
        )
        .map_err(|e| e.to_string())?;
        let achieved: f64 = traj
            .samples()
            .windows(2)
            .map(|w| wrap_angle(w[1].state.heading - w[0].state.heading))
            .sum();
        let rel = ((achieved - dpsi) / dpsi).abs();
        ensure(rel <= 0.01, || format!("dpsi {dpsi}: achieved {achieved}"))?;
        worst = worst.max(rel);
        checked += 1;
    }
    Ok(format!("worst relative heading error {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    for (rake, l, v, gamma) in [
        (0.785f64, 0.5, 1.0, 0.2),
        (0.5, 0.8, 2.5, -0.1),
        (1.2, 0.4, 0.6, 0.05),
        (0.3, 0.6, 1.5, 0.15),
    ] {
        let g = TruckGeometry::new(rake, 0.09, 0.07, l).map_err(|e| e.to_string())?;
        let radius = l / steering_from_tilt(gamma, &g)
            .map_err(|e| e.to_string())?
            .tan()
            .abs();
        let psi0: f64 = 0.3;
        let traj = simulate_constant_lean(BoardState::gliding(v, psi0), gamma, &g, 0.002, 5000)
            .map_err(|e| e.to_string())?;
        let side = gamma.signum();
        let (cx, cy) = (-side * radius * psi0.sin(), side * radius * psi0.cos());
        for s in traj.samples() {
            let r = ((s.state.x - cx).powi(2) + (s.state.y - cy).powi(2)).sqrt();
            worst = worst.max(((r - radius) / radius).abs());
        }
    }
    ensure(worst <= 0.005, || {
        format!("radial deviation {:.4}%", 100.0 * worst)
    })?;
    Ok(format!("max radial deviation {worst:.1e}"))
}

fn criterion_7() -> Outcome {
    let s = PhaseSchedule::<f64>::default();
    let mut counts = [0i64; 4];
    for i in 0..300 {
        let kind = s
            .phase_state(i as f64 / 50.0)
            .map_err(|e| e.to_string())?
            .kind;
        counts[PhaseKind::ORDER.iter().position(|k| *k == kind).unwrap()] += 1;
    }
    let want = [120, 30, 135, 15];
    ensure(
        counts.iter().zip(want).all(|(c, w)| (c - w).abs() <= 1),
        || format!("{counts:?}"),
    )?;
    Ok(format!("push/mount/steer/dismount = {counts:?}"))
}

fn criterion_8() -> Outcome {
    let cfg = RewardConfig::default();
    let err = |e: skatesim::Error| e.to_string();
    let board = BoardState {
        speed: 1.0,
        heading: 0.2,
        tilt: 0.05,
        ..BoardState::at_rest()
    };
    let cmd = PhaseCommands {
        v_cmd: 1.0,
        psi_target: 0.2,
        gamma_ref: 0.05,
    };
    let mut h = HumanoidSnapshot::at_rest();
    let on_board = |p| FootState {
        position: p,
        on_ground: false,
        on_board: true,
        air_time: 0.0,
    };
    h.left_foot = on_board(cfg.markers.rear);
    h.right_foot = on_board(cfg.markers.front);
    let push = evaluate_phase_rewards(PhaseKind::Pushing, &h, &board, &cmd, None, 0.0, &cfg)
        .map_err(err)?;
    let steer = evaluate_phase_rewards(PhaseKind::Steering, &h, &board, &cmd, None, 0.0, &cfg)
        .map_err(err)?;
    let plan = plan_transition(
        &pushing_reference_pose(),
        &steering_reference_pose(),
        (2.4, 3.0),
        &ControlPointPolicy::default(),
    )
    .map_err(err)?;
    h.key_body_poses = eval_transition(&plan, 2.55).map_err(err)?;
    let trans = evaluate_phase_rewards(
        PhaseKind::MountTransition,
        &h,
        &board,
        &cmd,
        Some(&plan),
        2.55,
        &cfg,
    )
    .map_err(err)?;
    let reg =
        evaluate_regularization(&h, [true; 4], &JointLimits::symmetric(2.5), &cfg).map_err(err)?;
    let checks = [
        ("linear_velocity", push.get("linear_velocity"), 3.0),
        ("heading_tracking", steer.get("heading_tracking"), 5.0),
        ("board_tilt_tracking", steer.get("board_tilt_tracking"), 4.0),
        ("keybody_position", trans.get("keybody_position"), 10.0),
        (
            "keybody_orientation",
            trans.get("keybody_orientation"),
            10.0,
        ),
        ("wheel_contact", reg.get("wheel_contact"), 0.5),
    ];
    for (name, got, want) in checks {
        ensure(got == Some(want), || {
            format!("{name} = {got:?}, expected {want}")
        })?;
    }
    for alpha in [1.0, 2.0, 5.0] {
        ensure(style_reward(1.0, alpha) == alpha, || {
            format!("style_reward(1, {alpha})")
        })?;
        ensure(style_reward(0.0, alpha) == 0.75 * alpha, || {
            format!("style_reward(0, {alpha})")
        })?;
    }
    Ok("all zero-error terms equal their weights; style endpoints exact".into())
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rand_point = |rng: &mut ChaCha8Rng| {
        Vec3::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        )
    };
    for _ in 0..200 {
        let pts: Vec<_> = (0..4).map(|_| rand_point(&mut rng)).collect();
        let (t0, tf) = (rng.gen_range(-3.0..3.0), rng.gen_range(3.5..6.0));
        let a = eval_bezier(&pts, t0, t0, tf).map_err(|e| e.to_string())?;
        let b = eval_bezier(&pts, tf, t0, tf).map_err(|e| e.to_string())?;
        ensure(a == pts[0] && b == pts[3], || {
            "Bézier endpoint mismatch".into()
        })?;
        ensure(bezier_point(&pts, 0.0).unwrap() == pts[0], || {
            "s = 0 not exact".into()
        })?;
    }
    let q90 = Quat::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2);
    let q = slerp(Quat::identity(), q90, 0.5);
    let want = [0.923_879_5, 0.0, 0.0, 0.382_683_4];
    let got = [q.w, q.x, q.y, q.z];
    ensure(
        got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 1e-7),
        || format!("slerp midpoint {got:?}"),
    )?;

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut rq = || {
            Quat {
                w: rng.gen_range(-1.0..1.0),
                x: rng.gen_range(-1.0..1.0),
                y: rng.gen_range(-1.0..1.0),
                z: rng.gen_range(-1.0..1.0),
            }
            .normalized()
        };
        let (a, b): (Quat<f64>, Quat<f64>) = (rq(), rq());
        worst = worst.max((slerp(a, b, rng.gen_range(0.0..=1.0)).norm() - 1.0).abs());
    }
    let plan = plan_transition(
        &pushing_reference_pose(),
        &steering_reference_pose(),
        (0.0, 0.6),
        &ControlPointPolicy::default(),
    )
    .map_err(|e| e.to_string())?;
    for i in 0..=60 {
        for p in eval_transition(&plan, 0.01 * i as f64).map_err(|e| e.to_string())? {
            worst = worst.max((p.orientation.norm() - 1.0).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("quaternion norm error {worst:e}"))?;
    Ok(format!(
        "slerp midpoint ({:.7}, 0, 0, {:.7}); max norm error {worst:.1e}",
        q.w, q.z
    ))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_skatesim"))
            .arg("simulate")
            .arg(fixture("turn.cfg"))
            .arg("--output-dir")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        let read = |f: &str| std::fs::read(out.join("turn").join(f)).map_err(|e| e.to_string());
        outputs.push((read("trajectory.csv")?, read("rewards.csv")?));
    }
    ensure(outputs[0] == outputs[1], || {
        "CSV outputs differ between runs".into()
    })?;
    ensure(!outputs[0].0.is_empty() && !outputs[0].1.is_empty(), || {
        "empty CSV output".into()
    })?;
    Ok(format!(
        "trajectory {} bytes, rewards {} bytes identical",
        outputs[0].0.len(),
        outputs[0].1.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "identification, board 1",
            criterion_1,
            Some(Duration::from_millis(1)),
        ),
        (
            "identification, board 2",
            criterion_2,
            Some(Duration::from_millis(1)),
        ),
        (
            "kinematics oracle equivalence",
            criterion_3,
            Some(Duration::from_secs(1)),
        ),
        (
            "sysid round trip",
            criterion_4,
            Some(Duration::from_secs(10)),
        ),
        (
            "steering consistency",
            criterion_5,
            Some(Duration::from_secs(5)),
        ),
        ("constant-lean arc", criterion_6, None),
        ("phase partition", criterion_7, None),
        ("reward calibration", criterion_8, None),
        ("transition geometry", criterion_9, None),
        ("determinism", criterion_10, None),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(limit)) = (&outcome, limit) {
            if elapsed > *limit {
                outcome = Err(format!("{detail}; took {elapsed:?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL  {:>2}. {name}: {why} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
