use std::f64::consts::FRAC_PI_2;

use cohort::harness::io::trajectory_to_csv;
use cohort::world::Pose;
use cohort::{run_simulation, SimParams, Simulation};

fn small(n: usize, steps: usize, seed: u64) -> SimParams {
    let mut p = SimParams::default();
    p.n_agents = n;
    p.steps = steps;
    p.r_init = 60.0;
    p.seed = seed;
    p
}

#[test]
fn worker_count_does_not_change_trajectory() {
    let p = small(12, 60, 9);
    let (_, one) = run_simulation(&p, Some(1)).unwrap();
    let (_, many) = run_simulation(&p, Some(8)).unwrap();
    assert_eq!(trajectory_to_csv(&one), trajectory_to_csv(&many));
}

#[test]
fn seed_changes_trajectory() {
    let (_, a) = run_simulation(&small(5, 10, 1), Some(1)).unwrap();
    let (_, b) = run_simulation(&small(5, 10, 2), Some(1)).unwrap();
    assert_ne!(trajectory_to_csv(&a), trajectory_to_csv(&b));
}

#[test]
fn tangential_pair_holds_spacing() {
    let mut p = small(2, 500, 0);
    for (k, v) in [
        ("sigma_phi", "0.01"),
        ("sigma_gamma", "0.01"),
        ("true_sigma_phi", "0"),
        ("true_sigma_gamma", "0"),
        ("Q", "0.01"),
    ] {
        p.set(k, v).unwrap();
    }
    let half = 0.5 * p.d0;
    let poses = vec![Pose::new(-half, 0.0, FRAC_PI_2), Pose::new(half, 0.0, FRAC_PI_2)];
    let mut sim = Simulation::with_poses(&p, poses).unwrap();
    let (lo, hi) = (0.95 * p.d0, 1.05 * p.d0);
    for step in 0..500 {
        sim.step().unwrap();
        let w = &sim.world().poses;
        let d = (w[0].x - w[1].x).hypot(w[0].y - w[1].y);
        assert!(d > lo && d < hi, "step {step}: distance {d}");
    }
}

#[test]
fn explicit_poses_must_match_agent_count() {
    let p = small(3, 1, 0);
    assert!(Simulation::with_poses(&p, vec![Pose::new(0.0, 0.0, 0.0)]).is_err());
}

#[test]
fn record_reflects_trajectory() {
    let p = small(8, 40, 4);
    let (record, traj) = run_simulation(&p, None).unwrap();
    assert_eq!(traj.len(), 40);
    assert_eq!(traj.n_agents, 8);
    assert_eq!(record.metrics.eval_window, [20, 40]);
    for frame in &traj.frames {
        for a in &frame.actions {
            assert!(a.v >= 0.0 && a.v <= p.v_max);
            assert!(a.omega.abs() <= p.omega_max);
        }
    }
}

#[test]
fn full_scale_default_run_completes() {
    let p = SimParams::default();
    let (record, traj) = run_simulation(&p, None).unwrap();
    assert_eq!(traj.len(), p.steps);
    assert!(record.metrics.values().iter().all(|v| v.is_finite()));
    eprintln!("N={} T={} wall time {:.1}s", p.n_agents, p.steps, record.wall_time_s);
}
