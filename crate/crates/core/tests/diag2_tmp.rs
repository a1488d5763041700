//! Temporary: route-cost ground truth + trained-behavior dump (removed later).

use socnav::a2c::{rollout_greedy, train, TrainConfig};
use socnav::env::{EnvConfig, NavEnv, Status};
use socnav::scenario::{derive_seed, gen_hrsc_suite, Scenario};

/// Heading index that best matches an angle under 16-way discretization.
fn snap_action(angle: f64) -> usize {
    let tau = std::f64::consts::TAU;
    let a = ((angle % tau) + tau) % tau;
    ((a / (tau / 16.0)).round() as usize) % 16
}

/// Walks greedily toward a waypoint sequence, returning total reward.
fn run_waypoints(scenario: &Scenario, cfg: &EnvConfig<f64>, waypoints: &[[f64; 2]]) -> (f64, f64, Status, usize) {
    let mut env = NavEnv::new(scenario, cfg.clone()).unwrap();
    env.reset();
    let mut total = 0.0;
    let mut social = 0.0;
    let mut wp = 0usize;
    loop {
        let pos = env.agent_position();
        while wp < waypoints.len() {
            let d = ((waypoints[wp][0] - pos[0]).powi(2) + (waypoints[wp][1] - pos[1]).powi(2)).sqrt();
            if d < 0.5 {
                wp += 1;
            } else {
                break;
            }
        }
        let target = if wp < waypoints.len() { waypoints[wp] } else { scenario.goal };
        let angle = (target[1] - pos[1]).atan2(target[0] - pos[0]);
        let out = env.step(snap_action(angle)).unwrap();
        total += out.reward;
        social += out.breakdown.social_weighted;
        if out.status.is_terminal() {
            return (total, social, out.status, env.steps_taken());
        }
    }
}

#[test]
#[ignore]
fn diag_route_costs_and_behavior() {
    let suite = gen_hrsc_suite(11);
    let cfg = EnvConfig::<f64>::default();

    // ground-truth route costs on the first few scenarios
    for s in suite.iter().take(4) {
        let h = &s.humans[0];
        let dx = s.goal[0] - s.start[0];
        let dy = s.goal[1] - s.start[1];
        let len = s.straight_length();
        let (ux, uy) = (dx / len, dy / len);
        let (nx, ny) = (-uy, ux);
        // waypoints bracketing the human at lateral offset o
        let route = |o: f64| -> Vec<[f64; 2]> {
            vec![
                [h.x - 1.35 * ux + o * nx, h.y - 1.35 * uy + o * ny],
                [h.x + o * nx, h.y + o * ny],
                [h.x + 1.35 * ux + o * nx, h.y + 1.35 * uy + o * ny],
            ]
        };
        let (r_thru, s_thru, st_thru, n_thru) = run_waypoints(s, &cfg, &route(0.0));
        let (r_left, s_left, st_left, n_left) = run_waypoints(s, &cfg, &route(0.7));
        let (r_right, s_right, st_right, n_right) = run_waypoints(s, &cfg, &route(-0.7));
        // which lateral side is "front"?
        let side = (h.heading.cos() * nx + h.heading.sin() * ny).signum();
        println!(
            "{} (front is {}): through r={r_thru:.2} (soc {s_thru:.2}, {st_thru:?}, {n_thru}); left r={r_left:.2} (soc {s_left:.2}, {st_left:?}, {n_left}); right r={r_right:.2} (soc {s_right:.2}, {st_right:?}, {n_right})",
            s.id,
            if side > 0.0 { "left" } else { "right" },
        );
    }

    // trained full-model behavior on 10 scenarios
    let mut fronts = 0;
    let mut throughs = 0;
    for s in suite.iter().take(10) {
        let tc = TrainConfig { seed: derive_seed(11, &format!("hrsc/{}/full", s.id)), ..TrainConfig::default() };
        let out = train(s, &cfg, &tc).unwrap();
        let rec = rollout_greedy(&out.actor, s, &cfg).unwrap();
        let h = &s.humans[0];
        let min_d = rec
            .positions
            .iter()
            .map(|p| ((p[0] - h.x).powi(2) + (p[1] - h.y).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        let m = socnav::metrics::compute_metrics(&rec, s, &cfg);
        if m.front_pass == Some(true) {
            fronts += 1;
        }
        if min_d < 0.35 {
            throughs += 1;
        }
        println!(
            "  trained {}: {} closest {:.2} front={:?} social_sum {:.2} steps {}",
            s.id,
            m.status,
            min_d,
            m.front_pass,
            rec.social_raw_sum(),
            rec.n_steps()
        );
    }
    println!("trained: fronts {fronts}/10, walk-throughs {throughs}/10");
}
