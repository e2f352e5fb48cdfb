use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use pomdp_coder::belief::{Filter, FilterConfig};
use pomdp_coder::envs::minigrid::{self, Mg};
use pomdp_coder::envs::{tiger, Env};
use pomdp_coder::harness::agents::{Agent, PlanningAgent};
use pomdp_coder::harness::{discounted_return, run_episode};
use pomdp_coder::model::WorldModel;
use pomdp_coder::planner::{plan, PlannerConfig};

const TIGER_FILTER: FilterConfig = FilterConfig { n_particles: 50, max_rejuvenation: 250_000, rollouts: 5 };

fn posterior(k: i32) -> f64 {
    let a = 0.85f64.powi(k);
    a / (a + 0.15f64.powi(k))
}

#[test]
fn tiger_filter_tracks_the_bayes_posterior() {
    let env = Env::new("tiger").unwrap();
    let truth: Arc<dyn WorldModel> = env.ground_truth().clone();
    let tol = |p: f64| 3.0 * (p * (1.0 - p) / 50.0).sqrt();
    for seed in 0..20 {
        let mut f = Filter::new(truth.clone(), TIGER_FILTER, &tiger::obs(tiger::NONE), seed).unwrap();
        for k in 1..=3 {
            f.update(tiger::LISTEN as i64, &tiger::obs(tiger::HEAR_LEFT)).unwrap();
            let p = f.belief().prob(|s| tiger::tiger(s) == 0);
            assert!((p - posterior(k)).abs() <= tol(posterior(k)), "seed {seed} k {k}: {p}");
        }
    }
}

#[test]
fn tiger_planner_listens_first_and_opens_away_when_confident() {
    let env = Env::new("tiger").unwrap();
    let truth: Arc<dyn WorldModel> = env.ground_truth().clone();
    let cfg = PlannerConfig::classical();
    for seed in 0..5 {
        let mut f = Filter::new(truth.clone(), TIGER_FILTER, &tiger::obs(tiger::NONE), seed).unwrap();
        assert_eq!(plan(f.belief(), &*truth, &cfg, seed).unwrap().action, tiger::LISTEN);
        for _ in 0..4 {
            f.update(tiger::LISTEN as i64, &tiger::obs(tiger::HEAR_RIGHT)).unwrap();
        }
        assert!(f.belief().prob(|s| tiger::tiger(s) == 1) > 0.95);
        assert_eq!(plan(f.belief(), &*truth, &cfg, seed).unwrap().action, tiger::OPEN_LEFT);
    }
}

/// Breadth-first search over (x, y, dir) in a wall-free interior.
fn bfs_steps(m: &Mg) -> usize {
    let start = (m.x, m.y, m.dir);
    let mut seen = HashSet::from([start]);
    let mut q = VecDeque::from([(start, 0)]);
    while let Some(((x, y, d), n)) = q.pop_front() {
        if m.cell(x, y) == minigrid::GOAL {
            return n;
        }
        let (dx, dy) = [(0, -1), (1, 0), (0, 1), (-1, 0)][d as usize];
        let fwd = if m.cell(x + dx, y + dy) == minigrid::WALL { (x, y, d) } else { (x + dx, y + dy, d) };
        for next in [(x, y, (d + 3) % 4), (x, y, (d + 1) % 4), fwd] {
            if seen.insert(next) {
                q.push_back((next, n + 1));
            }
        }
    }
    usize::MAX
}

#[test]
fn empty_grid_oracle_takes_the_shortest_path() {
    let mut env = Env::new("minigrid-empty").unwrap();
    let truth: Arc<dyn WorldModel> = env.ground_truth().clone();
    let filter = FilterConfig { n_particles: 10, max_rejuvenation: 500_000, rollouts: 1 };
    let (s0, _) = env.reset(0);
    let optimal = bfs_steps(&Mg::from_value(&s0));
    assert_eq!(optimal, 5);
    for seed in 0..3 {
        let mut agent = PlanningAgent::new(truth.clone(), filter, PlannerConfig::grid());
        let ep = run_episode(&mut env, &mut agent as &mut dyn Agent, 0.98, 100, seed);
        assert!(ep.reached_done());
        assert_eq!(ep.steps.len(), optimal, "seed {seed}");
        assert!((ep.ret - discounted_return(&ep.rewards(), 0.98)).abs() < 1e-12);
        assert!((ep.ret - 0.98f64.powi(optimal as i32 - 1)).abs() < 1e-12);
    }
}
