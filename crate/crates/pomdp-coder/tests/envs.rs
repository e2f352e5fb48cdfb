use std::collections::HashMap;

use pomdp_coder::envs::minigrid::{self, Mg, Variant};
use pomdp_coder::envs::{collect_demos, rocksample, tiger, Env, Kind, ENV_IDS};
use pomdp_coder::model::WorldModel;
use pomdp_core::seed::{mix, rng};
use pomdp_core::Value;
use pps::{ComponentKind, NULL_ACTION};
use rand::Rng;

fn within_3se(hits: usize, n: usize, p: f64) -> bool {
    let se = (p * (1.0 - p) / n as f64).sqrt();
    (hits as f64 / n as f64 - p).abs() <= 3.0 * se + 1e-12
}

#[test]
fn every_registered_environment_loads() {
    for id in ENV_IDS {
        let mut env = Env::new(id).unwrap();
        let (s, o) = env.reset(1);
        let schema = &env.domain().schema;
        assert!(schema.validate_state(&s), "{id}");
        assert!(schema.validate_observation(&o), "{id}");
    }
}

/// Simulator outcomes must lie in the ground-truth support, with matching
/// frequencies, for states visited under a random policy.
#[test]
fn simulator_matches_ground_truth_programs() {
    for id in ENV_IDS {
        let mut env = Env::new(id).unwrap();
        let truth = env.ground_truth().clone();
        let dom = env.domain().clone();
        let n_actions = dom.schema.actions.len();
        let mut r = rng(5);
        let mut counts: HashMap<Vec<u8>, (Value, usize, HashMap<Vec<u8>, usize>)> = HashMap::new();
        let (s0, o0) = env.reset(0);
        let t0 = truth.support(ComponentKind::Initial, &[dom.empty_state.clone()]).unwrap();
        assert!(t0.contains(&s0), "{id} initial");
        let ot = truth.support(ComponentKind::Observation, &dom.inputs(ComponentKind::Observation, None, NULL_ACTION, Some(&s0)));
        assert!(ot.unwrap().contains(&o0), "{id} reset observation");
        let mut episode = 0;
        for _ in 0..2000 {
            if env.is_done() || env.t() >= 30 {
                episode += 1;
                env.reset(mix(99, episode));
            }
            let s = env.state().unwrap().clone();
            let a = r.random_range(0..n_actions);
            let st = env.step(a).unwrap();
            let tt = truth.transition_support(&s, a as i64).unwrap();
            assert!(tt.contains(&st.next_state), "{id} transition a={a}");
            let rt = truth.support(ComponentKind::Reward, &[s.clone(), Value::Int(a as i64), st.next_state.clone()]).unwrap();
            assert_eq!(rt.entries().len(), 1);
            assert_eq!(rt.entries()[0].0.as_reward_outcome(), Some((st.reward, st.done)), "{id} reward a={a}");
            assert!(truth.observation_prob(&st.next_state, a as i64, &st.observation).unwrap() > 0.0, "{id} obs a={a}");
            let mut key = st.next_state.encode();
            key.extend((a as u64).to_le_bytes());
            let e = counts.entry(key).or_insert_with(|| (st.next_state.clone(), a, HashMap::new()));
            *e.2.entry(st.observation.encode()).or_default() += 1;
        }
        // frequency check for stochastic observations
        for (s2, a, obs) in counts.values() {
            let n: usize = obs.values().sum();
            let table = truth.support(ComponentKind::Observation, &dom.inputs(ComponentKind::Observation, None, *a as i64, Some(s2)));
            for (o, p) in table.unwrap().entries() {
                let hits = obs.get(&o.encode()).copied().unwrap_or(0);
                assert!(within_3se(hits, n, *p) || n < 10, "{id}: {hits}/{n} vs {p}");
            }
        }
    }
}

#[test]
fn tiger_initial_and_listen_statistics() {
    let mut env = Env::new("tiger").unwrap();
    let left = (0..10_000).filter(|&i| tiger::tiger(&env.reset(i).0) == 0).count();
    assert!(within_3se(left, 10_000, 0.5), "{left}");
    let mut correct = 0;
    for i in 0..10_000 {
        env.reset(mix(3, i));
        let loc = tiger::tiger(env.state().unwrap());
        let st = env.step(tiger::LISTEN).unwrap();
        let heard_left = st.observation == tiger::obs(tiger::HEAR_LEFT);
        correct += (heard_left == (loc == 0)) as usize;
    }
    assert!(within_3se(correct, 10_000, tiger::ACCURACY), "{correct}");
    env.reset(0);
    let loc = tiger::tiger(env.state().unwrap());
    let st = env.step(loc as usize).unwrap();
    assert_eq!((st.reward, st.done), (-100.0, true));
    assert!(env.step(tiger::LISTEN).is_err());
}

#[test]
fn rocksample_sensor_follows_the_distance_law() {
    let truth = Env::new("rocksample-4-4").unwrap().ground_truth().clone();
    let mut r = rng(1);
    // agent at the start, rock 3 at (3, 2): distance 3
    let s = rocksample::Rs { x: 0, y: 2, good: [true; 4] }.to_value();
    let a = (rocksample::CHECK_0 + 3) as i64;
    let p = rocksample::sensor_accuracy(3.0);
    let good = rocksample::obs(rocksample::OBS_GOOD);
    assert!((truth.observation_prob(&s, a, &good).unwrap() - p).abs() < 1e-12);
    let hits = (0..10_000).filter(|_| truth.sample_observation(&s, a, &mut r).unwrap() == good).count();
    assert!(within_3se(hits, 10_000, p));
}

#[test]
fn minigrid_layouts_are_solvable_and_corners_uniform() {
    for v in [Variant::Empty, Variant::Corners, Variant::Lava, Variant::Rooms, Variant::Unlock] {
        let mut env = Env::new(Kind::MiniGrid(v).id()).unwrap();
        for seed in 0..200 {
            let (s, _) = env.reset(seed);
            assert!(minigrid::bfs_solution(&Mg::from_value(&s)).is_some(), "{v:?} seed {seed}");
        }
    }
    let mut env = Env::new("minigrid-corners").unwrap();
    let mut per_corner = [0usize; 4];
    for seed in 0..1000 {
        let (s, _) = env.reset(seed);
        let g = Mg::from_value(&s).grid;
        let i = [(1, 1), (8, 1), (1, 8), (8, 8)].iter().position(|&(x, y)| g.get(x, y) == minigrid::GOAL).unwrap();
        per_corner[i] += 1;
    }
    assert!(per_corner.iter().all(|&c| within_3se(c, 1000, 0.25)), "{per_corner:?}");
}

#[test]
fn empty_reset_is_deterministic_top_left() {
    let mut env = Env::new("minigrid-empty").unwrap();
    let a = env.reset(1).0;
    let b = env.reset(2).0;
    assert_eq!(a, b);
    let m = Mg::from_value(&a);
    assert_eq!((m.x, m.y, m.dir), (1, 1, minigrid::EAST));
}

#[test]
fn demonstrators_have_the_expected_shape() {
    let mut env = Env::new("tiger").unwrap();
    let d = collect_demos(&mut env, 10, 4);
    assert_eq!(d.episode_ids().len(), 10);
    for recs in d.episodes().values() {
        let acts: Vec<usize> = recs.iter().map(|r| r.action).collect();
        assert_eq!(acts[..2], [tiger::LISTEN, tiger::LISTEN]);
        assert_ne!(acts[2], tiger::LISTEN);
        assert!(recs[2].reward > 0.0);
    }
    d.check().unwrap();

    let mut env = Env::new("minigrid-unlock").unwrap();
    let d = collect_demos(&mut env, 10, 4);
    d.check().unwrap();
    for recs in d.episodes().values() {
        let pick = recs.iter().position(|r| r.action == minigrid::PICKUP).expect("pickup");
        let toggle = recs.iter().position(|r| r.action == minigrid::TOGGLE).expect("toggle");
        assert!(pick < toggle);
        assert!(recs.last().unwrap().done && recs.last().unwrap().reward == 1.0);
    }
    let again = collect_demos(&mut env, 10, 4);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    d.write_jsonl(&mut x).unwrap();
    again.write_jsonl(&mut y).unwrap();
    assert_eq!(x, y);
}
