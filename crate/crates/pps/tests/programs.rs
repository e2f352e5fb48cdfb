use std::sync::Arc;

use pomdp_core::schema::{DomainSchema, EnumDef, FieldDef, FieldType, RecordDef};
use pomdp_core::Value;
use pps::gen::{int_schema, random_function, random_typed_transition};
use pps::{parse_function, print_function, ComponentKind, ParseError, Program};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiger() -> Arc<DomainSchema> {
    Arc::new(DomainSchema {
        name: "Tiger".into(),
        description: String::new(),
        goal_description: String::new(),
        enums: vec![EnumDef { name: "TigerObs".into(), variants: vec!["HEAR_LEFT".into(), "HEAR_RIGHT".into(), "NONE".into()] }],
        actions: vec!["OPEN_LEFT".into(), "OPEN_RIGHT".into(), "LISTEN".into()],
        state: RecordDef { name: "TigerState".into(), fields: vec![FieldDef::new("tiger_location", FieldType::Int { lo: 0, hi: 1 })] },
        observation: RecordDef {
            name: "TigerObservation".into(),
            fields: vec![FieldDef::new("obs", FieldType::Enum { name: "TigerObs".into() })],
        },
    })
}

const TIGER_OBS: &str = r#"
def observation_func(state, action, next_state):
    """Noisy listening."""
    if action == TigerActions.LISTEN:
        correct = sample("listen_correct", Bernoulli(0.85))
        if state.tiger_location == 0:
            o = TigerObs.HEAR_LEFT if correct else TigerObs.HEAR_RIGHT
        else:
            o = TigerObs.HEAR_RIGHT if correct else TigerObs.HEAR_LEFT
    else:
        o = TigerObs.NONE
    return TigerObservation(obs=o)
"#;

fn state(loc: i64) -> Value {
    Value::record([("tiger_location", Value::Int(loc))])
}

fn obs(s: &DomainSchema, name: &str) -> Value {
    Value::record([("obs", Value::Enum(s.variant_index("TigerObs", name).unwrap()))])
}

#[test]
fn tiger_observation_support_and_frequencies() {
    let schema = tiger();
    let p = Program::parse(TIGER_OBS, ComponentKind::Observation, schema.clone()).unwrap();
    assert_eq!(p.site_names(), vec!["listen_correct"]);
    let inputs = [state(0), Value::Int(2), state(0)];
    let t = p.enumerate_support(&inputs, 16).unwrap();
    assert_eq!(t.len(), 2);
    assert!((t.prob(&obs(&schema, "HEAR_LEFT")) - 0.85).abs() < 1e-12);
    assert!((t.prob(&obs(&schema, "HEAR_RIGHT")) - 0.15).abs() < 1e-12);

    let hits = (0..10_000u64).filter(|&s| p.run(&inputs, s).unwrap() == obs(&schema, "HEAR_LEFT")).count();
    assert!((hits as f64 / 10_000.0 - 0.85).abs() < 0.02, "{hits}");

    let open = p.enumerate_support(&[state(1), Value::Int(0), state(0)], 16).unwrap();
    assert_eq!(open.entries().len(), 1);
    assert_eq!(open.prob(&obs(&schema, "NONE")), 1.0);
}

#[test]
fn constant_program_is_deterministic() {
    let p = Program::parse(
        "def initial_func(empty_state):\n    return TigerState(tiger_location=1)\n",
        ComponentKind::Initial,
        tiger(),
    )
    .unwrap();
    assert!(p.is_deterministic());
    let t = p.enumerate_support(&[state(0)], 16).unwrap();
    assert_eq!(t.entries(), &[(state(1), 1.0)]);
}

#[test]
fn independent_sites_multiply() {
    let src = r#"
def transition_func(state, action):
    a = sample("a", Bernoulli(0.3))
    b = sample("b", Categorical([1, 3]))
    state.a = int(a)
    state.b = b
    return state
"#;
    let p = Program::parse(src, ComponentKind::Transition, int_schema()).unwrap();
    let s0 = Value::record([("a", Value::Int(0)), ("b", Value::Int(0))]);
    let t = p.enumerate_support(&[s0, Value::Int(0)], 16).unwrap();
    assert_eq!(t.len(), 4);
    let p11 = t.prob(&Value::record([("a", Value::Int(1)), ("b", Value::Int(1))]));
    assert!((p11 - 0.3 * 0.75).abs() < 1e-12);
    assert!((t.total() - 1.0).abs() < 1e-12);
}

#[test]
fn while_loop_is_a_restriction() {
    let err = Program::parse("def initial_func(empty_state):\n    while True:\n        pass\n", ComponentKind::Initial, tiger()).unwrap_err();
    assert!(matches!(err, ParseError::Restriction { ref construct, .. } if construct == "while loop"), "{err:?}");
}

#[test]
fn file_contents_round_trip() {
    let p = Program::parse(TIGER_OBS, ComponentKind::Observation, tiger()).unwrap();
    let text = p.to_file_contents();
    let q = Program::from_file_contents(&text, tiger()).unwrap();
    assert_eq!(p, q);
    assert_eq!(q.to_file_contents(), text);
}

#[test]
fn print_parse_round_trip_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..500 {
        let f = random_function(&mut rng);
        let src = print_function(&f);
        let back = parse_function(&src).unwrap_or_else(|e| panic!("case {i}: {e}\n{src}"));
        assert_eq!(back, f, "case {i}:\n{src}");
        assert_eq!(print_function(&back), src);
    }
}

fn typed(seed: u64) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_typed_transition(&mut rng);
    Program::from_ast(f.clone(), ComponentKind::Transition, int_schema())
        .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", print_function(&f)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn runs_stay_within_step_bound(seed in any::<u64>(), run_seed in any::<u64>(), a in -50i64..50, act in 0i64..2) {
        let p = typed(seed);
        let s = Value::record([("a", Value::Int(a)), ("b", Value::Int(3))]);
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let (_, steps) = p.run_counted(&[s, Value::Int(act)], &mut rng);
        prop_assert!(steps <= p.step_bound(), "{} > {}", steps, p.step_bound());
    }

    #[test]
    fn support_is_normalized_and_covers_runs(seed in any::<u64>(), a in -50i64..50) {
        let p = typed(seed);
        let s = Value::record([("a", Value::Int(a)), ("b", Value::Int(3))]);
        let inputs = [s, Value::Int(1)];
        if let Ok(t) = p.enumerate_support(&inputs, 16) {
            let err: f64 = t.errors().iter().map(|(_, q)| q).sum();
            prop_assert!((t.total() + err - 1.0).abs() < 1e-9);
            for r in 0..20u64 {
                if let Ok(v) = p.run(&inputs, r) {
                    prop_assert!(t.contains(&v));
                }
            }
        }
    }
}
