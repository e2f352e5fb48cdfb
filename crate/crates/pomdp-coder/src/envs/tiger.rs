//! Two doors, one tiger, a noisy listen action.

use pomdp_core::schema::{DomainSchema, EnumDef, FieldDef, FieldType, RecordDef};
use pomdp_core::Value;
use rand::{Rng, RngCore};

pub const OPEN_LEFT: usize = 0;
pub const OPEN_RIGHT: usize = 1;
pub const LISTEN: usize = 2;
pub const HEAR_LEFT: u32 = 0;
pub const HEAR_RIGHT: u32 = 1;
pub const NONE: u32 = 2;
pub const ACCURACY: f64 = 0.85;

pub fn schema() -> DomainSchema {
    DomainSchema {
        name: "Tiger".into(),
        description: "You stand in front of two closed doors. Behind one door is a tiger, behind the other a treasure. \
                      Listening costs -1 and reveals the tiger's side correctly 85% of the time. Opening the treasure door \
                      gives +10, opening the tiger door gives -100, and either opening ends the episode."
            .into(),
        goal_description: "Open the door that hides the treasure.".into(),
        enums: vec![EnumDef { name: "TigerObs".into(), variants: vec!["HEAR_LEFT".into(), "HEAR_RIGHT".into(), "NONE".into()] }],
        actions: vec!["OPEN_LEFT".into(), "OPEN_RIGHT".into(), "LISTEN".into()],
        state: RecordDef {
            name: "TigerState".into(),
            fields: vec![FieldDef::new("tiger_location", FieldType::Int { lo: 0, hi: 1 }).with_doc("0 = left door, 1 = right door")],
        },
        observation: RecordDef {
            name: "TigerObservation".into(),
            fields: vec![FieldDef::new("obs", FieldType::Enum { name: "TigerObs".into() })],
        },
    }
}

pub fn state(tiger: i64) -> Value {
    Value::record([("tiger_location", Value::Int(tiger))])
}

pub fn obs(o: u32) -> Value {
    Value::record([("obs", Value::Enum(o))])
}

pub fn tiger(s: &Value) -> i64 {
    s.field("tiger_location").and_then(Value::as_int).expect("tiger state")
}

pub(crate) fn initial(rng: &mut dyn RngCore) -> Value {
    state(rng.random_bool(0.5) as i64)
}

pub(crate) fn step(s: &Value, a: usize) -> (Value, f64, bool) {
    match a {
        LISTEN => (s.clone(), -1.0, false),
        door => (s.clone(), if tiger(s) == door as i64 { -100.0 } else { 10.0 }, true),
    }
}

pub(crate) fn observe(s2: &Value, a: i64, rng: &mut dyn RngCore) -> Value {
    if a != LISTEN as i64 {
        return obs(NONE);
    }
    let correct = rng.random_bool(ACCURACY);
    let left = tiger(s2) == 0;
    obs(if left == correct { HEAR_LEFT } else { HEAR_RIGHT })
}

/// Listen twice, then open the treasure door.
pub(crate) fn demo(s: &Value, t: usize) -> usize {
    if t < 2 {
        LISTEN
    } else if tiger(s) == 0 {
        OPEN_RIGHT
    } else {
        OPEN_LEFT
    }
}
