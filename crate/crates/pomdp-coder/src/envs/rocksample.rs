//! RockSample(4,4): a 4x4 grid with four rocks of unknown quality and a
//! distance-dependent sensor. Leaving through the east edge ends the episode.

use pomdp_core::schema::{DomainSchema, EnumDef, FieldDef, FieldType, RecordDef};
use pomdp_core::Value;
use rand::{Rng, RngCore};

pub const SIZE: i64 = 4;
pub const ROCKS: [(i64, i64); 4] = [(1, 0), (2, 1), (1, 3), (3, 2)];
pub const START: (i64, i64) = (0, 2);
/// Distance at which the sensor is 75% accurate.
pub const HALF_EFFICIENCY: f64 = 2.0;

pub const NORTH: usize = 0;
pub const SOUTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;
pub const SAMPLE: usize = 4;
pub const CHECK_0: usize = 5;

pub const OBS_NONE: u32 = 0;
pub const OBS_GOOD: u32 = 1;
pub const OBS_BAD: u32 = 2;

const ROCK_FIELDS: [&str; 4] = ["rock0", "rock1", "rock2", "rock3"];

pub fn schema() -> DomainSchema {
    let int = |hi| FieldType::Int { lo: 0, hi };
    let mut fields = vec![
        FieldDef::new("agent_x", int(SIZE - 1)).with_doc("column, 0 = west edge"),
        FieldDef::new("agent_y", int(SIZE - 1)).with_doc("row, 0 = north edge"),
    ];
    for (i, (x, y)) in ROCKS.iter().enumerate() {
        fields.push(FieldDef::new(ROCK_FIELDS[i], FieldType::Bool).with_doc(format!("rock {i} at ({x}, {y}) is good")));
    }
    DomainSchema {
        name: "RockSample".into(),
        description: "A rover moves on a 4x4 grid (x east, y south) containing four rocks at (1,0), (2,1), (1,3) and (3,2). \
                      Each rock is good or bad. SAMPLE on a rock gives +10 if it is good (the rock then turns bad) and -10 \
                      otherwise. CHECK_i returns a noisy GOOD/BAD reading for rock i whose accuracy decays with distance. \
                      Moving east from the last column leaves the grid for +10 and ends the episode."
            .into(),
        goal_description: "Sample the good rocks and then exit through the east edge.".into(),
        enums: vec![EnumDef { name: "RockObs".into(), variants: vec!["NONE".into(), "GOOD".into(), "BAD".into()] }],
        actions: ["NORTH", "SOUTH", "EAST", "WEST", "SAMPLE", "CHECK_0", "CHECK_1", "CHECK_2", "CHECK_3"]
            .into_iter()
            .map(String::from)
            .collect(),
        state: RecordDef { name: "RockSampleState".into(), fields },
        observation: RecordDef {
            name: "RockSampleObservation".into(),
            fields: vec![FieldDef::new("sensor", FieldType::Enum { name: "RockObs".into() })],
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rs {
    pub x: i64,
    pub y: i64,
    pub good: [bool; 4],
}

impl Rs {
    pub fn from_value(v: &Value) -> Self {
        let int = |f| v.field(f).and_then(Value::as_int).expect("rocksample field");
        let mut good = [false; 4];
        for (i, f) in ROCK_FIELDS.iter().enumerate() {
            good[i] = v.field(f).and_then(Value::as_bool).expect("rock field");
        }
        Rs { x: int("agent_x"), y: int("agent_y"), good }
    }

    pub fn to_value(&self) -> Value {
        let mut fields = vec![("agent_x", Value::Int(self.x)), ("agent_y", Value::Int(self.y))];
        for (i, f) in ROCK_FIELDS.iter().enumerate() {
            fields.push((f, Value::Bool(self.good[i])));
        }
        Value::record(fields)
    }

    fn rock_here(&self) -> Option<usize> {
        ROCKS.iter().position(|&(x, y)| x == self.x && y == self.y)
    }
}

pub fn obs(o: u32) -> Value {
    Value::record([("sensor", Value::Enum(o))])
}

/// Probability that checking a rock at Euclidean distance `d` reads correctly.
pub fn sensor_accuracy(d: f64) -> f64 {
    0.5 * (1.0 + 2f64.powf(-d / HALF_EFFICIENCY))
}

pub(crate) fn initial(rng: &mut dyn RngCore) -> Value {
    let good = [rng.random_bool(0.5), rng.random_bool(0.5), rng.random_bool(0.5), rng.random_bool(0.5)];
    Rs { x: START.0, y: START.1, good }.to_value()
}

pub(crate) fn step(s: &Value, a: usize) -> (Value, f64, bool) {
    let mut r = Rs::from_value(s);
    let mut reward = 0.0;
    let mut done = false;
    match a {
        NORTH => r.y = (r.y - 1).max(0),
        SOUTH => r.y = (r.y + 1).min(SIZE - 1),
        WEST => r.x = (r.x - 1).max(0),
        EAST if r.x == SIZE - 1 => {
            reward = 10.0;
            done = true;
        }
        EAST => r.x += 1,
        SAMPLE => match r.rock_here() {
            Some(i) if r.good[i] => {
                reward = 10.0;
                r.good[i] = false;
            }
            _ => reward = -10.0,
        },
        _ => {}
    }
    (r.to_value(), reward, done)
}

pub(crate) fn observe(s2: &Value, a: i64, rng: &mut dyn RngCore) -> Value {
    if a < CHECK_0 as i64 {
        return obs(OBS_NONE);
    }
    let i = a as usize - CHECK_0;
    let r = Rs::from_value(s2);
    let (rx, ry) = ROCKS[i];
    let d = (((r.x - rx).pow(2) + (r.y - ry).pow(2)) as f64).powf(0.5);
    let correct = rng.random_bool(sensor_accuracy(d));
    obs(if r.good[i] == correct { OBS_GOOD } else { OBS_BAD })
}

/// Checks every rock once, then collects the good rocks and exits east.
pub(crate) fn demo(s: &Value, t: usize) -> usize {
    if t < ROCKS.len() {
        return CHECK_0 + t;
    }
    let r = Rs::from_value(s);
    if let Some(i) = r.rock_here() {
        if r.good[i] {
            return SAMPLE;
        }
    }
    let target = (0..4)
        .filter(|&i| r.good[i])
        .map(|i| ROCKS[i])
        .min_by_key(|&(x, y)| ((x - r.x).abs() + (y - r.y).abs(), x, y));
    match target {
        Some((x, _)) if x > r.x => EAST,
        Some((x, _)) if x < r.x => WEST,
        Some((_, y)) if y > r.y => SOUTH,
        Some((_, y)) if y < r.y => NORTH,
        _ => EAST,
    }
}
