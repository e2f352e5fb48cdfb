//! Gridworld variants with an egocentric 7x7 view.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use pomdp_core::schema::{DomainSchema, EnumDef, FieldDef, FieldType, RecordDef};
use pomdp_core::{Grid, Value};
use rand::{Rng, RngCore};

pub const UNSEEN: u32 = 0;
pub const EMPTY: u32 = 1;
pub const WALL: u32 = 2;
pub const GOAL: u32 = 3;
pub const LAVA: u32 = 4;
pub const KEY: u32 = 5;
pub const DOOR_LOCKED: u32 = 6;
pub const DOOR_OPEN: u32 = 7;
const CELLS: [&str; 8] = ["UNSEEN", "EMPTY", "WALL", "GOAL", "LAVA", "KEY", "DOOR_LOCKED", "DOOR_OPEN"];

pub const NORTH: i64 = 0;
pub const EAST: i64 = 1;
pub const SOUTH: i64 = 2;
pub const WEST: i64 = 3;

pub const TURN_LEFT: usize = 0;
pub const TURN_RIGHT: usize = 1;
pub const FORWARD: usize = 2;
pub const PICKUP: usize = 3;
pub const TOGGLE: usize = 4;
pub const N_ACTIONS: usize = 5;

pub const VIEW: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Empty,
    Corners,
    Lava,
    Rooms,
    Unlock,
}

impl Variant {
    pub fn dims(self) -> (usize, usize) {
        match self {
            Variant::Empty => (5, 5),
            Variant::Corners | Variant::Lava => (10, 10),
            Variant::Rooms => (11, 11),
            Variant::Unlock => (13, 7),
        }
    }

    fn text(self) -> (&'static str, &'static str) {
        match self {
            Variant::Empty => (
                "An empty 5x5 room surrounded by walls. The agent starts in the top-left cell facing east and the goal is \
                 in the bottom-right corner of the room.",
                "Reach the goal square.",
            ),
            Variant::Corners => (
                "A 10x10 room surrounded by walls. The agent starts in the middle facing east. The goal is placed in one \
                 of the four inner corners, chosen at random.",
                "Find and reach the goal square.",
            ),
            Variant::Lava => (
                "A 10x10 room surrounded by walls. A vertical column of lava at a random column blocks the room except \
                 for a single gap at a random row. Stepping into lava ends the episode with no reward. The agent starts \
                 top-left facing east and the goal is in the bottom-right corner.",
                "Cross the lava through the gap and reach the goal square.",
            ),
            Variant::Rooms => (
                "An 11x11 area split into four rooms by walls along x = 5 and y = 5, with openings at (5, 2), (2, 5) and \
                 (5, 7). The agent starts in the top-right room facing west. The goal is somewhere in the bottom-left room.",
                "Navigate between the rooms and reach the goal square.",
            ),
            Variant::Unlock => (
                "A 13x7 area split by a wall at x = 6 with a locked door at (6, 3). A key lies at a random position in the \
                 left room. PICKUP takes the key in front of the agent, and TOGGLE opens a locked door in front of the \
                 agent while the key is carried. The goal is at (9, 3) behind the door.",
                "Pick up the key, unlock the door and reach the goal square.",
            ),
        }
    }
}

pub fn schema(v: Variant) -> DomainSchema {
    let (w, h) = v.dims();
    let (description, goal) = v.text();
    let pose = |x_hi: usize, y_hi: usize| {
        vec![
            FieldDef::new("agent_x", FieldType::Int { lo: 0, hi: x_hi as i64 }).with_doc("column, 0 = west"),
            FieldDef::new("agent_y", FieldType::Int { lo: 0, hi: y_hi as i64 }).with_doc("row, 0 = north"),
            FieldDef::new("agent_dir", FieldType::Enum { name: "Direction".into() }),
            FieldDef::new("carrying_key", FieldType::Bool),
        ]
    };
    let mut state = vec![FieldDef::new("grid", FieldType::Grid { width: w, height: h, cell: "Cell".into() })
        .with_doc("indexed as grid[x, y]")];
    state.extend(pose(w - 1, h - 1));
    let mut obs = pose(w - 1, h - 1);
    obs.push(
        FieldDef::new("view", FieldType::Grid { width: VIEW, height: VIEW, cell: "Cell".into() }).with_doc(
            "egocentric view indexed as view[x, y]; the agent is at view[3, 6] facing towards row 0; \
             cells hidden behind walls or locked doors are UNSEEN",
        ),
    );
    DomainSchema {
        name: "MiniGrid".into(),
        description: format!(
            "{description} Actions: TURN_LEFT and TURN_RIGHT rotate in place, FORWARD moves one cell in the facing \
             direction unless blocked by a wall, key or locked door. Reaching the goal gives reward 1 and ends the episode."
        ),
        goal_description: goal.into(),
        enums: vec![
            EnumDef { name: "Cell".into(), variants: CELLS.iter().map(|s| s.to_string()).collect() },
            EnumDef { name: "Direction".into(), variants: ["NORTH", "EAST", "SOUTH", "WEST"].map(String::from).to_vec() },
        ],
        actions: ["TURN_LEFT", "TURN_RIGHT", "FORWARD", "PICKUP", "TOGGLE"].map(String::from).to_vec(),
        state: RecordDef { name: "MiniGridState".into(), fields: state },
        observation: RecordDef { name: "MiniGridObservation".into(), fields: obs },
    }
}

/// Native state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mg {
    pub grid: Grid,
    pub x: i64,
    pub y: i64,
    pub dir: i64,
    pub key: bool,
}

impl Mg {
    pub fn from_value(v: &Value) -> Self {
        let int = |f| v.field(f).and_then(Value::as_int).expect("minigrid field");
        Mg {
            grid: v.field("grid").and_then(Value::as_grid).expect("grid").clone(),
            x: int("agent_x"),
            y: int("agent_y"),
            dir: v.field("agent_dir").and_then(Value::as_enum).expect("dir") as i64,
            key: v.field("carrying_key").and_then(Value::as_bool).expect("key"),
        }
    }

    pub fn to_value(&self) -> Value {
        Value::record([
            ("grid", Value::Grid(Arc::new(self.grid.clone()))),
            ("agent_x", Value::Int(self.x)),
            ("agent_y", Value::Int(self.y)),
            ("agent_dir", Value::Enum(self.dir as u32)),
            ("carrying_key", Value::Bool(self.key)),
        ])
    }

    pub fn cell(&self, x: i64, y: i64) -> u32 {
        if self.grid.in_bounds(x, y) {
            self.grid.get(x as usize, y as usize)
        } else {
            WALL
        }
    }

    pub fn here(&self) -> u32 {
        self.cell(self.x, self.y)
    }

    fn front(&self) -> (i64, i64) {
        let (dx, dy) = dir_vec(self.dir);
        (self.x + dx, self.y + dy)
    }
}

fn dir_vec(d: i64) -> (i64, i64) {
    match d {
        NORTH => (0, -1),
        EAST => (1, 0),
        SOUTH => (0, 1),
        _ => (-1, 0),
    }
}

/// Outer walls plus the fixed interior walls of the variant.
pub fn walls(v: Variant) -> Grid {
    let (w, h) = v.dims();
    let mut g = Grid::new(w, h, EMPTY);
    for x in 0..w {
        g.set(x, 0, WALL);
        g.set(x, h - 1, WALL);
    }
    for y in 0..h {
        g.set(0, y, WALL);
        g.set(w - 1, y, WALL);
    }
    match v {
        Variant::Rooms => {
            for i in 1..10 {
                g.set(5, i, WALL);
                g.set(i, 5, WALL);
            }
            for (x, y) in [(5, 2), (2, 5), (5, 7)] {
                g.set(x, y, EMPTY);
            }
        }
        Variant::Unlock => {
            for y in 1..h - 1 {
                g.set(6, y, WALL);
            }
            g.set(6, 3, EMPTY);
        }
        _ => {}
    }
    g
}

pub fn empty_state(v: Variant) -> Value {
    Mg { grid: walls(v), x: 1, y: 1, dir: NORTH, key: false }.to_value()
}

pub fn empty_obs() -> Value {
    Value::record([
        ("agent_x", Value::Int(0)),
        ("agent_y", Value::Int(0)),
        ("agent_dir", Value::Enum(NORTH as u32)),
        ("carrying_key", Value::Bool(false)),
        ("view", Value::Grid(Arc::new(Grid::new(VIEW, VIEW, UNSEEN)))),
    ])
}

pub(crate) fn initial(v: Variant, rng: &mut dyn RngCore) -> Value {
    let mut g = walls(v);
    let (x, y, dir) = match v {
        Variant::Empty => {
            g.set(3, 3, GOAL);
            (1, 1, EAST)
        }
        Variant::Corners => {
            let c = rng.random_range(0..4);
            g.set(if c % 2 == 0 { 1 } else { 8 }, if c < 2 { 1 } else { 8 }, GOAL);
            (4, 4, EAST)
        }
        Variant::Lava => {
            let col = rng.random_range(3..=6);
            let gap = rng.random_range(1..=8);
            for y in (1..9).filter(|&y| y != gap) {
                g.set(col, y, LAVA);
            }
            g.set(8, 8, GOAL);
            (1, 1, EAST)
        }
        Variant::Rooms => {
            let gx = rng.random_range(1..=4);
            let gy = rng.random_range(6..=9);
            g.set(gx, gy, GOAL);
            (9, 1, WEST)
        }
        Variant::Unlock => {
            g.set(6, 3, DOOR_LOCKED);
            g.set(9, 3, GOAL);
            let kx = rng.random_range(2..=5);
            let ky = rng.random_range(1..=5);
            g.set(kx, ky, KEY);
            (1, 3, EAST)
        }
    };
    Mg { grid: g, x, y, dir, key: false }.to_value()
}

pub fn step_native(s: &Mg, a: usize) -> (Mg, f64, bool) {
    let mut n = s.clone();
    match a {
        TURN_LEFT => n.dir = (n.dir + 3) % 4,
        TURN_RIGHT => n.dir = (n.dir + 1) % 4,
        _ => {
            let (fx, fy) = n.front();
            let front = n.cell(fx, fy);
            match a {
                FORWARD if matches!(front, EMPTY | GOAL | LAVA | DOOR_OPEN) => {
                    n.x = fx;
                    n.y = fy;
                }
                PICKUP if front == KEY && !n.key => {
                    n.key = true;
                    n.grid.set(fx as usize, fy as usize, EMPTY);
                }
                TOGGLE if front == DOOR_LOCKED && n.key => n.grid.set(fx as usize, fy as usize, DOOR_OPEN),
                _ => {}
            }
        }
    }
    let (r, done) = match n.here() {
        GOAL => (1.0, true),
        LAVA => (0.0, true),
        _ => (0.0, false),
    };
    (n, r, done)
}

pub(crate) fn step(s: &Value, a: usize) -> (Value, f64, bool) {
    let (n, r, done) = step_native(&Mg::from_value(s), a);
    (n.to_value(), r, done)
}

fn opaque(c: u32) -> bool {
    c == WALL || c == DOOR_LOCKED
}

/// Egocentric view with occlusion.
pub fn view(s: &Mg) -> Grid {
    let (dx, dy) = dir_vec(s.dir);
    let (rx, ry) = (-dy, dx);
    let mut full = Grid::new(VIEW, VIEW, UNSEEN);
    for vy in 0..VIEW {
        for vx in 0..VIEW {
            let f = 6 - vy as i64;
            let l = vx as i64 - 3;
            full.set(vx, vy, s.cell(s.x + f * dx + l * rx, s.y + f * dy + l * ry));
        }
    }
    let mut mask = [[false; VIEW]; VIEW];
    mask[6][3] = true;
    for vy in (0..VIEW).rev() {
        for vx in 0..VIEW - 1 {
            if mask[vy][vx] && !opaque(full.get(vx, vy)) {
                mask[vy][vx + 1] = true;
                if vy > 0 {
                    mask[vy - 1][vx + 1] = true;
                    mask[vy - 1][vx] = true;
                }
            }
        }
        for vx in (1..VIEW).rev() {
            if mask[vy][vx] && !opaque(full.get(vx, vy)) {
                mask[vy][vx - 1] = true;
                if vy > 0 {
                    mask[vy - 1][vx - 1] = true;
                    mask[vy - 1][vx] = true;
                }
            }
        }
    }
    let mut out = Grid::new(VIEW, VIEW, UNSEEN);
    for vy in 0..VIEW {
        for vx in 0..VIEW {
            if mask[vy][vx] {
                out.set(vx, vy, full.get(vx, vy));
            }
        }
    }
    out
}

pub(crate) fn observe(s2: &Value) -> Value {
    let m = Mg::from_value(s2);
    Value::record([
        ("agent_x", Value::Int(m.x)),
        ("agent_y", Value::Int(m.y)),
        ("agent_dir", Value::Enum(m.dir as u32)),
        ("carrying_key", Value::Bool(m.key)),
        ("view", Value::Grid(Arc::new(view(&m)))),
    ])
}

/// Shortest goal-reaching action sequence on the true (deterministic)
/// dynamics; lava states are dead ends.
pub fn bfs_solution(s: &Mg) -> Option<Vec<usize>> {
    if s.here() == GOAL {
        return Some(Vec::new());
    }
    let mut parent: HashMap<Mg, (Mg, usize)> = HashMap::new();
    let mut queue = VecDeque::from([s.clone()]);
    parent.insert(s.clone(), (s.clone(), usize::MAX));
    while let Some(cur) = queue.pop_front() {
        for a in 0..N_ACTIONS {
            let (n, _, done) = step_native(&cur, a);
            if parent.contains_key(&n) {
                continue;
            }
            parent.insert(n.clone(), (cur.clone(), a));
            if n.here() == GOAL {
                let mut path = vec![];
                let mut at = n;
                while let Some((p, a)) = parent.get(&at).filter(|(_, a)| *a != usize::MAX) {
                    path.push(*a);
                    at = p.clone();
                }
                path.reverse();
                return Some(path);
            }
            if !done {
                queue.push_back(n);
            }
        }
    }
    None
}

pub(crate) fn demo(s: &Value) -> usize {
    bfs_solution(&Mg::from_value(s)).and_then(|p| p.first().copied()).unwrap_or(TURN_LEFT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_room_shortest_path_is_five_steps() {
        let s = Mg::from_value(&initial(Variant::Empty, &mut pomdp_core::seed::rng(0)));
        let p = bfs_solution(&s).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p[0], FORWARD);
    }

    #[test]
    fn forward_into_wall_is_a_no_op() {
        let mut s = Mg::from_value(&initial(Variant::Empty, &mut pomdp_core::seed::rng(0)));
        s.dir = NORTH;
        let (n, r, done) = step_native(&s, FORWARD);
        assert_eq!((n.x, n.y, r, done), (1, 1, 0.0, false));
    }

    #[test]
    fn walls_hide_what_is_behind_them() {
        let s = Mg::from_value(&initial(Variant::Unlock, &mut pomdp_core::seed::rng(1)));
        let v = view(&s);
        // facing east from (1, 3): the door is 5 cells ahead, the goal behind it
        assert_eq!(v.get(3, 1), DOOR_LOCKED);
        assert_eq!(v.get(3, 6), EMPTY);
        assert!((0..VIEW).all(|x| v.get(x, 0) == UNSEEN));
    }
}
