//! Simulated environments.
//!
//! Three single-room archetypes (constant, white noise, periodic pattern) and
//! a composite world in which the agent chooses which room to look at.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::Symbol;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("invalid world spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error("action {value} out of range for {alphabet} actions")]
    ActionOutOfRange { value: u16, alphabet: u16 },
    #[error("life is over: all {lifetime} steps have been lived")]
    Terminal { lifetime: u64 },
}

/// What a single room emits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RoomSpec {
    Dark,
    Noise,
    Pattern {
        #[serde(default = "default_period")]
        period: usize,
        /// Explicit emission sequence; overrides `period` when given.
        #[serde(default)]
        pattern: Option<Vec<u16>>,
    },
}

fn default_period() -> usize {
    8
}

fn default_obs() -> u16 {
    16
}

fn default_act() -> u16 {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskReward {
    pub room: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorldSpec {
    DarkRoom {
        #[serde(default = "default_obs")]
        obs_alphabet: u16,
        #[serde(default = "default_act")]
        act_alphabet: u16,
    },
    NoiseTv {
        #[serde(default = "default_obs")]
        obs_alphabet: u16,
        #[serde(default = "default_act")]
        act_alphabet: u16,
    },
    PatternRoom {
        #[serde(default = "default_obs")]
        obs_alphabet: u16,
        #[serde(default = "default_act")]
        act_alphabet: u16,
        #[serde(default = "default_period")]
        period: usize,
        #[serde(default)]
        pattern: Option<Vec<u16>>,
    },
    /// Rooms side by side. Odd actions move to the next room (cyclically),
    /// even actions stay. The observation is `room * E + emission` with
    /// `E = obs_alphabet / rooms.len()`.
    TwoRoom {
        #[serde(default = "default_obs")]
        obs_alphabet: u16,
        #[serde(default = "default_act")]
        act_alphabet: u16,
        rooms: Vec<RoomSpec>,
        #[serde(default)]
        start_room: usize,
        #[serde(default)]
        task_reward: Option<TaskReward>,
    },
}

impl WorldSpec {
    pub fn obs_alphabet(&self) -> u16 {
        match self {
            WorldSpec::DarkRoom { obs_alphabet, .. }
            | WorldSpec::NoiseTv { obs_alphabet, .. }
            | WorldSpec::PatternRoom { obs_alphabet, .. }
            | WorldSpec::TwoRoom { obs_alphabet, .. } => *obs_alphabet,
        }
    }

    pub fn act_alphabet(&self) -> u16 {
        match self {
            WorldSpec::DarkRoom { act_alphabet, .. }
            | WorldSpec::NoiseTv { act_alphabet, .. }
            | WorldSpec::PatternRoom { act_alphabet, .. }
            | WorldSpec::TwoRoom { act_alphabet, .. } => *act_alphabet,
        }
    }

    pub fn room_count(&self) -> usize {
        match self {
            WorldSpec::TwoRoom { rooms, .. } => rooms.len(),
            _ => 1,
        }
    }

    /// Field-level problems with the spec; empty when valid.
    pub fn validate(&self, lifetime: u64) -> Vec<String> {
        let mut errs = Vec::new();
        if self.obs_alphabet() < 2 {
            errs.push(format!("obs_alphabet: must be >= 2, got {}", self.obs_alphabet()));
        }
        if self.act_alphabet() < 2 {
            errs.push(format!("act_alphabet: must be >= 2, got {}", self.act_alphabet()));
        }
        if lifetime < 1 {
            errs.push("lifetime: must be >= 1".into());
        }
        match self {
            WorldSpec::PatternRoom {
                obs_alphabet,
                period,
                pattern,
                ..
            } => check_pattern("", *period, pattern.as_deref(), *obs_alphabet, &mut errs),
            WorldSpec::TwoRoom {
                obs_alphabet,
                rooms,
                start_room,
                task_reward,
                ..
            } => {
                if rooms.is_empty() {
                    errs.push("rooms: at least one room is required".into());
                } else {
                    let emit = *obs_alphabet as usize / rooms.len();
                    if emit < 2 {
                        errs.push(format!(
                            "obs_alphabet: {obs_alphabet} symbols cannot hold {} rooms of >= 2 emissions",
                            rooms.len()
                        ));
                    }
                    for (i, r) in rooms.iter().enumerate() {
                        if let RoomSpec::Pattern { period, pattern } = r {
                            check_pattern(
                                &format!("rooms[{i}]."),
                                *period,
                                pattern.as_deref(),
                                emit as u16,
                                &mut errs,
                            );
                        }
                    }
                    if *start_room >= rooms.len() {
                        errs.push(format!("start_room: {start_room} is not a room index"));
                    }
                    if let Some(tr) = task_reward {
                        if tr.room >= rooms.len() {
                            errs.push(format!("task_reward.room: {} is not a room index", tr.room));
                        }
                        if !tr.reward.is_finite() {
                            errs.push("task_reward.reward: must be finite".into());
                        }
                    }
                }
            }
            _ => {}
        }
        errs
    }
}

fn check_pattern(prefix: &str, period: usize, pattern: Option<&[u16]>, emit: u16, errs: &mut Vec<String>) {
    match pattern {
        Some(p) => {
            if p.is_empty() {
                errs.push(format!("{prefix}pattern: must not be empty"));
            }
            if let Some(v) = p.iter().find(|v| **v >= emit) {
                errs.push(format!("{prefix}pattern: symbol {v} exceeds emission alphabet {emit}"));
            }
        }
        None => {
            if period < 1 {
                errs.push(format!("{prefix}period: must be >= 1"));
            }
        }
    }
}

/// The built-in pattern: `(3 i + 1) mod E`, distinct symbols whenever
/// `period <= E` and `E` is not a multiple of 3.
pub fn default_pattern(period: usize, emit: u16) -> Vec<u16> {
    (0..period).map(|i| ((3 * i + 1) % emit as usize) as u16).collect()
}

#[derive(Clone, Debug)]
enum Room {
    Dark,
    Noise,
    Pattern(Vec<u16>),
}

impl Room {
    fn from_spec(spec: &RoomSpec, emit: u16) -> Self {
        match spec {
            RoomSpec::Dark => Room::Dark,
            RoomSpec::Noise => Room::Noise,
            RoomSpec::Pattern { period, pattern } => Room::Pattern(
                pattern
                    .clone()
                    .unwrap_or_else(|| default_pattern(*period, emit)),
            ),
        }
    }
}

/// Counter-keyed noise: the value at step `t` depends only on the seed and
/// `t`, never on how many draws happened before.
#[derive(Clone, Debug)]
struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn at(&mut self, t: u64, n: u16) -> u16 {
        self.rng.set_word_pos(u128::from(t) * 16);
        self.rng.gen_range(0..n)
    }
}

#[derive(Clone, Debug)]
pub struct World {
    spec: WorldSpec,
    rooms: Vec<Room>,
    emit: u16,
    room: usize,
    t: u64,
    lifetime: u64,
    noise: NoiseStream,
}

pub fn make_world(spec: &WorldSpec, lifetime: u64, seed: u64) -> Result<World, WorldError> {
    let errs = spec.validate(lifetime);
    if !errs.is_empty() {
        return Err(WorldError::InvalidSpec(errs));
    }
    let obs = spec.obs_alphabet();
    let (rooms, emit, room) = match spec {
        WorldSpec::DarkRoom { .. } => (vec![Room::Dark], obs, 0),
        WorldSpec::NoiseTv { .. } => (vec![Room::Noise], obs, 0),
        WorldSpec::PatternRoom { period, pattern, .. } => (
            vec![Room::from_spec(
                &RoomSpec::Pattern {
                    period: *period,
                    pattern: pattern.clone(),
                },
                obs,
            )],
            obs,
            0,
        ),
        WorldSpec::TwoRoom {
            rooms, start_room, ..
        } => {
            let emit = obs / rooms.len() as u16;
            (
                rooms.iter().map(|r| Room::from_spec(r, emit)).collect(),
                emit,
                *start_room,
            )
        }
    };
    Ok(World {
        spec: spec.clone(),
        rooms,
        emit,
        room,
        t: 0,
        lifetime,
        noise: NoiseStream::new(seed),
    })
}

impl World {
    pub fn spec(&self) -> &WorldSpec {
        &self.spec
    }

    pub fn obs_alphabet(&self) -> u16 {
        self.spec.obs_alphabet()
    }

    pub fn act_alphabet(&self) -> u16 {
        self.spec.act_alphabet()
    }

    /// Steps lived so far.
    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn lifetime(&self) -> u64 {
        self.lifetime
    }

    pub fn is_terminal(&self) -> bool {
        self.t >= self.lifetime
    }

    /// Room the agent currently occupies (always 0 for single-room worlds).
    pub fn room(&self) -> usize {
        self.room
    }

    /// Index of the first pattern room, if any.
    pub fn pattern_room(&self) -> Option<usize> {
        self.rooms.iter().position(|r| matches!(r, Room::Pattern(_)))
    }

    /// Executes `y` and returns the next observation and external reward.
    pub fn step(&mut self, y: Symbol) -> Result<(Symbol, f64), WorldError> {
        if self.is_terminal() {
            return Err(WorldError::Terminal {
                lifetime: self.lifetime,
            });
        }
        let act = self.act_alphabet();
        if y.0 >= act {
            return Err(WorldError::ActionOutOfRange {
                value: y.0,
                alphabet: act,
            });
        }
        let t = self.t;
        self.t += 1;
        if self.rooms.len() > 1 && y.0 % 2 == 1 {
            self.room = (self.room + 1) % self.rooms.len();
        }
        let emission = match &self.rooms[self.room] {
            Room::Dark => 0,
            Room::Noise => self.noise.at(t, self.emit),
            Room::Pattern(p) => p[(t % p.len() as u64) as usize],
        };
        let x = if self.rooms.len() > 1 {
            self.room as u16 * self.emit + emission
        } else {
            emission
        };
        let r_ext = match &self.spec {
            WorldSpec::TwoRoom {
                task_reward: Some(tr),
                ..
            } if tr.room == self.room => tr.reward,
            _ => 0.0,
        };
        Ok((Symbol(x), r_ext))
    }

    /// Room encoded in a two-room observation.
    pub fn room_of(&self, x: Symbol) -> usize {
        if self.rooms.len() > 1 {
            (x.0 / self.emit) as usize
        } else {
            0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(w: &mut World, actions: &[u16]) -> Vec<u16> {
        actions.iter().map(|&a| w.step(Symbol(a)).unwrap().0 .0).collect()
    }

    fn dark() -> WorldSpec {
        WorldSpec::DarkRoom {
            obs_alphabet: 16,
            act_alphabet: 4,
        }
    }

    fn two_room() -> WorldSpec {
        WorldSpec::TwoRoom {
            obs_alphabet: 16,
            act_alphabet: 4,
            rooms: vec![
                RoomSpec::Noise,
                RoomSpec::Pattern {
                    period: 8,
                    pattern: None,
                },
            ],
            start_room: 0,
            task_reward: None,
        }
    }

    #[test]
    fn dark_room_emits_zeros_then_ends() {
        let mut w = make_world(&dark(), 100, 0).unwrap();
        let actions: Vec<u16> = (0..100).map(|i| (i * 7 % 4) as u16).collect();
        assert_eq!(run(&mut w, &actions), vec![0; 100]);
        assert!(w.is_terminal());
        assert_eq!(w.step(Symbol(0)), Err(WorldError::Terminal { lifetime: 100 }));
    }

    #[test]
    fn pattern_room_period_two() {
        let spec = WorldSpec::PatternRoom {
            obs_alphabet: 16,
            act_alphabet: 4,
            period: 2,
            pattern: Some(vec![1, 2]),
        };
        let mut w = make_world(&spec, 10, 0).unwrap();
        assert_eq!(run(&mut w, &[0; 6]), vec![1, 2, 1, 2, 1, 2]);
    }

    #[test]
    fn default_pattern_is_distinct() {
        let p = default_pattern(8, 16);
        let mut s = p.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 8);
        assert_eq!(default_pattern(8, 8).len(), 8);
    }

    #[test]
    fn noise_is_seeded_and_action_independent() {
        let spec = WorldSpec::NoiseTv {
            obs_alphabet: 16,
            act_alphabet: 4,
        };
        let mut a = make_world(&spec, 500, 42).unwrap();
        let mut b = make_world(&spec, 500, 42).unwrap();
        let mut c = make_world(&spec, 500, 43).unwrap();
        let xa = run(&mut a, &[0; 500]);
        let xb = run(&mut b, &(0..500).map(|i| (i % 4) as u16).collect::<Vec<_>>());
        let xc = run(&mut c, &[0; 500]);
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert!(xa.iter().all(|x| *x < 16));
    }

    #[test]
    fn two_room_switches_only_on_odd_actions() {
        let mut w = make_world(&two_room(), 100, 1).unwrap();
        let script = [0u16, 2, 1, 0, 2, 0, 3, 0, 1, 1];
        let expected_rooms = [0usize, 0, 1, 1, 1, 1, 0, 0, 1, 0];
        for (a, room) in script.iter().zip(expected_rooms) {
            let (x, _) = w.step(Symbol(*a)).unwrap();
            assert_eq!(w.room_of(x), room);
            assert_eq!(w.room(), room);
        }
    }

    #[test]
    fn two_room_pattern_follows_global_clock() {
        let mut w = make_world(&two_room(), 100, 1).unwrap();
        let pat = default_pattern(8, 8);
        w.step(Symbol(1)).unwrap();
        for t in 1..20u64 {
            let (x, _) = w.step(Symbol(0)).unwrap();
            assert_eq!(x.0, 8 + pat[(t % 8) as usize]);
        }
    }

    #[test]
    fn task_reward_is_paid_in_goal_room() {
        let WorldSpec::TwoRoom {
            obs_alphabet,
            act_alphabet,
            rooms,
            ..
        } = two_room()
        else {
            unreachable!()
        };
        let spec = WorldSpec::TwoRoom {
            obs_alphabet,
            act_alphabet,
            rooms,
            start_room: 0,
            task_reward: Some(TaskReward { room: 1, reward: 2.5 }),
        };
        let mut w = make_world(&spec, 10, 0).unwrap();
        assert_eq!(w.step(Symbol(0)).unwrap().1, 0.0);
        assert_eq!(w.step(Symbol(1)).unwrap().1, 2.5);
    }

    #[test]
    fn invalid_specs_are_rejected_with_field_names() {
        let spec = WorldSpec::DarkRoom {
            obs_alphabet: 1,
            act_alphabet: 4,
        };
        let Err(WorldError::InvalidSpec(errs)) = make_world(&spec, 10, 0) else {
            panic!()
        };
        assert!(errs[0].starts_with("obs_alphabet"));

        let spec = WorldSpec::PatternRoom {
            obs_alphabet: 4,
            act_alphabet: 2,
            period: 0,
            pattern: None,
        };
        assert!(make_world(&spec, 0, 0).is_err());
        let spec = WorldSpec::TwoRoom {
            obs_alphabet: 3,
            act_alphabet: 2,
            rooms: vec![RoomSpec::Noise, RoomSpec::Dark],
            start_room: 5,
            task_reward: None,
        };
        let Err(WorldError::InvalidSpec(errs)) = make_world(&spec, 10, 0) else {
            panic!()
        };
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn rejects_bad_action() {
        let mut w = make_world(&dark(), 10, 0).unwrap();
        assert!(matches!(
            w.step(Symbol(4)),
            Err(WorldError::ActionOutOfRange { .. })
        ));
    }

    #[test]
    fn spec_parses_from_json() {
        let spec: WorldSpec = serde_json::from_str(
            r#"{"kind":"two_room","rooms":[{"kind":"noise"},{"kind":"pattern","period":8}]}"#,
        )
        .unwrap();
        assert_eq!(spec, two_room());
    }
}
