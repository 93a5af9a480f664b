//! Append-only interaction history.
//!
//! The history keeps every step the agent has lived through. Storage is split
//! into reference-counted chunks so a snapshot is a cheap clone that can be
//! handed to another thread; appending after a snapshot copies at most the
//! tail chunk and never touches data the snapshot can see.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const CHUNK: usize = 1024;
const MAGIC: &[u8; 4] = b"CHST";
const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 2 + 2 + 8;
const RECORD_LEN: usize = 2 + 2 + 8 + 8;

/// A discrete observation or action value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(pub u16);

impl Symbol {
    pub fn value(self) -> usize {
        self.0 as usize
    }
}

impl From<u16> for Symbol {
    fn from(v: u16) -> Self {
        Symbol(v)
    }
}

/// Symbols from a slice of raw values; handy in tests and tools.
pub fn symbols(values: &[u16]) -> Vec<Symbol> {
    values.iter().copied().map(Symbol).collect()
}

/// External and intrinsic reward received at one step. `r_int` is in bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardPair {
    pub r_ext: f64,
    pub r_int: f64,
}

impl RewardPair {
    pub fn new(r_ext: f64, r_int: f64) -> Self {
        Self { r_ext, r_int }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryStep {
    pub t: u64,
    pub x: Symbol,
    pub y: Symbol,
    pub r: RewardPair,
}

impl HistoryStep {
    fn bits_eq(&self, other: &Self) -> bool {
        self.t == other.t
            && self.x == other.x
            && self.y == other.y
            && self.r.r_ext.to_bits() == other.r.r_ext.to_bits()
            && self.r.r_int.to_bits() == other.r.r_int.to_bits()
    }
}

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("observation symbol {value} out of range for alphabet of size {alphabet}")]
    ObservationOutOfRange { value: u16, alphabet: u16 },
    #[error("action symbol {value} out of range for alphabet of size {alphabet}")]
    ActionOutOfRange { value: u16, alphabet: u16 },
    #[error("reward is not finite: r_ext={r_ext}, r_int={r_int}")]
    NonFiniteReward { r_ext: f64, r_int: f64 },
    #[error("alphabet sizes must be at least 1 (obs={obs}, act={act})")]
    BadAlphabet { obs: u16, act: u16 },
    #[error("prefix length {requested} exceeds history length {len}")]
    PrefixTooLong { requested: usize, len: usize },
    #[error("history file is corrupt: {0}")]
    Corrupt(String),
    #[error("history file is truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The agent's complete history `h(<=t)`.
#[derive(Clone, Debug)]
pub struct History {
    chunks: Vec<Arc<Vec<HistoryStep>>>,
    len: usize,
    obs_alphabet: u16,
    act_alphabet: u16,
}

impl History {
    pub fn new(obs_alphabet: u16, act_alphabet: u16) -> Result<Self, HistoryError> {
        if obs_alphabet == 0 || act_alphabet == 0 {
            return Err(HistoryError::BadAlphabet {
                obs: obs_alphabet,
                act: act_alphabet,
            });
        }
        Ok(Self {
            chunks: Vec::new(),
            len: 0,
            obs_alphabet,
            act_alphabet,
        })
    }

    pub fn obs_alphabet(&self) -> u16 {
        self.obs_alphabet
    }

    pub fn act_alphabet(&self) -> u16 {
        self.act_alphabet
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends one step and returns its time index.
    pub fn append(&mut self, x: Symbol, y: Symbol, r: RewardPair) -> Result<u64, HistoryError> {
        if x.0 >= self.obs_alphabet {
            return Err(HistoryError::ObservationOutOfRange {
                value: x.0,
                alphabet: self.obs_alphabet,
            });
        }
        if y.0 >= self.act_alphabet {
            return Err(HistoryError::ActionOutOfRange {
                value: y.0,
                alphabet: self.act_alphabet,
            });
        }
        if !r.r_ext.is_finite() || !r.r_int.is_finite() {
            return Err(HistoryError::NonFiniteReward {
                r_ext: r.r_ext,
                r_int: r.r_int,
            });
        }
        let t = self.len as u64 + 1;
        let step = HistoryStep { t, x, y, r };
        match self.chunks.last_mut() {
            Some(last) if last.len() < CHUNK => Arc::make_mut(last).push(step),
            _ => {
                let mut chunk = Vec::with_capacity(CHUNK);
                chunk.push(step);
                self.chunks.push(Arc::new(chunk));
            }
        }
        self.len += 1;
        Ok(t)
    }

    /// Immutable view of the history as it is now. Later appends to `self`
    /// are invisible to the snapshot.
    pub fn snapshot(&self) -> History {
        self.clone()
    }

    /// The first `t` steps.
    pub fn prefix(&self, t: usize) -> Result<History, HistoryError> {
        if t > self.len {
            return Err(HistoryError::PrefixTooLong {
                requested: t,
                len: self.len,
            });
        }
        let full = t / CHUNK;
        let rem = t % CHUNK;
        let mut chunks: Vec<_> = self.chunks[..full].to_vec();
        if rem > 0 {
            chunks.push(Arc::new(self.chunks[full][..rem].to_vec()));
        }
        Ok(History {
            chunks,
            len: t,
            obs_alphabet: self.obs_alphabet,
            act_alphabet: self.act_alphabet,
        })
    }

    /// Step at 0-based position `i`.
    pub fn get(&self, i: usize) -> Option<&HistoryStep> {
        if i >= self.len {
            return None;
        }
        Some(&self.chunks[i / CHUNK][i % CHUNK])
    }

    pub fn last(&self) -> Option<&HistoryStep> {
        self.len.checked_sub(1).and_then(|i| self.get(i))
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &HistoryStep> + '_ {
        self.chunks.iter().flat_map(|c| c.iter())
    }

    /// The observation channel `x(1..=t)`.
    pub fn observations(&self) -> Vec<Symbol> {
        self.iter().map(|s| s.x).collect()
    }

    pub fn actions(&self) -> Vec<Symbol> {
        self.iter().map(|s| s.y).collect()
    }

    /// The last `n` observations (fewer if the history is shorter), oldest first.
    pub fn recent_observations(&self, n: usize) -> Vec<Symbol> {
        let start = self.len.saturating_sub(n);
        (start..self.len).map(|i| self.get(i).unwrap().x).collect()
    }

    pub fn total_r_int(&self) -> f64 {
        self.iter().map(|s| s.r.r_int).sum()
    }

    /// Writes the binary format: little-endian header followed by packed records.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), HistoryError> {
        let mut buf = Vec::with_capacity(HEADER_LEN + RECORD_LEN * self.len);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.obs_alphabet.to_le_bytes());
        buf.extend_from_slice(&self.act_alphabet.to_le_bytes());
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&(self.len as u64).to_le_bytes());
        for s in self.iter() {
            buf.extend_from_slice(&s.x.0.to_le_bytes());
            buf.extend_from_slice(&s.y.0.to_le_bytes());
            buf.extend_from_slice(&s.r.r_ext.to_le_bytes());
            buf.extend_from_slice(&s.r.r_int.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, HistoryError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, HistoryError> {
        if bytes.len() < HEADER_LEN {
            return Err(HistoryError::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        if &bytes[..4] != MAGIC {
            return Err(HistoryError::Corrupt("bad magic".into()));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let version = u16_at(4);
        if version != FORMAT_VERSION {
            return Err(HistoryError::Corrupt(format!("unsupported version {version}")));
        }
        let obs = u16_at(6);
        let act = u16_at(8);
        let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let body = bytes.len() - HEADER_LEN;
        let expected = usize::try_from(len)
            .ok()
            .and_then(|n| n.checked_mul(RECORD_LEN))
            .ok_or_else(|| HistoryError::Corrupt(format!("length field {len} is implausible")))?;
        if body < expected {
            return Err(HistoryError::Truncated {
                expected: HEADER_LEN + expected,
                found: bytes.len(),
            });
        }
        if body > expected {
            return Err(HistoryError::Corrupt(format!(
                "{} trailing bytes after {len} records",
                body - expected
            )));
        }
        let mut h = History::new(obs, act)?;
        for rec in bytes[HEADER_LEN..].chunks_exact(RECORD_LEN) {
            let x = Symbol(u16::from_le_bytes([rec[0], rec[1]]));
            let y = Symbol(u16::from_le_bytes([rec[2], rec[3]]));
            let r_ext = f64::from_le_bytes(rec[4..12].try_into().unwrap());
            let r_int = f64::from_le_bytes(rec[12..20].try_into().unwrap());
            h.append(x, y, RewardPair::new(r_ext, r_int))
                .map_err(|e| HistoryError::Corrupt(format!("record {}: {e}", h.len() + 1)))?;
        }
        Ok(h)
    }

    /// One JSON object per step: `{"t":..,"x":..,"y":..,"r_ext":..,"r_int":..}`.
    pub fn write_jsonl<W: Write>(&self, w: W, tail: Option<usize>) -> Result<(), HistoryError> {
        let skip = tail.map_or(0, |n| self.len.saturating_sub(n));
        write_steps_jsonl(w, self.iter().skip(skip))
    }
}

#[derive(Serialize)]
struct StepLine {
    t: u64,
    x: u16,
    y: u16,
    r_ext: f64,
    r_int: f64,
}

pub fn write_steps_jsonl<'a, W: Write>(
    mut w: W,
    steps: impl Iterator<Item = &'a HistoryStep>,
) -> Result<(), HistoryError> {
    for s in steps {
        let line = StepLine {
            t: s.t,
            x: s.x.0,
            y: s.y.0,
            r_ext: s.r.r_ext,
            r_int: s.r.r_int,
        };
        serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

impl PartialEq for History {
    fn eq(&self, other: &Self) -> bool {
        self.obs_alphabet == other.obs_alphabet
            && self.act_alphabet == other.act_alphabet
            && self.len == other.len
            && self.iter().zip(other.iter()).all(|(a, b)| a.bits_eq(b))
    }
}
