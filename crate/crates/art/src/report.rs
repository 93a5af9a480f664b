//! Description length of a drawing.
//!
//! Shapes are grouped into levels: circles by (generation, radius), segments
//! by refinement round. Levels are ordered coarse to fine, generation first
//! and larger radius before smaller within a generation. Level `j` costs one
//! flag bit plus `log2(n_j)` index bits, and a shape at level `j` pays for
//! every level up to and including its own. A finer shape therefore never
//! costs less than a coarser one.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::butterfly::q_to_f64;
use crate::face::Q;
use crate::Shape;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapeBits {
    pub index: usize,
    pub kind: &'static str,
    pub depth: u32,
    /// Radius for circles; empty for segments.
    pub size: String,
    pub bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelBits {
    pub depth: u32,
    pub size: String,
    pub count: usize,
    pub bits_per_shape: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodeLengthReport {
    pub levels: Vec<LevelBits>,
    pub shapes: Vec<ShapeBits>,
    pub total_bits: f64,
}

type LevelKey = (u32, Reverse<Q>);

fn level_of(s: &Shape) -> LevelKey {
    match s {
        Shape::Circle(c) => (c.generation, Reverse(c.radius)),
        Shape::Segment(seg) => (seg.level, Reverse(Q::default())),
    }
}

pub fn code_length_report(shapes: &[Shape]) -> CodeLengthReport {
    let mut counts: BTreeMap<LevelKey, usize> = BTreeMap::new();
    for s in shapes {
        *counts.entry(level_of(s)).or_default() += 1;
    }
    let mut cumulative = BTreeMap::new();
    let mut levels = Vec::with_capacity(counts.len());
    let mut acc = 0.0;
    for (&key, &n) in &counts {
        acc += 1.0 + (n as f64).log2();
        cumulative.insert(key, acc);
        levels.push(LevelBits {
            depth: key.0,
            size: size_label(key.1 .0),
            count: n,
            bits_per_shape: acc,
        });
    }
    let shapes: Vec<ShapeBits> = shapes
        .iter()
        .enumerate()
        .map(|(index, s)| {
            let key = level_of(s);
            ShapeBits {
                index,
                kind: match s {
                    Shape::Circle(_) => "circle",
                    Shape::Segment(_) => "segment",
                },
                depth: key.0,
                size: match s {
                    Shape::Circle(c) => size_label(c.radius),
                    Shape::Segment(_) => String::new(),
                },
                bits: cumulative[&key],
            }
        })
        .collect();
    let total_bits = shapes.iter().map(|s| s.bits).sum();
    CodeLengthReport {
        levels,
        shapes,
        total_bits,
    }
}

fn size_label(q: Q) -> String {
    if q == Q::default() {
        String::new()
    } else {
        q.to_string()
    }
}

/// Radius as a float, for callers that want to plot bits against size.
pub fn radius_f64(q: Q) -> f64 {
    q_to_f64(q)
}
