//! Fractal-circle butterfly.
//!
//! The frame is a unit circle at the origin; its leftmost point is the centre
//! of a second unit circle. In every later generation, wherever two circles of
//! equal size touch or intersect, two more circles are centred: one of the
//! same size and one of half the size.
//!
//! All centres lie in the triangular lattice (and its dyadic refinements), so
//! each point is stored exactly as `(x, y / √3)` with both parts rational.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::face::Q;
use crate::ArtError;

pub const MAX_DEPTH: u32 = 7;

/// A point `(x, k·√3)` with rational `x` and `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SurdPoint {
    pub x: Q,
    pub y_over_sqrt3: Q,
}

impl SurdPoint {
    pub fn new(x: Q, y_over_sqrt3: Q) -> Self {
        Self { x, y_over_sqrt3 }
    }

    pub fn to_f64(self) -> (f64, f64) {
        (q_to_f64(self.x), q_to_f64(self.y_over_sqrt3) * 3f64.sqrt())
    }
}

pub fn q_to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Circle {
    pub center: SurdPoint,
    pub radius: Q,
    pub generation: u32,
}

impl Circle {
    fn key(&self) -> (SurdPoint, Q) {
        (self.center, self.radius)
    }
}

fn rational_sqrt(q: Q) -> Option<Q> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().unsigned_abs().isqrt();
    let d = q.denom().unsigned_abs().isqrt();
    let root = Q::new(n as i64, d as i64);
    (root * root == q).then_some(root)
}

/// Touch and intersection points of two circles of equal radius `r`.
///
/// Returns `None` if the points leave the exact representation, which cannot
/// happen for circles produced by [`butterfly_circles`].
pub fn equal_circle_points(a: SurdPoint, b: SurdPoint, r: Q) -> Option<Vec<SurdPoint>> {
    let dx = b.x - a.x;
    let dk = b.y_over_sqrt3 - a.y_over_sqrt3;
    let d2 = dx * dx + Q::from_integer(3) * dk * dk;
    if d2.is_zero() || d2 > Q::from_integer(4) * r * r {
        return Some(Vec::new());
    }
    let mid = SurdPoint::new((a.x + b.x) / 2, (a.y_over_sqrt3 + b.y_over_sqrt3) / 2);
    // Offset along the perpendicular (-dy, dx) scaled by h/d, h² = r² − d²/4.
    let s2 = r * r / d2 - Q::new(1, 4);
    if s2.is_zero() {
        return Some(vec![mid]);
    }
    // h/d must be q·√3 for the result to stay of the form (x, k√3).
    let q = rational_sqrt(s2 / 3)?;
    let off = SurdPoint::new(-Q::from_integer(3) * q * dk, q * dx);
    Some(vec![
        SurdPoint::new(mid.x + off.x, mid.y_over_sqrt3 + off.y_over_sqrt3),
        SurdPoint::new(mid.x - off.x, mid.y_over_sqrt3 - off.y_over_sqrt3),
    ])
}

/// Keeps the earliest-generation copy of each (centre, radius) and sorts
/// canonically: by generation, then larger radius first, then centre.
pub fn dedup_circles(circles: impl IntoIterator<Item = Circle>) -> Vec<Circle> {
    let mut best: BTreeMap<(SurdPoint, Q), Circle> = BTreeMap::new();
    for c in circles {
        best.entry(c.key())
            .and_modify(|e| {
                if c.generation < e.generation {
                    *e = c;
                }
            })
            .or_insert(c);
    }
    let mut out: Vec<Circle> = best.into_values().collect();
    out.sort_by(|a, b| {
        (a.generation, b.radius, a.center).cmp(&(b.generation, a.radius, b.center))
    });
    out
}

pub fn butterfly_circles(depth: u32) -> Result<Vec<Circle>, ArtError> {
    if depth > MAX_DEPTH {
        return Err(ArtError::TooLarge(format!(
            "depth {depth} exceeds the supported maximum {MAX_DEPTH}"
        )));
    }
    let one = Q::one();
    let mut circles = vec![
        Circle {
            center: SurdPoint::new(Q::zero(), Q::zero()),
            radius: one,
            generation: 0,
        },
        Circle {
            center: SurdPoint::new(-one, Q::zero()),
            radius: one,
            generation: 0,
        },
    ];
    for generation in 1..=depth {
        let mut by_radius: BTreeMap<Q, Vec<SurdPoint>> = BTreeMap::new();
        for c in &circles {
            by_radius.entry(c.radius).or_default().push(c.center);
        }
        let mut born = Vec::new();
        for (&r, centers) in &by_radius {
            for (i, &a) in centers.iter().enumerate() {
                for &b in &centers[i + 1..] {
                    let pts = equal_circle_points(a, b, r).ok_or_else(|| {
                        ArtError::Inexact(format!("circles at {a:?} and {b:?} with radius {r}"))
                    })?;
                    for p in pts {
                        for radius in [r, r / 2] {
                            born.push(Circle {
                                center: p,
                                radius,
                                generation,
                            });
                        }
                    }
                }
            }
        }
        circles = dedup_circles(circles.into_iter().chain(born));
    }
    Ok(circles)
}

pub fn count_by_generation(circles: &[Circle]) -> BTreeMap<u32, usize> {
    let mut out = BTreeMap::new();
    for c in circles {
        *out.entry(c.generation).or_default() += 1;
    }
    out
}
