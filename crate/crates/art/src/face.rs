//! Face construction grid.
//!
//! Each side of the unit square is cut into 16 equal intervals. Every chord
//! joining two of the resulting boundary points with slope ±1, ±1/8 or ±8 is a
//! grid line. Refinement inserts, between every pair of neighbouring parallel
//! lines, a new line equidistant to both. Finally all y-coordinates are
//! squeezed by 15/16.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::Deserialize;

use crate::ArtError;

pub type Q = Rational64;

pub const INTERVALS: i64 = 16;
pub const MAX_LEVELS: u32 = 12;

/// Vertical squeeze applied after construction, 1 − 2^−4.
pub fn vertical_factor() -> Q {
    Q::one() - Q::new(1, INTERVALS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub x: Q,
    pub y: Q,
}

impl Point {
    pub fn new(x: Q, y: Q) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlopeClass {
    Steep,
    SteepNeg,
    Diagonal,
    DiagonalNeg,
    Shallow,
    ShallowNeg,
    Vertical,
    Horizontal,
}

impl SlopeClass {
    pub fn of(a: Point, b: Point) -> Self {
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        if dx.is_zero() {
            return SlopeClass::Vertical;
        }
        let m = dy / dx;
        let eight = Q::from_integer(8);
        match m {
            m if m.is_zero() => SlopeClass::Horizontal,
            m if m == Q::one() => SlopeClass::Diagonal,
            m if m == -Q::one() => SlopeClass::DiagonalNeg,
            m if m == eight => SlopeClass::Steep,
            m if m == -eight => SlopeClass::SteepNeg,
            m if m == eight.recip() => SlopeClass::Shallow,
            m if m == -eight.recip() => SlopeClass::ShallowNeg,
            // Only the six families above are ever constructed.
            _ => SlopeClass::Horizontal,
        }
    }

    pub fn slope(self) -> Option<Q> {
        let eight = Q::from_integer(8);
        match self {
            SlopeClass::Steep => Some(eight),
            SlopeClass::SteepNeg => Some(-eight),
            SlopeClass::Diagonal => Some(Q::one()),
            SlopeClass::DiagonalNeg => Some(-Q::one()),
            SlopeClass::Shallow => Some(eight.recip()),
            SlopeClass::ShallowNeg => Some(-eight.recip()),
            SlopeClass::Horizontal => Some(Q::zero()),
            SlopeClass::Vertical => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SlopeClass::Steep => "8",
            SlopeClass::SteepNeg => "-8",
            SlopeClass::Diagonal => "1",
            SlopeClass::DiagonalNeg => "-1",
            SlopeClass::Shallow => "1/8",
            SlopeClass::ShallowNeg => "-1/8",
            SlopeClass::Vertical => "vertical",
            SlopeClass::Horizontal => "horizontal",
        }
    }

    const GRID: [SlopeClass; 6] = [
        SlopeClass::Diagonal,
        SlopeClass::DiagonalNeg,
        SlopeClass::Shallow,
        SlopeClass::ShallowNeg,
        SlopeClass::Steep,
        SlopeClass::SteepNeg,
    ];
}

/// A grid line clipped to the unit square, in pre-squeeze coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineSegment {
    pub a: Point,
    pub b: Point,
    pub slope: SlopeClass,
    /// 0 for boundary chords, otherwise the refinement round that inserted it.
    pub level: u32,
}

impl LineSegment {
    fn new(p: Point, q: Point, level: u32) -> Self {
        let (a, b) = if p <= q { (p, q) } else { (q, p) };
        Self {
            a,
            b,
            slope: SlopeClass::of(a, b),
            level,
        }
    }

    /// Endpoints after the vertical squeeze.
    pub fn squeezed(&self) -> (Point, Point) {
        let f = vertical_factor();
        (
            Point::new(self.a.x, self.a.y * f),
            Point::new(self.b.x, self.b.y * f),
        )
    }

    fn intercept(&self) -> Q {
        // y = m x + c for every grid family (none is vertical).
        let m = self.slope.slope().unwrap_or_default();
        self.a.y - m * self.a.x
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceGrid {
    pub levels: u32,
    pub segments: Vec<LineSegment>,
}

impl FaceGrid {
    /// Distinct boundary points on each side, in order: bottom, right, top, left.
    pub fn side_points(&self) -> [Vec<Q>; 4] {
        let mut sides: [BTreeSet<Q>; 4] = Default::default();
        for s in self.segments.iter().filter(|s| s.level == 0) {
            for p in [s.a, s.b] {
                if p.y.is_zero() {
                    sides[0].insert(p.x);
                }
                if p.x == Q::one() {
                    sides[1].insert(p.y);
                }
                if p.y == Q::one() {
                    sides[2].insert(p.x);
                }
                if p.x.is_zero() {
                    sides[3].insert(p.y);
                }
            }
        }
        sides.map(|s| s.into_iter().collect())
    }

    pub fn count_by_level(&self) -> BTreeMap<u32, usize> {
        let mut out = BTreeMap::new();
        for s in &self.segments {
            *out.entry(s.level).or_default() += 1;
        }
        out
    }
}

fn boundary_points() -> Vec<Point> {
    let step = Q::new(1, INTERVALS);
    let mut pts = BTreeSet::new();
    for i in 0..=INTERVALS {
        let v = step * i;
        pts.insert(Point::new(v, Q::zero()));
        pts.insert(Point::new(v, Q::one()));
        pts.insert(Point::new(Q::zero(), v));
        pts.insert(Point::new(Q::one(), v));
    }
    pts.into_iter().collect()
}

/// Clips y = m x + c to the unit square; `None` if it meets the square in
/// fewer than two points.
fn clip(m: Q, c: Q) -> Option<(Point, Point)> {
    let (zero, one) = (Q::zero(), Q::one());
    let in_unit = |v: Q| v >= zero && v <= one;
    let mut hits = BTreeSet::new();
    for x in [zero, one] {
        let y = m * x + c;
        if in_unit(y) {
            hits.insert(Point::new(x, y));
        }
    }
    for y in [zero, one] {
        let x = (y - c) / m;
        if in_unit(x) {
            hits.insert(Point::new(x, y));
        }
    }
    let first = *hits.first()?;
    let last = *hits.last()?;
    (first != last).then_some((first, last))
}

pub fn face_grid(levels: u32) -> Result<FaceGrid, ArtError> {
    if levels > MAX_LEVELS {
        return Err(ArtError::TooLarge(format!(
            "levels {levels} exceeds the supported maximum {MAX_LEVELS}"
        )));
    }
    let pts = boundary_points();
    let mut segs = BTreeSet::new();
    for (i, &p) in pts.iter().enumerate() {
        for &q in &pts[i + 1..] {
            let s = LineSegment::new(p, q, 0);
            if SlopeClass::GRID.contains(&s.slope) {
                segs.insert(s);
            }
        }
    }

    let mut families: BTreeMap<SlopeClass, BTreeMap<Q, LineSegment>> = BTreeMap::new();
    for s in segs {
        families.entry(s.slope).or_default().insert(s.intercept(), s);
    }
    for level in 1..=levels {
        for (class, lines) in families.iter_mut() {
            let m = class.slope().unwrap_or_default();
            let cs: Vec<Q> = lines.keys().copied().collect();
            for w in cs.windows(2) {
                let c = (w[0] + w[1]) / 2;
                if let Some((a, b)) = clip(m, c) {
                    lines.insert(c, LineSegment::new(a, b, level));
                }
            }
        }
    }

    let mut segments: Vec<LineSegment> = families.into_values().flat_map(|f| f.into_values()).collect();
    segments.sort_by(|x, y| (x.level, x.slope, x.a, x.b).cmp(&(y.level, y.slope, y.a, y.b)));
    Ok(FaceGrid { levels, segments })
}

#[derive(Deserialize)]
struct OverlayFile {
    segments: Vec<[[String; 2]; 2]>,
}

const OVERLAY: &str = include_str!("../data/face_overlay.json");

fn parse_q(s: &str) -> Result<Q, ArtError> {
    s.parse::<Q>()
        .map_err(|e| ArtError::Overlay(format!("bad coordinate {s:?}: {e}")))
}

/// The curated subset of level-0 grid lines that draws the face.
///
/// This selection is an artistic choice kept as data; it is not derived from
/// the construction rules.
pub fn face_overlay() -> Result<Vec<LineSegment>, ArtError> {
    let file: OverlayFile =
        serde_json::from_str(OVERLAY).map_err(|e| ArtError::Overlay(e.to_string()))?;
    let grid = face_grid(0)?;
    let known: BTreeSet<LineSegment> = grid.segments.into_iter().collect();
    let mut out = Vec::with_capacity(file.segments.len());
    for [[ax, ay], [bx, by]] in &file.segments {
        let s = LineSegment::new(
            Point::new(parse_q(ax)?, parse_q(ay)?),
            Point::new(parse_q(bx)?, parse_q(by)?),
            0,
        );
        if !known.contains(&s) {
            return Err(ArtError::Overlay(format!(
                "({ax}, {ay})-({bx}, {by}) is not a grid line"
            )));
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn sixteen_intervals_per_side() {
        let g = face_grid(0).unwrap();
        for side in g.side_points() {
            assert_eq!(side.len() - 1, 16);
            for w in side.windows(2) {
                assert_eq!(w[1] - w[0], q(1, 16));
            }
        }
    }

    #[test]
    fn squeeze_is_fifteen_sixteenths() {
        assert_eq!(vertical_factor(), q(15, 16));
        let g = face_grid(1).unwrap();
        for s in &g.segments {
            let (a, _) = s.squeezed();
            assert_eq!(a.y, s.a.y * q(15, 16));
            assert_eq!(a.x, s.a.x);
        }
    }

    #[test]
    fn all_slopes_are_in_class() {
        for levels in 0..=3 {
            for s in face_grid(levels).unwrap().segments {
                let m = (s.b.y - s.a.y) / (s.b.x - s.a.x);
                assert!(
                    [q(1, 1), q(-1, 1), q(1, 8), q(-1, 8), q(8, 1), q(-8, 1)].contains(&m),
                    "{s:?}"
                );
            }
        }
    }

    #[test]
    fn level_zero_counts_by_family() {
        // Independent count: for slope 1 every intercept k/16 with |k| < 16
        // gives a chord; for slope 1/8 the chords are y = x/8 + k/16 with
        // k in -1..=15, and the steep families mirror the shallow ones.
        let g = face_grid(0).unwrap();
        let mut by: BTreeMap<SlopeClass, usize> = BTreeMap::new();
        for s in &g.segments {
            *by.entry(s.slope).or_default() += 1;
        }
        assert_eq!(by[&SlopeClass::Diagonal], 31);
        assert_eq!(by[&SlopeClass::DiagonalNeg], 31);
        for c in [SlopeClass::Shallow, SlopeClass::ShallowNeg, SlopeClass::Steep, SlopeClass::SteepNeg] {
            assert_eq!(by[&c], 17, "{c:?}");
        }
        assert_eq!(g.segments.len(), 130);
    }

    #[test]
    fn refinement_halves_spacing() {
        let g0 = face_grid(0).unwrap();
        let g1 = face_grid(1).unwrap();
        // Each family of n lines gains n - 1 midlines.
        assert_eq!(g1.segments.len(), 130 + (130 - 6));
        assert_eq!(g1.count_by_level()[&1], 124);
        let g2 = face_grid(2).unwrap();
        assert_eq!(g2.segments.len(), 254 + 248);
        assert!(g0.segments.iter().all(|s| g1.segments.contains(s)));
        let mid = g1
            .segments
            .iter()
            .find(|s| s.level == 1 && s.slope == SlopeClass::Diagonal && s.a == Point::new(q(0, 1), q(1, 32)))
            .unwrap();
        assert_eq!(mid.b, Point::new(q(31, 32), q(1, 1)));
    }

    #[test]
    fn too_many_levels_rejected() {
        assert!(face_grid(MAX_LEVELS + 1).is_err());
    }

    #[test]
    fn overlay_lines_are_grid_lines() {
        let o = face_overlay().unwrap();
        assert!(!o.is_empty());
        assert!(o.iter().all(|s| SlopeClass::GRID.contains(&s.slope)));
    }
}
