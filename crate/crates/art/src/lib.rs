//! Low-complexity drawings.
//!
//! Two construction plans that can be written down in a few lines yet yield
//! pictures: a face drawn on a grid of lines with a handful of slopes, and a
//! butterfly made only of circles spawned at the contact points of equal
//! circles. Both are built in exact arithmetic.

pub mod butterfly;
pub mod face;
pub mod report;
pub mod svg;

use thiserror::Error;

pub use butterfly::{butterfly_circles, dedup_circles, Circle, SurdPoint};
pub use face::{face_grid, face_overlay, FaceGrid, LineSegment, Point, SlopeClass};
pub use report::{code_length_report, CodeLengthReport};
pub use svg::{render_svg, Style};

#[derive(Debug, Error)]
pub enum ArtError {
    #[error("{0}")]
    TooLarge(String),
    #[error("nothing to draw")]
    Empty,
    #[error("face overlay: {0}")]
    Overlay(String),
    #[error("contact point left exact arithmetic: {0}")]
    Inexact(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Segment(LineSegment),
    Circle(Circle),
}
