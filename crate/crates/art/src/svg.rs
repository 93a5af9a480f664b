//! Deterministic SVG 1.1 output.
//!
//! Coordinates are printed with six decimals and y is flipped so the drawing
//! keeps its mathematical orientation. Shapes are written in the order given.

use std::fmt::Write;

use crate::butterfly::q_to_f64;
use crate::{ArtError, Shape};

#[derive(Clone, Debug, PartialEq)]
pub struct Style {
    pub stroke: String,
    /// Stroke width in drawing units.
    pub stroke_width: f64,
    /// Width of the rendered image in pixels.
    pub pixel_width: u32,
    /// Blank border in drawing units.
    pub margin: f64,
}

impl Default for Style {
    fn default() -> Self {
        Self {
            stroke: "black".into(),
            stroke_width: 0.004,
            pixel_width: 800,
            margin: 0.05,
        }
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

struct Bounds {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl Bounds {
    fn add(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
    }
}

pub fn render_svg(shapes: &[Shape], style: &Style) -> Result<String, ArtError> {
    if shapes.is_empty() {
        return Err(ArtError::Empty);
    }
    let mut b = Bounds {
        min_x: f64::INFINITY,
        min_y: f64::INFINITY,
        max_x: f64::NEG_INFINITY,
        max_y: f64::NEG_INFINITY,
    };
    for s in shapes {
        match s {
            Shape::Segment(seg) => {
                let (p, q) = seg.squeezed();
                b.add(q_to_f64(p.x), q_to_f64(p.y));
                b.add(q_to_f64(q.x), q_to_f64(q.y));
            }
            Shape::Circle(c) => {
                let (x, y) = c.center.to_f64();
                let r = q_to_f64(c.radius);
                b.add(x - r, y - r);
                b.add(x + r, y + r);
            }
        }
    }
    let m = style.margin;
    let (x0, y_top) = (b.min_x - m, b.max_y + m);
    let w = b.max_x - b.min_x + 2.0 * m;
    let h = b.max_y - b.min_y + 2.0 * m;
    let px_h = (f64::from(style.pixel_width) * h / w).round() as u64;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"{} {} {} {}\">",
        style.pixel_width,
        px_h,
        num(0.0),
        num(0.0),
        num(w),
        num(h)
    );
    let _ = writeln!(
        out,
        "<g fill=\"none\" stroke=\"{}\" stroke-width=\"{}\">",
        style.stroke,
        num(style.stroke_width)
    );
    // Map drawing coordinates into the view box with y pointing up.
    let tx = |x: f64| num(x - x0);
    let ty = |y: f64| num(y_top - y);
    for s in shapes {
        match s {
            Shape::Segment(seg) => {
                let (p, q) = seg.squeezed();
                let _ = writeln!(
                    out,
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                    tx(q_to_f64(p.x)),
                    ty(q_to_f64(p.y)),
                    tx(q_to_f64(q.x)),
                    ty(q_to_f64(q.y))
                );
            }
            Shape::Circle(c) => {
                let (x, y) = c.center.to_f64();
                let _ = writeln!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
                    tx(x),
                    ty(y),
                    num(q_to_f64(c.radius))
                );
            }
        }
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{butterfly_circles, face_grid};

    #[test]
    fn negative_zero_is_normalized() {
        assert_eq!(num(-0.0), "0.000000");
        assert_eq!(num(-1e-9), "0.000000");
        assert_eq!(num(0.5), "0.500000");
    }

    #[test]
    fn element_counts_match_shapes() {
        let c: Vec<Shape> = butterfly_circles(0).unwrap().into_iter().map(Shape::Circle).collect();
        let svg = render_svg(&c, &Style::default()).unwrap();
        assert_eq!(svg.matches("<circle ").count(), 2);

        let g: Vec<Shape> = face_grid(1).unwrap().segments.into_iter().map(Shape::Segment).collect();
        let svg = render_svg(&g, &Style::default()).unwrap();
        assert_eq!(svg.matches("<line ").count(), g.len());
    }

    #[test]
    fn output_is_byte_stable() {
        let c: Vec<Shape> = butterfly_circles(3).unwrap().into_iter().map(Shape::Circle).collect();
        let a = render_svg(&c, &Style::default()).unwrap();
        let b = render_svg(&c, &Style::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<?xml") && a.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(render_svg(&[], &Style::default()), Err(ArtError::Empty)));
    }
}
