//! Flattening of curved outlines into polylines.
//!
//! Every emitted vertex lies on the true curve and the chordal deviation of
//! each emitted edge stays within the requested tolerance.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::geom::Point;

/// Default flattening tolerance in user units.
pub const DEFAULT_TOLERANCE: f64 = 0.1;

/// Absolute path commands (relative commands, arcs and shorthand forms are
/// resolved by the parser before they reach this module).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathSegment {
    MoveTo(Point),
    LineTo(Point),
    QuadTo(Point, Point),
    CubicTo(Point, Point, Point),
    Close,
}

fn segment_count(second_difference: f64, degree_factor: f64, tolerance: f64) -> usize {
    // Wang's bound: n ≥ sqrt(d(d-1)/8 · L / tol).
    let n = libm::ceil(libm::sqrt(degree_factor * second_difference / tolerance));
    if n.is_finite() {
        (n as usize).clamp(1, 4096)
    } else {
        1
    }
}

fn push_quad(out: &mut Vec<Point>, p0: Point, p1: Point, p2: Point, tolerance: f64) {
    let l = (p0 - p1 * 2.0 + p2).length();
    let n = segment_count(l, 0.25, tolerance);
    for i in 1..=n {
        let t = i as f64 / n as f64;
        let mt = 1.0 - t;
        out.push(p0 * (mt * mt) + p1 * (2.0 * mt * t) + p2 * (t * t));
    }
}

fn push_cubic(out: &mut Vec<Point>, p0: Point, p1: Point, p2: Point, p3: Point, tolerance: f64) {
    let l = (p0 - p1 * 2.0 + p2).length().max((p1 - p2 * 2.0 + p3).length());
    let n = segment_count(l, 0.75, tolerance);
    for i in 1..=n {
        let t = i as f64 / n as f64;
        let mt = 1.0 - t;
        out.push(p0 * (mt * mt * mt) + p1 * (3.0 * mt * mt * t) + p2 * (3.0 * mt * t * t) + p3 * (t * t * t));
    }
}

/// Flattens a path into one polyline per subpath. Closed subpaths repeat
/// their first vertex at the end.
pub fn flatten_path(segments: &[PathSegment], tolerance: f64) -> Vec<Vec<Point>> {
    let mut subpaths = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    let mut start = Point::default();
    let mut cursor = Point::default();
    for seg in segments {
        match *seg {
            PathSegment::MoveTo(p) => {
                if current.len() > 1 {
                    subpaths.push(core::mem::take(&mut current));
                }
                current.clear();
                current.push(p);
                start = p;
                cursor = p;
            }
            PathSegment::LineTo(p) => {
                if current.is_empty() {
                    current.push(cursor);
                }
                current.push(p);
                cursor = p;
            }
            PathSegment::QuadTo(c, p) => {
                if current.is_empty() {
                    current.push(cursor);
                }
                push_quad(&mut current, cursor, c, p, tolerance);
                cursor = p;
            }
            PathSegment::CubicTo(c1, c2, p) => {
                if current.is_empty() {
                    current.push(cursor);
                }
                push_cubic(&mut current, cursor, c1, c2, p, tolerance);
                cursor = p;
            }
            PathSegment::Close => {
                if !current.is_empty() {
                    current.push(start);
                    subpaths.push(core::mem::take(&mut current));
                }
                cursor = start;
            }
        }
    }
    if current.len() > 1 {
        subpaths.push(current);
    } else if current.len() == 1 && subpaths.is_empty() {
        // A lone moveto still marks a position.
        subpaths.push(current);
    }
    subpaths
}

/// Angular step for an elliptical arc so the sagitta stays under `tolerance`.
fn arc_step(radius: f64, tolerance: f64) -> f64 {
    if radius <= tolerance {
        return PI / 2.0;
    }
    (2.0 * libm::acos(1.0 - tolerance / radius)).min(PI / 2.0)
}

/// Samples an axis-aligned elliptical arc from `start` sweeping `sweep`
/// radians. The first point is included.
pub fn arc_points(center: Point, rx: f64, ry: f64, start: f64, sweep: f64, tolerance: f64) -> Vec<Point> {
    let step = arc_step(rx.max(ry), tolerance);
    let n = (libm::ceil(libm::fabs(sweep) / step) as usize).max(1);
    (0..=n)
        .map(|i| {
            let a = start + sweep * i as f64 / n as f64;
            let (s, c) = libm::sincos(a);
            Point::new(center.x + rx * c, center.y + ry * s)
        })
        .collect()
}

/// Closed outline of an ellipse. The vertex count is a multiple of four so
/// the axis extremes are vertices.
pub fn ellipse(center: Point, rx: f64, ry: f64, tolerance: f64) -> Vec<Point> {
    let step = arc_step(rx.max(ry), tolerance);
    let quarter = (libm::ceil((PI / 2.0) / step) as usize).max(1);
    let n = quarter * 4;
    let mut pts: Vec<Point> = (0..n)
        .map(|i| {
            let (x, y) = match (i % quarter, i / quarter) {
                (0, 0) => (1.0, 0.0),
                (0, 1) => (0.0, 1.0),
                (0, 2) => (-1.0, 0.0),
                (0, 3) => (0.0, -1.0),
                _ => {
                    let (s, c) = libm::sincos(2.0 * PI * i as f64 / n as f64);
                    (c, s)
                }
            };
            Point::new(center.x + rx * x, center.y + ry * y)
        })
        .collect();
    pts.push(pts[0]);
    pts
}

/// Closed outline of a (possibly rounded) rectangle.
pub fn rounded_rect(x: f64, y: f64, w: f64, h: f64, rx: f64, ry: f64, tolerance: f64) -> Vec<Point> {
    let rx = rx.clamp(0.0, w / 2.0);
    let ry = ry.clamp(0.0, h / 2.0);
    if rx == 0.0 || ry == 0.0 {
        return alloc::vec![Point::new(x, y), Point::new(x + w, y), Point::new(x + w, y + h), Point::new(x, y + h), Point::new(x, y),];
    }
    let mut pts = Vec::new();
    let corners = [
        (Point::new(x + w - rx, y + ry), -PI / 2.0),
        (Point::new(x + w - rx, y + h - ry), 0.0),
        (Point::new(x + rx, y + h - ry), PI / 2.0),
        (Point::new(x + rx, y + ry), PI),
    ];
    for (center, start) in corners {
        pts.extend(arc_points(center, rx, ry, start, PI / 2.0, tolerance));
    }
    pts.push(pts[0]);
    pts
}
