//! Area of the ε-neighbourhood of a piecewise-linear path.
//!
//! The area is assembled segment by segment: a 2εℓ rectangle per segment, the
//! round wedge ε²φ/2 on the outer side of each turn and minus the exact overlap
//! of consecutive rectangles on the inner side. Overlaps between non-adjacent
//! segments are not removed, so self-crossing paths are over-counted.

use serde::{Deserialize, Serialize};

use super::dynamics::TrajectoryLog;
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TubeCaps {
    /// Without the two end half-disks; a point path has area 0.
    #[default]
    Open,
    /// Full ε-neighbourhood including the end half-disks.
    Closed,
}

pub fn tube_area(log: &TrajectoryLog, caps: TubeCaps) -> f64 {
    polyline_tube_area(&log.polyline(), log.radius, caps)
}

pub fn polyline_tube_area(points: &[Vec2], radius: f64, caps: TubeCaps) -> f64 {
    let eps = radius;
    let mut pts: Vec<Vec2> = Vec::with_capacity(points.len());
    for &p in points {
        if pts.last().is_none_or(|&q: &Vec2| (p - q).norm() > 0.0) {
            pts.push(p);
        }
    }
    let cap_area = match caps {
        TubeCaps::Open => 0.0,
        TubeCaps::Closed => std::f64::consts::PI * eps * eps,
    };
    if pts.len() < 2 {
        return cap_area;
    }
    let mut area = cap_area;
    for w in pts.windows(2) {
        area += 2.0 * eps * (w[1] - w[0]).norm();
    }
    for w in pts.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let phi = (b - a).angle_to(c - b).abs();
        area += 0.5 * eps * eps * phi;
        let r1 = rectangle(a, b, eps);
        let r2 = rectangle(b, c, eps);
        area -= polygon_area(&clip(&r1, &r2));
    }
    area
}

fn rectangle(a: Vec2, b: Vec2, eps: f64) -> Vec<Vec2> {
    let n = (b - a).normalized().perp() * eps;
    vec![a - n, b - n, b + n, a + n]
}

fn polygon_area(poly: &[Vec2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        s += poly[i].cross(poly[(i + 1) % poly.len()]);
    }
    0.5 * s.abs()
}

/// Sutherland–Hodgman clip of `subject` by the counterclockwise convex `clipper`.
fn clip(subject: &[Vec2], clipper: &[Vec2]) -> Vec<Vec2> {
    let mut out = subject.to_vec();
    for i in 0..clipper.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clipper[i], clipper[(i + 1) % clipper.len()]);
        let inside = |p: Vec2| (b - a).cross(p - a) >= 0.0;
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let p = input[j];
            let q = input[(j + 1) % input.len()];
            let (pin, qin) = (inside(p), inside(q));
            if pin {
                out.push(p);
            }
            if pin != qin {
                let d = q - p;
                let t = (b - a).cross(a - p) / (b - a).cross(d);
                out.push(p + d * t);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_segment() {
        let eps = 0.01;
        let pts = [Vec2::ZERO, Vec2::new(0.3, 0.4)];
        assert!((polyline_tube_area(&pts, eps, TubeCaps::Open) - 2.0 * eps * 0.5).abs() < 1e-15);
        let closed = polyline_tube_area(&pts, eps, TubeCaps::Closed);
        assert!((closed - (0.01 + std::f64::consts::PI * 1e-4)).abs() < 1e-15);
    }

    #[test]
    fn point_path() {
        let pts = [Vec2::new(1.0, 1.0)];
        assert_eq!(polyline_tube_area(&pts, 0.1, TubeCaps::Open), 0.0);
        assert!((polyline_tube_area(&pts, 0.1, TubeCaps::Closed) - std::f64::consts::PI * 0.01).abs() < 1e-15);
    }

    #[test]
    fn clipping_squares() {
        let a = [
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        let b = [
            Vec2::new(1.0, 1.0),
            Vec2::new(3.0, 1.0),
            Vec2::new(3.0, 3.0),
            Vec2::new(1.0, 3.0),
        ];
        assert!((polygon_area(&clip(&a, &b)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn collinear_joint_adds_nothing() {
        let eps = 0.05;
        let pts = [Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
        let a = polyline_tube_area(&pts, eps, TubeCaps::Open);
        assert!((a - 2.0 * eps * 2.0).abs() < 1e-12, "{a}");
    }
}
