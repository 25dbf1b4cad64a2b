//! Planar helpers: rectangles, winding numbers, distances and polyline tests.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle `[xmin, xmax] × [ymin, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self {
            xmin,
            ymin,
            xmax,
            ymax,
        }
    }

    /// Square of half-width `r` centred at `c`.
    pub fn centered(c: Complex64, r: f64) -> Self {
        Self::new(c.re - r, c.im - r, c.re + r, c.im + r)
    }

    pub fn is_valid(&self) -> bool {
        self.xmin.is_finite()
            && self.xmax.is_finite()
            && self.ymin.is_finite()
            && self.ymax.is_finite()
            && self.xmin < self.xmax
            && self.ymin < self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))
    }

    /// Largest modulus of a point in the rectangle.
    pub fn extent(&self) -> f64 {
        let x = self.xmin.abs().max(self.xmax.abs());
        let y = self.ymin.abs().max(self.ymax.abs());
        x.hypot(y)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.xmin && z.re <= self.xmax && z.im >= self.ymin && z.im <= self.ymax
    }

    /// Distance from `z` to the nearest edge, negative outside.
    pub fn inset(&self, z: Complex64) -> f64 {
        (z.re - self.xmin)
            .min(self.xmax - z.re)
            .min(z.im - self.ymin)
            .min(self.ymax - z.im)
    }

    /// Grown by `frac` of its width and height on each side.
    pub fn dilate(&self, frac: f64) -> Self {
        let dx = frac * self.width();
        let dy = frac * self.height();
        Self::new(self.xmin - dx, self.ymin - dy, self.xmax + dx, self.ymax + dy)
    }

    /// Corners in counter-clockwise order starting at the lower left.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.xmin, self.ymin),
            Complex64::new(self.xmax, self.ymin),
            Complex64::new(self.xmax, self.ymax),
            Complex64::new(self.xmin, self.ymax),
        ]
    }

    /// Closed counter-clockwise boundary polyline (first corner repeated).
    pub fn boundary(&self) -> [Complex64; 5] {
        let c = self.corners();
        [c[0], c[1], c[2], c[3], c[0]]
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.xmin, self.ymin, self.xmax, self.ymax]
    }
}

/// Winding number of a closed polyline around `p` (the polyline is closed
/// implicitly from its last point back to its first).
pub fn winding_number(points: &[Complex64], p: Complex64) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for k in 0..points.len() {
        let a = points[k] - p;
        let b = points[(k + 1) % points.len()] - p;
        total += (b / a).arg();
    }
    total / TAU
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a) * d.conj()).re / len2;
    let s = s.clamp(0.0, 1.0);
    (p - (a + d * s)).norm()
}

/// Distance from `p` to an open polyline.
pub fn polyline_distance(p: Complex64, points: &[Complex64]) -> f64 {
    match points.len() {
        0 => f64::INFINITY,
        1 => (p - points[0]).norm(),
        _ => points
            .windows(2)
            .map(|w| segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Index of the polyline segment closest to `p` and that distance.
pub fn nearest_segment(p: Complex64, points: &[Complex64]) -> Option<(usize, f64)> {
    points
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, segment_distance(p, w[0], w[1])))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Parameters `(s, u)` of the intersection `a + s(b-a) = c + u(d-c)` when
/// the segments meet, both in `[0, 1]`.
pub fn segment_intersection(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
) -> Option<(f64, f64)> {
    let r = b - a;
    let q = d - c;
    let den = cross(r, q);
    if den == 0.0 {
        return None;
    }
    let ac = c - a;
    let s = cross(ac, q) / den;
    let u = cross(ac, r) / den;
    ((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&u)).then_some((s, u))
}

/// Whether a polyline crosses the segment `[c, d]`.
pub fn polyline_crosses(points: &[Complex64], c: Complex64, d: Complex64) -> bool {
    points
        .windows(2)
        .any(|w| segment_intersection(w[0], w[1], c, d).is_some())
}

/// Signed area of a closed polygon (positive when counter-clockwise).
pub fn signed_area(points: &[Complex64]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let o = points[0];
    let mut acc = 0.0;
    for k in 1..points.len() - 1 {
        acc += cross(points[k] - o, points[k + 1] - o);
    }
    0.5 * acc
}

/// Directed sampled Hausdorff distance from polyline `a` to polyline `b`,
/// measured at the vertices of `a` only.
pub fn directed_hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .map(|&p| polyline_distance(p, b))
        .fold(0.0, f64::max)
}

/// Symmetric sampled Hausdorff distance.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Points of a polyline that fall inside `window`, with one neighbour kept on
/// either side so the clipped pieces still reach the edge.
pub fn clip_to(points: &[Complex64], window: &Rect) -> Vec<Complex64> {
    let n = points.len();
    (0..n)
        .filter(|&k| {
            window.contains(points[k])
                || (k > 0 && window.contains(points[k - 1]))
                || (k + 1 < n && window.contains(points[k + 1]))
        })
        .map(|k| points[k])
        .collect()
}

/// Canonical representative of an angle in `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Shortest signed difference `a - b` between two angles, in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn winding_of_square() {
        let sq = Rect::new(-1.0, -1.0, 1.0, 1.0).corners();
        assert!((winding_number(&sq, c(0.2, 0.1)) - 1.0).abs() < 1e-12);
        assert!(winding_number(&sq, c(3.0, 0.0)).abs() < 1e-12);
        let mut rev = sq.to_vec();
        rev.reverse();
        assert!((winding_number(&rev, c(0.0, 0.0)) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn distances() {
        assert_eq!(segment_distance(c(0.0, 1.0), c(-1.0, 0.0), c(1.0, 0.0)), 1.0);
        assert_eq!(segment_distance(c(3.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)), 2.0);
        let a = [c(0.0, 0.0), c(1.0, 0.0)];
        let b = [c(0.0, 0.5), c(1.0, 0.5)];
        assert!((hausdorff(&a, &b) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn intersections() {
        let hit = segment_intersection(c(-1.0, 0.0), c(1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0));
        assert_eq!(hit, Some((0.5, 0.5)));
        assert!(segment_intersection(c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.5), c(0.0, 1.0)).is_none());
        assert!(polyline_crosses(
            &[c(-1.0, -1.0), c(0.0, 1.0), c(1.0, -1.0)],
            c(-2.0, 0.0),
            c(2.0, 0.0)
        ));
    }

    #[test]
    fn area_orientation() {
        let sq = Rect::new(0.0, 0.0, 2.0, 1.0).corners();
        assert!((signed_area(&sq) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn angles() {
        assert!((wrap_angle(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        assert!((angle_diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
    }
}
