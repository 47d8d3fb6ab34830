//! Small geometric primitives shared by rasterization, generation, matching
//! and stitching.
//!
//! World convention used throughout the crate: X runs along the rack row,
//! Y is elevation above the floor, Z is horizontal depth away from the
//! camera side of the aisle. All units are meters. Grids use the image
//! convention (row 0 at the top); the mapping lives in [`crate::raster`].

use serde::{Deserialize, Serialize};
use std::ops::{Add, Neg, Sub};

/// 3-vector in meters, serialized as a plain `[x, y, z]` array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Closed axis-aligned rectangle in an arbitrary 2D plane. Which world axes
/// the two coordinates map onto is decided by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Rect { min, max }
    }

    pub fn from_center_size(center: [f64; 2], size: [f64; 2]) -> Self {
        Rect {
            min: [center[0] - size[0] / 2.0, center[1] - size[1] / 2.0],
            max: [center[0] + size[0] / 2.0, center[1] + size[1] / 2.0],
        }
    }

    pub fn center(&self) -> [f64; 2] {
        [
            (self.min[0] + self.max[0]) / 2.0,
            (self.min[1] + self.max[1]) / 2.0,
        ]
    }

    pub fn size(&self) -> [f64; 2] {
        [self.max[0] - self.min[0], self.max[1] - self.min[1]]
    }

    /// Closed-interval membership on both axes.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        o.min[0] >= self.min[0]
            && o.min[1] >= self.min[1]
            && o.max[0] <= self.max[0]
            && o.max[1] <= self.max[1]
    }

    pub fn intersects(&self, o: &Rect) -> bool {
        self.min[0] <= o.max[0]
            && o.min[0] <= self.max[0]
            && self.min[1] <= o.max[1]
            && o.min[1] <= self.max[1]
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect {
            min: [self.min[0].min(o.min[0]), self.min[1].min(o.min[1])],
            max: [self.max[0].max(o.max[0]), self.max[1].max(o.max[1])],
        }
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.max[0], self.max[1]],
            [self.min[0], self.max[1]],
            [self.min[0], self.min[1]],
            [self.max[0], self.min[1]],
        ]
    }
}

/// Rectangular footprint in the X-Z ground plane, rotated by `yaw` about the
/// vertical axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Footprint {
    pub cx: f64,
    pub cz: f64,
    pub half_w: f64,
    pub half_d: f64,
    pub yaw: f64,
}

impl Footprint {
    pub fn new(cx: f64, cz: f64, width: f64, depth: f64, yaw: f64) -> Self {
        Footprint {
            cx,
            cz,
            half_w: width / 2.0,
            half_d: depth / 2.0,
            yaw,
        }
    }

    /// Corners in counter-clockwise order in the (x, z) plane.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let local = [
            [self.half_w, self.half_d],
            [-self.half_w, self.half_d],
            [-self.half_w, -self.half_d],
            [self.half_w, -self.half_d],
        ];
        local.map(|[lx, lz]| [self.cx + lx * c - lz * s, self.cz + lx * s + lz * c])
    }

    /// Inclusive membership test via edge cross products on the CCW corners.
    pub fn contains(&self, px: f64, pz: f64) -> bool {
        point_in_convex(&self.corners(), [px, pz])
    }

    /// Projection interval on the world X axis.
    pub fn span_x(&self) -> (f64, f64) {
        let r = self.half_w * self.yaw.cos().abs() + self.half_d * self.yaw.sin().abs();
        (self.cx - r, self.cx + r)
    }

    /// Projection interval on the world Z axis.
    pub fn span_z(&self) -> (f64, f64) {
        let r = self.half_w * self.yaw.sin().abs() + self.half_d * self.yaw.cos().abs();
        (self.cz - r, self.cz + r)
    }

    pub fn aabb(&self) -> Rect {
        let (x0, x1) = self.span_x();
        let (z0, z1) = self.span_z();
        Rect::new([x0, z0], [x1, z1])
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_w * self.half_d
    }

    /// True when every point of `self` is at least `gap` away from `other`
    /// along some separating axis (a conservative distance certificate; with
    /// `gap = 0` this is the exact SAT disjointness test for convex shapes).
    pub fn separated_by(&self, other: &Footprint, gap: f64) -> bool {
        let a = self.corners();
        let b = other.corners();
        separation_gap(&a, &b) >= gap
    }
}

/// Inclusive point-in-convex-polygon test; corners must be in CCW order.
pub fn point_in_convex(corners: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = corners.len();
    for i in 0..n {
        let a = corners[i];
        let b = corners[(i + 1) % n];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if cross < 0.0 {
            return false;
        }
    }
    true
}

/// Largest projection gap between two convex polygons over the edge normals
/// of both (negative when no separating axis exists among them).
pub fn separation_gap(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (first, second) in [(a, b), (b, a)] {
        let n = first.len();
        for i in 0..n {
            let p = first[i];
            let q = first[(i + 1) % n];
            let axis = [q[1] - p[1], p[0] - q[0]];
            let len = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
            if len == 0.0 {
                continue;
            }
            let axis = [axis[0] / len, axis[1] / len];
            let (a0, a1) = project(first, axis);
            let (b0, b1) = project(second, axis);
            let gap = (b0 - a1).max(a0 - b1);
            best = best.max(gap);
        }
    }
    best
}

/// SAT overlap test for two convex polygons (shared boundary counts as
/// overlap).
pub fn convex_overlap(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    separation_gap(a, b) <= 0.0
}

fn project(corners: &[[f64; 2]], axis: [f64; 2]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in corners {
        let v = c[0] * axis[0] + c[1] * axis[1];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn footprint_contains_axis_aligned() {
        let f = Footprint::new(1.0, 2.0, 2.0, 1.0, 0.0);
        assert!(f.contains(1.0, 2.0));
        assert!(f.contains(2.0, 2.5)); // corner, inclusive
        assert!(!f.contains(2.01, 2.0));
    }

    #[test]
    fn footprint_rotated_quarter_turn_swaps_spans() {
        let f = Footprint::new(0.0, 0.0, 4.0, 2.0, std::f64::consts::FRAC_PI_2);
        let (x0, x1) = f.span_x();
        let (z0, z1) = f.span_z();
        assert!((x1 - x0 - 2.0).abs() < 1e-12);
        assert!((z1 - z0 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn separation_certifies_distance() {
        let a = Footprint::new(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = Footprint::new(2.0, 0.0, 1.0, 1.0, 0.0);
        assert!(a.separated_by(&b, 0.9));
        assert!(!a.separated_by(&b, 1.1));
        // Overlapping rectangles are never separated.
        let c = Footprint::new(0.5, 0.0, 1.0, 1.0, 0.3);
        assert!(!a.separated_by(&c, 0.0));
    }

    #[test]
    fn convex_overlap_triangle_rect() {
        let tri = [[0.0, 0.0], [2.0, 0.0], [1.0, 2.0]];
        let rect = Rect::new([0.5, 0.5], [1.5, 1.0]);
        assert!(convex_overlap(&tri, &rect.corners()));
        let far = Rect::new([5.0, 5.0], [6.0, 6.0]);
        assert!(!convex_overlap(&tri, &far.corners()));
    }
}
