//! Small planar/spatial geometry kit: vectors, convex hulls, polygon tests
//! and grid traversal. Everything works on `f64` and is allocation-light so
//! the fire loop can call it every slot.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product (signed parallelogram area).
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn clamp_to(self, lo: f64, hi: f64) -> Vec2 {
        Vec2::new(self.x.clamp(lo, hi), self.y.clamp(lo, hi))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Ground-plane projection.
    pub fn xy(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn max_abs_component(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

macro_rules! impl_vec_ops {
    ($t:ty, $($f:ident),+) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t { Self { $($f: self.$f + o.$f),+ } }
        }
        impl AddAssign for $t {
            fn add_assign(&mut self, o: $t) { $(self.$f += o.$f;)+ }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t { Self { $($f: self.$f - o.$f),+ } }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, s: f64) -> $t { Self { $($f: self.$f * s),+ } }
        }
        impl Div<f64> for $t {
            type Output = $t;
            fn div(self, s: f64) -> $t { Self { $($f: self.$f / s),+ } }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t { Self { $($f: -self.$f),+ } }
        }
    };
}

impl_vec_ops!(Vec2, x, y);
impl_vec_ops!(Vec3, x, y, z);

/// Convex hull by Andrew's monotone chain, counter-clockwise, no repeated
/// last point. Collinear points on the boundary are dropped. Returns fewer
/// than 3 points when the input is degenerate.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    pts.dedup();
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * n);
    for &p in pts.iter() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if (b - a).cross(p - a) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if (b - a).cross(p - a) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Point-in-convex-polygon test with an absolute slack in meters. Vertices
/// must be in counter-clockwise order. A point within `tol` of the boundary
/// counts as inside.
pub fn point_in_convex(p: Vec2, polygon: &[Vec2], tol: f64) -> bool {
    if polygon.len() < 3 {
        return false;
    }
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let edge = b - a;
        let len = edge.norm();
        if len == 0.0 {
            continue;
        }
        // signed distance of p to the edge line, positive inside
        if edge.cross(p - a) / len < -tol {
            return false;
        }
    }
    true
}

/// Shoelace area; positive for counter-clockwise polygons.
pub fn polygon_area(polygon: &[Vec2]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let n = polygon.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += polygon[i].cross(polygon[(i + 1) % n]);
    }
    0.5 * acc
}

/// Area centroid of a simple polygon; falls back to the vertex mean for
/// degenerate (near-zero-area) inputs.
pub fn polygon_centroid(polygon: &[Vec2]) -> Vec2 {
    let a = polygon_area(polygon);
    if a.abs() < 1e-12 {
        let mut c = Vec2::ZERO;
        for &p in polygon {
            c += p;
        }
        return c / polygon.len().max(1) as f64;
    }
    let n = polygon.len();
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = polygon[i];
        let q = polygon[(i + 1) % n];
        let w = p.cross(q);
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Vec2::new(cx / (6.0 * a), cy / (6.0 * a))
}

pub fn polygon_perimeter(polygon: &[Vec2]) -> f64 {
    let n = polygon.len();
    if n < 2 {
        return 0.0;
    }
    (0..n).map(|i| polygon[i].distance(polygon[(i + 1) % n])).sum()
}

/// Place `count` points at equal arc-length along a closed polygon boundary,
/// starting from vertex 0. Output points lie exactly on the input boundary.
pub fn resample_closed(polygon: &[Vec2], count: usize) -> Vec<Vec2> {
    let n = polygon.len();
    if n <= count || n < 3 {
        return polygon.to_vec();
    }
    let total = polygon_perimeter(polygon);
    if total <= 0.0 {
        return polygon.to_vec();
    }
    let step = total / count as f64;
    let mut out = Vec::with_capacity(count);
    let mut edge = 0usize;
    let mut edge_start = 0.0; // arc-length at start of current edge
    let mut edge_len = polygon[0].distance(polygon[1 % n]);
    for k in 0..count {
        let target = k as f64 * step;
        while edge_start + edge_len < target && edge + 1 < n {
            edge_start += edge_len;
            edge += 1;
            edge_len = polygon[edge].distance(polygon[(edge + 1) % n]);
        }
        let t = if edge_len > 0.0 { (target - edge_start) / edge_len } else { 0.0 };
        let a = polygon[edge];
        let b = polygon[(edge + 1) % n];
        out.push(a + (b - a) * t.clamp(0.0, 1.0));
    }
    out
}

/// Visit every grid cell a segment passes through (floor-indexed cells of
/// side `cell`), clipped to `nx x ny`. Uses a fixed-step walk at sub-cell
/// resolution, which is robust for the short fire-perimeter edges this crate
/// deals with.
pub fn cells_on_segment(a: Vec2, b: Vec2, cell: f64, nx: usize, ny: usize, mut visit: impl FnMut(usize, usize)) {
    let len = a.distance(b);
    let steps = (len / (0.25 * cell)).ceil() as usize + 1;
    let mut last: Option<(usize, usize)> = None;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let p = a + (b - a) * t;
        let i = (p.x / cell).floor();
        let j = (p.y / cell).floor();
        if i < 0.0 || j < 0.0 {
            continue;
        }
        let (i, j) = (i as usize, j as usize);
        if i >= nx || j >= ny {
            continue;
        }
        if last != Some((i, j)) {
            visit(i, j);
            last = Some((i, j));
        }
    }
}
