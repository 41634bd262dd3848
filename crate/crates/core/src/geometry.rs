//! Planar primitives and the exact distance queries the collision checker
//! is built on.
//!
//! Robot bodies are always capsules (a segment swept by a disc; a disc is a
//! capsule with coincident endpoints). Obstacles are capsules or
//! axis-aligned boxes. Two primitives intersect when their distance is
//! `<= 0`, so touching counts as contact.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

/// Axis-aligned rectangle, `min <= max` component-wise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(min: Point, max: Point) -> Self {
        Self {
            min: Point::new(min.x.min(max.x), min.y.min(max.y)),
            max: Point::new(min.x.max(max.x), min.y.max(max.y)),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        self.contains_point(other.min) && self.contains_point(other.max)
    }

    pub fn inflate(&self, r: f64) -> Aabb {
        Aabb {
            min: Point::new(self.min.x - r, self.min.y - r),
            max: Point::new(self.max.x + r, self.max.y + r),
        }
    }

    /// Gap between two boxes; zero when they overlap.
    pub fn gap(&self, other: &Aabb) -> f64 {
        let dx = (other.min.x - self.max.x)
            .max(self.min.x - other.max.x)
            .max(0.0);
        let dy = (other.min.y - self.max.y)
            .max(self.min.y - other.max.y)
            .max(0.0);
        dx.hypot(dy)
    }

    pub fn point_distance(&self, p: Point) -> f64 {
        let dx = (self.min.x - p.x).max(p.x - self.max.x).max(0.0);
        let dy = (self.min.y - p.y).max(p.y - self.max.y).max(0.0);
        dx.hypot(dy)
    }

    fn corners(&self) -> [Point; 4] {
        [
            self.min,
            Point::new(self.max.x, self.min.y),
            self.max,
            Point::new(self.min.x, self.max.y),
        ]
    }
}

/// A segment `a`–`b` inflated by `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capsule {
    pub a: Point,
    pub b: Point,
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: Point, b: Point, radius: f64) -> Self {
        Self { a, b, radius }
    }

    pub fn disc(center: Point, radius: f64) -> Self {
        Self {
            a: center,
            b: center,
            radius,
        }
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::new(self.a, self.b).inflate(self.radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Capsule(Capsule),
    Box(Aabb),
}

impl Shape {
    pub fn aabb(&self) -> Aabb {
        match self {
            Shape::Capsule(c) => c.aabb(),
            Shape::Box(b) => *b,
        }
    }

    /// Signed-free distance from a capsule to this shape: 0 on overlap.
    pub fn distance_to_capsule(&self, c: &Capsule) -> f64 {
        match self {
            Shape::Capsule(o) => {
                (segment_segment_distance(c.a, c.b, o.a, o.b) - c.radius - o.radius).max(0.0)
            }
            Shape::Box(b) => (segment_box_distance(c.a, c.b, b) - c.radius).max(0.0),
        }
    }

    /// Exact overlap test (closed sets).
    pub fn intersects_capsule(&self, c: &Capsule) -> bool {
        match self {
            Shape::Capsule(o) => {
                segment_segment_distance(c.a, c.b, o.a, o.b) <= c.radius + o.radius
            }
            Shape::Box(b) => segment_box_distance(c.a, c.b, b) <= c.radius,
        }
    }

    /// Exact point membership, used by rasterizing audits.
    pub fn contains_point(&self, p: Point) -> bool {
        match self {
            Shape::Capsule(c) => point_segment_distance(p, c.a, c.b) <= c.radius,
            Shape::Box(b) => b.contains_point(p),
        }
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

pub fn segment_segment_distance(p1: Point, p2: Point, q1: Point, q2: Point) -> f64 {
    if segments_cross(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

/// Liang–Barsky clip of the segment against the box.
fn segment_hits_box(a: Point, b: Point, bx: &Aabb) -> bool {
    let d = b.sub(a);
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (p, q) in [
        (-d.x, a.x - bx.min.x),
        (d.x, bx.max.x - a.x),
        (-d.y, a.y - bx.min.y),
        (d.y, bx.max.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

pub fn segment_box_distance(a: Point, b: Point, bx: &Aabb) -> f64 {
    if segment_hits_box(a, b, bx) {
        return 0.0;
    }
    let c = bx.corners();
    let mut best = bx.point_distance(a).min(bx.point_distance(b));
    for i in 0..4 {
        best = best.min(segment_segment_distance(a, b, c[i], c[(i + 1) % 4]));
    }
    best
}
