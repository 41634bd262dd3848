//! Configuration space: joints, configurations, the metric, robot bodies,
//! worlds, and the collision / legal-range queries.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Capsule, Point, Shape};

/// Fraction of a joint's span used as the default sweep step (9-bit grid).
pub const DEFAULT_SWEEP_FRACTION: f64 = 1.0 / 512.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    /// Rotation in radians, bounded by mechanical stops (no wraparound).
    Revolute,
    /// Translation in meters.
    Prismatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub kind: JointKind,
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

impl JointSpec {
    pub fn new(kind: JointKind, lo: f64, hi: f64, weight: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(
                "joint limits",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::invalid(
                "joint weight",
                format!("need weight > 0, got {weight}"),
            ));
        }
        Ok(Self {
            kind,
            lo,
            hi,
            weight,
        })
    }

    pub fn revolute(lo: f64, hi: f64) -> Self {
        Self::new(JointKind::Revolute, lo, hi, 1.0).expect("valid revolute joint")
    }

    pub fn prismatic(lo: f64, hi: f64) -> Self {
        Self::new(JointKind::Prismatic, lo, hi, 1.0).expect("valid prismatic joint")
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// A point of the configuration space: one value per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub Vec<f64>);

impl Configuration {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dof(&self) -> usize {
        self.0.len()
    }
}

impl Deref for Configuration {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Configuration {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[f64; N]> for Configuration {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

/// Weighted Euclidean distance over joint values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    weights: Vec<f64>,
}

impl Metric {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid(
                "metric weights",
                "all weights must be positive",
            ));
        }
        Ok(Self { weights })
    }

    pub fn unit(dof: usize) -> Self {
        Self {
            weights: vec![1.0; dof],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: q.len(),
            });
        }
        Ok(())
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.distance_unchecked(a, b))
    }

    pub(crate) fn distance_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| {
                let d = w * (x - y);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Distance from `q` to the closest member of `set`.
    pub fn set_distance<C: AsRef<[f64]>>(&self, set: &[C], q: &[f64]) -> Result<f64> {
        self.nearest(set, q).map(|(_, d)| d)
    }

    /// Index and distance of the closest member of `set`; the first one wins ties.
    pub fn nearest<C: AsRef<[f64]>>(&self, set: &[C], q: &[f64]) -> Result<(usize, f64)> {
        self.check(q)?;
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut best = (0, f64::INFINITY);
        for (i, c) in set.iter().enumerate() {
            let c = c.as_ref();
            self.check(c)?;
            let d = self.distance_unchecked(c, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best)
    }
}

impl AsRef<[f64]> for Configuration {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub length: f64,
    pub thickness: f64,
}

/// Geometry generator of a robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Body {
    /// Serial planar arm; joint `i` is the angle of link `i` relative to
    /// link `i - 1` (or to the x axis for the first link).
    Arm { base: Point, links: Vec<Link> },
    /// Holonomic disc robot; joint 0 translates along x, joint 1 (when
    /// present) along y, both relative to `base`.
    Mobile { base: Point, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    joints: Vec<JointSpec>,
    body: Body,
}

impl RobotModel {
    pub fn new(joints: Vec<JointSpec>, body: Body) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::invalid("robot", "at least one joint is required"));
        }
        match &body {
            Body::Arm { links, .. } => {
                if links.len() != joints.len() {
                    return Err(Error::invalid(
                        "robot",
                        format!("arm has {} links but {} joints", links.len(), joints.len()),
                    ));
                }
                if joints.iter().any(|j| j.kind != JointKind::Revolute) {
                    return Err(Error::invalid("robot", "arm joints must be revolute"));
                }
                if links
                    .iter()
                    .any(|l| !(l.length > 0.0) || !(l.thickness >= 0.0))
                {
                    return Err(Error::invalid(
                        "robot",
                        "links need positive length, non-negative thickness",
                    ));
                }
            }
            Body::Mobile { radius, .. } => {
                if joints.len() > 2 {
                    return Err(Error::invalid(
                        "robot",
                        "a mobile robot has one or two joints",
                    ));
                }
                if joints.iter().any(|j| j.kind != JointKind::Prismatic) {
                    return Err(Error::invalid(
                        "robot",
                        "mobile robot joints must be prismatic",
                    ));
                }
                if !(*radius >= 0.0) {
                    return Err(Error::invalid("robot", "radius must be non-negative"));
                }
            }
        }
        Ok(Self { joints, body })
    }

    pub fn planar_arm(base: Point, links: Vec<Link>, limits: (f64, f64)) -> Result<Self> {
        let joints = links
            .iter()
            .map(|_| JointSpec::new(JointKind::Revolute, limits.0, limits.1, 1.0))
            .collect::<Result<Vec<_>>>()?;
        Self::new(joints, Body::Arm { base, links })
    }

    pub fn mobile(bounds: &[(f64, f64)], radius: f64) -> Result<Self> {
        let joints = bounds
            .iter()
            .map(|&(lo, hi)| JointSpec::new(JointKind::Prismatic, lo, hi, 1.0))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            joints,
            Body::Mobile {
                base: Point::new(0.0, 0.0),
                radius,
            },
        )
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn metric(&self) -> Metric {
        Metric {
            weights: self.joints.iter().map(|j| j.weight).collect(),
        }
    }

    /// Weighted diagonal of the joint box.
    pub fn diameter(&self) -> f64 {
        self.joints
            .iter()
            .map(|j| (j.weight * j.span()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn spans(&self) -> Vec<f64> {
        self.joints.iter().map(JointSpec::span).collect()
    }

    pub fn check_dim(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                actual: q.len(),
            });
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.dof() && self.joints.iter().zip(q).all(|(j, v)| j.contains(*v))
    }

    /// Capsules making up the robot at `q`.
    pub fn geometry(&self, q: &[f64]) -> Vec<Capsule> {
        let mut out = Vec::with_capacity(self.geometry_len());
        self.geometry_into(q, &mut out);
        out
    }

    pub fn geometry_len(&self) -> usize {
        match &self.body {
            Body::Arm { links, .. } => links.len(),
            Body::Mobile { .. } => 1,
        }
    }

    pub fn geometry_into(&self, q: &[f64], out: &mut Vec<Capsule>) {
        out.clear();
        match &self.body {
            Body::Arm { base, links } => {
                let mut p = *base;
                let mut theta = 0.0;
                for (link, angle) in links.iter().zip(q) {
                    theta += angle;
                    let next = Point::new(
                        p.x + link.length * theta.cos(),
                        p.y + link.length * theta.sin(),
                    );
                    out.push(Capsule::new(p, next, link.thickness / 2.0));
                    p = next;
                }
            }
            Body::Mobile { base, radius } => {
                let x = base.x + q.first().copied().unwrap_or(0.0);
                let y = base.y + q.get(1).copied().unwrap_or(0.0);
                out.push(Capsule::disc(Point::new(x, y), *radius));
            }
        }
    }

    /// Index of the first capsule displaced when `joint` moves.
    pub(crate) fn first_moving_capsule(&self, joint: usize) -> usize {
        match &self.body {
            Body::Arm { .. } => joint,
            Body::Mobile { .. } => 0,
        }
    }

    /// Upper bound on how far any robot point travels per unit change of
    /// `joint` (the other joints held fixed).
    pub(crate) fn motion_radius(&self, joint: usize) -> f64 {
        match &self.body {
            Body::Arm { links, .. } => links[joint..].iter().map(|l| l.length).sum(),
            Body::Mobile { .. } => 1.0,
        }
    }
}

/// An obstacle that is itself a robot (or a rigid body) with a pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovableObstacle {
    pub name: String,
    pub robot: RobotModel,
    pub pose: Configuration,
}

#[derive(Debug, Clone, PartialEq)]
struct Obstacle {
    shape: Shape,
    aabb: Aabb,
}

/// Static and movable obstacles inside a bounding rectangle. Immutable;
/// pose updates produce a new snapshot with an incremented id.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    bounds: Aabb,
    statics: Vec<Shape>,
    movable: Vec<MovableObstacle>,
    snapshot: u64,
    obstacles: Vec<Obstacle>,
}

impl World {
    pub fn new(bounds: Aabb, statics: Vec<Shape>, movable: Vec<MovableObstacle>) -> Result<Self> {
        for s in &statics {
            if !bounds.contains(&s.aabb()) {
                return Err(Error::invalid(
                    "world",
                    format!("obstacle {s:?} leaves the world bounds"),
                ));
            }
        }
        let mut names = std::collections::HashSet::new();
        for m in &movable {
            if !names.insert(m.name.as_str()) {
                return Err(Error::invalid(
                    "world",
                    format!("duplicate movable obstacle '{}'", m.name),
                ));
            }
            Self::check_movable(&bounds, m)?;
        }
        let mut w = Self {
            bounds,
            statics,
            movable,
            snapshot: 0,
            obstacles: Vec::new(),
        };
        w.rebuild();
        Ok(w)
    }

    pub fn empty(bounds: Aabb) -> Self {
        Self::new(bounds, Vec::new(), Vec::new()).expect("empty world is valid")
    }

    fn check_movable(bounds: &Aabb, m: &MovableObstacle) -> Result<()> {
        if !m.robot.within_limits(&m.pose) {
            return Err(Error::invalid(
                "world",
                format!("movable '{}' pose violates its limits", m.name),
            ));
        }
        for c in m.robot.geometry(&m.pose) {
            if !bounds.contains(&c.aabb()) {
                return Err(Error::invalid(
                    "world",
                    format!("movable '{}' leaves the world bounds", m.name),
                ));
            }
        }
        Ok(())
    }

    fn rebuild(&mut self) {
        self.obstacles = self
            .statics
            .iter()
            .copied()
            .chain(
                self.movable
                    .iter()
                    .flat_map(|m| m.robot.geometry(&m.pose).into_iter().map(Shape::Capsule)),
            )
            .map(|shape| Obstacle {
                aabb: shape.aabb(),
                shape,
            })
            .collect();
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn statics(&self) -> &[Shape] {
        &self.statics
    }

    pub fn movable(&self) -> &[MovableObstacle] {
        &self.movable
    }

    pub fn snapshot(&self) -> u64 {
        self.snapshot
    }

    /// Every obstacle primitive at the current poses.
    pub fn shapes(&self) -> impl Iterator<Item = &Shape> {
        self.obstacles.iter().map(|o| &o.shape)
    }

    /// New snapshot with the named movable obstacle at `pose`.
    pub fn with_pose(&self, name: &str, pose: Configuration) -> Result<World> {
        let mut next = self.clone();
        let m = next
            .movable
            .iter_mut()
            .find(|m| m.name == name)
            .ok_or_else(|| {
                Error::invalid("world", format!("no movable obstacle named '{name}'"))
            })?;
        m.robot.check_dim(&pose)?;
        m.pose = pose;
        Self::check_movable(&self.bounds, m)?;
        next.snapshot = self.snapshot + 1;
        next.rebuild();
        Ok(next)
    }

    fn capsule_hits(&self, c: &Capsule) -> bool {
        let inside = self.bounds.inflate(-c.radius);
        if !(inside.min.x <= inside.max.x && inside.min.y <= inside.max.y)
            || !inside.contains_point(c.a)
            || !inside.contains_point(c.b)
        {
            return true;
        }
        let bb = c.aabb();
        self.obstacles
            .iter()
            .any(|o| o.aabb.gap(&bb) <= 0.0 && o.shape.intersects_capsule(c))
    }

    /// Lower bound on the distance from `c` to every obstacle and to the
    /// bounds; 0 means contact.
    fn capsule_clearance(&self, c: &Capsule, mut best: f64) -> f64 {
        let wall = [
            c.a.x - self.bounds.min.x,
            c.b.x - self.bounds.min.x,
            self.bounds.max.x - c.a.x,
            self.bounds.max.x - c.b.x,
            c.a.y - self.bounds.min.y,
            c.b.y - self.bounds.min.y,
            self.bounds.max.y - c.a.y,
            self.bounds.max.y - c.b.y,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
            - c.radius;
        best = best.min(wall.max(0.0));
        let bb = c.aabb();
        for o in &self.obstacles {
            if best <= 0.0 {
                break;
            }
            if o.aabb.gap(&bb) >= best {
                continue;
            }
            best = best.min(o.shape.distance_to_capsule(c));
        }
        best
    }
}

/// True iff some robot primitive at `q` touches an obstacle or leaves the
/// world bounds.
pub fn collides(robot: &RobotModel, world: &World, q: &[f64]) -> bool {
    robot.geometry(q).iter().any(|c| world.capsule_hits(c))
}

/// Closed interval of joint values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Sweep step for `joint` at the given fraction of its span.
pub fn sweep_step(robot: &RobotModel, joint: usize, fraction: f64) -> f64 {
    robot.joints[joint].span() * fraction
}

/// Maximal collision-free interval of `joint` around `q[joint]`, sampled
/// every `step` (joint units) with all other joints fixed. Each endpoint is
/// the last collision-free sample (or the joint limit when that is free).
pub fn legal_motion_range(
    robot: &RobotModel,
    world: &World,
    q: &[f64],
    joint: usize,
    step: f64,
) -> Result<Interval> {
    robot.check_dim(q)?;
    if joint >= robot.dof() {
        return Err(Error::JointIndex {
            index: joint,
            dof: robot.dof(),
        });
    }
    if !(step > 0.0) {
        return Err(Error::invalid(
            "sweep step",
            format!("must be positive, got {step}"),
        ));
    }
    if !robot.within_limits(q) {
        return Err(Error::OutOfLimits(q.to_vec()));
    }
    if collides(robot, world, q) {
        return Err(Error::InCollision(q.to_vec()));
    }
    let mut sweep = JointSweep::new(robot, world, q, joint, step);
    let hi = sweep.walk(Dir::Up, f64::INFINITY, None).bound();
    let lo = sweep.walk(Dir::Down, f64::INFINITY, None).bound();
    Ok(Interval::new(lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dir {
    Up,
    Down,
}

impl Dir {
    fn sign(self) -> f64 {
        match self {
            Dir::Up => 1.0,
            Dir::Down => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Walk {
    /// The sample after `last_free` collides.
    Blocked { last_free: f64 },
    /// The joint limit was reached collision-free.
    Limit(f64),
    /// Every sample up to and including this value is free; nothing is
    /// known beyond it.
    Reached(f64),
}

impl Walk {
    /// Interval endpoint, for walks run with unbounded reach.
    pub(crate) fn bound(self) -> f64 {
        match self {
            Walk::Blocked { last_free } => last_free,
            Walk::Limit(v) | Walk::Reached(v) => v,
        }
    }
}

/// Single-joint sweep machinery shared by range queries and execution.
///
/// Samples sit at `origin ± i·step`, clamped to the joint limit. A free
/// sample whose clearance is `c` proves the next `c / (radius·step)`
/// samples free, so those are skipped without changing the outcome of the
/// sampled sweep.
pub(crate) struct JointSweep<'a> {
    robot: &'a RobotModel,
    world: &'a World,
    q: Vec<f64>,
    joint: usize,
    origin: f64,
    step: f64,
    first_capsule: usize,
    radius: f64,
    scratch: Vec<Capsule>,
    origin_clearance: Option<f64>,
    pub(crate) checks: usize,
}

impl<'a> JointSweep<'a> {
    pub(crate) fn new(
        robot: &'a RobotModel,
        world: &'a World,
        q: &[f64],
        joint: usize,
        step: f64,
    ) -> Self {
        Self {
            robot,
            world,
            q: q.to_vec(),
            joint,
            origin: q[joint],
            step,
            first_capsule: robot.first_moving_capsule(joint),
            radius: robot.motion_radius(joint),
            scratch: Vec::with_capacity(robot.geometry_len()),
            origin_clearance: None,
            checks: 0,
        }
    }

    pub(crate) fn origin(&self) -> f64 {
        self.origin
    }

    /// Clearance of the moving part of the robot with the joint at `v`.
    fn clearance_at(&mut self, v: f64) -> f64 {
        self.checks += 1;
        self.q[self.joint] = v;
        self.robot.geometry_into(&self.q, &mut self.scratch);
        let mut best = f64::INFINITY;
        for c in &self.scratch[self.first_capsule..] {
            best = self.world.capsule_clearance(c, best);
            if best <= 0.0 {
                return 0.0;
            }
        }
        best
    }

    /// Number of further samples proven free by clearance `c`.
    fn free_run(&self, c: f64) -> usize {
        if self.radius <= 0.0 {
            return usize::MAX / 4;
        }
        let safe = 0.999 * c / self.radius;
        let n = (safe / self.step).floor();
        if n >= 1e15 {
            usize::MAX / 4
        } else {
            n as usize
        }
    }

    fn sample(&self, dir: Dir, i: usize, limit: f64) -> (f64, bool) {
        let v = self.origin + dir.sign() * (i as f64) * self.step;
        match dir {
            Dir::Up if v >= limit => (limit, true),
            Dir::Down if v <= limit => (limit, true),
            _ => (v, false),
        }
    }

    /// Walks the sample grid from the origin in `dir`.
    ///
    /// Without `end` the walk stops at the first sample at or beyond
    /// `reach` (distance from the origin). With `end` it checks grid samples
    /// strictly before `reach` and then `end` itself, which must lie within
    /// the joint limits at distance `reach`.
    pub(crate) fn walk(&mut self, dir: Dir, reach: f64, end: Option<f64>) -> Walk {
        let spec = self.robot.joints[self.joint];
        let limit = match dir {
            Dir::Up => spec.hi,
            Dir::Down => spec.lo,
        };
        let mut last_free = self.origin;
        let c0 = match self.origin_clearance {
            Some(c) => c,
            None => {
                let c = self.clearance_at(self.origin);
                self.origin_clearance = Some(c);
                c
            }
        };
        // samples up to `proven` are known to be free
        let mut proven = if c0 > 0.0 { self.free_run(c0) } else { 0 };
        let mut i = 1usize;
        loop {
            let (v, at_limit) = self.sample(dir, i, limit);
            let past = (i as f64) * self.step >= reach;
            if let (Some(end), true) = (end, past) {
                let free = i <= proven || self.clearance_at(end) > 0.0;
                return if free {
                    Walk::Reached(end)
                } else {
                    Walk::Blocked { last_free }
                };
            }
            if i > proven {
                let c = self.clearance_at(v);
                if c <= 0.0 {
                    return Walk::Blocked { last_free };
                }
                proven = i.saturating_add(self.free_run(c));
            }
            if at_limit {
                return Walk::Limit(v);
            }
            if past {
                return Walk::Reached(v);
            }
            last_free = v;
            i += 1;
            // jump over proven samples, but stop on the limit or reach sample
            if proven > i {
                let to_limit = ((limit - self.origin).abs() / self.step).ceil();
                let to_reach = if reach.is_finite() {
                    (reach / self.step).ceil()
                } else {
                    f64::INFINITY
                };
                let stop = to_limit.min(to_reach);
                let target = (proven as f64).min(stop).max(i as f64) as usize;
                if target > i {
                    let (v, _) = self.sample(dir, target - 1, limit);
                    last_free = v;
                    i = target;
                }
            }
        }
    }

    /// Free-space check of an arbitrary joint value.
    pub(crate) fn is_free(&mut self, v: f64) -> bool {
        self.clearance_at(v) > 0.0
    }
}
