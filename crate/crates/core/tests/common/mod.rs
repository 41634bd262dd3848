//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use ariadne_core::geometry::{Aabb, Point, Shape};
use ariadne_core::scenario::fixture;
use ariadne_core::trajectory::{DEFAULT_BITS_PER_DELTA, DEFAULT_LANDMARK_BITS};
use ariadne_core::{
    collides, decode, execute, Configuration, EncodingSpec, ExecOptions, Genome, PlannerConfig,
    RobotModel, World,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Billiard motion simulated wall hit by wall: travel to the next wall,
/// flip direction, repeat until the distance is used up.
pub fn reflect_oracle(x: f64, a: f64, b: f64, delta: f64) -> f64 {
    if a == b {
        return x;
    }
    let mut pos = x;
    let mut dir = delta.signum();
    let mut left = delta.abs();
    while left > 0.0 {
        let room = if dir > 0.0 { b - pos } else { pos - a };
        if left <= room {
            pos += dir * left;
            break;
        }
        left -= room;
        pos = if dir > 0.0 { b } else { a };
        dir = -dir;
    }
    pos
}

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.x + t * dx, a.y + t * dy);
    ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()
}

fn in_shape(p: Point, s: &Shape) -> bool {
    match s {
        Shape::Box(b) => b.min.x <= p.x && p.x <= b.max.x && b.min.y <= p.y && p.y <= b.max.y,
        Shape::Capsule(c) => seg_dist(p, c.a, c.b) <= c.radius,
    }
}

/// Rasterized collision test: the robot collides iff some raster cell
/// centre lies inside both the robot and an obstacle (or outside the
/// world bounds).
pub fn raster_collides(robot: &RobotModel, world: &World, q: &[f64], cell: f64) -> bool {
    let caps = robot.geometry(q);
    let (mut lo, mut hi) = (
        Point::new(f64::INFINITY, f64::INFINITY),
        Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for c in &caps {
        lo.x = lo.x.min(c.a.x.min(c.b.x) - c.radius);
        lo.y = lo.y.min(c.a.y.min(c.b.y) - c.radius);
        hi.x = hi.x.max(c.a.x.max(c.b.x) + c.radius);
        hi.y = hi.y.max(c.a.y.max(c.b.y) + c.radius);
    }
    let bounds = world.bounds();
    let shapes: Vec<Shape> = world.shapes().copied().collect();
    let (i0, i1) = ((lo.x / cell).floor() as i64, (hi.x / cell).ceil() as i64);
    let (j0, j1) = ((lo.y / cell).floor() as i64, (hi.y / cell).ceil() as i64);
    for i in i0..=i1 {
        for j in j0..=j1 {
            let p = Point::new((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell);
            if !caps.iter().any(|c| seg_dist(p, c.a, c.b) <= c.radius) {
                continue;
            }
            let outside = p.x < bounds.min.x
                || p.x > bounds.max.x
                || p.y < bounds.min.y
                || p.y > bounds.max.y;
            if outside || shapes.iter().any(|s| in_shape(p, s)) {
                return true;
            }
        }
    }
    false
}

/// Smallest gap between the robot and any obstacle or the bounds.
pub fn clearance(robot: &RobotModel, world: &World, q: &[f64]) -> f64 {
    let b = world.bounds();
    robot
        .geometry(q)
        .iter()
        .map(|c| {
            let walls = [
                c.a.x - b.min.x,
                c.b.x - b.min.x,
                b.max.x - c.a.x,
                b.max.x - c.b.x,
                c.a.y - b.min.y,
                c.b.y - b.min.y,
                b.max.y - c.a.y,
                b.max.y - c.b.y,
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
                - c.radius;
            world
                .shapes()
                .map(|s| s.distance_to_capsule(c))
                .fold(walls.abs(), f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// 4-connected flood fill over a grid of 2-DOF configurations spaced `res`
/// apart in each joint. Start and goal snap to their nearest grid points.
pub fn flood_connected(
    robot: &RobotModel,
    world: &World,
    start: &[f64],
    goal: &[f64],
    res: f64,
) -> bool {
    assert_eq!(robot.dof(), 2);
    let j = robot.joints();
    let n: Vec<usize> = j
        .iter()
        .map(|s| (s.span() / res).round() as usize + 1)
        .collect();
    let val = |k: usize, i: usize| j[k].lo + j[k].span() * i as f64 / (n[k] - 1) as f64;
    let snap =
        |k: usize, v: f64| (((v - j[k].lo) / j[k].span()) * (n[k] - 1) as f64).round() as usize;
    let free = |a: usize, b: usize| !collides(robot, world, &[val(0, a), val(1, b)]);
    let s = (snap(0, start[0]), snap(1, start[1]));
    let g = (snap(0, goal[0]), snap(1, goal[1]));
    if !free(s.0, s.1) || !free(g.0, g.1) {
        return false;
    }
    let mut seen = vec![false; n[0] * n[1]];
    let mut queue = VecDeque::from([s]);
    seen[s.0 * n[1] + s.1] = true;
    while let Some((a, b)) = queue.pop_front() {
        if (a, b) == g {
            return true;
        }
        let next = [
            (a.wrapping_sub(1), b),
            (a + 1, b),
            (a, b.wrapping_sub(1)),
            (a, b + 1),
        ];
        for (x, y) in next {
            if x < n[0] && y < n[1] && !seen[x * n[1] + y] && free(x, y) {
                seen[x * n[1] + y] = true;
                queue.push_back((x, y));
            }
        }
    }
    false
}

/// Independent soundness check of a planned path: same sample grid as the
/// planner (every `fraction * span` from each waypoint along the moving
/// joint, plus the next waypoint), single-joint moves only.
pub fn path_is_sound(
    robot: &RobotModel,
    world: &World,
    path: &[Configuration],
    fraction: f64,
) -> bool {
    let ok = |q: &[f64]| robot.within_limits(q) && !collides(robot, world, q);
    if path.is_empty() || !ok(&path[0]) {
        return false;
    }
    for w in path.windows(2) {
        let moving: Vec<usize> = (0..w[0].len()).filter(|&k| w[0][k] != w[1][k]).collect();
        if moving.len() > 1 {
            return false;
        }
        if let Some(&k) = moving.first() {
            let step = robot.joints()[k].span() * fraction;
            let d = w[1][k] - w[0][k];
            let mut q = w[0].0.clone();
            let mut i = 1.0;
            while i * step < d.abs() {
                q[k] = w[0][k] + d.signum() * i * step;
                if !ok(&q) {
                    return false;
                }
                i += 1.0;
            }
        }
        if !ok(&w[1]) {
            return false;
        }
    }
    true
}

/// A random grid world for a disc robot: the unit square split into
/// `cells`×`cells` squares, each blocked with probability `p`; start and
/// goal at the centres of two distinct open squares.
pub struct GridWorld {
    pub robot: RobotModel,
    pub world: World,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

pub fn grid_world(seed: u64, cells: usize, p: f64, radius: f64) -> GridWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = 1.0 / cells as f64;
    let mut open = Vec::new();
    let mut boxes = Vec::new();
    for i in 0..cells {
        for j in 0..cells {
            if rng.random::<f64>() < p {
                let min = Point::new(i as f64 * size, j as f64 * size);
                boxes.push(Shape::Box(Aabb::new(
                    min,
                    Point::new(min.x + size, min.y + size),
                )));
            } else {
                open.push(((i as f64 + 0.5) * size, (j as f64 + 0.5) * size));
            }
        }
    }
    while open.len() < 2 {
        boxes.pop();
        open.push((0.5 * size, 0.5 * size));
        open.push((1.0 - 0.5 * size, 1.0 - 0.5 * size));
    }
    let a = rng.random_range(0..open.len());
    let mut b = rng.random_range(0..open.len() - 1);
    if b >= a {
        b += 1;
    }
    let bounds = Aabb::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
    GridWorld {
        robot: RobotModel::mobile(&[(0.0, 1.0), (0.0, 1.0)], radius).unwrap(),
        world: World::new(bounds, boxes, Vec::new()).unwrap(),
        start: vec![open[a].0, open[a].1],
        goal: vec![open[b].0, open[b].1],
    }
}

/// Planner settings for grid worlds at resolution `rho`.
pub fn grid_config(g: &GridWorld, rho: f64, seed: u64) -> PlannerConfig {
    PlannerConfig {
        rho,
        goal_tol: rho / 2.0,
        seed,
        ..PlannerConfig::for_robot(&g.robot)
    }
}

pub fn random_genome(rng: &mut ChaCha8Rng, len: usize) -> Genome {
    Genome::new((0..len).map(|_| rng.random::<bool>()).collect())
}

pub fn search_spec(robot: &RobotModel) -> EncodingSpec {
    EncodingSpec::for_robot(robot, 2, DEFAULT_BITS_PER_DELTA, DEFAULT_LANDMARK_BITS)
        .unwrap()
        .without_landmark()
}

/// Share of random genomes whose path ends above the slot, with and
/// without bouncing (without bouncing the path must also stay clear).
pub fn corridor_exit_rates(samples: usize, seed: u64) -> (f64, f64) {
    let s = fixture("corridor").unwrap();
    let spec = search_spec(&s.robot);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bounced, mut plain) = (0, 0);
    for _ in 0..samples {
        let (_, d) = decode(&random_genome(&mut rng, spec.genome_len()), &spec, 1).unwrap();
        let b = execute(&s.robot, &s.world, &s.start, &d, ExecOptions::default()).unwrap();
        if b.endpoint[1] > 0.6 {
            bounced += 1;
        }
        let p = execute(
            &s.robot,
            &s.world,
            &s.start,
            &d,
            ExecOptions {
                bouncing: false,
                ..ExecOptions::default()
            },
        )
        .unwrap();
        if !p.collided && p.endpoint[1] > 0.6 {
            plain += 1;
        }
    }
    (
        bounced as f64 / samples as f64,
        plain as f64 / samples as f64,
    )
}
