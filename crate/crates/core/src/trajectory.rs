//! Manhattan trajectories: the genome encoding, decoding, and execution
//! with optional bouncing against the legal range of each joint.
//!
//! An order-`m` Manhattan trajectory for a `k`-joint robot is `m` sweeps;
//! in each sweep the joints move one at a time, joint 0 first. Delta
//! `(sweep, joint)` is stored at `sweep * k + joint`.

use serde::{Deserialize, Serialize};

use crate::cspace::{
    collides, sweep_step, Configuration, Dir, JointSweep, Metric, RobotModel, Walk, World,
};
use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 2;
pub const DEFAULT_BITS_PER_DELTA: u32 = 9;
pub const DEFAULT_LANDMARK_BITS: u32 = 8;

/// Bit layout of a genome: an optional landmark-index field followed by
/// `dof * order` delta fields, each read most-significant bit first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    spans: Vec<f64>,
    order: usize,
    bits_per_delta: u32,
    landmark_bits: u32,
}

impl EncodingSpec {
    pub fn new(
        spans: Vec<f64>,
        order: usize,
        bits_per_delta: u32,
        landmark_bits: u32,
    ) -> Result<Self> {
        if spans.is_empty() || spans.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid(
                "encoding",
                "every joint needs a positive span",
            ));
        }
        if order == 0 {
            return Err(Error::invalid(
                "encoding",
                "Manhattan order must be at least 1",
            ));
        }
        if !(1..=32).contains(&bits_per_delta) {
            return Err(Error::invalid(
                "encoding",
                "bits per delta must be in 1..=32",
            ));
        }
        if landmark_bits > 32 {
            return Err(Error::invalid(
                "encoding",
                "landmark bits must be at most 32",
            ));
        }
        Ok(Self {
            spans,
            order,
            bits_per_delta,
            landmark_bits,
        })
    }

    /// Encoding whose delta range per joint is the joint's full span.
    pub fn for_robot(
        robot: &RobotModel,
        order: usize,
        bits_per_delta: u32,
        landmark_bits: u32,
    ) -> Result<Self> {
        Self::new(robot.spans(), order, bits_per_delta, landmark_bits)
    }

    pub fn dof(&self) -> usize {
        self.spans.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_delta(&self) -> u32 {
        self.bits_per_delta
    }

    pub fn landmark_bits(&self) -> u32 {
        self.landmark_bits
    }

    pub fn spans(&self) -> &[f64] {
        &self.spans
    }

    /// Same layout without the landmark field.
    pub fn without_landmark(&self) -> Self {
        Self {
            landmark_bits: 0,
            ..self.clone()
        }
    }

    pub fn genome_len(&self) -> usize {
        self.landmark_bits as usize + self.dof() * self.order * self.bits_per_delta as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Genome(Vec<bool>);

impl Genome {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }

    /// Writes `value` MSB-first into `width` bits starting at `offset`.
    pub fn write_field(&mut self, offset: usize, width: u32, value: u64) {
        for i in 0..width as usize {
            self.0[offset + i] = (value >> (width as usize - 1 - i)) & 1 == 1;
        }
    }

    pub fn read_field(&self, offset: usize, width: u32) -> u64 {
        self.0[offset..offset + width as usize]
            .iter()
            .fold(0u64, |acc, b| (acc << 1) | u64::from(*b))
    }
}

impl std::fmt::Display for Genome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// The `dof * order` joint displacements of a Manhattan trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManhattanDeltas {
    dof: usize,
    order: usize,
    values: Vec<f64>,
}

impl ManhattanDeltas {
    pub fn new(dof: usize, order: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != dof * order {
            return Err(Error::DimensionMismatch {
                expected: dof * order,
                actual: values.len(),
            });
        }
        Ok(Self { dof, order, values })
    }

    pub fn zeros(dof: usize, order: usize) -> Self {
        Self {
            dof,
            order,
            values: vec![0.0; dof * order],
        }
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, sweep: usize, joint: usize) -> f64 {
        self.values[sweep * self.dof + joint]
    }

    fn set(&mut self, sweep: usize, joint: usize, v: f64) {
        self.values[sweep * self.dof + joint] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Decodes a genome into its start-landmark index and deltas.
///
/// Each delta field `b` maps affinely onto `[-span, +span]`; the landmark
/// field is reduced modulo `landmark_count` (0 when the layout has none).
pub fn decode(
    g: &Genome,
    spec: &EncodingSpec,
    landmark_count: usize,
) -> Result<(usize, ManhattanDeltas)> {
    if g.len() != spec.genome_len() {
        return Err(Error::GenomeLength {
            expected: spec.genome_len(),
            actual: g.len(),
        });
    }
    if landmark_count == 0 {
        return Err(Error::invalid("landmark count", "must be positive"));
    }
    let index = if spec.landmark_bits > 0 {
        (g.read_field(0, spec.landmark_bits) % landmark_count as u64) as usize
    } else {
        0
    };
    let max = ((1u64 << spec.bits_per_delta) - 1) as f64;
    let k = spec.dof();
    let mut offset = spec.landmark_bits as usize;
    let mut values = Vec::with_capacity(k * spec.order);
    for _ in 0..spec.order {
        for span in &spec.spans {
            let b = g.read_field(offset, spec.bits_per_delta) as f64;
            values.push(-span + b / max * 2.0 * span);
            offset += spec.bits_per_delta as usize;
        }
    }
    Ok((
        index,
        ManhattanDeltas {
            dof: k,
            order: spec.order,
            values,
        },
    ))
}

/// Answers "is there a wall between the current position and `target`?"
/// for the billiard fold.
trait Walls {
    /// `Some(b)` when the upper wall `b` lies below `target`.
    fn upper_below(&mut self, target: f64) -> Option<f64>;
    /// `Some(a)` when the lower wall `a` lies above `target`.
    fn lower_above(&mut self, target: f64) -> Option<f64>;
}

struct Fixed {
    lo: f64,
    hi: f64,
}

impl Walls for Fixed {
    fn upper_below(&mut self, target: f64) -> Option<f64> {
        (self.hi < target).then_some(self.hi)
    }
    fn lower_above(&mut self, target: f64) -> Option<f64> {
        (self.lo > target).then_some(self.lo)
    }
}

/// Travels `delta` from `x`, reversing at each wall, and returns where it
/// stops. Whole round trips are dropped once both walls have been hit.
fn fold(x: f64, delta: f64, walls: &mut impl Walls) -> f64 {
    let mut pos = x;
    let mut rem = delta;
    let mut lower = None;
    let mut upper = None;
    loop {
        if rem == 0.0 {
            return pos;
        }
        if rem > 0.0 {
            match walls.upper_below(pos + rem) {
                None => return pos + rem,
                Some(b) => {
                    rem -= b - pos;
                    pos = b;
                    rem = -rem;
                    upper = Some(b);
                }
            }
        } else {
            match walls.lower_above(pos + rem) {
                None => return pos + rem,
                Some(a) => {
                    rem += pos - a;
                    pos = a;
                    rem = -rem;
                    lower = Some(a);
                }
            }
        }
        if let (Some(a), Some(b)) = (lower, upper) {
            let len: f64 = b - a;
            if len <= 0.0 {
                return pos;
            }
            rem %= 2.0 * len;
        }
    }
}

/// Billiard fold of `x + delta` into `[lo, hi]`.
///
/// Returns the final position and the net displacement. The path length
/// travelled is `|delta|`; a degenerate interval leaves `x` in place.
pub fn reflect(x: f64, lo: f64, hi: f64, delta: f64) -> Result<(f64, f64)> {
    if !(lo <= x && x <= hi) {
        return Err(Error::OutsideInterval { value: x, lo, hi });
    }
    let end = fold(x, delta, &mut Fixed { lo, hi });
    Ok((end, end - x))
}

#[derive(Debug, Clone, Copy)]
enum Known {
    /// Free up to this value; nothing known further out.
    Free(f64),
    Wall(f64),
}

/// Walls discovered on demand by sweeping only as far as the fold needs.
/// Returns the same answers as a full [`crate::cspace::legal_motion_range`]
/// followed by a fixed-interval fold.
struct LazyWalls<'s, 'a> {
    sweep: &'s mut JointSweep<'a>,
    up: Known,
    down: Known,
}

impl Walls for LazyWalls<'_, '_> {
    fn upper_below(&mut self, target: f64) -> Option<f64> {
        let o = self.sweep.origin();
        if target <= o {
            return None;
        }
        match self.up {
            Known::Wall(b) => (b < target).then_some(b),
            Known::Free(v) if target <= v => None,
            Known::Free(_) => match self.sweep.walk(Dir::Up, target - o, None) {
                Walk::Blocked { last_free: b } | Walk::Limit(b) => {
                    self.up = Known::Wall(b);
                    (b < target).then_some(b)
                }
                Walk::Reached(v) => {
                    self.up = Known::Free(v);
                    None
                }
            },
        }
    }

    fn lower_above(&mut self, target: f64) -> Option<f64> {
        let o = self.sweep.origin();
        if target >= o {
            return None;
        }
        match self.down {
            Known::Wall(a) => (a > target).then_some(a),
            Known::Free(v) if target >= v => None,
            Known::Free(_) => match self.sweep.walk(Dir::Down, o - target, None) {
                Walk::Blocked { last_free: a } | Walk::Limit(a) => {
                    self.down = Known::Wall(a);
                    (a > target).then_some(a)
                }
                Walk::Reached(v) => {
                    self.down = Known::Free(v);
                    None
                }
            },
        }
    }
}

/// Smallest adjustment of `target` such that replaying the displacement
/// `y - x` from `x` (with limit clamping) lands on `y` bit for bit.
fn exact_landing(x: f64, target: f64, lo: f64, hi: f64) -> f64 {
    let mut y = target;
    for _ in 0..4 {
        let next = (x + (y - x)).clamp(lo, hi);
        if next == y {
            return y;
        }
        y = next;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecOptions {
    pub bouncing: bool,
    /// Sweep step as a fraction of each joint's span.
    pub sweep_fraction: f64,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            bouncing: true,
            sweep_fraction: crate::cspace::DEFAULT_SWEEP_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub endpoint: Configuration,
    /// Displacements actually performed; replaying them without bouncing
    /// from the same start reproduces `endpoint` exactly.
    pub effective_deltas: ManhattanDeltas,
    /// Start plus one configuration after each elementary move.
    pub waypoints: Vec<Configuration>,
    pub collided: bool,
    /// Last collision-free sample before the first collision.
    pub first_collision_point: Option<Configuration>,
}

/// Runs a Manhattan trajectory from `start`.
///
/// Joint values saturate at the joint limits. With bouncing, each move is
/// folded into the joint's legal range so the path never collides.
/// Without it, the first colliding sample ends the path: later moves are
/// void and the endpoint is the last free sample.
pub fn execute(
    robot: &RobotModel,
    world: &World,
    start: &[f64],
    deltas: &ManhattanDeltas,
    opts: ExecOptions,
) -> Result<ExecutionResult> {
    robot.check_dim(start)?;
    if deltas.dof != robot.dof() {
        return Err(Error::DimensionMismatch {
            expected: robot.dof(),
            actual: deltas.dof,
        });
    }
    if !(opts.sweep_fraction > 0.0) {
        return Err(Error::invalid("sweep fraction", "must be positive"));
    }
    if !robot.within_limits(start) {
        return Err(Error::OutOfLimits(start.to_vec()));
    }
    if collides(robot, world, start) {
        return Err(Error::InCollision(start.to_vec()));
    }
    let k = robot.dof();
    let mut q = start.to_vec();
    let mut waypoints = Vec::with_capacity(k * deltas.order + 1);
    waypoints.push(Configuration(q.clone()));
    let mut effective = ManhattanDeltas::zeros(k, deltas.order);
    let mut collided = false;
    for s in 0..deltas.order {
        for j in 0..k {
            if !collided {
                let x = q[j];
                let next = if opts.bouncing {
                    bounce_move(robot, world, &q, j, deltas.get(s, j), opts.sweep_fraction)
                } else {
                    let (next, hit) =
                        blunt_move(robot, world, &q, j, deltas.get(s, j), opts.sweep_fraction);
                    collided = hit;
                    next
                };
                effective.set(s, j, next - x);
                q[j] = next;
            }
            waypoints.push(Configuration(q.clone()));
        }
    }
    let endpoint = Configuration(q);
    Ok(ExecutionResult {
        first_collision_point: collided.then(|| endpoint.clone()),
        endpoint,
        effective_deltas: effective,
        waypoints,
        collided,
    })
}

fn bounce_move(
    robot: &RobotModel,
    world: &World,
    q: &[f64],
    joint: usize,
    delta: f64,
    fraction: f64,
) -> f64 {
    let x = q[joint];
    if delta == 0.0 {
        return x;
    }
    let spec = robot.joints()[joint];
    let step = sweep_step(robot, joint, fraction);
    let mut sweep = JointSweep::new(robot, world, q, joint, step);
    // a move that is legal as it stands is taken unchanged, even when its
    // end lies between the last free grid sample and an obstacle
    let straight = x + delta;
    if spec.lo <= straight && straight <= spec.hi {
        let target = exact_landing(x, straight, spec.lo, spec.hi);
        if target == x {
            return x;
        }
        let dir = if target > x { Dir::Up } else { Dir::Down };
        if let Walk::Reached(_) | Walk::Limit(_) = sweep.walk(dir, (target - x).abs(), Some(target))
        {
            return target;
        }
    }
    let folded = {
        let mut walls = LazyWalls {
            sweep: &mut sweep,
            up: Known::Free(x),
            down: Known::Free(x),
        };
        fold(x, delta, &mut walls)
    };
    let y = exact_landing(x, folded, spec.lo, spec.hi);
    if y == x || sweep.is_free(y) {
        return y;
    }
    // an obstacle thinner than the sweep step sits under the landing point:
    // retreat to the last grid sample, which the sweep already verified
    let n = ((folded - x).abs() / step).floor();
    let g = exact_landing(x, x + (folded - x).signum() * n * step, spec.lo, spec.hi);
    if g == x || sweep.is_free(g) {
        g
    } else {
        x
    }
}

/// Straight move without bouncing; returns the stop value and whether a
/// collision ended the move.
fn blunt_move(
    robot: &RobotModel,
    world: &World,
    q: &[f64],
    joint: usize,
    delta: f64,
    fraction: f64,
) -> (f64, bool) {
    let x = q[joint];
    let spec = robot.joints()[joint];
    let target = exact_landing(x, (x + delta).clamp(spec.lo, spec.hi), spec.lo, spec.hi);
    if target == x {
        return (x, false);
    }
    let step = sweep_step(robot, joint, fraction);
    let mut sweep = JointSweep::new(robot, world, q, joint, step);
    let dir = if target > x { Dir::Up } else { Dir::Down };
    match sweep.walk(dir, (target - x).abs(), Some(target)) {
        Walk::Reached(_) | Walk::Limit(_) => (target, false),
        Walk::Blocked { last_free } => {
            let y = exact_landing(x, last_free, spec.lo, spec.hi);
            if y == last_free || sweep.is_free(y) {
                (y, true)
            } else {
                (x, true)
            }
        }
    }
}

/// SEARCH cost: distance from where the path ends (its first collision
/// point when it collided) to the goal.
pub fn search_cost(r: &ExecutionResult, goal: &[f64], metric: &Metric) -> Result<f64> {
    let end = r.first_collision_point.as_ref().unwrap_or(&r.endpoint);
    metric.distance(end, goal)
}

/// EXPLORE cost: distance from the endpoint to the landmark set.
pub fn explore_cost<C: AsRef<[f64]>>(
    r: &ExecutionResult,
    landmarks: &[C],
    metric: &Metric,
) -> Result<f64> {
    if r.collided {
        return Err(Error::CollidedExecution);
    }
    metric.set_distance(landmarks, &r.endpoint)
}
