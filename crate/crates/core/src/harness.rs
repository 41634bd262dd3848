//! Experiment harness: single static runs, the dynamic replanning loop with
//! a randomly moving obstacle robot, parameter sweeps and their summaries.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cspace::{collides, sweep_step, Configuration, RobotModel, World};
use crate::error::{Error, Result};
use crate::planner::{derive_seed, plan, Outcome, PlanResult, PlannerConfig};
use crate::scenario::{DynamicScript, Scenario};

/// Attempts at drawing a legal obstacle motion before it holds still.
const MOTION_ATTEMPTS: usize = 64;
/// Samples checked along an obstacle motion against the controlled robot.
const MOTION_SAMPLES: usize = 16;
const MOTION_STREAM: u64 = u64::MAX;

/// Outcome of re-checking a path against a world snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audit {
    /// Configurations checked.
    pub samples: usize,
    /// First offending configuration, or a description of a malformed path.
    pub violation: Option<String>,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Re-checks `path` against `world` on the same sample grid the planner
/// certifies: from each waypoint, every `step` along the moving joint, plus
/// the next waypoint. Consecutive waypoints must differ in at most one joint.
pub fn audit_path(
    robot: &RobotModel,
    world: &World,
    path: &[Configuration],
    sweep_fraction: f64,
) -> Audit {
    let mut audit = Audit {
        samples: 0,
        violation: None,
    };
    let check = |q: &[f64], audit: &mut Audit| {
        audit.samples += 1;
        if q.len() != robot.dof() || !robot.within_limits(q) || collides(robot, world, q) {
            audit.violation = Some(format!("{q:?}"));
            false
        } else {
            true
        }
    };
    let Some(first) = path.first() else {
        audit.violation = Some("empty path".into());
        return audit;
    };
    if !check(first, &mut audit) {
        return audit;
    }
    for pair in path.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.len() != b.len() {
            audit.violation = Some("waypoint dimension changes".into());
            return audit;
        }
        let moving: Vec<usize> = (0..a.len()).filter(|&j| a[j] != b[j]).collect();
        if moving.len() > 1 {
            audit.violation = Some(format!(
                "waypoints {:?} -> {:?} move several joints",
                &a[..],
                &b[..]
            ));
            return audit;
        }
        if let Some(&j) = moving.first() {
            let step = sweep_step(robot, j, sweep_fraction);
            let (sign, reach) = ((b[j] - a[j]).signum(), (b[j] - a[j]).abs());
            let mut q = a.0.clone();
            let mut i = 1usize;
            while (i as f64) * step < reach {
                q[j] = a[j] + sign * (i as f64) * step;
                if !check(&q, &mut audit) {
                    return audit;
                }
                i += 1;
            }
        }
        if !check(b, &mut audit) {
            return audit;
        }
    }
    audit
}

/// One planning query within a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRecord {
    pub cycle: usize,
    pub snapshot: u64,
    pub seed: u64,
    pub outcome: Outcome,
    pub evaluations: usize,
    pub landmarks: usize,
    pub epsilon: f64,
    #[serde(skip)]
    pub plan_time: Duration,
    pub start: Configuration,
    pub goal: Configuration,
    /// Configurations the robot actually traversed after this plan.
    pub executed: Vec<Configuration>,
    /// Audit of `executed` (the whole path for static runs) against the
    /// snapshot it was planned in.
    pub audit: Audit,
    /// Final distance to the goal when a path was found.
    pub goal_distance: Option<f64>,
    pub reached_goal: bool,
    /// Whether the executed motion is still collision-free after the
    /// obstacle's next move. `None` for the last cycle and static runs.
    pub still_clear: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub hash: String,
    pub seed: u64,
    pub queries: Vec<QueryRecord>,
}

impl RunReport {
    /// True iff every query's audit passed and every found path ends
    /// within the goal tolerance.
    pub fn audit_passed(&self, goal_tol: f64) -> bool {
        self.queries
            .iter()
            .all(|q| q.audit.passed() && q.goal_distance.is_none_or(|d| d <= goal_tol))
    }

    pub fn plan_times(&self) -> Vec<f64> {
        self.queries
            .iter()
            .map(|q| q.plan_time.as_secs_f64())
            .collect()
    }

    pub fn mean_plan_time(&self) -> f64 {
        Summary::of(&self.plan_times()).map_or(0.0, |s| s.mean)
    }

    pub fn median_plan_time(&self) -> f64 {
        Summary::of(&self.plan_times()).map_or(0.0, |s| s.median)
    }

    /// Fraction of executed motions invalidated by the following obstacle
    /// move.
    pub fn staleness(&self) -> Option<f64> {
        let judged: Vec<bool> = self.queries.iter().filter_map(|q| q.still_clear).collect();
        (!judged.is_empty())
            .then(|| judged.iter().filter(|c| !**c).count() as f64 / judged.len() as f64)
    }

    /// Everything except wall-clock times, one query per line. Equal for
    /// equal (scenario, seed).
    pub fn transcript(&self) -> String {
        let mut out = format!("{} {} seed {}\n", self.scenario, self.hash, self.seed);
        for q in &self.queries {
            out.push_str(&serde_json::to_string(q).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

fn query_record(
    cycle: usize,
    world: &World,
    cfg: &PlannerConfig,
    start: &Configuration,
    goal: &Configuration,
    r: &PlanResult,
) -> QueryRecord {
    QueryRecord {
        cycle,
        snapshot: world.snapshot(),
        seed: cfg.seed,
        outcome: r.outcome,
        evaluations: r.evaluations,
        landmarks: r.landmarks_placed(),
        epsilon: r.epsilon,
        plan_time: r.wall_time,
        start: start.clone(),
        goal: goal.clone(),
        executed: Vec::new(),
        audit: Audit {
            samples: 0,
            violation: None,
        },
        goal_distance: None,
        reached_goal: false,
        still_clear: None,
    }
}

/// Plans the scenario's query once with `seed` and audits the result.
pub fn run_static(s: &Scenario, seed: u64) -> Result<RunReport> {
    let cfg = PlannerConfig {
        seed,
        ..s.planner.clone()
    };
    let r = plan(&s.robot, &s.world, &s.start, &s.goal, &cfg)?;
    let mut rec = query_record(0, &s.world, &cfg, &s.start, &s.goal, &r);
    if r.outcome == Outcome::Path {
        rec.audit = audit_path(&s.robot, &s.world, &r.path, cfg.sweep_fraction);
        if r.path.first() != Some(&s.start) {
            rec.audit
                .violation
                .get_or_insert_with(|| "path does not begin at the start".into());
        }
        let end = r.path.last().expect("audited path is non-empty");
        let d = s.robot.metric().distance(end, &s.goal)?;
        rec.goal_distance = Some(d);
        rec.reached_goal = d <= cfg.goal_tol;
        rec.executed = r.path;
    }
    Ok(RunReport {
        scenario: s.name.clone(),
        hash: s.hash.clone(),
        seed,
        queries: vec![rec],
    })
}

/// Prefix of `path` covering `fraction` of its weighted length. A stop
/// inside a move lands on the last sample-grid point before it.
pub fn advance(
    robot: &RobotModel,
    path: &[Configuration],
    fraction: f64,
    sweep_fraction: f64,
) -> Vec<Configuration> {
    let Some(first) = path.first() else {
        return Vec::new();
    };
    let w = robot.metric();
    let w = w.weights();
    let seg = |a: &Configuration, b: &Configuration| -> f64 {
        (0..a.len()).map(|j| w[j] * (b[j] - a[j]).abs()).sum()
    };
    let total: f64 = path.windows(2).map(|p| seg(&p[0], &p[1])).sum();
    let mut left = fraction.clamp(0.0, 1.0) * total;
    let mut out = vec![first.clone()];
    for pair in path.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let len = seg(a, b);
        if len <= left || fraction >= 1.0 {
            out.push(b.clone());
            left -= len;
            continue;
        }
        if let Some(j) = (0..a.len()).find(|&j| a[j] != b[j]) {
            let step = sweep_step(robot, j, sweep_fraction);
            let i = (left / w[j] / step).floor();
            if i >= 1.0 {
                let mut q = a.clone();
                q.0[j] = a[j] + (b[j] - a[j]).signum() * i * step;
                out.push(q);
            }
        }
        break;
    }
    out
}

struct Motion<'a> {
    robot: &'a RobotModel,
    script: &'a DynamicScript,
    obstacle: &'a crate::cspace::MovableObstacle,
    statics: World,
}

impl<'a> Motion<'a> {
    fn new(s: &'a Scenario, script: &'a DynamicScript) -> Result<Self> {
        let obstacle = s
            .world
            .movable()
            .iter()
            .find(|m| m.name == script.obstacle)
            .ok_or_else(|| {
                Error::invalid(
                    "dynamic",
                    format!("no movable obstacle named '{}'", script.obstacle),
                )
            })?;
        let others = s
            .world
            .movable()
            .iter()
            .filter(|m| m.name != script.obstacle)
            .cloned()
            .collect();
        let statics = World::new(s.world.bounds(), s.world.statics().to_vec(), others)?;
        Ok(Self {
            robot: &s.robot,
            script,
            obstacle,
            statics,
        })
    }

    /// Draws a capped uniform joint motion for the obstacle that keeps it
    /// clear of the other obstacles and keeps `keep` (the controlled
    /// robot's current configuration and every goal) collision-free along
    /// the way. Holds still if no draw succeeds.
    fn step(&self, world: &World, keep: &[&Configuration], rng: &mut ChaCha8Rng) -> Result<World> {
        let current = world
            .movable()
            .iter()
            .find(|m| m.name == self.obstacle.name)
            .expect("obstacle exists")
            .pose
            .clone();
        let joints = self.obstacle.robot.joints();
        for _ in 0..MOTION_ATTEMPTS {
            let target: Vec<f64> = joints
                .iter()
                .zip(current.iter())
                .map(|(j, &v)| {
                    let cap = self.script.max_step * j.span();
                    if cap > 0.0 {
                        v + rng.random_range(-cap..=cap)
                    } else {
                        v
                    }
                })
                .collect();
            if self.legal(world, &current, &target, keep)? {
                return world.with_pose(&self.obstacle.name, Configuration(target));
            }
        }
        world.with_pose(&self.obstacle.name, current)
    }

    fn legal(
        &self,
        world: &World,
        from: &[f64],
        to: &[f64],
        keep: &[&Configuration],
    ) -> Result<bool> {
        let body = &self.obstacle.robot;
        if !body.within_limits(to) {
            return Ok(false);
        }
        for i in 1..=MOTION_SAMPLES {
            let t = i as f64 / MOTION_SAMPLES as f64;
            let pose: Vec<f64> = from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect();
            if collides(body, &self.statics, &pose) {
                return Ok(false);
            }
            let moved = match world.with_pose(&self.obstacle.name, Configuration(pose)) {
                Ok(w) => w,
                Err(Error::Invalid { .. }) => return Ok(false),
                Err(e) => return Err(e),
            };
            if keep.iter().any(|q| collides(self.robot, &moved, q)) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Runs the dynamic replanning loop: each cycle moves the obstacle robot by
/// a seeded legal random motion, replans from the controlled robot's
/// current configuration in the new snapshot, then advances it along the
/// plan for a random fraction drawn from the pause range. Goals are
/// visited in turn; a failed plan holds the robot in place for the cycle.
pub fn run_dynamic(s: &Scenario, seed: u64) -> Result<RunReport> {
    let script = s
        .dynamic
        .as_ref()
        .ok_or_else(|| Error::invalid("scenario", format!("'{}' has no dynamic script", s.name)))?;
    let motion = Motion::new(s, script)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, MOTION_STREAM));
    let mut world = s.world.clone();
    let mut q = s.start.clone();
    let mut goal_index = 0usize;
    let mut queries: Vec<QueryRecord> = Vec::with_capacity(script.cycles);
    for cycle in 0..script.cycles {
        let keep: Vec<&Configuration> = std::iter::once(&q).chain(script.goals.iter()).collect();
        world = motion.step(&world, &keep, &mut rng)?;
        if let Some(prev) = queries.last_mut() {
            let still =
                audit_path(&s.robot, &world, &prev.executed, s.planner.sweep_fraction).passed();
            prev.still_clear = Some(still);
        }
        let goal = &script.goals[goal_index];
        let cfg = PlannerConfig {
            seed: derive_seed(seed, cycle as u64),
            ..s.planner.clone()
        };
        let r = plan(&s.robot, &world, &q, goal, &cfg)?;
        let mut rec = query_record(cycle, &world, &cfg, &q, goal, &r);
        let (lo, hi) = script.pause;
        let fraction = if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        };
        if r.outcome == Outcome::Path {
            rec.executed = advance(&s.robot, &r.path, fraction, cfg.sweep_fraction);
            let end = r.path.last().expect("found path is non-empty");
            rec.goal_distance = Some(s.robot.metric().distance(end, goal)?);
            let at = rec.executed.last().expect("executed motion is non-empty");
            rec.reached_goal = s.robot.metric().distance(at, goal)? <= cfg.goal_tol;
        } else {
            rec.executed = vec![q.clone()];
        }
        rec.audit = audit_path(&s.robot, &world, &rec.executed, cfg.sweep_fraction);
        q = rec
            .executed
            .last()
            .expect("executed motion is non-empty")
            .clone();
        if rec.reached_goal {
            goal_index = (goal_index + 1) % script.goals.len();
        }
        queries.push(rec);
    }
    Ok(RunReport {
        scenario: s.name.clone(),
        hash: s.hash.clone(),
        seed,
        queries,
    })
}

/// Runs the dynamic loop when the scenario has a script, else a static run.
pub fn run(s: &Scenario, seed: u64) -> Result<RunReport> {
    if s.dynamic.is_some() {
        run_dynamic(s, seed)
    } else {
        run_static(s, seed)
    }
}

/// Descriptive statistics of a sample. Quantiles interpolate linearly
/// between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let (i, frac) = (h.floor() as usize, h - h.floor());
            if i + 1 < v.len() {
                v[i] + frac * (v[i + 1] - v[i])
            } else {
                v[i]
            }
        };
        let (q1, q3) = (q(0.25), q(0.75));
        Some(Summary {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: q(0.5),
            q1,
            q3,
            iqr: q3 - q1,
        })
    }
}

/// Parameter grid; an empty axis keeps each scenario's own value.
#[derive(Debug, Clone, Default)]
pub struct Grid {
    pub seeds: Vec<u64>,
    pub bouncing: Vec<bool>,
    pub concurrent: Vec<bool>,
    pub rho: Vec<f64>,
    /// Cap on fitness evaluations per plan.
    pub budget: Vec<usize>,
}

impl Grid {
    /// Number of parameter points per scenario.
    pub fn points(&self) -> usize {
        [
            self.seeds.len(),
            self.bouncing.len(),
            self.concurrent.len(),
            self.rho.len(),
            self.budget.len(),
        ]
        .iter()
        .map(|n| (*n).max(1))
        .product()
    }
}

/// One planning query of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: String,
    pub seed: u64,
    pub cycle: usize,
    pub bounce: bool,
    pub concurrent: bool,
    pub rho: f64,
    pub budget: Option<usize>,
    pub outcome: Outcome,
    /// Planning wall time, seconds.
    pub time: f64,
    pub evaluations: usize,
    pub landmarks: usize,
    pub audit: bool,
}

fn axis<T: Copy>(values: &[T], own: T) -> Vec<T> {
    if values.is_empty() {
        vec![own]
    } else {
        values.to_vec()
    }
}

/// Runs every scenario at every point of the grid (cartesian product) and
/// returns one row per planning query.
pub fn sweep(scenarios: &[Scenario], grid: &Grid) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for s in scenarios {
        let p = &s.planner;
        for &bounce in &axis(&grid.bouncing, p.bouncing) {
            for &concurrent in &axis(&grid.concurrent, p.concurrent) {
                for &rho in &axis(&grid.rho, p.rho) {
                    for &budget in &axis(
                        &grid.budget.iter().map(|b| Some(*b)).collect::<Vec<_>>(),
                        p.max_evaluations,
                    ) {
                        for &seed in &axis(&grid.seeds, p.seed) {
                            let mut variant = s.clone();
                            variant.planner.bouncing = bounce;
                            variant.planner.concurrent = concurrent;
                            if rho != p.rho {
                                variant.planner.rho = rho;
                                variant.planner.goal_tol = rho / 2.0;
                            }
                            variant.planner.max_evaluations = budget;
                            variant.planner.validate()?;
                            let report = run(&variant, seed)?;
                            let tol = variant.planner.goal_tol;
                            rows.extend(report.queries.iter().map(|q| SweepRow {
                                scenario: s.name.clone(),
                                seed,
                                cycle: q.cycle,
                                bounce,
                                concurrent,
                                rho,
                                budget,
                                outcome: q.outcome,
                                time: q.plan_time.as_secs_f64(),
                                evaluations: q.evaluations,
                                landmarks: q.landmarks,
                                audit: q.audit.passed() && q.goal_distance.is_none_or(|d| d <= tol),
                            }));
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Statistics over a group of rows sharing scenario and settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub scenario: String,
    pub bounce: bool,
    pub concurrent: bool,
    pub rho: f64,
    pub budget: Option<usize>,
    pub runs: usize,
    pub paths: usize,
    pub time: Summary,
    pub evaluations: Summary,
    pub audit: bool,
}

/// Groups rows by scenario and settings, in first-appearance order.
pub fn summarize(rows: &[SweepRow]) -> Vec<GroupSummary> {
    let key = |r: &SweepRow| {
        (
            r.scenario.clone(),
            r.bounce,
            r.concurrent,
            r.rho.to_bits(),
            r.budget,
        )
    };
    let mut order = Vec::new();
    let mut groups: std::collections::HashMap<_, Vec<&SweepRow>> = std::collections::HashMap::new();
    for r in rows {
        let k = key(r);
        if !groups.contains_key(&k) {
            order.push(k.clone());
        }
        groups.entry(k).or_default().push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let g = &groups[&k];
            let times: Vec<f64> = g.iter().map(|r| r.time).collect();
            let evals: Vec<f64> = g.iter().map(|r| r.evaluations as f64).collect();
            GroupSummary {
                scenario: k.0,
                bounce: k.1,
                concurrent: k.2,
                rho: f64::from_bits(k.3),
                budget: k.4,
                runs: g.len(),
                paths: g.iter().filter(|r| r.outcome == Outcome::Path).count(),
                time: Summary::of(&times).expect("groups are non-empty"),
                evaluations: Summary::of(&evals).expect("groups are non-empty"),
                audit: g.iter().all(|r| r.audit),
            }
        })
        .collect()
}

/// Median evaluations with bouncing on divided by the median with it off,
/// per scenario that has rows for both.
pub fn evaluation_ratios(rows: &[SweepRow]) -> Vec<(String, f64)> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.scenario.as_str()) {
            names.push(&r.scenario);
        }
    }
    names
        .into_iter()
        .filter_map(|name| {
            let med = |bounce: bool| {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.scenario == name && r.bounce == bounce)
                    .map(|r| r.evaluations as f64)
                    .collect();
                Summary::of(&v).map(|s| s.median)
            };
            Some((name.to_string(), med(true)? / med(false)?))
        })
        .collect()
}

/// Writes rows as CSV with a header.
pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::invalid("csv", e.to_string()))?;
    }
    w.flush()
        .map_err(|e| Error::invalid("csv", e.to_string()))?;
    Ok(())
}
