//! Scenario files: robot, world, query, planner settings and an optional
//! dynamic-obstacle script, in TOML.
//!
//! Lengths are meters, angles radians. Unknown keys are rejected and every
//! diagnostic names the offending line.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::cspace::{
    Body, Configuration, JointKind, JointSpec, Link, MovableObstacle, RobotModel, World,
};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Capsule, Point, Shape};
use crate::planner::{GaSettings, PlannerConfig};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub robot: Spanned<RobotDef>,
    pub world: WorldDef,
    pub query: Spanned<QueryDef>,
    #[serde(default)]
    pub planner: PlannerDef,
    #[serde(default)]
    pub dynamic: Option<Spanned<DynamicDef>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotKind {
    Arm,
    Mobile,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RobotDef {
    pub kind: RobotKind,
    /// Arm: shoulder position. Mobile: origin the joint values offset from.
    #[serde(default)]
    pub base: Option<[f64; 2]>,
    /// Arm links, base to tip.
    #[serde(default)]
    pub links: Option<Vec<LinkDef>>,
    /// Mobile disc radius (m).
    #[serde(default)]
    pub radius: Option<f64>,
    /// Shared limits (rad) for every arm joint; alternative to `joints`.
    #[serde(default)]
    pub joint_limits: Option<[f64; 2]>,
    #[serde(default)]
    pub joints: Option<Vec<JointDef>>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDef {
    pub length: f64,
    #[serde(default)]
    pub thickness: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct JointDef {
    pub limits: [f64; 2],
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WorldDef {
    /// `[[min_x, min_y], [max_x, max_y]]` (m).
    pub bounds: [[f64; 2]; 2],
    #[serde(default)]
    pub obstacles: Vec<Spanned<ObstacleDef>>,
    #[serde(default)]
    pub movable: Vec<Spanned<MovableDef>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleKind {
    Box,
    Disc,
    Segment,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleDef {
    #[serde(rename = "type")]
    pub kind: ObstacleKind,
    #[serde(default)]
    pub min: Option<[f64; 2]>,
    #[serde(default)]
    pub max: Option<[f64; 2]>,
    #[serde(default)]
    pub center: Option<[f64; 2]>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub a: Option<[f64; 2]>,
    #[serde(default)]
    pub b: Option<[f64; 2]>,
    #[serde(default)]
    pub thickness: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MovableDef {
    pub name: String,
    pub pose: Vec<f64>,
    pub robot: RobotDef,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QueryDef {
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerMode {
    #[default]
    Full,
    SearchOnly,
}

/// Overrides of the planner defaults; every field is optional.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerDef {
    pub rho: Option<f64>,
    pub goal_tol: Option<f64>,
    pub max_landmarks: Option<usize>,
    pub order: Option<usize>,
    pub bits_per_delta: Option<u32>,
    pub landmark_bits: Option<u32>,
    pub sweep_fraction: Option<f64>,
    pub bounce: Option<bool>,
    pub concurrent: Option<bool>,
    pub mode: Option<PlannerMode>,
    pub search_from_best: Option<bool>,
    pub max_evaluations: Option<usize>,
    pub search: Option<GaSettings>,
    pub explore: Option<GaSettings>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicDef {
    /// Name of the movable obstacle driven by the random-motion generator.
    pub obstacle: String,
    pub cycles: usize,
    /// Per-cycle cap on each obstacle joint's motion, as a fraction of its span.
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    /// Range of the fraction of each planned path executed before the
    /// robot is stopped; values of 1 or more complete the path.
    #[serde(default = "default_pause")]
    pub pause: [f64; 2],
    /// Goals visited in turn; defaults to `[query.goal, query.start]`.
    #[serde(default)]
    pub goals: Option<Vec<Vec<f64>>>,
}

fn default_max_step() -> f64 {
    0.1
}

fn default_pause() -> [f64; 2] {
    [0.2, 1.0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicScript {
    pub obstacle: String,
    pub cycles: usize,
    pub max_step: f64,
    pub pause: (f64, f64),
    pub goals: Vec<Configuration>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub robot: RobotModel,
    pub world: World,
    pub start: Configuration,
    pub goal: Configuration,
    pub planner: PlannerConfig,
    pub dynamic: Option<DynamicScript>,
    /// SHA-256 of the source text, hex.
    pub hash: String,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|b| *b == b'\n')
        .count()
        + 1
}

struct Ctx<'t> {
    text: &'t str,
}

impl Ctx<'_> {
    fn err<T>(&self, span: std::ops::Range<usize>, msg: impl std::fmt::Display) -> Result<T> {
        Err(Error::Scenario(format!(
            "line {}: {msg}",
            line_of(self.text, span.start)
        )))
    }

    fn robot(&self, def: &RobotDef, span: std::ops::Range<usize>) -> Result<RobotModel> {
        let base = Point::from(def.base.unwrap_or([0.0, 0.0]));
        let built = match def.kind {
            RobotKind::Arm => {
                let Some(links) = &def.links else {
                    return self.err(span, "arm robot needs `links`");
                };
                if def.radius.is_some() {
                    return self.err(span, "`radius` applies to mobile robots only");
                }
                let joints = match (&def.joints, def.joint_limits) {
                    (Some(j), None) => j
                        .iter()
                        .map(|j| {
                            JointSpec::new(JointKind::Revolute, j.limits[0], j.limits[1], j.weight)
                        })
                        .collect::<Result<Vec<_>>>(),
                    (None, Some(l)) => links
                        .iter()
                        .map(|_| JointSpec::new(JointKind::Revolute, l[0], l[1], 1.0))
                        .collect(),
                    _ => {
                        return self.err(
                            span,
                            "arm robot needs exactly one of `joints` or `joint_limits`",
                        )
                    }
                };
                let links = links
                    .iter()
                    .map(|l| Link {
                        length: l.length,
                        thickness: l.thickness,
                    })
                    .collect();
                joints.and_then(|j| RobotModel::new(j, Body::Arm { base, links }))
            }
            RobotKind::Mobile => {
                let (Some(radius), Some(joints)) = (def.radius, &def.joints) else {
                    return self.err(span, "mobile robot needs `radius` and `joints`");
                };
                if def.links.is_some() || def.joint_limits.is_some() {
                    return self.err(span, "`links`/`joint_limits` apply to arms only");
                }
                joints
                    .iter()
                    .map(|j| {
                        JointSpec::new(JointKind::Prismatic, j.limits[0], j.limits[1], j.weight)
                    })
                    .collect::<Result<Vec<_>>>()
                    .and_then(|j| RobotModel::new(j, Body::Mobile { base, radius }))
            }
        };
        built.or_else(|e| self.err(span, e))
    }

    fn obstacle(&self, def: &ObstacleDef, span: std::ops::Range<usize>) -> Result<Shape> {
        let shape = match def.kind {
            ObstacleKind::Box => match (def.min, def.max) {
                (Some(a), Some(b)) if a[0] < b[0] && a[1] < b[1] => {
                    Shape::Box(Aabb::new(a.into(), b.into()))
                }
                (Some(_), Some(_)) => return self.err(span, "box needs min < max on both axes"),
                _ => return self.err(span, "box needs `min` and `max`"),
            },
            ObstacleKind::Disc => match (def.center, def.radius) {
                (Some(c), Some(r)) if r > 0.0 => Shape::Capsule(Capsule::disc(c.into(), r)),
                _ => return self.err(span, "disc needs `center` and a positive `radius`"),
            },
            ObstacleKind::Segment => match (def.a, def.b, def.thickness) {
                (Some(a), Some(b), Some(t)) if t >= 0.0 => {
                    Shape::Capsule(Capsule::new(a.into(), b.into(), t / 2.0))
                }
                _ => {
                    return self.err(
                        span,
                        "segment needs `a`, `b` and a non-negative `thickness`",
                    )
                }
            },
        };
        let used = [
            ("min", def.min.is_some(), ObstacleKind::Box),
            ("max", def.max.is_some(), ObstacleKind::Box),
            ("center", def.center.is_some(), ObstacleKind::Disc),
            ("radius", def.radius.is_some(), ObstacleKind::Disc),
            ("a", def.a.is_some(), ObstacleKind::Segment),
            ("b", def.b.is_some(), ObstacleKind::Segment),
            ("thickness", def.thickness.is_some(), ObstacleKind::Segment),
        ];
        if let Some((key, ..)) = used.iter().find(|(_, set, kind)| *set && *kind != def.kind) {
            return self.err(
                span,
                format!("`{key}` does not apply to a {:?} obstacle", def.kind),
            );
        }
        Ok(shape)
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| format!("line {}: ", line_of(text, s.start)))
                .unwrap_or_default();
            Error::Scenario(format!("{line}{}", e.message()))
        })?;
        let cx = Ctx { text };
        let robot = cx.robot(file.robot.get_ref(), file.robot.span())?;
        let [lo, hi] = file.world.bounds;
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::Scenario("world.bounds: need min < max".into()));
        }
        let bounds = Aabb::new(lo.into(), hi.into());
        let statics = file
            .world
            .obstacles
            .iter()
            .map(|o| {
                let shape = cx.obstacle(o.get_ref(), o.span())?;
                if !bounds.contains(&shape.aabb()) {
                    return cx.err(o.span(), "obstacle leaves the world bounds");
                }
                Ok(shape)
            })
            .collect::<Result<Vec<_>>>()?;
        let movable = file
            .world
            .movable
            .iter()
            .map(|m| {
                let def = m.get_ref();
                Ok(MovableObstacle {
                    name: def.name.clone(),
                    robot: cx.robot(&def.robot, m.span())?,
                    pose: Configuration(def.pose.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let world = World::new(bounds, statics, movable)
            .map_err(|e| Error::Scenario(format!("world: {e}")))?;

        let q = file.query.get_ref();
        let start = Configuration(q.start.clone());
        let goal = Configuration(q.goal.clone());
        for (what, c) in [("start", &start), ("goal", &goal)] {
            if robot.check_dim(c).is_err() || !robot.within_limits(c) {
                return cx.err(
                    file.query.span(),
                    format!(
                        "{what} must have {} values within the joint limits",
                        robot.dof()
                    ),
                );
            }
            if crate::cspace::collides(&robot, &world, c) {
                return cx.err(file.query.span(), format!("{what} is in collision"));
            }
        }

        let planner = planner_config(&robot, &file.planner)?;
        let dynamic = match &file.dynamic {
            None => None,
            Some(d) => {
                let span = d.span();
                let d = d.get_ref();
                if !world.movable().iter().any(|m| m.name == d.obstacle) {
                    return cx.err(span, format!("no movable obstacle named '{}'", d.obstacle));
                }
                if !(0.0..=1.0).contains(&d.max_step) {
                    return cx.err(span, "max_step must be in [0, 1]");
                }
                let [p0, p1] = d.pause;
                if !(0.0 <= p0 && p0 <= p1 && p1.is_finite()) {
                    return cx.err(span, "pause must satisfy 0 <= lo <= hi");
                }
                let goals = match &d.goals {
                    Some(g) if !g.is_empty() => {
                        g.iter().cloned().map(Configuration).collect::<Vec<_>>()
                    }
                    Some(_) => return cx.err(span, "goals must not be empty"),
                    None => vec![goal.clone(), start.clone()],
                };
                if goals
                    .iter()
                    .any(|g| robot.check_dim(g).is_err() || !robot.within_limits(g))
                {
                    return cx.err(
                        span,
                        format!(
                            "every goal must have {} values within the joint limits",
                            robot.dof()
                        ),
                    );
                }
                if goals
                    .iter()
                    .any(|g| crate::cspace::collides(&robot, &world, g))
                {
                    return cx.err(span, "every goal must be collision-free");
                }
                Some(DynamicScript {
                    obstacle: d.obstacle.clone(),
                    cycles: d.cycles,
                    max_step: d.max_step,
                    pause: (p0, p1),
                    goals,
                })
            }
        };

        Ok(Scenario {
            name: file.name,
            robot,
            world,
            start,
            goal,
            planner,
            dynamic,
            hash: hex::encode(Sha256::digest(text.as_bytes())),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        Scenario::parse(&text).map_err(|e| match e {
            Error::Scenario(m) => Error::Scenario(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn planner_config(robot: &RobotModel, def: &PlannerDef) -> Result<PlannerConfig> {
    let mut cfg = PlannerConfig::for_robot(robot);
    if let Some(rho) = def.rho {
        cfg.rho = rho;
        cfg.goal_tol = rho / 2.0;
    }
    if let Some(v) = def.goal_tol {
        cfg.goal_tol = v;
    }
    if let Some(v) = def.max_landmarks {
        cfg.max_landmarks = v;
    }
    if let Some(v) = def.order {
        cfg.order = v;
    }
    if let Some(v) = def.bits_per_delta {
        cfg.bits_per_delta = v;
    }
    if let Some(v) = def.landmark_bits {
        cfg.landmark_bits = v;
    }
    if let Some(v) = def.sweep_fraction {
        cfg.sweep_fraction = v;
    }
    if let Some(v) = def.bounce {
        cfg.bouncing = v;
    }
    if let Some(v) = def.concurrent {
        cfg.concurrent = v;
    }
    if let Some(v) = def.mode {
        cfg.explore_enabled = v == PlannerMode::Full;
    }
    if let Some(v) = def.search_from_best {
        cfg.search_from_best = v;
    }
    if def.max_evaluations.is_some() {
        cfg.max_evaluations = def.max_evaluations;
    }
    if let Some(v) = &def.search {
        cfg.search = v.clone();
    }
    if let Some(v) = &def.explore {
        cfg.explore = v.clone();
    }
    cfg.validate()
        .map_err(|e| Error::Scenario(format!("planner: {e}")))?;
    Ok(cfg)
}

/// Scenario files shipped with the crate, by name.
pub const FIXTURES: &[(&str, &str)] = &[
    ("empty", include_str!("../../../scenarios/empty.toml")),
    ("maze", include_str!("../../../scenarios/maze.toml")),
    ("trap", include_str!("../../../scenarios/trap.toml")),
    ("corridor", include_str!("../../../scenarios/corridor.toml")),
    ("arm2", include_str!("../../../scenarios/arm2.toml")),
    (
        "arm6_dynamic",
        include_str!("../../../scenarios/arm6_dynamic.toml"),
    ),
    ("sealed", include_str!("../../../scenarios/sealed.toml")),
];

pub fn fixture(name: &str) -> Result<Scenario> {
    let (_, text) = FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Scenario(format!("no fixture named '{name}'")))?;
    Scenario::parse(text)
}
