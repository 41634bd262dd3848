//! The planning loop: SEARCH from the latest landmark, and when that
//! fails EXPLORE a new landmark, until the goal is reached or the landmark
//! spread `ε` falls to the resolution `ρ`.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cspace::{collides, Configuration, Metric, RobotModel, World};
use crate::error::{Error, Result};
use crate::optimizer::{self, GaConfig, Sense};
use crate::trajectory::{
    decode, execute, search_cost, EncodingSpec, ExecOptions, Genome, ManhattanDeltas,
    DEFAULT_BITS_PER_DELTA, DEFAULT_LANDMARK_BITS, DEFAULT_ORDER,
};

/// GA settings for one of the two optimizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaSettings {
    pub width: usize,
    pub height: usize,
    pub mutation_rate: Option<f64>,
    pub max_generations: usize,
    /// Fitness evaluations allowed per run.
    pub budget: usize,
}

impl GaSettings {
    pub fn new(width: usize, height: usize, budget: usize) -> Self {
        Self {
            width,
            height,
            mutation_rate: None,
            max_generations: usize::MAX,
            budget,
        }
    }

    fn ga(&self, seed: u64, sense: Sense, parallel: bool) -> GaConfig {
        GaConfig {
            width: self.width,
            height: self.height,
            mutation_rate: self.mutation_rate,
            max_generations: self.max_generations,
            seed,
            sense,
            parallel,
        }
    }
}

impl Default for GaSettings {
    fn default() -> Self {
        Self::new(8, 8, 64 * 30)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Resolution: planning stops with no path once `ε <= rho`.
    pub rho: f64,
    /// A SEARCH succeeds when its endpoint is within this distance of the goal.
    pub goal_tol: f64,
    pub max_landmarks: usize,
    pub order: usize,
    pub bits_per_delta: u32,
    pub landmark_bits: u32,
    pub search: GaSettings,
    pub explore: GaSettings,
    /// Sweep step as a fraction of each joint span.
    pub sweep_fraction: f64,
    pub seed: u64,
    pub bouncing: bool,
    /// Run SEARCH and EXPLORE of one iteration at the same time.
    pub concurrent: bool,
    /// `false` gives a SEARCH-only planner.
    pub explore_enabled: bool,
    /// SEARCH from the landmark nearest the goal instead of the latest one.
    pub search_from_best: bool,
    /// Cap on total fitness evaluations.
    pub max_evaluations: Option<usize>,
    /// Evaluate GA cells on the rayon pool.
    pub parallel: bool,
}

impl PlannerConfig {
    /// Defaults scaled to the robot: `ρ` is 2% of the configuration-space
    /// diameter and the goal tolerance is `ρ / 2`.
    pub fn for_robot(robot: &RobotModel) -> Self {
        let rho = 0.02 * robot.diameter();
        Self {
            rho,
            goal_tol: rho / 2.0,
            max_landmarks: 256,
            order: DEFAULT_ORDER,
            bits_per_delta: DEFAULT_BITS_PER_DELTA,
            landmark_bits: DEFAULT_LANDMARK_BITS,
            search: GaSettings::new(8, 8, 64 * 30),
            explore: GaSettings::new(8, 8, 64 * 15),
            sweep_fraction: crate::cspace::DEFAULT_SWEEP_FRACTION,
            seed: 0,
            bouncing: true,
            concurrent: false,
            explore_enabled: true,
            search_from_best: false,
            max_evaluations: None,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::invalid("rho", "must be positive"));
        }
        if !(self.goal_tol >= 0.0) {
            return Err(Error::invalid("goal tolerance", "must be non-negative"));
        }
        if self.max_landmarks == 0 {
            return Err(Error::invalid("max landmarks", "must be at least 1"));
        }
        if !(self.sweep_fraction > 0.0 && self.sweep_fraction <= 1.0) {
            return Err(Error::invalid("sweep fraction", "must be in (0, 1]"));
        }
        self.search.ga(0, Sense::Minimize, false).validate()?;
        self.explore.ga(0, Sense::Maximize, false).validate()?;
        Ok(())
    }

    pub fn exec_options(&self) -> ExecOptions {
        ExecOptions {
            bouncing: self.bouncing,
            sweep_fraction: self.sweep_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub id: usize,
    pub configuration: Configuration,
    /// `None` for the root (the start configuration).
    pub parent: Option<usize>,
    /// Effective deltas that lead from the parent to this landmark.
    pub incoming: Option<ManhattanDeltas>,
    /// Distance to the landmarks placed before this one.
    pub epsilon: Option<f64>,
}

/// Landmarks in insertion order; ids are indices and the root is id 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkTree {
    landmarks: Vec<Landmark>,
}

impl LandmarkTree {
    pub fn new(root: Configuration) -> Self {
        Self {
            landmarks: vec![Landmark {
                id: 0,
                configuration: root,
                parent: None,
                incoming: None,
                epsilon: None,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Landmark> {
        self.landmarks.get(id)
    }

    pub fn latest(&self) -> &Landmark {
        self.landmarks.last().expect("tree always holds the root")
    }

    pub fn iter(&self) -> impl Iterator<Item = &Landmark> {
        self.landmarks.iter()
    }

    pub fn configurations(&self) -> Vec<&[f64]> {
        self.landmarks
            .iter()
            .map(|l| &l.configuration[..])
            .collect()
    }

    /// Adds a landmark under `parent`; returns its id.
    pub fn insert(
        &mut self,
        parent: usize,
        configuration: Configuration,
        incoming: ManhattanDeltas,
        epsilon: f64,
    ) -> usize {
        assert!(parent < self.len(), "parent {parent} not in tree");
        let id = self.len();
        self.landmarks.push(Landmark {
            id,
            configuration,
            parent: Some(parent),
            incoming: Some(incoming),
            epsilon: Some(epsilon),
        });
        id
    }

    /// Landmarks from the root down to `leaf`.
    pub fn chain(&self, leaf: usize) -> Vec<&Landmark> {
        let mut out = Vec::new();
        let mut cur = Some(leaf);
        while let Some(id) = cur {
            let l = &self.landmarks[id];
            out.push(l);
            cur = l.parent;
        }
        out.reverse();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// A collision-free path to the goal was found.
    Path,
    /// `ε <= ρ`: no path at this resolution.
    NoPath,
    /// Landmark or evaluation budget ran out (or EXPLORE is disabled).
    /// Not a claim that no path exists.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub outcome: Outcome,
    /// Dense path; consecutive configurations differ in one joint.
    pub path: Vec<Configuration>,
    /// Last landmark spread (infinite if no landmark was explored).
    pub epsilon: f64,
    pub tree: LandmarkTree,
    pub evaluations: usize,
    pub searches: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl PlanResult {
    pub fn landmarks_placed(&self) -> usize {
        self.tree.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Effective deltas reaching the goal, when found.
    pub deltas: Option<ManhattanDeltas>,
    pub best_cost: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploreOutcome {
    pub parent: usize,
    pub configuration: Configuration,
    pub deltas: ManhattanDeltas,
    pub epsilon: f64,
    pub evaluations: usize,
}

/// Derives an independent seed for a sub-run.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed
        ^ stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct Planner<'a> {
    robot: &'a RobotModel,
    world: &'a World,
    cfg: &'a PlannerConfig,
    metric: Metric,
    encoding: EncodingSpec,
}

impl<'a> Planner<'a> {
    pub fn new(robot: &'a RobotModel, world: &'a World, cfg: &'a PlannerConfig) -> Result<Self> {
        cfg.validate()?;
        let encoding =
            EncodingSpec::for_robot(robot, cfg.order, cfg.bits_per_delta, cfg.landmark_bits)?;
        Ok(Self {
            robot,
            world,
            cfg,
            metric: robot.metric(),
            encoding,
        })
    }

    pub fn encoding(&self) -> &EncodingSpec {
        &self.encoding
    }

    fn check_query(&self, q: &[f64]) -> Result<()> {
        self.robot.check_dim(q)?;
        if !self.robot.within_limits(q) {
            return Err(Error::OutOfLimits(q.to_vec()));
        }
        if collides(self.robot, self.world, q) {
            return Err(Error::InCollision(q.to_vec()));
        }
        Ok(())
    }

    /// Minimizes the distance to `goal` over trajectories starting at
    /// landmark `from`.
    pub fn search(
        &self,
        tree: &LandmarkTree,
        from: usize,
        goal: &[f64],
        seed: u64,
    ) -> Result<SearchOutcome> {
        let start = &tree
            .get(from)
            .ok_or_else(|| Error::invalid("landmark", format!("no landmark {from}")))?
            .configuration;
        let here = self.metric.distance(start, goal)?;
        if here <= self.cfg.goal_tol {
            return Ok(SearchOutcome {
                deltas: Some(ManhattanDeltas::zeros(self.robot.dof(), self.cfg.order)),
                best_cost: here,
                evaluations: 0,
            });
        }
        let spec = self.encoding.without_landmark();
        let opts = self.cfg.exec_options();
        let fitness = |g: &Genome| {
            let (_, d) = decode(g, &spec, 1).expect("genome length fixed by the GA");
            execute(self.robot, self.world, start, &d, opts)
                .and_then(|r| search_cost(&r, goal, &self.metric))
                .unwrap_or(f64::INFINITY)
        };
        let ga = self.cfg.search.ga(seed, Sense::Minimize, self.cfg.parallel);
        let tol = self.cfg.goal_tol;
        let out = optimizer::run(
            &fitness,
            &ga,
            spec.genome_len(),
            |b| b <= tol,
            self.cfg.search.budget,
        )?;
        let deltas = if out.best_score <= tol {
            let (_, d) = decode(&out.best, &spec, 1)?;
            Some(execute(self.robot, self.world, start, &d, opts)?.effective_deltas)
        } else {
            None
        };
        Ok(SearchOutcome {
            deltas,
            best_cost: out.best_score,
            evaluations: out.evaluations,
        })
    }

    /// Maximizes the distance to the current landmarks over trajectories
    /// starting at any landmark (chosen by the genome's landmark field).
    pub fn explore(&self, tree: &LandmarkTree, seed: u64) -> Result<ExploreOutcome> {
        let spec = &self.encoding;
        let opts = self.cfg.exec_options();
        let known = tree.configurations();
        let n = tree.len();
        let run_genome = |g: &Genome| -> Result<(usize, crate::trajectory::ExecutionResult)> {
            let (i, d) = decode(g, spec, n)?;
            let r = execute(self.robot, self.world, known[i], &d, opts)?;
            Ok((i, r))
        };
        // unbounced paths end at their first collision point, which is still reachable
        let fitness = |g: &Genome| {
            run_genome(g)
                .and_then(|(_, r)| self.metric.set_distance(&known, &r.endpoint))
                .unwrap_or(f64::NEG_INFINITY)
        };
        let ga = self
            .cfg
            .explore
            .ga(seed, Sense::Maximize, self.cfg.parallel);
        let out = optimizer::run(
            &fitness,
            &ga,
            spec.genome_len(),
            |_| false,
            self.cfg.explore.budget,
        )?;
        let (parent, r) = run_genome(&out.best)?;
        let epsilon = self.metric.set_distance(&known, &r.endpoint)?;
        Ok(ExploreOutcome {
            parent,
            configuration: r.endpoint,
            deltas: r.effective_deltas,
            epsilon,
            evaluations: out.evaluations,
        })
    }

    fn search_start(&self, tree: &LandmarkTree, goal: &[f64]) -> usize {
        if self.cfg.search_from_best {
            let set = tree.configurations();
            self.metric
                .nearest(&set, goal)
                .map(|(i, _)| i)
                .unwrap_or(tree.len() - 1)
        } else {
            tree.len() - 1
        }
    }

    pub fn plan(&self, start: &[f64], goal: &[f64]) -> Result<PlanResult> {
        let clock = Instant::now();
        self.check_query(start)?;
        self.check_query(goal)?;
        let mut tree = LandmarkTree::new(Configuration(start.to_vec()));
        let mut result = PlanResult {
            outcome: Outcome::Exhausted,
            path: Vec::new(),
            epsilon: f64::INFINITY,
            tree: tree.clone(),
            evaluations: 0,
            searches: 0,
            wall_time: Duration::ZERO,
        };
        if start == goal {
            result.outcome = Outcome::Path;
            result.path = vec![Configuration(start.to_vec())];
            result.wall_time = clock.elapsed();
            return Ok(result);
        }
        let mut iteration = 0u64;
        loop {
            let from = self.search_start(&tree, goal);
            let search_seed = derive_seed(self.cfg.seed, 2 * iteration);
            let explore_seed = derive_seed(self.cfg.seed, 2 * iteration + 1);
            let may_explore = self.cfg.explore_enabled && tree.len() < self.cfg.max_landmarks;
            let (found, explored) = if self.cfg.concurrent && may_explore {
                let (s, e) = rayon::join(
                    || self.search(&tree, from, goal, search_seed),
                    || self.explore(&tree, explore_seed),
                );
                (s?, Some(e))
            } else {
                (self.search(&tree, from, goal, search_seed)?, None)
            };
            result.searches += 1;
            result.evaluations += found.evaluations;
            if let Some(deltas) = found.deltas {
                result.path = self.reconstruct_path(&tree, from, &deltas)?;
                result.outcome = Outcome::Path;
                break;
            }
            let over_budget = self
                .cfg
                .max_evaluations
                .is_some_and(|m| result.evaluations >= m);
            if !may_explore || over_budget {
                result.outcome = Outcome::Exhausted;
                break;
            }
            let e = match explored {
                Some(e) => e?,
                None => self.explore(&tree, explore_seed)?,
            };
            result.evaluations += e.evaluations;
            tree.insert(e.parent, e.configuration, e.deltas, e.epsilon);
            result.epsilon = e.epsilon;
            if e.epsilon <= self.cfg.rho {
                result.outcome = Outcome::NoPath;
                break;
            }
            iteration += 1;
        }
        result.tree = tree;
        result.wall_time = clock.elapsed();
        Ok(result)
    }

    /// Replays the stored deltas from the root to `leaf`, then `last`,
    /// without bouncing, and returns the dense waypoint list. Any collision
    /// or endpoint drift is a consistency error.
    pub fn reconstruct_path(
        &self,
        tree: &LandmarkTree,
        leaf: usize,
        last: &ManhattanDeltas,
    ) -> Result<Vec<Configuration>> {
        if leaf >= tree.len() {
            return Err(Error::invalid("landmark", format!("no landmark {leaf}")));
        }
        let opts = ExecOptions {
            bouncing: false,
            ..self.cfg.exec_options()
        };
        let chain = tree.chain(leaf);
        let mut q = chain[0].configuration.clone();
        let mut path = vec![q.clone()];
        let segments = chain[1..]
            .iter()
            .map(|l| {
                (
                    l.incoming.as_ref().expect("non-root landmark"),
                    Some(&l.configuration),
                )
            })
            .chain(std::iter::once((last, None)));
        for (deltas, expected) in segments {
            let r = execute(self.robot, self.world, &q, deltas, opts)?;
            if r.collided {
                return Err(Error::Inconsistent(format!(
                    "stored trajectory from {:?} collides on replay",
                    &q[..]
                )));
            }
            if let Some(expected) = expected {
                if r.endpoint != *expected {
                    return Err(Error::Inconsistent(format!(
                        "replay reached {:?}, landmark is at {:?}",
                        &r.endpoint[..],
                        &expected[..]
                    )));
                }
            }
            for w in r.waypoints.into_iter().skip(1) {
                if path.last() != Some(&w) {
                    path.push(w);
                }
            }
            q = r.endpoint;
        }
        Ok(path)
    }
}

/// Plans from `start` to `goal` in `world`.
pub fn plan(
    robot: &RobotModel,
    world: &World,
    start: &[f64],
    goal: &[f64],
    cfg: &PlannerConfig,
) -> Result<PlanResult> {
    Planner::new(robot, world, cfg)?.plan(start, goal)
}
