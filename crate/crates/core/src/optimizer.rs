//! Cellular genetic algorithm over fixed-length bitstrings.
//!
//! Individuals sit on a `width x height` torus and mate only with their
//! best-scoring von Neumann neighbor. Each cell keeps its own seeded RNG
//! stream, so a run is bit-identical whether cells are processed serially
//! or in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Genome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// `a` strictly better than `b`; NaN is worse than anything.
    pub fn better(self, a: f64, b: f64) -> bool {
        if a.is_nan() {
            return false;
        }
        if b.is_nan() {
            return true;
        }
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub width: usize,
    pub height: usize,
    /// Per-bit flip probability; `None` means `1 / genome_len`.
    pub mutation_rate: Option<f64>,
    pub max_generations: usize,
    pub seed: u64,
    pub sense: Sense,
    /// Evaluate and reproduce cells on the rayon pool.
    pub parallel: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            width: 8,
            height: 8,
            mutation_rate: None,
            max_generations: 500,
            seed: 0,
            sense: Sense::Minimize,
            parallel: true,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::invalid(
                "GA grid",
                format!("need at least 2x2, got {}x{}", self.width, self.height),
            ));
        }
        if let Some(r) = self.mutation_rate {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid(
                    "mutation rate",
                    format!("{r} is not a probability"),
                ));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.width * self.height
    }

    pub fn rate_for(&self, genome_len: usize) -> f64 {
        self.mutation_rate.unwrap_or(1.0 / genome_len.max(1) as f64)
    }
}

#[derive(Debug, Clone)]
pub struct Population {
    width: usize,
    height: usize,
    genomes: Vec<Genome>,
    scores: Vec<f64>,
    generation: usize,
    rngs: Vec<ChaCha8Rng>,
}

impl Population {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn genomes(&self) -> &[Genome] {
        &self.genomes
    }

    /// Scores per cell, row-major; NaN until evaluated.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn index(&self, (x, y): (usize, usize)) -> usize {
        y * self.width + x
    }

    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// Torus neighbors in N, E, S, W order.
    pub fn neighbors(&self, (x, y): (usize, usize)) -> [(usize, usize); 4] {
        let (w, h) = (self.width, self.height);
        [
            (x, (y + h - 1) % h),
            ((x + 1) % w, y),
            (x, (y + 1) % h),
            ((x + w - 1) % w, y),
        ]
    }

    /// Best cell and its score; the lowest index wins ties.
    pub fn best(&self, sense: Sense) -> (usize, f64) {
        let mut best = (0, self.scores[0]);
        for (i, s) in self.scores.iter().enumerate().skip(1) {
            if sense.better(*s, best.1) {
                best = (i, *s);
            }
        }
        best
    }

    /// Overwrites a cell; scores must be refreshed by [`evaluate`].
    pub fn set_genome(&mut self, index: usize, genome: Genome) {
        self.genomes[index] = genome;
        self.scores[index] = f64::NAN;
    }
}

fn cell_rng(seed: u64, cell: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell as u64);
    rng
}

/// Uniformly random population; cell `i` draws from RNG stream `i`.
pub fn init_population(cfg: &GaConfig, genome_len: usize) -> Result<Population> {
    cfg.validate()?;
    if genome_len == 0 {
        return Err(Error::invalid("genome length", "must be positive"));
    }
    let mut rngs: Vec<ChaCha8Rng> = (0..cfg.size()).map(|i| cell_rng(cfg.seed, i)).collect();
    let genomes = rngs
        .iter_mut()
        .map(|rng| Genome::new((0..genome_len).map(|_| rng.random::<bool>()).collect()))
        .collect();
    Ok(Population {
        width: cfg.width,
        height: cfg.height,
        genomes,
        scores: vec![f64::NAN; cfg.size()],
        generation: 0,
        rngs,
    })
}

/// Scores every individual. `fitness` must be pure.
pub fn evaluate<F>(mut pop: Population, fitness: &F, parallel: bool) -> Population
where
    F: Fn(&Genome) -> f64 + Sync,
{
    pop.scores = if parallel {
        pop.genomes.par_iter().map(fitness).collect()
    } else {
        pop.genomes.iter().map(fitness).collect()
    };
    pop
}

/// Best of the four torus neighbors of `cell`; ties go to the first in
/// N, E, S, W order.
pub fn select_mate(pop: &Population, cell: (usize, usize), sense: Sense) -> (usize, usize) {
    let ns = pop.neighbors(cell);
    let mut best = ns[0];
    let mut best_score = pop.scores[pop.index(best)];
    for n in &ns[1..] {
        let s = pop.scores[pop.index(*n)];
        if sense.better(s, best_score) {
            best = *n;
            best_score = s;
        }
    }
    best
}

/// One-point crossover: `(a[..cut] ++ b[cut..], b[..cut] ++ a[cut..])`.
pub fn crossover(a: &Genome, b: &Genome, cut: usize) -> Result<(Genome, Genome)> {
    if a.len() != b.len() {
        return Err(Error::GenomeLength {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if cut == 0 || cut >= a.len() {
        return Err(Error::invalid(
            "crossover cut",
            format!("{cut} not inside 1..{}", a.len()),
        ));
    }
    let (a, b) = (a.bits(), b.bits());
    let first = a[..cut].iter().chain(&b[cut..]).copied().collect();
    let second = b[..cut].iter().chain(&a[cut..]).copied().collect();
    Ok((Genome::new(first), Genome::new(second)))
}

/// Flips each bit independently with probability `rate`.
pub fn mutate<R: Rng + ?Sized>(g: &Genome, rate: f64, rng: &mut R) -> Genome {
    let mut out = g.clone();
    for bit in out.bits_mut() {
        if rng.random::<f64>() < rate {
            *bit = !*bit;
        }
    }
    out
}

/// One generation: every cell mates with its best neighbor, the first
/// crossover child is mutated and evaluated, and it replaces the cell's
/// occupant only if it scores strictly better.
pub fn step<F>(pop: Population, fitness: &F, cfg: &GaConfig) -> Population
where
    F: Fn(&Genome) -> f64 + Sync,
{
    let len = pop.genomes[0].len();
    let rate = cfg.rate_for(len);
    let Population {
        width,
        height,
        genomes,
        scores,
        generation,
        rngs,
    } = pop;
    let prev = Population {
        width,
        height,
        genomes,
        scores,
        generation,
        rngs: Vec::new(),
    };
    let breed = |(i, mut rng): (usize, ChaCha8Rng)| {
        let cell = prev.cell(i);
        let mate = prev.index(select_mate(&prev, cell, cfg.sense));
        let own = &prev.genomes[i];
        let child = if len > 1 {
            let cut = rng.random_range(1..len);
            crossover(own, &prev.genomes[mate], cut)
                .expect("equal lengths")
                .0
        } else {
            prev.genomes[mate].clone()
        };
        let child = mutate(&child, rate, &mut rng);
        let score = fitness(&child);
        if cfg.sense.better(score, prev.scores[i]) {
            (child, score, rng)
        } else {
            (own.clone(), prev.scores[i], rng)
        }
    };
    let next: Vec<(Genome, f64, ChaCha8Rng)> = if cfg.parallel {
        rngs.into_par_iter().enumerate().map(breed).collect()
    } else {
        rngs.into_iter().enumerate().map(breed).collect()
    };
    let mut genomes = Vec::with_capacity(next.len());
    let mut scores = Vec::with_capacity(next.len());
    let mut rngs = Vec::with_capacity(next.len());
    for (g, s, r) in next {
        genomes.push(g);
        scores.push(s);
        rngs.push(r);
    }
    Population {
        width,
        height,
        genomes,
        scores,
        generation: generation + 1,
        rngs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub best: Genome,
    pub best_score: f64,
    pub evaluations: usize,
    pub generations: usize,
    /// Best score after the initial evaluation and after every generation.
    pub history: Vec<f64>,
}

/// Evolves until `stop(best score)` holds, `max_generations` is reached, or
/// another generation would exceed `budget` fitness evaluations.
pub fn run<F, S>(
    fitness: &F,
    cfg: &GaConfig,
    genome_len: usize,
    stop: S,
    budget: usize,
) -> Result<RunOutcome>
where
    F: Fn(&Genome) -> f64 + Sync,
    S: Fn(f64) -> bool,
{
    let mut pop = evaluate(init_population(cfg, genome_len)?, fitness, cfg.parallel);
    let n = pop.len();
    let mut evaluations = n;
    let mut history = vec![pop.best(cfg.sense).1];
    loop {
        let best = *history.last().expect("non-empty");
        if stop(best) || pop.generation >= cfg.max_generations || evaluations + n > budget {
            break;
        }
        pop = step(pop, fitness, cfg);
        evaluations += n;
        history.push(pop.best(cfg.sense).1);
    }
    let (i, best_score) = pop.best(cfg.sense);
    Ok(RunOutcome {
        best: pop.genomes[i].clone(),
        best_score,
        evaluations,
        generations: pop.generation,
        history,
    })
}
