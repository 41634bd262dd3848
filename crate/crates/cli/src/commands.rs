use std::io::Write;
use std::path::{Path, PathBuf};

use ariadne_core::harness::{self, Grid};
use ariadne_core::{Outcome, Scenario};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::exit;
use crate::pathfile::PathFile;

#[derive(Debug, Parser)]
#[command(name = "ariadne", version, about = "Ariadne's clew path planner")]
pub struct Cli {
    /// Worker threads (1 runs everything serially).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan the scenario's query and write a path file.
    Plan(PlanArgs),
    /// Draw a scenario and a path file as SVG.
    Render(RenderArgs),
    /// Run seeded experiments and print a CSV table.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    pub scenario: PathBuf,
    /// Random seed; a random one is chosen and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum fitness evaluations.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Resolution: planning stops with no path once landmarks are this dense.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Distance to the goal that counts as arrival (default rho / 2).
    #[arg(long)]
    pub goal_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub bounce: Option<Switch>,
    /// Run SEARCH and EXPLORE concurrently.
    #[arg(long, value_enum)]
    pub concurrent: Option<Switch>,
    /// Path file destination (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub scenario: PathBuf,
    pub path: PathBuf,
    /// SVG destination (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(required = true)]
    pub scenarios: Vec<PathBuf>,
    /// Seeds as a comma list of values or inclusive ranges, e.g. `1-20,42`.
    #[arg(long, conflicts_with = "seed")]
    pub seeds: Option<String>,
    /// Single seed; a random one is chosen and printed when neither this
    /// nor --seeds is given.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub budget: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub bounce: Vec<Switch>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub concurrent: Vec<Switch>,
    /// Also write the table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write per-group statistics here as CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// Parses `1-3,7` into `[1, 2, 3, 7]`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || format!("bad seed list entry '{part}'");
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) =
                    (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err("empty seed list".into());
    }
    Ok(seeds)
}

fn load(path: &Path) -> Result<Scenario, String> {
    Scenario::load(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn pick_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    }
}

pub fn plan(a: &PlanArgs) -> Result<i32, String> {
    let s = load(&a.scenario)?;
    let mut cfg = s.planner.clone();
    cfg.seed = pick_seed(a.seed);
    if let Some(rho) = a.rho {
        cfg.rho = rho;
        cfg.goal_tol = rho / 2.0;
    }
    if let Some(t) = a.goal_tol {
        cfg.goal_tol = t;
    }
    if let Some(b) = a.budget {
        cfg.max_evaluations = Some(b);
    }
    if let Some(b) = a.bounce {
        cfg.bouncing = b.on();
    }
    if let Some(c) = a.concurrent {
        cfg.concurrent = c.on();
    }
    let r = ariadne_core::plan(&s.robot, &s.world, &s.start, &s.goal, &cfg)
        .map_err(|e| e.to_string())?;
    let file = PathFile::new(&s.name, &s.hash, cfg.seed, &r);
    write_out(a.out.as_deref(), &file.to_text())?;
    eprintln!(
        "{}: {} evaluations, {} landmarks, {:.3} s",
        outcome_name(r.outcome),
        r.evaluations,
        r.landmarks_placed(),
        r.wall_time.as_secs_f64()
    );
    Ok(match r.outcome {
        Outcome::Path => exit::PATH,
        Outcome::NoPath => exit::NO_PATH,
        Outcome::Exhausted => exit::EXHAUSTED,
    })
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Path => "path",
        Outcome::NoPath => "no path",
        Outcome::Exhausted => "budget exhausted",
    }
}

pub fn render(a: &RenderArgs) -> Result<i32, String> {
    let s = load(&a.scenario)?;
    let text =
        std::fs::read_to_string(&a.path).map_err(|e| format!("{}: {e}", a.path.display()))?;
    let path = PathFile::parse(&text).map_err(|e| format!("{}: {e}", a.path.display()))?;
    let svg = crate::render::render(&s, &path)?;
    write_out(a.out.as_deref(), &svg)?;
    Ok(exit::PATH)
}

pub fn bench(a: &BenchArgs) -> Result<i32, String> {
    let scenarios = a
        .scenarios
        .iter()
        .map(|p| load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let seeds = match &a.seeds {
        Some(list) => parse_seeds(list)?,
        None => vec![pick_seed(a.seed)],
    };
    let grid = Grid {
        seeds,
        bouncing: a.bounce.iter().map(|s| s.on()).collect(),
        concurrent: a.concurrent.iter().map(|s| s.on()).collect(),
        rho: a.rho.clone(),
        budget: a.budget.clone(),
    };
    let rows = harness::sweep(&scenarios, &grid).map_err(|e| e.to_string())?;
    let mut table = Vec::new();
    harness::write_csv(&rows, &mut table).map_err(|e| e.to_string())?;
    let table = String::from_utf8(table).expect("csv output is utf-8");
    print!("{table}");
    if let Some(out) = &a.out {
        write_out(Some(out), &table)?;
    }

    let groups = harness::summarize(&rows);
    let ratios = harness::evaluation_ratios(&rows);
    let mut summary = String::from(
        "scenario,bounce,concurrent,rho,budget,runs,paths,mean_time,median_time,iqr_time,median_evaluations,iqr_evaluations,audit,evaluation_ratio\n",
    );
    for g in &groups {
        let ratio = ratios
            .iter()
            .find(|(n, _)| *n == g.scenario)
            .map(|(_, r)| format!("{r}"))
            .unwrap_or_default();
        summary.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            g.scenario,
            g.bounce,
            g.concurrent,
            g.rho,
            g.budget.map(|b| b.to_string()).unwrap_or_default(),
            g.runs,
            g.paths,
            g.time.mean,
            g.time.median,
            g.time.iqr,
            g.evaluations.median,
            g.evaluations.iqr,
            g.audit,
            ratio
        ));
    }
    eprint!("{summary}");
    if let Some(out) = &a.summary {
        write_out(Some(out), &summary)?;
    }
    if groups.iter().any(|g| !g.audit) {
        return Err("collision audit failed".into());
    }
    Ok(exit::PATH)
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return exit::ERROR;
        }
    }
    let result = match &cli.command {
        Command::Plan(a) => plan(a),
        Command::Render(a) => render(a),
        Command::Bench(a) => bench(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit::ERROR
    })
}
