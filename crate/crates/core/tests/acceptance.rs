//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::Instant;

use ariadne_core::harness::Summary;
use ariadne_core::optimizer::{self, GaConfig, Sense};
use ariadne_core::scenario::{fixture, FIXTURES};
use ariadne_core::trajectory::{DEFAULT_BITS_PER_DELTA, DEFAULT_LANDMARK_BITS};
use ariadne_core::{
    decode, execute, plan, reflect, run_dynamic, run_static, EncodingSpec, ExecOptions, Genome,
    Outcome, PlannerConfig, Scenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 20;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn seeded(s: &Scenario, seed: u64) -> PlannerConfig {
    PlannerConfig {
        seed,
        ..s.planner.clone()
    }
}

fn soundness() -> Verdict {
    let clock = Instant::now();
    let (mut paths, mut bad, mut runs) = (0, Vec::new(), 0);
    for (name, _) in FIXTURES {
        let s = fixture(name).unwrap();
        for seed in 0..SEEDS {
            runs += 1;
            let r = run_static(&s, seed).unwrap();
            let q = &r.queries[0];
            if q.outcome != Outcome::Path {
                continue;
            }
            paths += 1;
            let oracle =
                common::path_is_sound(&s.robot, &s.world, &q.executed, s.planner.sweep_fraction);
            if !r.audit_passed(s.planner.goal_tol) || !oracle || q.executed[0] != s.start {
                bad.push(format!("{name}/{seed}"));
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        bad.is_empty() && secs < 600.0,
        format!(
            "{paths} paths from {runs} runs, {} unsound {bad:?}, {secs:.1} s",
            bad.len()
        ),
    )
}

fn oracle_agreement() -> Verdict {
    let (mut agree, mut unsound) = (0, 0);
    let mut found = 0;
    for i in 0..50 {
        let g = common::grid_world(1000 + i, 6, 0.35, 0.03);
        let cfg = common::grid_config(&g, 0.05, i);
        let r = plan(&g.robot, &g.world, &g.start, &g.goal, &cfg).unwrap();
        let connected = common::flood_connected(&g.robot, &g.world, &g.start, &g.goal, cfg.rho);
        let is_path = r.outcome == Outcome::Path;
        if is_path {
            found += 1;
            let end = g
                .robot
                .metric()
                .distance(r.path.last().unwrap(), &g.goal)
                .unwrap();
            if !common::path_is_sound(&g.robot, &g.world, &r.path, cfg.sweep_fraction)
                || end > cfg.goal_tol
            {
                unsound += 1;
            }
        }
        if is_path == connected {
            agree += 1;
        }
    }
    verdict(
        agree >= 45 && unsound == 0,
        format!("{agree}/50 agree with flood fill, {found} paths, {unsound} unsound"),
    )
}

fn trap_escape() -> Verdict {
    let s = fixture("trap").unwrap();
    let (mut search_failed, mut full_solved) = (0, 0);
    for seed in 0..SEEDS {
        let alone = PlannerConfig {
            explore_enabled: false,
            ..seeded(&s, seed)
        };
        if plan(&s.robot, &s.world, &s.start, &s.goal, &alone)
            .unwrap()
            .outcome
            != Outcome::Path
        {
            search_failed += 1;
        }
        if plan(&s.robot, &s.world, &s.start, &s.goal, &seeded(&s, seed))
            .unwrap()
            .outcome
            == Outcome::Path
        {
            full_solved += 1;
        }
    }
    verdict(
        search_failed >= 18 && full_solved >= 18,
        format!("search alone fails {search_failed}/20, full planner solves {full_solved}/20"),
    )
}

fn bouncing_benefit() -> Verdict {
    let s = fixture("corridor").unwrap();
    let mut evals = [Vec::new(), Vec::new()];
    let mut solved = [0, 0];
    for (k, bouncing) in [true, false].into_iter().enumerate() {
        for seed in 0..SEEDS {
            let cfg = PlannerConfig {
                bouncing,
                ..seeded(&s, seed)
            };
            let r = plan(&s.robot, &s.world, &s.start, &s.goal, &cfg).unwrap();
            evals[k].push(r.evaluations as f64);
            solved[k] += usize::from(r.outcome == Outcome::Path);
        }
    }
    let on = Summary::of(&evals[0]).unwrap().median;
    let off = Summary::of(&evals[1]).unwrap().median;
    let (bounced, plain) = common::corridor_exit_rates(10_000, 23);
    verdict(
        on <= off / 2.0 && bounced > plain,
        format!(
            "median evaluations {on} on vs {off} off (ratio {:.3}), solved {}/{}; exit rate {bounced:.4} bounced vs {plain:.4} plain",
            on / off,
            solved[0],
            solved[1]
        ),
    )
}

fn onemax(g: &Genome) -> f64 {
    g.count_ones() as f64
}

fn determinism_and_elitism() -> Verdict {
    let s = fixture("maze").unwrap();
    let in_pool = |threads: usize, seed: u64| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let mut r = pool
            .install(|| plan(&s.robot, &s.world, &s.start, &s.goal, &seeded(&s, seed)).unwrap());
        r.wall_time = Default::default();
        r
    };
    let threads = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .max(2);
    let same_plans = (0..3).all(|seed| in_pool(1, seed) == in_pool(threads, seed));

    let (mut same_runs, mut monotone, mut converged) = (true, true, 0);
    for seed in 0..SEEDS {
        let cfg = GaConfig {
            seed,
            sense: Sense::Maximize,
            ..Default::default()
        };
        let par = optimizer::run(&onemax, &cfg, 116, |b| b >= 116.0, usize::MAX).unwrap();
        let ser = optimizer::run(
            &onemax,
            &GaConfig {
                parallel: false,
                ..cfg
            },
            116,
            |b| b >= 116.0,
            usize::MAX,
        )
        .unwrap();
        same_runs &= par == ser;
        monotone &= par.history.windows(2).all(|w| w[1] >= w[0]);
        converged += usize::from(par.best_score == 116.0 && par.generations <= 500);
    }
    verdict(
        same_plans && same_runs && monotone && converged >= 19,
        format!(
            "plans equal at 1 and {threads} threads: {same_plans}; GA serial = parallel: {same_runs}; monotone: {monotone}; onemax solved {converged}/20"
        ),
    )
}

fn reflection_and_bounced_safety() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let a = rng.random_range(-5.0..5.0);
        let b = a + rng.random_range(0.01..4.0);
        let x = rng.random_range(a..=b);
        let delta = rng.random_range(-30.0..30.0);
        let (got, _) = reflect(x, a, b, delta).unwrap();
        worst = worst.max((got - common::reflect_oracle(x, a, b, delta)).abs());
    }

    let (mut collided, mut unsound, mut total) = (0, 0, 0);
    let per = 10_000 / FIXTURES.len() + 1;
    for (name, _) in FIXTURES {
        let s = fixture(name).unwrap();
        let spec = common::search_spec(&s.robot);
        for _ in 0..per {
            let (_, d) = decode(
                &common::random_genome(&mut rng, spec.genome_len()),
                &spec,
                1,
            )
            .unwrap();
            let r = execute(&s.robot, &s.world, &s.start, &d, ExecOptions::default()).unwrap();
            total += 1;
            collided += usize::from(r.collided);
            if !common::path_is_sound(
                &s.robot,
                &s.world,
                &r.waypoints,
                ExecOptions::default().sweep_fraction,
            ) {
                unsound += 1;
            }
        }
    }
    verdict(
        worst <= 1e-9 && collided == 0 && unsound == 0,
        format!("max reflect error {worst:.2e}; {total} bounced genomes, {collided} collided, {unsound} failed the audit"),
    )
}

fn dynamic_harness() -> Verdict {
    let s = fixture("arm6_dynamic").unwrap();
    let r = run_dynamic(&s, 1).unwrap();
    let cycles = r.queries.len();
    let paths = r
        .queries
        .iter()
        .filter(|q| q.outcome == Outcome::Path)
        .count();
    let reached = r.queries.iter().filter(|q| q.reached_goal).count();
    let passed = r.queries.iter().filter(|q| q.audit.passed()).count();
    let mean = r.mean_plan_time();
    let stale = r.staleness().unwrap_or(0.0);
    verdict(
        cycles == 50 && passed == cycles && r.audit_passed(s.planner.goal_tol) && mean < 5.0,
        format!(
            "{cycles} cycles, audit {passed}/{cycles}, {paths} paths, {reached} goal arrivals, mean plan {mean:.3} s, median {:.3} s, staleness {stale:.2}",
            r.median_plan_time()
        ),
    )
}

fn genome_layout() -> Verdict {
    let s = fixture("arm6_dynamic").unwrap();
    let spec = EncodingSpec::for_robot(&s.robot, 2, 9, 8).unwrap();
    let defaults =
        EncodingSpec::for_robot(&s.robot, 2, DEFAULT_BITS_PER_DELTA, DEFAULT_LANDMARK_BITS)
            .unwrap();
    let len = spec.genome_len();
    verdict(
        len == 116 && defaults.genome_len() == 116,
        format!("genome length {len}"),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 soundness", soundness),
        ("2 flood-fill agreement", oracle_agreement),
        ("3 trap escape", trap_escape),
        ("4 bouncing benefit", bouncing_benefit),
        ("5 determinism and elitism", determinism_and_elitism),
        (
            "6 reflection and bounced safety",
            reflection_and_bounced_safety,
        ),
        ("7 dynamic harness", dynamic_harness),
        ("8 genome layout", genome_layout),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let clock = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "criterion {name}: {} ({}; {:.1} s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            clock.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
