mod common;

use ariadne_core::scenario::fixture;
use ariadne_core::{collides, legal_motion_range, Metric, RobotModel, World};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vectors(dof: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, dof)
}

fn metric_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..7).prop_flat_map(|k| {
        (
            prop::collection::vec(0.1..5.0f64, k),
            vectors(k),
            vectors(k),
            vectors(k),
        )
    })
}

proptest! {
    #[test]
    fn metric_axioms((w, a, b, c) in metric_case()) {
        let m = Metric::new(w).unwrap();
        let ab = m.distance(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, m.distance(&b, &a).unwrap());
        prop_assert_eq!(m.distance(&a, &a).unwrap(), 0.0);
        if a != b {
            prop_assert!(ab > 0.0);
        }
        let via = m.distance(&a, &c).unwrap() + m.distance(&c, &b).unwrap();
        prop_assert!(ab <= via * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn set_distance_is_the_minimum(
        set in prop::collection::vec(vectors(3), 1..12),
        q in vectors(3),
    ) {
        let m = Metric::unit(3);
        let d = m.set_distance(&set, &q).unwrap();
        let each: Vec<f64> = set.iter().map(|l| m.distance(l, &q).unwrap()).collect();
        prop_assert!(each.iter().all(|&e| d <= e));
        prop_assert!(each.contains(&d));
        let (i, di) = m.nearest(&set, &q).unwrap();
        prop_assert_eq!(di, d);
        prop_assert_eq!(each.iter().position(|&e| e == d), Some(i));
    }
}

#[test]
fn metric_rejects_dimension_mismatch() {
    assert!(Metric::unit(2).distance(&[0.0], &[0.0, 1.0]).is_err());
    assert!(Metric::unit(2)
        .set_distance::<Vec<f64>>(&[], &[0.0, 0.0])
        .is_err());
}

/// Dense 1D sweep from `q[joint]` towards `limit`: the last collision-free
/// sample, or the limit itself when every sample up to it is free.
fn sweep_oracle(
    robot: &RobotModel,
    world: &World,
    q: &[f64],
    joint: usize,
    step: f64,
    up: bool,
) -> f64 {
    let spec = robot.joints()[joint];
    let (limit, sign) = if up { (spec.hi, 1.0) } else { (spec.lo, -1.0) };
    let mut probe = q.to_vec();
    let mut last = q[joint];
    for i in 1.. {
        let v = q[joint] + sign * i as f64 * step;
        let at_limit = if up { v >= limit } else { v <= limit };
        probe[joint] = if at_limit { limit } else { v };
        if collides(robot, world, &probe) {
            return last;
        }
        if at_limit {
            return limit;
        }
        last = v;
    }
    unreachable!()
}

fn random_free(robot: &RobotModel, world: &World, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let q: Vec<f64> = robot
            .joints()
            .iter()
            .map(|j| rng.random_range(j.lo..=j.hi))
            .collect();
        if !collides(robot, world, &q) {
            return q;
        }
    }
}

#[test]
fn range_matches_dense_sampling_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ["maze", "arm2", "arm6_dynamic", "corridor"] {
        let s = fixture(name).unwrap();
        for _ in 0..40 {
            let q = random_free(&s.robot, &s.world, &mut rng);
            for j in 0..s.robot.dof() {
                let step = s.robot.joints()[j].span() / 512.0;
                let r = legal_motion_range(&s.robot, &s.world, &q, j, step).unwrap();
                let hi = sweep_oracle(&s.robot, &s.world, &q, j, step, true);
                let lo = sweep_oracle(&s.robot, &s.world, &q, j, step, false);
                assert_eq!((r.lo, r.hi), (lo, hi), "{name} q={q:?} joint {j}");
            }
        }
    }
}

#[test]
fn range_contains_start_and_stays_within_limits_and_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in ["maze", "arm2", "trap"] {
        let s = fixture(name).unwrap();
        for _ in 0..60 {
            let q = random_free(&s.robot, &s.world, &mut rng);
            for j in 0..s.robot.dof() {
                let spec = s.robot.joints()[j];
                let step = spec.span() / 512.0;
                let r = legal_motion_range(&s.robot, &s.world, &q, j, step).unwrap();
                assert!(r.lo <= q[j] && q[j] <= r.hi);
                assert!(spec.lo <= r.lo && r.hi <= spec.hi);
                let mut probe = q.clone();
                let mut v = q[j];
                while v <= r.hi {
                    probe[j] = v;
                    assert!(
                        !collides(&s.robot, &s.world, &probe),
                        "{name} sample {v} inside range collides"
                    );
                    v += step;
                }
                let mut v = q[j];
                while v >= r.lo {
                    probe[j] = v;
                    assert!(
                        !collides(&s.robot, &s.world, &probe),
                        "{name} sample {v} inside range collides"
                    );
                    v -= step;
                }
            }
        }
    }
}

#[test]
fn range_rejects_bad_input() {
    let s = fixture("arm2").unwrap();
    let step = 0.01;
    assert!(legal_motion_range(&s.robot, &s.world, &s.start, 2, step).is_err());
    assert!(legal_motion_range(&s.robot, &s.world, &s.start, 0, 0.0).is_err());
    assert!(legal_motion_range(&s.robot, &s.world, &[0.0], 0, step).is_err());
    assert!(legal_motion_range(&s.robot, &s.world, &[9.0, 0.0], 0, step).is_err());
}

#[test]
fn collides_agrees_with_rasterization() {
    let cell = 0.004;
    for name in ["arm2", "maze"] {
        let s = fixture(name).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut agree = 0;
        for _ in 0..1000 {
            let q: Vec<f64> = s
                .robot
                .joints()
                .iter()
                .map(|j| rng.random_range(j.lo..=j.hi))
                .collect();
            let exact = collides(&s.robot, &s.world, &q);
            let raster = common::raster_collides(&s.robot, &s.world, &q, cell);
            if exact == raster {
                agree += 1;
            } else {
                let gap = common::clearance(&s.robot, &s.world, &q);
                assert!(
                    gap <= cell * std::f64::consts::SQRT_2,
                    "{name} {q:?}: disagreement {gap} away from contact"
                );
            }
        }
        assert!(agree >= 990, "{name}: {agree}/1000");
    }
}

#[test]
fn snapshots_are_versioned() {
    let s = fixture("arm6_dynamic").unwrap();
    let w0 = s.world.clone();
    let pose = w0.movable()[0].pose.clone();
    let w1 = w0.with_pose("arm_b", pose.clone()).unwrap();
    assert_eq!(w1.snapshot(), w0.snapshot() + 1);
    assert!(w0.with_pose("nobody", pose).is_err());
}
