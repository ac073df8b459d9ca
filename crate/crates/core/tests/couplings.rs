use dlas_core::analysis::MeanStderr;
use dlas_core::couplings::*;
use dlas_core::engine::{init_configuration, run_crs, InitParticle, InitialConfig, Kind, Region, SimParams};
use dlas_core::rng::{StreamKey, Streams, Tag};
use dlas_core::{Graph, GraphSpec, Move, Site};

fn line_params(lo: i64, hi: i64, t: f64, seed: u64, lambda_b: f64) -> SimParams {
    let mut p = SimParams::new(GraphSpec::Line, 0.5, t, Region::Segment(lo, hi), seed);
    p.lambda_b = lambda_b;
    p
}

fn report(check: Check, seeds: std::ops::Range<u64>, mk: impl Fn(u64) -> SimParams, opts: &CheckOptions) -> CheckReport {
    fold_report(check, seeds.map(|s| (s, run_check(check, &mk(s), opts)))).unwrap()
}

fn particle(g: &Graph, x: i64, kind: Kind, brave: f64) -> InitParticle {
    let s = g.site_at(&[x]).unwrap();
    InitParticle { site: s, kind, braveness: brave, path: StreamKey::new(s.0, Tag::Path) }
}

#[test]
fn path_swapping_matches_crs_on_line() {
    let opts = CheckOptions::default();
    for lb in [0.0, 1.0] {
        let r = report(Check::PathSwap, 0..60, |s| line_params(-25, 24, 20.0, s, lb), &opts);
        assert_eq!(r.failures, 0, "{r:?}");
    }
}

#[test]
fn path_swapping_matches_crs_on_plane_and_tree() {
    let opts = CheckOptions { samples: 16, ..Default::default() };
    let r = report(
        Check::PathSwap,
        0..30,
        |s| {
            let mut p = SimParams::new(GraphSpec::Lattice { d: 2 }, 0.5, 8.0, Region::Ball(4), s);
            p.lambda_b = 0.7;
            p
        },
        &opts,
    );
    assert_eq!(r.failures, 0, "{r:?}");
    let r = report(
        Check::PathSwap,
        0..30,
        |s| {
            let mut p = SimParams::new(GraphSpec::BiTree { d: 2, n: 10 }, 0.5, 5.0, Region::Levels(0, 5), s);
            p.lambda_b = 1.0;
            p
        },
        &opts,
    );
    assert_eq!(r.failures, 0, "{r:?}");
}

#[test]
fn invisible_a_is_frozen_when_b_is_stationary() {
    let p = line_params(0, 1, 50.0, 3, 0.0);
    let g = Graph::new(GraphSpec::Line).unwrap();
    let init = InitialConfig { particles: vec![particle(&g, 0, Kind::B, 0.5), particle(&g, 1, Kind::A, 0.5)] };
    let mut sim = PathSwapSim::new(&g, &p, &init, true).unwrap();
    while sim.a_states()[0].visible {
        sim.step().unwrap().expect("the walk is recurrent");
    }
    let st = sim.a_states()[0];
    assert_eq!(st.site, Some(g.site_at(&[0]).unwrap()));
    assert!(sim.field().0.is_empty());
    assert_eq!(sim.step().unwrap(), None);
}

#[test]
fn change_tracking_identities() {
    let opts = CheckOptions::default();
    for lb in [0.0, 1.0] {
        let r = report(Check::ChangeTrack, 0..40, |s| line_params(-15, 14, 10.0, s, lb), &opts);
        assert_eq!(r.failures, 0, "{r:?}");
    }
}

#[test]
fn change_tracking_extremes() {
    let p = {
        let mut p = line_params(-10, 9, 6.0, 11, 1.0);
        p.sample_times = even_times(6.0, 12);
        p
    };
    let (g, init) = init_configuration(&p).unwrap();
    let all = init.a_indices().len();
    assert!(check_change_tracking(&g, &p, &init, all).unwrap().is_empty());
    assert!(check_change_tracking(&g, &p, &init, 0).unwrap().is_empty());
    assert_eq!(truncate_a(&init, all), init);
    assert!(truncate_a(&init, 0).particles.iter().all(|q| q.kind == Kind::B));
}

#[test]
fn sequential_single_walk_absorbed_at_origin() {
    let g = Graph::new(GraphSpec::Line).unwrap();
    let mut p = line_params(0, 1, f64::INFINITY, 5, 0.0);
    p.max_events = u64::MAX;
    let init = InitialConfig { particles: vec![particle(&g, 0, Kind::B, 0.1), particle(&g, 1, Kind::A, 0.9)] };
    let r = run_sequential(&g, &p, &init, DEFAULT_STEP_CAP).unwrap();
    // Replay the same path by hand.
    let mut path = Streams::new(5).path(init.particles[1].path, 1.0);
    let (mut x, mut t) = (g.site_at(&[1]).unwrap(), 0.0);
    let origin = g.root();
    loop {
        t += path.hold();
        match g.sample_step(x, &mut path).unwrap() {
            Move::To(y) => x = y,
            Move::Escaped => unreachable!(),
        }
        if x == origin {
            break;
        }
    }
    let a = r.particles[0];
    assert_eq!(a.fate, SeqFate::HitB { site: origin, time: t });
    assert!(a.visited_root);
    assert_eq!(a.first_visit, t);
    assert_eq!(a.occupancy, 0.0);
    assert_eq!(r.v, 0.0);
}

#[test]
fn sequential_without_b_is_independent_walks() {
    let mut p = line_params(-5, 5, 12.0, 9, 0.0);
    p.p = 1.0;
    let (g, init) = init_configuration(&p).unwrap();
    let r = run_sequential(&g, &p, &init, DEFAULT_STEP_CAP).unwrap();
    let streams = Streams::new(9);
    let mut total = 0.0;
    for q in &init.particles {
        let mut path = streams.path(q.path, 1.0);
        let (mut x, mut t, mut occ) = (q.site, 0.0, 0.0);
        loop {
            let h = path.hold();
            let end = (t + h).min(12.0);
            if x == g.root() {
                occ += end - t;
            }
            if t + h >= 12.0 {
                break;
            }
            t += h;
            if let Move::To(y) = g.sample_step(x, &mut path).unwrap() {
                x = y;
            }
        }
        total += occ;
    }
    assert!(r.particles.iter().all(|a| a.fate == SeqFate::TimeUp));
    assert!((r.v - total).abs() < 1e-12, "{} vs {total}", r.v);
}

#[test]
fn half_line_occupations() {
    use dlas_core::analysis::{expected_uk, expected_uplus};
    let p = 0.3;
    let q = 1.0 - p;
    let runs: Vec<_> = (0..40_000).map(|s| half_line_sequential(p, 300, s, DEFAULT_STEP_CAP).unwrap()).collect();
    assert!(runs.iter().all(|r| r.censored == 0));
    let mean_of = |k: usize| MeanStderr::of(&runs.iter().map(|r| r.u[k]).collect::<Vec<_>>());
    // With at most one site to the left the formula is exact.
    for k in 0..2 {
        let m = mean_of(k);
        let want = expected_uk(k as u64, p).unwrap();
        assert!((m.mean - want).abs() < 4.0 * m.stderr, "k={k}: {m:?} vs {want}");
    }
    // k = 2 by cases on sites 0 and 1. Given the distance L to the next
    // surviving B right of site 2, the A at 2 earns 2pL on average. For
    // (B, A) the A at 1 clears site 0 only with probability (L+1)/(L+2); when
    // it does not, the A at 2 earns nothing. L is a sum of i geometrics.
    let l1_term: f64 = (1..4000)
        .map(|l| {
            let l = l as f64;
            p.powf(l - 1.0) * q * 2.0 * p * l * (l + 1.0) / (l + 2.0)
        })
        .sum();
    let exact_u2 = p * p * 2.0 * p * (3.0 / q) + p * q * 2.0 * p * (1.0 / q) + q * p * l1_term;
    let m = mean_of(2);
    assert!((m.mean - exact_u2).abs() < 4.0 * m.stderr, "{m:?} vs {exact_u2}");
    assert!(exact_u2 < expected_uk(2, p).unwrap() - 0.04);
    // The series is an upper bound for the total.
    let m = MeanStderr::of(&runs.iter().map(|r| r.total).collect::<Vec<_>>());
    let bound = expected_uplus(p, None).unwrap().value;
    assert!(m.mean < bound + 4.0 * m.stderr, "{m:?} vs {bound}");
}

#[test]
fn sequential_rejects_moving_b() {
    let p = line_params(-3, 3, 5.0, 1, 1.0);
    let (g, init) = init_configuration(&p).unwrap();
    assert!(run_sequential(&g, &p, &init, 100).is_err());
    assert!(sequential_dominance(&g, &p, &init).is_err());
}

#[test]
fn sequential_dominates_dlas() {
    let opts = CheckOptions::default();
    let r = report(Check::Sequential, 0..300, |s| line_params(-20, 20, 10.0, s, 0.0), &opts);
    assert_eq!(r.failures, 0, "{r:?}");
    let r = report(
        Check::Sequential,
        0..100,
        |s| SimParams::new(GraphSpec::Lattice { d: 2 }, 0.5, 10.0, Region::Ball(5), s),
        &opts,
    );
    assert_eq!(r.failures, 0, "{r:?}");
}

#[test]
fn sequential_order_does_not_change_mean_occupation() {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for s in 0..2000 {
        let p = line_params(-8, 8, 6.0, s, 0.0);
        let (g, init) = init_configuration(&p).unwrap();
        let order = init.a_indices();
        let rev: Vec<usize> = order.iter().rev().copied().collect();
        a.push(run_sequential_in_order(&g, &p, &init, &order, DEFAULT_STEP_CAP).unwrap().v);
        b.push(run_sequential_in_order(&g, &p, &init, &rev, DEFAULT_STEP_CAP).unwrap().v);
    }
    let (x, y) = (MeanStderr::of(&a), MeanStderr::of(&b));
    let pooled = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
    assert!((x.mean - y.mean).abs() <= 3.0 * pooled, "{x:?} vs {y:?}");
}

#[test]
fn polarized_all_positive_is_crs() {
    for s in 0..50 {
        let p = line_params(-10, 9, 8.0, s, 0.0);
        let (g, init) = init_configuration(&p).unwrap();
        let r = run_polarized(&g, &p, &init, &vec![true; init.particles.len()]).unwrap();
        let crs = run_crs(&g, &p, &init).unwrap();
        assert!((r.v - crs.v_horizon).abs() < 1e-9, "seed {s}");
        assert_eq!(r.v_plus, crs.v_horizon);
        assert_eq!(r.v_minus, 0.0);
        assert!(r.violations.is_empty());
        for (i, f) in crs.fates.iter().enumerate() {
            if init.particles[i].kind == Kind::A {
                assert!((r.own_time[i] - f.death.min(8.0)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn polarized_is_subadditive() {
    let opts = CheckOptions::default();
    let r = report(Check::Polarized, 0..300, |s| line_params(-10, 9, 5.0, s, 0.0), &opts);
    assert_eq!(r.failures, 0, "{r:?}");
    let r = report(
        Check::Polarized,
        0..100,
        |s| SimParams::new(GraphSpec::Lattice { d: 2 }, 0.5, 8.0, Region::Ball(5), s),
        &opts,
    );
    assert_eq!(r.failures, 0, "{r:?}");
}

#[test]
fn polarized_visible_law_matches_crs() {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for s in 0..2000 {
        let p = line_params(-10, 9, 5.0, s, 0.0);
        let (g, init) = init_configuration(&p).unwrap();
        let pol = draw_polarity(&p, &init, 0.5);
        a.push(run_polarized(&g, &p, &init, &pol).unwrap().v);
        // Independent copy for the CRS side.
        let q = line_params(-10, 9, 5.0, s + 1_000_000, 0.0);
        let (g, init) = init_configuration(&q).unwrap();
        b.push(run_crs(&g, &q, &init).unwrap().v_horizon);
    }
    let (x, y) = (MeanStderr::of(&a), MeanStderr::of(&b));
    let pooled = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
    assert!((x.mean - y.mean).abs() <= 3.0 * pooled, "{x:?} vs {y:?}");
}

#[test]
fn monotonicity_trivial_cases() {
    let mut p = line_params(-10, 9, 6.0, 4, 1.0);
    p.sample_times = even_times(6.0, 16);
    p.record_field = true;
    let (g, init) = init_configuration(&p).unwrap();
    assert!(check_monotonicity(&g, &p, &init, &[], &[]).unwrap().is_empty());
    let (same, map) = enlarge(&g, 4, &init, &[], &[]);
    assert_eq!(same, init);
    assert!(map.iter().enumerate().all(|(i, m)| *m == Some(i)));
    let bs: Vec<Site> = init.particles.iter().filter(|q| q.kind == Kind::B).map(|q| q.site).collect();
    assert!(check_monotonicity(&g, &p, &init, &[], &bs).unwrap().is_empty());
    let (big, _) = enlarge(&g, 4, &init, &[], &bs);
    let tr = run_crs(&g, &p, &big).unwrap();
    assert!(tr.fields.iter().all(|f| f.0.iter().all(|&(_, z)| z >= 0)));
}

#[test]
fn monotonicity_with_added_particles() {
    let opts = CheckOptions::default();
    for lb in [0.0, 1.0] {
        let r = report(Check::Monotone, 0..150, |s| line_params(-20, 19, 8.0, s, lb), &opts);
        assert_eq!(r.failures, 0, "{r:?}");
    }
    let opts = CheckOptions { added_a: 2, removed_b: 2, samples: 16, ..Default::default() };
    let r = report(
        Check::Monotone,
        0..60,
        |s| {
            let mut p = SimParams::new(GraphSpec::Lattice { d: 2 }, 0.5, 6.0, Region::Ball(4), s);
            p.lambda_b = 0.5;
            p
        },
        &opts,
    );
    assert_eq!(r.failures, 0, "{r:?}");
}

#[test]
fn check_names_round_trip() {
    for c in Check::ALL {
        assert_eq!(c.name().parse::<Check>().unwrap(), c);
    }
    assert!("nope".parse::<Check>().is_err());
}
