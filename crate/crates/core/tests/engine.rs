use dlas_core::analysis::MeanStderr;
use dlas_core::engine::{init_configuration, run_crs, Kind, Region, SimParams};
use dlas_core::rng::split;
use dlas_core::GraphSpec;
use proptest::prelude::*;

#[test]
fn same_seed_same_trace() {
    let mut p = SimParams::new(GraphSpec::Lattice { d: 2 }, 0.5, 10.0, Region::Ball(6), 77);
    p.lambda_b = 1.0;
    p.sample_times = vec![1.0, 5.0, 10.0];
    p.record_field = true;
    let (g, init) = init_configuration(&p).unwrap();
    let a = run_crs(&g, &p, &init).unwrap();
    let b = run_crs(&g, &p, &init).unwrap();
    assert_eq!(a, b);
    p.seed = 78;
    let (g, init2) = init_configuration(&p).unwrap();
    assert_ne!(run_crs(&g, &p, &init2).unwrap(), a);
}

#[test]
fn jump_counts_are_poisson() {
    // No B-particles: every A jumps at rate 1 for the whole horizon.
    let t = 7.0;
    let mut counts = Vec::new();
    for i in 0..300 {
        let mut p = SimParams::new(GraphSpec::Line, 1.0, t, Region::Segment(-4, 4), split(1, i));
        p.lambda_a = 1.0;
        let (g, init) = init_configuration(&p).unwrap();
        let tr = run_crs(&g, &p, &init).unwrap();
        counts.extend(tr.fates.iter().map(|f| f.jumps as f64));
    }
    let m = MeanStderr::of(&counts);
    assert!((m.mean - t).abs() < 4.0 * m.stderr, "{m:?}");
    let var = counts.iter().map(|c| (c - m.mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
    assert!((var / t - 1.0).abs() < 0.1, "variance {var}");
}

#[test]
fn all_a_density_is_one() {
    // A wide block of A-particles keeps the root occupied at rate 1.
    let t = 10.0;
    let mut n = Vec::new();
    let mut v = Vec::new();
    for i in 0..200 {
        let mut p = SimParams::new(GraphSpec::Line, 1.0, t, Region::Segment(-60, 60), split(2, i));
        p.sample_times = vec![t];
        let (g, init) = init_configuration(&p).unwrap();
        let tr = run_crs(&g, &p, &init).unwrap();
        n.push(tr.n_root[0] as f64);
        v.push(tr.v_horizon);
    }
    let (n, v) = (MeanStderr::of(&n), MeanStderr::of(&v));
    assert!((n.mean - 1.0).abs() < 4.0 * n.stderr, "{n:?}");
    assert!((v.mean - t).abs() < 4.0 * v.stderr, "{v:?}");
}

#[test]
fn lone_a_with_stationary_b_never_passes_it() {
    let mut p = SimParams::new(GraphSpec::Line, 0.5, 200.0, Region::Segment(0, 1), 0);
    p.sample_times = vec![200.0];
    p.record_field = true;
    for seed in 0..20 {
        p.seed = seed;
        let (g, init) = init_configuration(&p).unwrap();
        let tr = run_crs(&g, &p, &init).unwrap();
        let f = &tr.fields[0];
        let total: i64 = f.0.iter().map(|e| e.1).sum();
        assert_eq!(total, init.discrepancy(|_| true));
        assert!(f.0.len() <= 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn discrepancy_is_conserved(seed in any::<u64>(), p in 0.0f64..=1.0, lb in 0.0f64..2.0, d in 1u32..=3) {
        let spec = if d == 1 { GraphSpec::Line } else { GraphSpec::Lattice { d } };
        let mut sp = SimParams::new(spec, p, 6.0, Region::Ball(3), seed);
        sp.lambda_b = lb;
        sp.sample_times = vec![0.5, 2.0, 6.0];
        sp.record_field = true;
        let (g, init) = init_configuration(&sp).unwrap();
        let d0 = init.discrepancy(|_| true);
        let tr = run_crs(&g, &sp, &init).unwrap();
        for f in &tr.fields {
            prop_assert_eq!(f.0.iter().map(|e| e.1).sum::<i64>(), d0);
            prop_assert!(f.0.iter().all(|e| e.1 != 0));
        }
        // Annihilations remove one particle of each type.
        let deaths_a = tr.fates.iter().zip(&init.particles).filter(|(f, q)| f.death.is_finite() && q.kind == Kind::A).count();
        let deaths_b = tr.fates.iter().zip(&init.particles).filter(|(f, q)| f.death.is_finite() && q.kind == Kind::B).count();
        prop_assert_eq!(deaths_a, deaths_b);
        // Occupation is nondecreasing and bounded by (#A) t.
        prop_assert!(tr.v_root.windows(2).all(|w| w[0] <= w[1]));
        let na = init.particles.iter().filter(|q| q.kind == Kind::A).count() as f64;
        prop_assert!(tr.v_horizon <= na * 6.0 + 1e-9);
    }

    #[test]
    fn tree_runs_lose_mass_only_by_escape_or_annihilation(seed in any::<u64>(), lb in 0.0f64..1.5) {
        let mut sp = SimParams::new(GraphSpec::BiTree { d: 2, n: 9 }, 0.5, 4.0, Region::Levels(0, 4), seed);
        sp.lambda_b = lb;
        let (g, init) = init_configuration(&sp).unwrap();
        let tr = run_crs(&g, &sp, &init).unwrap();
        for (f, q) in tr.fates.iter().zip(&init.particles) {
            let gone = f.death.is_finite() || f.escape.is_finite();
            prop_assert_eq!(gone, f.site.is_none());
            if q.kind == Kind::B && lb == 0.0 {
                prop_assert_eq!(f.jumps, 0);
            }
        }
        prop_assert!(tr.visits.iter().all(|v| v.occupancy >= 0.0 && v.first_visit <= 4.0));
        let _ = g;
    }
}
