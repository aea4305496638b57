use lmpflp::instance::*;
use lmpflp::jms::jms_run;
use lmpflp::local_search::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn optimum_makes_no_moves() {
    let inst: Instance = gen_euclidean(1, 7, 14, 2, CostLaw::Range(0.1, 1.0)).unwrap();
    let (opt, _) = brute_force_ufl(&inst, false).unwrap();
    let out = swap_local_search(&inst, &opt, &SearchConfig::default()).unwrap();
    assert!(out.log.is_empty());
    let out = localsearch_jms(&inst, &opt, &SearchConfig::default()).unwrap();
    assert!(out.log.is_empty());
}

#[test]
fn trap_is_swap_local_optimum() {
    for &(delta, a, b) in &[(1usize, 1.0, 1.0), (2, 1.0, 1.0), (2, 1.0, 0.5), (3, 2.0, 1.0)] {
        let t: LsTrap = gen_ls_counterexample(delta, a, b).unwrap();
        let cfg = SearchConfig { delta, alpha: a, beta: b, ..Default::default() };
        let s = t.instance.evaluate(&t.s).unwrap();
        assert_eq!(is_local_opt(&t.instance, &s, &cfg, MoveFamily::Swap).unwrap(), None);
        let out = swap_local_search(&t.instance, &s, &cfg).unwrap();
        assert!(out.log.is_empty());
        let opt = t.instance.evaluate(&t.opt).unwrap();
        assert!(opt.cost() < s.cost());
    }
}

#[test]
fn localsearch_jms_escapes_trap() {
    let t: LsTrap = gen_ls_counterexample(1, 1.0, 1.0).unwrap();
    let s = t.instance.evaluate(&t.s).unwrap();
    let cfg = SearchConfig { delta: 1, width_eps: 1.0, ..Default::default() };
    let out = localsearch_jms(&t.instance, &s, &cfg).unwrap();
    assert!(out.solution.cost() < s.cost());
    assert!(out.log.iter().any(|r| r.mv.kind == MoveKind::Extend));
    let text = out.log_text();
    assert!(text.starts_with("step=1 kind="));
}

#[test]
fn random_descent_and_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..25 {
        let m = rng.gen_range(2..=7);
        let n = rng.gen_range(3..=14);
        let inst: Instance = gen_euclidean(rng.gen(), m, n, 2, CostLaw::Range(0.05, 1.5)).unwrap();
        let (seed, _) = jms_run(&inst);
        let (opt, _) = brute_force_ufl(&inst, false).unwrap();
        for family in [MoveFamily::Swap, MoveFamily::JmsExtended] {
            let cfg = SearchConfig { seed: rng.gen(), ..Default::default() };
            let out = match family {
                MoveFamily::Swap => swap_local_search(&inst, &seed, &cfg).unwrap(),
                MoveFamily::JmsExtended => localsearch_jms(&inst, &seed, &cfg).unwrap(),
            };
            assert!(!out.budget_exhausted);
            assert!(out.solution.cost() <= seed.cost() + 1e-12);
            assert!(out.solution.cost() >= opt.cost() - 1e-12);
            let costs: Vec<f64> = out.log.iter().map(|r| r.mv.cost).collect();
            assert!(costs.windows(2).all(|w| w[1] < w[0]));
            assert_eq!(is_local_opt(&inst, &out.solution, &cfg, family).unwrap(), None);
            let again = match family {
                MoveFamily::Swap => swap_local_search(&inst, &out.solution, &cfg).unwrap(),
                MoveFamily::JmsExtended => localsearch_jms(&inst, &out.solution, &cfg).unwrap(),
            };
            assert!(again.log.is_empty());
        }
    }
}

#[test]
fn relative_threshold_and_budget() {
    let inst: Instance = gen_euclidean(6, 6, 12, 2, CostLaw::Range(0.01, 0.05)).unwrap();
    let init = inst.evaluate(&[0]).unwrap();
    let cfg = SearchConfig { threshold: ThresholdMode::Relative, eps: 0.5, ..Default::default() };
    let out = swap_local_search(&inst, &init, &cfg).unwrap();
    let n5 = 18f64.powi(5);
    for w in out.log.windows(2) {
        assert!(w[1].mv.cost < w[0].mv.cost / (1.0 + 0.125 / n5));
    }
    let full = swap_local_search(&inst, &init, &SearchConfig::default()).unwrap();
    assert!(full.log.len() > 1);
    let one = SearchConfig { move_budget: 1, ..Default::default() };
    let out = swap_local_search(&inst, &init, &one).unwrap();
    assert_eq!(out.log.len(), 1);
    assert!(out.budget_exhausted);
}

#[test]
fn removing_essential_facility_is_detected() {
    // two far clusters, one facility each
    let mut pts = vec![vec![0.0, 0.0], vec![10.0, 0.0]];
    pts.extend([vec![0.1, 0.0], vec![0.0, 0.1], vec![10.1, 0.0], vec![10.0, 0.1]]);
    let inst: Instance = Instance::from_coords(vec![1.0, 1.0], 4, 2, pts).unwrap();
    let (opt, _) = brute_force_ufl(&inst, false).unwrap();
    assert_eq!(opt.open, vec![0, 1]);
    let less = inst.evaluate(&[0]).unwrap();
    let mv = is_local_opt(&inst, &less, &SearchConfig::default(), MoveFamily::Swap).unwrap().unwrap();
    assert_eq!(mv.added, vec![1]);
    assert!(mv.removed.is_empty());
}

#[test]
fn all_zero_costs_no_move() {
    let inst: Instance = gen_euclidean(2, 5, 9, 2, CostLaw::Uniform(0.0)).unwrap();
    let all = inst.evaluate(&[0, 1, 2, 3, 4]).unwrap();
    assert!(localsearch_jms(&inst, &all, &SearchConfig::default()).unwrap().log.is_empty());
}

#[test]
fn components() {
    let mut pts = vec![vec![0.0, 0.0], vec![0.3, 0.0], vec![50.0, 0.0], vec![50.2, 0.0]];
    pts.extend([vec![0.1, 0.1], vec![0.2, 0.2], vec![50.1, 0.1], vec![49.9, 0.0]]);
    let inst: Instance = Instance::from_coords(vec![0.4, 0.5, 0.3, 0.6], 4, 2, pts).unwrap();
    let comps = preprocess_components(&inst, 5.0, 0.1).unwrap();
    assert_eq!(comps.len(), 2);
    assert_eq!(preprocess_components(&inst, 1000.0, 0.1).unwrap().len(), 1);
    let (opt, _) = brute_force_ufl(&inst, false).unwrap();
    let opens: Vec<Vec<usize>> = comps.iter().map(|c| brute_force_ufl(&c.instance, false).unwrap().0.open).collect();
    let merged = merge_components(&inst, &comps, &opens).unwrap();
    assert!(merged.cost() <= 1.1 * opt.cost());
}

#[test]
fn components_within_eps_on_random_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let mut pts = Vec::new();
        let (m, n) = (6, 10);
        for i in 0..m + n {
            let off = if i % 2 == 0 { 0.0 } else { 100.0 };
            pts.push(vec![off + rng.gen::<f64>(), rng.gen::<f64>()]);
        }
        let costs = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
        let inst: Instance = Instance::from_coords(costs, n, 2, pts).unwrap();
        let (opt, _) = brute_force_ufl(&inst, false).unwrap();
        let eps = 0.2;
        let comps = preprocess_components(&inst, opt.connection_cost.max(2.0), eps).unwrap();
        assert_eq!(comps.len(), 2);
        let opens: Vec<Vec<usize>> = comps.iter().map(|c| brute_force_ufl(&c.instance, false).unwrap().0.open).collect();
        let merged = merge_components(&inst, &comps, &opens).unwrap();
        assert!(merged.cost() <= (1.0 + eps) * opt.cost() + 1e-12);
    }
}
