use lmpflp::instance::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TINY: &str = "flp 1\nfacilities 1\n0 5\nclients 1\nmetric explicit\n0 3\n3 0\n";

#[test]
fn parse_smallest() {
    let inst: Instance = parse_instance(TINY, true).unwrap();
    assert_eq!((inst.m(), inst.n()), (1, 1));
    assert_eq!(inst.d(0, 0), 3.0);
    assert_eq!(inst.open_cost, vec![5.0]);
}

#[test]
fn parse_euclidean_345() {
    let text = "# pts\nflp 1\nfacilities 1\n0 1.5\nclients 2\nmetric euclidean 2\n0 0\n3 4\n6 8 # trailing comment\n";
    let inst: Instance = parse_instance(text, true).unwrap();
    assert_eq!(inst.d(0, 0), 5.0);
    assert_eq!(inst.d(1, 0), 10.0);
}

#[test]
fn parse_errors() {
    let bad = "flp 1\nfacilities 1\n0 1\nclients 2\nmetric explicit\n0 1 1\n1 0 5\n1 5 0\n";
    assert!(matches!(parse_instance::<f64>(bad, true), Err(InstanceError::NonMetric(..))));
    assert!(parse_instance::<f64>(bad, false).is_ok());
    let neg = "flp 1\nfacilities 1\n0 -1\nclients 1\nmetric explicit\n0 3\n3 0\n";
    assert_eq!(parse_instance::<f64>(neg, false), Err(InstanceError::NegativeCost(0)));
    let short = "flp 1\nfacilities 1\n0 1\nclients 1\nmetric explicit\n0 3\n";
    assert!(matches!(parse_instance::<f64>(short, false), Err(InstanceError::Syntax { line: 7, .. })));
    let tok = "flp 1\nfacilities 1\n0 x\nclients 1\nmetric explicit\n0 3\n3 0\n";
    assert!(matches!(parse_instance::<f64>(tok, false), Err(InstanceError::Syntax { line: 3, .. })));
    let dim = "flp 1\nfacilities 1\n0 1\nclients 1\nmetric euclidean 2\n0 0\n1\n";
    assert!(matches!(parse_instance::<f64>(dim, false), Err(InstanceError::Syntax { line: 7, .. })));
    let asym = "flp 1\nfacilities 1\n0 1\nclients 1\nmetric explicit\n0 3\n3.5 0\n";
    assert!(matches!(parse_instance::<f64>(asym, false), Err(InstanceError::Asymmetric(..))));
}

#[test]
fn tiny_asymmetry_is_averaged() {
    let text = "flp 1\nfacilities 1\n0 1\nclients 1\nmetric explicit\n0 3\n3.000000000000001 0\n";
    let inst: Instance = parse_instance(text, true).unwrap();
    assert_eq!(inst.d(0, 0), inst.ff(0, 1));
}

#[test]
fn serialize_roundtrip_and_determinism() {
    let a: Instance = gen_euclidean(7, 6, 15, 2, CostLaw::Range(0.1, 2.0)).unwrap();
    let b: Instance = gen_euclidean(7, 6, 15, 2, CostLaw::Range(0.1, 2.0)).unwrap();
    let (sa, sb) = (serialize_instance(&a), serialize_instance(&b));
    assert_eq!(sa, sb);
    let back: Instance = parse_instance(&sa, true).unwrap();
    assert_eq!(serialize_instance(&back), sa);
    for c in 0..15 {
        for f in 0..6 {
            assert_eq!(back.d(c, f), a.d(c, f));
        }
    }
    a.validate_metric().unwrap();
    let m = gen_explicit(3);
    let text = serialize_instance(&m);
    assert_eq!(parse_instance::<f64>(&text, true).unwrap(), m);
}

fn gen_explicit(seed: u64) -> Instance {
    let e: Instance = gen_euclidean(seed, 4, 5, 3, CostLaw::Uniform(1.0)).unwrap();
    let p = 9;
    let rows = (0..p).map(|i| (0..p).map(|j| e.dist(i, j)).collect()).collect();
    Instance::from_matrix(e.open_cost.clone(), 5, rows).unwrap()
}

#[test]
fn evaluate_matches_double_loop() {
    let inst: Instance = gen_euclidean(11, 5, 8, 2, CostLaw::Range(0.0, 1.0)).unwrap();
    let open = [3, 1];
    let sol = inst.evaluate(&open).unwrap();
    let mut conn = 0.0;
    for c in 0..8 {
        let mut best = f64::INFINITY;
        for f in [1usize, 3] {
            let d = inst.d(c, f);
            if d < best {
                best = d;
            }
        }
        conn += best;
    }
    assert!((sol.connection_cost - conn).abs() < 1e-12);
    assert!((sol.facility_cost - inst.open_cost[1] - inst.open_cost[3]).abs() < 1e-12);
    assert_eq!(sol.open, vec![1, 3]);
    assert_eq!(inst.evaluate(&sol.open).unwrap(), sol);
    assert_eq!(inst.evaluate(&[]), Err(InstanceError::EmptyOpenSet));
    assert_eq!(inst.evaluate(&[9]), Err(InstanceError::BadFacility(9)));
}

#[test]
fn evaluate_ties_go_to_lowest_id() {
    let d = vec![vec![0.0, 2.0, 1.0], vec![2.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
    let inst = Instance::from_matrix(vec![1.0, 1.0], 1, d).unwrap();
    assert_eq!(inst.evaluate(&[1, 0]).unwrap().assign, vec![0]);
}

#[test]
fn brute_force_ufl_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..10 {
        let inst: Instance = gen_euclidean(seed, 7, 12, 2, CostLaw::Range(0.0, 1.5)).unwrap();
        let (best, tab) = brute_force_ufl(&inst, true).unwrap();
        let tab = tab.unwrap();
        for _ in 0..100 {
            let mask: u64 = rng.gen_range(1..128);
            let s = inst.evaluate(&mask_to_set(mask)).unwrap();
            assert!(best.cost() <= s.cost() + 1e-12);
            assert!((tab.conn[mask as usize] - s.connection_cost).abs() < 1e-9);
            assert!((tab.open[mask as usize] - s.facility_cost).abs() < 1e-12);
        }
    }
}

#[test]
fn brute_force_ufl_hand_built() {
    // facility 2 is cheap and central
    let d = vec![
        vec![0.0, 4.0, 2.0, 1.0, 3.0],
        vec![4.0, 0.0, 2.0, 3.0, 1.0],
        vec![2.0, 2.0, 0.0, 1.0, 1.0],
        vec![1.0, 3.0, 1.0, 0.0, 2.0],
        vec![3.0, 1.0, 1.0, 2.0, 0.0],
    ];
    let inst = Instance::from_matrix(vec![1.0, 1.0, 0.5], 2, d).unwrap();
    let mut best = (f64::INFINITY, 0u64);
    for mask in (1u64..8).rev() {
        let s = inst.evaluate(&mask_to_set(mask)).unwrap();
        if s.cost() < best.0 {
            best = (s.cost(), mask);
        }
    }
    let (sol, _) = brute_force_ufl(&inst, false).unwrap();
    assert_eq!(sol.open, mask_to_set(best.1));
    assert_eq!(sol.open, vec![2]);
    let one = Instance::from_matrix(vec![3.0], 1, vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert_eq!(brute_force_ufl(&one, false).unwrap().0.open, vec![0]);
}

#[test]
fn zero_costs_open_everything() {
    let inst: Instance = gen_euclidean(3, 6, 10, 2, CostLaw::Uniform(0.0)).unwrap();
    let (sol, _) = brute_force_ufl(&inst, false).unwrap();
    let all = inst.evaluate(&(0..6).collect::<Vec<_>>()).unwrap();
    assert!((sol.cost() - all.cost()).abs() < 1e-12);
}

#[test]
fn kmedian_oracles() {
    let inst: Instance = gen_euclidean(5, 6, 10, 2, CostLaw::Uniform(1.0)).unwrap();
    let all = brute_force_kmedian(&inst, 6).unwrap();
    let direct: f64 = (0..10).map(|c| (0..6).map(|f| inst.d(c, f)).fold(f64::INFINITY, f64::min)).sum();
    assert!((all.connection_cost - direct).abs() < 1e-12);
    let one = brute_force_kmedian(&inst, 1).unwrap();
    let scan = (0..6).map(|f| (0..10).map(|c| inst.d(c, f)).sum::<f64>()).fold(f64::INFINITY, f64::min);
    assert!((one.connection_cost - scan).abs() < 1e-12);
    assert!(brute_force_kmedian(&inst, 7).is_err());
    let trap: LsTrap = gen_ls_counterexample(1, 1.0, 1.0).unwrap();
    let k = trap.n;
    assert_eq!(brute_force_kmedian(&trap.instance, k).unwrap().connection_cost, 0.0);
}

#[test]
fn trap_instance_is_valid() {
    for &(delta, a, b) in &[(1usize, 1.0, 1.0), (2, 1.0, 1.0), (2, 1.0, 0.5), (3, 2.0, 1.0), (1, 1.0, 3.0)] {
        let t: LsTrap = gen_ls_counterexample(delta, a, b).unwrap();
        t.instance.validate_metric().unwrap();
        let s = t.instance.evaluate(&t.s).unwrap();
        let opt = t.instance.evaluate(&t.opt).unwrap();
        assert_eq!(opt.connection_cost, 0.0);
        assert!(opt.cost() < s.cost());
        assert!(t.y > b / a);
        if t.instance.m() <= MAX_ENUM_FACILITIES {
            let (best, _) = brute_force_ufl(&t.instance, false).unwrap();
            assert!(best.cost() <= opt.cost());
            if (1.0..2.0).contains(&t.y) {
                assert_eq!(best.open, t.opt);
            }
        }
    }
}
