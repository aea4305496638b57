use lmpflp::factor_lp::{aggregate_solution, lift_solution, opt_jms, opt_plus};

#[test]
fn lift_and_aggregate_small_grid() {
    for &(q, c, t) in &[(3usize, 2usize, 5.0f64), (2, 3, 1.0), (4, 2, 0.5), (3, 3, 2.0), (5, 2, 10.0)] {
        let (v, p) = opt_jms(q, Some(t)).unwrap();
        let lifted = lift_solution(&p, c, 1e-9).unwrap();
        assert!((lifted.objective() - v).abs() < 1e-9);
        let (vc, pc) = opt_jms(c * q, Some(t)).unwrap();
        assert!(v <= vc + 1e-7);
        let agg = aggregate_solution(&pc, c, 1e-9).unwrap();
        assert!((agg.objective() - vc).abs() < 1e-9);
        let (vp, _) = opt_plus(q.max(2), Some(t)).unwrap();
        if q >= 2 {
            assert!(vp >= vc - 1e-7, "q={q} c={c} t={t}: {vp} < {vc}");
        }
    }
}
