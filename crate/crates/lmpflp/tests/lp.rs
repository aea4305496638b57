use itertools::Itertools;
use lmpflp::lp::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solve(m: &LpModel<f64>) -> LpResult<f64> {
    lp_solve(m, 1e-7).unwrap()
}

#[test]
fn trivial_models() {
    let mut m = LpModel::new(1);
    m.objective = vec![(0, 1.0)];
    m.le(vec![(0, 1.0)], 3.0);
    let r = solve(&m);
    assert_eq!(r.status, LpStatus::Optimal);
    assert!((r.value - 3.0).abs() < 1e-12);

    let mut m = LpModel::new(1);
    m.objective = vec![(0, 1.0)];
    m.le(vec![(0, -1.0)], -1.0);
    m.le(vec![(0, 1.0)], 0.0);
    assert_eq!(solve(&m).status, LpStatus::Infeasible);

    let mut m = LpModel::new(2);
    m.objective = vec![(0, 1.0), (1, 1.0)];
    m.le(vec![(0, 1.0), (1, 1.0)], 1.0);
    let r = solve(&m);
    assert!((r.value - 1.0).abs() < 1e-12);
    assert!(lp_check_point(&m, &r.primal, 1e-9).passed);

    let mut m = LpModel::new(2);
    m.objective = vec![(0, 1.0)];
    m.le(vec![(1, 1.0)], 1.0);
    assert_eq!(solve(&m).status, LpStatus::Unbounded);
}

#[test]
fn malformed_rejected() {
    let mut m = LpModel::<f64>::new(1);
    m.le(vec![(3, 1.0)], 1.0);
    assert!(matches!(lp_solve(&m, 1e-7), Err(LpError::Malformed(_))));
    let mut m = LpModel::<f64>::new(2);
    m.le(vec![(0, 1.0), (0, 2.0)], 1.0);
    assert!(lp_solve(&m, 1e-7).is_err());
}

#[test]
fn check_point_reports_residual() {
    let mut m = LpModel::new(2);
    m.le(vec![(0, 1.0)], 1.0);
    m.eq(vec![(0, 1.0), (1, 1.0)], 2.0);
    let rep = lp_check_point(&m, &[1.5, 0.5], 1e-9);
    assert!(!rep.passed);
    assert_eq!(rep.violations.len(), 1);
    assert_eq!(rep.violations[0].row, Some(0));
    assert!((rep.violations[0].residual - 0.5).abs() < 1e-12);
    assert!(lp_check_point(&m, &[1.0, 1.0], 1e-9).passed);
    let rep = lp_check_point(&m, &[-0.1, 2.1], 1e-9);
    assert_eq!(rep.violations[0].var, Some(0));
}

/// Best vertex by enumerating every choice of `n` tight constraints.
fn vertex_oracle(m: &LpModel<f64>) -> Option<f64> {
    let n = m.num_vars;
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &m.constraints {
        let mut a = vec![0.0; n];
        for &(j, v) in &c.coeffs {
            a[j] = v;
        }
        rows.push((a, c.rhs));
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = -1.0;
        rows.push((a, 0.0));
    }
    let mut best: Option<f64> = None;
    for pick in (0..rows.len()).combinations(n) {
        let mut a: Vec<Vec<f64>> = pick.iter().map(|&i| {
            let mut r = rows[i].0.clone();
            r.push(rows[i].1);
            r
        }).collect();
        // gaussian elimination with partial pivoting
        let mut ok = true;
        for col in 0..n {
            let p = (col..n).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap()).unwrap();
            if a[p][col].abs() < 1e-10 {
                ok = false;
                break;
            }
            a.swap(col, p);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for k in col..=n {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        let x: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
        if lp_check_point(m, &x, 1e-9).passed {
            let v = m.objective_value(&x);
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

fn random_bounded_lp(rng: &mut ChaCha8Rng) -> LpModel<f64> {
    let n = rng.gen_range(1..=4);
    let mut m = LpModel::new(n);
    m.objective = (0..n).map(|j| (j, rng.gen_range(-1.0..2.0))).collect();
    for _ in 0..rng.gen_range(1..=5) {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coeffs.push((j, rng.gen_range(-1.0..2.0)));
            }
        }
        let rhs = rng.gen_range(-0.5..3.0);
        if rng.gen_bool(0.15) {
            m.eq(coeffs, rhs);
        } else {
            m.le(coeffs, rhs);
        }
    }
    m.le((0..n).map(|j| (j, 1.0)).collect(), 10.0);
    m
}

#[test]
fn matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut opt, mut inf) = (0, 0);
    for _ in 0..300 {
        let m = random_bounded_lp(&mut rng);
        let r = solve(&m);
        match vertex_oracle(&m) {
            Some(v) => {
                opt += 1;
                assert_eq!(r.status, LpStatus::Optimal, "{}", m.dump());
                assert!((r.value - v).abs() < 1e-7, "{} vs {v}\n{}", r.value, m.dump());
                assert!(lp_check_point(&m, &r.primal, 1e-7).passed);
            }
            None => {
                inf += 1;
                assert_eq!(r.status, LpStatus::Infeasible, "{}", m.dump());
            }
        }
    }
    assert!(opt > 100 && inf > 0);
}

#[test]
fn duals_certify_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let m = random_bounded_lp(&mut rng);
        let r = solve(&m);
        if r.status != LpStatus::Optimal {
            continue;
        }
        let y = &r.dual;
        assert_eq!(y.len(), m.constraints.len());
        // y ≥ 0 on ≤ rows, Aᵀy ≥ c, and b·y equals the optimum
        let mut aty = vec![0.0; m.num_vars];
        let mut by = 0.0;
        for (c, &yi) in m.constraints.iter().zip(y) {
            if c.rel == Relation::Le {
                assert!(yi >= -1e-7);
            }
            for &(j, v) in &c.coeffs {
                aty[j] += v * yi;
            }
            by += c.rhs * yi;
        }
        for &(j, cj) in &m.objective {
            assert!(aty[j] >= cj - 1e-6);
        }
        assert!(r.value <= by + 1e-6);
        assert!((r.value - by).abs() < 1e-6);
        // complementary slackness
        for (c, &yi) in m.constraints.iter().zip(y) {
            let lhs: f64 = c.coeffs.iter().map(|&(j, v)| v * r.primal[j]).sum();
            assert!((yi * (c.rhs - lhs)).abs() < 1e-6);
        }
    }
}

#[test]
fn deterministic_and_scale_covariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let m = random_bounded_lp(&mut rng);
        let r = solve(&m);
        let r2 = solve(&m);
        assert_eq!(r.status, r2.status);
        if r.status != LpStatus::Optimal {
            continue;
        }
        assert!((r.value - r2.value).abs() <= 1e-10 * r.value.abs().max(1.0));
        for c in [0.5, 2.0, 10.0] {
            let mut s = m.clone();
            s.objective.iter_mut().for_each(|e| e.1 *= c);
            s.constraints.iter_mut().for_each(|row| row.rhs *= c);
            let rs = solve(&s);
            assert!((rs.value - c * c * r.value).abs() < 1e-6 * (c * c * r.value).abs().max(1.0));
        }
    }
}

#[test]
fn f32_agrees_on_small_model() {
    let mut m = LpModel::<f32>::new(2);
    m.objective = vec![(0, 3.0), (1, 2.0)];
    m.le(vec![(0, 1.0), (1, 1.0)], 4.0);
    m.le(vec![(0, 1.0), (1, 3.0)], 6.0);
    m.le(vec![(0, 1.0)], 3.0);
    let r = lp_solve(&m, 1e-4).unwrap();
    assert!((r.value - 11.0).abs() < 1e-4);
}
