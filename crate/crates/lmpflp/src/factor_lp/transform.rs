use super::model::{build_lp, FactorError, FactorLpPoint, Variant};
use crate::lp::lp_check_point;
use crate::scalar::Scalar;

fn check<T: Scalar>(p: &FactorLpPoint<T>, variant: Variant, tol: f64) -> Result<(), FactorError> {
    let (lp, map) = build_lp(p.q, p.t.map(T::of), variant)?;
    let rep = lp_check_point(&lp, &p.to_vector(&map), tol);
    if rep.passed {
        Ok(())
    } else {
        Err(FactorError::Infeasible(rep.max_residual))
    }
}

fn zeros<T: Scalar>(q: usize) -> Vec<Vec<T>> {
    vec![vec![T::zero(); q]; q]
}

/// Replicates every client `c` times (each with `1/c` of its weight).
///
/// Input must be feasible for the plain program at `q`; the result is
/// feasible for the plain program at `c·q` with the same objective.
pub fn lift_solution<T: Scalar>(p: &FactorLpPoint<T>, c: usize, tol: f64) -> Result<FactorLpPoint<T>, FactorError> {
    if c == 0 {
        return Err(FactorError::Invalid("c must be positive".into()));
    }
    check(p, Variant::Plain, tol)?;
    let q2 = p.q * c;
    let cs = T::usize(c);
    let blk = |i: usize| i / c;
    let alpha: Vec<T> = (0..q2).map(|i| p.alpha[blk(i)] / cs).collect();
    let d: Vec<T> = (0..q2).map(|i| p.d[blk(i)] / cs).collect();
    let r = (0..q2)
        .map(|i| {
            (0..=i)
                .map(|j| if blk(j) < blk(i) { p.r_at(blk(j), blk(i)) / cs } else { p.alpha[blk(j)] / cs })
                .collect()
        })
        .collect();
    let mut out = FactorLpPoint { q: q2, t: p.t, alpha, d, r, lambda: p.lambda, g: zeros(q2), h: zeros(q2) };
    out.tighten(Variant::Plain);
    check(&out, Variant::Plain, tol)?;
    Ok(out)
}

/// Merges consecutive blocks of `c` clients of a plain solution at `c·q`
/// into a point of the plus program at `q`.
pub fn aggregate_solution<T: Scalar>(p: &FactorLpPoint<T>, c: usize, tol: f64) -> Result<FactorLpPoint<T>, FactorError> {
    if c == 0 || p.q % c != 0 {
        return Err(FactorError::Invalid(format!("c = {c} does not divide q = {}", p.q)));
    }
    check(p, Variant::Plain, tol)?;
    let q = p.q / c;
    let block = |v: &[T], i: usize| (i * c..(i + 1) * c).map(|l| v[l]).sum::<T>();
    let alpha: Vec<T> = (0..q).map(|i| block(&p.alpha, i)).collect();
    let d: Vec<T> = (0..q).map(|i| block(&p.d, i)).collect();
    let r = (0..q)
        .map(|i| (0..=i).map(|j| (j * c..(j + 1) * c).map(|l| p.r_at(l, (i + 1) * c - 1)).sum::<T>()).collect())
        .collect();
    let mut out = FactorLpPoint { q, t: p.t, alpha, d, r, lambda: p.lambda, g: zeros(q), h: zeros(q) };
    out.tighten(Variant::Plus);
    check(&out, Variant::Plus, tol)?;
    Ok(out)
}
