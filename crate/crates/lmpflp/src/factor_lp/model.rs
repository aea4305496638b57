use crate::lp::{lp_solve, LpError, LpModel, LpResult, LpStatus};
use crate::scalar::Scalar;
use thiserror::Error;

const NONE: usize = usize::MAX;

/// Which factor-revealing program to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Original program with `r_{j,j} ≤ α_j` and the unshifted λ rows.
    Plain,
    /// Shifted λ rows: first sum over `j ≤ i`, second over `j > i`.
    Plus,
    /// No diagonal `r_{j,j}`; uses `r_{j,j+1} ≤ α_j` instead.
    Reduced,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Plus => "plus",
            Variant::Reduced => "reduced",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain" => Some(Variant::Plain),
            "plus" => Some(Variant::Plus),
            "reduced" => Some(Variant::Reduced),
            _ => None,
        }
    }

    fn has_diag(self) -> bool {
        self != Variant::Reduced
    }

    /// Whether `(i, j)` carries a `g` (r-based) term in row `i`.
    fn g_term(self, i: usize, j: usize) -> bool {
        match self {
            Variant::Plus => j <= i,
            _ => j < i,
        }
    }

    fn h_term(self, i: usize, j: usize) -> bool {
        match self {
            Variant::Plus => j > i,
            _ => j >= i,
        }
    }
}

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("q must be at least 1")]
    EmptyCluster,
    #[error("the plus program with q = 1 is unbounded by construction")]
    PlusUnbounded,
    #[error("T must be nonnegative")]
    BadT,
    #[error("solver returned {0:?}")]
    Status(LpStatus),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("point is infeasible: max residual {0:e}")]
    Infeasible(f64),
    #[error("{0}")]
    Invalid(String),
}

/// Variable layout of a built program.
#[derive(Debug, Clone)]
pub struct IndexMap {
    pub q: usize,
    pub variant: Variant,
    pub t: Option<f64>,
    r: Vec<usize>,
    g: Vec<usize>,
    h: Vec<usize>,
    pub lambda: usize,
    pub num_vars: usize,
}

impl IndexMap {
    fn new(q: usize, variant: Variant, t: Option<f64>) -> Self {
        let mut next = 2 * q;
        let mut r = vec![NONE; q * q];
        for i in 0..q {
            for j in 0..=i {
                if j < i || variant.has_diag() {
                    r[j * q + i] = next;
                    next += 1;
                }
            }
        }
        let lambda = next;
        next += 1;
        let mut g = vec![NONE; q * q];
        let mut h = vec![NONE; q * q];
        for i in 0..q {
            for j in 0..q {
                if variant.g_term(i, j) {
                    g[i * q + j] = next;
                    next += 1;
                }
            }
            for j in 0..q {
                if variant.h_term(i, j) {
                    h[i * q + j] = next;
                    next += 1;
                }
            }
        }
        IndexMap { q, variant, t, r, g, h, lambda, num_vars: next }
    }

    pub fn alpha(&self, i: usize) -> usize {
        i
    }

    pub fn d(&self, i: usize) -> usize {
        self.q + i
    }

    /// `r_{j,i}` (0-based, `j ≤ i`).
    pub fn r(&self, j: usize, i: usize) -> Option<usize> {
        let v = self.r[j * self.q + i];
        (v != NONE).then_some(v)
    }

    pub fn g(&self, i: usize, j: usize) -> Option<usize> {
        let v = self.g[i * self.q + j];
        (v != NONE).then_some(v)
    }

    pub fn h(&self, i: usize, j: usize) -> Option<usize> {
        let v = self.h[i * self.q + j];
        (v != NONE).then_some(v)
    }
}

/// A point `(α, d, r, λ, g, h)`; `r[i][j]` holds `r_{j,i}` for `j ≤ i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorLpPoint<T = f64> {
    pub q: usize,
    pub t: Option<f64>,
    pub alpha: Vec<T>,
    pub d: Vec<T>,
    pub r: Vec<Vec<T>>,
    pub lambda: T,
    pub g: Vec<Vec<T>>,
    pub h: Vec<Vec<T>>,
}

impl<T: Scalar> FactorLpPoint<T> {
    pub fn objective(&self) -> T {
        self.alpha.iter().copied().sum::<T>() - self.lambda
    }

    /// `r_{j,i}` with 0-based indices.
    pub fn r_at(&self, j: usize, i: usize) -> T {
        self.r[i][j]
    }

    pub fn from_primal(map: &IndexMap, x: &[T]) -> Self {
        let q = map.q;
        let mut r = Vec::with_capacity(q);
        for i in 0..q {
            r.push((0..=i).map(|j| map.r(j, i).map_or(T::zero(), |k| x[k])).collect());
        }
        let grid = |f: &dyn Fn(usize, usize) -> Option<usize>| -> Vec<Vec<T>> {
            (0..q).map(|i| (0..q).map(|j| f(i, j).map_or(T::zero(), |k| x[k])).collect()).collect()
        };
        FactorLpPoint {
            q,
            t: map.t,
            alpha: (0..q).map(|i| x[map.alpha(i)]).collect(),
            d: (0..q).map(|i| x[map.d(i)]).collect(),
            r,
            lambda: x[map.lambda],
            g: grid(&|i, j| map.g(i, j)),
            h: grid(&|i, j| map.h(i, j)),
        }
    }

    /// Sets every `g`, `h` to the tight value of its max-term.
    pub fn tighten(&mut self, variant: Variant) {
        let q = self.q;
        for i in 0..q {
            for j in 0..q {
                self.g[i][j] = if variant.g_term(i, j) {
                    (self.r[i][j] - self.d[j]).max(T::zero())
                } else {
                    T::zero()
                };
                self.h[i][j] = if variant.h_term(i, j) {
                    (self.alpha[i] - self.d[j]).max(T::zero())
                } else {
                    T::zero()
                };
            }
        }
    }

    pub fn to_vector(&self, map: &IndexMap) -> Vec<T> {
        let q = map.q;
        let mut x = vec![T::zero(); map.num_vars];
        for i in 0..q {
            x[map.alpha(i)] = self.alpha[i];
            x[map.d(i)] = self.d[i];
            for j in 0..=i {
                if let Some(k) = map.r(j, i) {
                    x[k] = self.r[i][j];
                }
            }
            for j in 0..q {
                if let Some(k) = map.g(i, j) {
                    x[k] = self.g[i][j];
                }
                if let Some(k) = map.h(i, j) {
                    x[k] = self.h[i][j];
                }
            }
        }
        x[map.lambda] = self.lambda;
        x
    }
}

/// Builds the linearized program for cluster size `q` and bound `t` (`None` = ∞).
pub fn build_lp<T: Scalar>(q: usize, t: Option<T>, variant: Variant) -> Result<(LpModel<T>, IndexMap), FactorError> {
    if q == 0 {
        return Err(FactorError::EmptyCluster);
    }
    if q == 1 && variant == Variant::Plus {
        return Err(FactorError::PlusUnbounded);
    }
    let t = t.filter(|v| v.is_finite() || v.is_nan());
    if let Some(t) = t {
        if !(t >= T::zero()) {
            return Err(FactorError::BadT);
        }
    }
    let map = IndexMap::new(q, variant, t.map(|v| v.f()));
    let one = T::one();
    let mut lp = LpModel::new(map.num_vars);
    lp.objective = (0..q).map(|i| (map.alpha(i), one)).collect();
    lp.objective.push((map.lambda, -one));

    lp.eq((0..q).map(|i| (map.d(i), one)).collect(), one);
    for i in 0..q.saturating_sub(1) {
        lp.le(vec![(map.alpha(i), one), (map.alpha(i + 1), -one)], T::zero());
    }
    for j in 0..q {
        for i in j..q.saturating_sub(1) {
            if let (Some(a), Some(b)) = (map.r(j, i + 1), map.r(j, i)) {
                lp.le(vec![(a, one), (b, -one)], T::zero());
            }
        }
    }
    for i in 0..q {
        for j in 0..i {
            let r = map.r(j, i).expect("off-diagonal r");
            lp.le(vec![(map.alpha(i), one), (r, -one), (map.d(i), -one), (map.d(j), -one)], T::zero());
        }
    }
    for j in 0..q {
        match variant {
            Variant::Reduced => {
                if j + 1 < q {
                    let r = map.r(j, j + 1).expect("r_{j,j+1}");
                    lp.le(vec![(r, one), (map.alpha(j), -one)], T::zero());
                }
            }
            _ => {
                let r = map.r(j, j).expect("diagonal r");
                lp.le(vec![(r, one), (map.alpha(j), -one)], T::zero());
            }
        }
    }
    for i in 0..q {
        let mut row = Vec::new();
        for j in 0..q {
            if let Some(g) = map.g(i, j) {
                let r = map.r(j, i).expect("r for g-term");
                lp.le(vec![(r, one), (map.d(j), -one), (g, -one)], T::zero());
                row.push((g, one));
            }
            if let Some(h) = map.h(i, j) {
                lp.le(vec![(map.alpha(i), one), (map.d(j), -one), (h, -one)], T::zero());
                row.push((h, one));
            }
        }
        row.push((map.lambda, -one));
        lp.le(row, T::zero());
    }
    if let Some(t) = t {
        lp.le(vec![(map.lambda, one)], t);
    }
    Ok((lp, map))
}

/// Optimal value and point of the chosen program.
pub fn solve_factor<T: Scalar>(q: usize, t: Option<T>, variant: Variant) -> Result<(T, FactorLpPoint<T>, LpResult<T>), FactorError> {
    let (lp, map) = build_lp(q, t, variant)?;
    let res = lp_solve(&lp, T::of(T::FEAS_TOL * 10.0))?;
    if res.status != LpStatus::Optimal {
        return Err(FactorError::Status(res.status));
    }
    let point = FactorLpPoint::from_primal(&map, &res.primal);
    Ok((res.value, point, res))
}

pub fn opt_jms(q: usize, t: Option<f64>) -> Result<(f64, FactorLpPoint<f64>), FactorError> {
    solve_factor(q, t, Variant::Plain).map(|(v, p, _)| (v, p))
}

pub fn opt_plus(q: usize, t: Option<f64>) -> Result<(f64, FactorLpPoint<f64>), FactorError> {
    solve_factor(q, t, Variant::Plus).map(|(v, p, _)| (v, p))
}
