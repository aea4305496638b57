use super::lu::Factor;
use super::{lp_check_point, LpError, LpModel, LpResult, LpStatus, Relation};
use crate::scalar::Scalar;

const NONE: usize = usize::MAX;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_LIMIT: usize = 50;
const PERTURB: f64 = 1e-7;

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub refactorizations: usize,
    pub bland_switches: usize,
    pub bland_iterations: usize,
    pub degenerate_iterations: usize,
}

struct Standard<T> {
    m: usize,
    ncols: usize,
    nstruct: usize,
    col_start: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<T>,
    b: Vec<T>,
    cost: Vec<T>,
    artificial: Vec<bool>,
    /// Logical column (slack or artificial) of each row.
    logical: Vec<usize>,
    /// Original constraint index and sign of each standardized row.
    origin: Vec<(usize, T)>,
}

impl<T: Scalar> Standard<T> {
    fn build(model: &LpModel<T>) -> Result<Self, LpStatus> {
        let n = model.num_vars;
        let mut rows: Vec<(usize, T)> = Vec::new();
        for (ci, c) in model.constraints.iter().enumerate() {
            let nonzero = c.coeffs.iter().any(|&(_, v)| v != T::zero());
            if !nonzero {
                let ok = match c.rel {
                    Relation::Le => c.rhs >= -T::of(T::FEAS_TOL),
                    Relation::Eq => c.rhs.abs() <= T::of(T::FEAS_TOL),
                };
                if !ok {
                    return Err(LpStatus::Infeasible);
                }
                continue;
            }
            let sign = if c.rhs < T::zero() { -T::one() } else { T::one() };
            rows.push((ci, sign));
        }
        let m = rows.len();
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        let mut b = Vec::with_capacity(m);
        for (r, &(ci, s)) in rows.iter().enumerate() {
            let c = &model.constraints[ci];
            for &(j, v) in &c.coeffs {
                if v != T::zero() {
                    cols[j].push((r, s * v));
                }
            }
            b.push(s * c.rhs);
        }
        let mut cost = vec![T::zero(); n];
        for &(j, v) in &model.objective {
            cost[j] = v;
        }
        let mut artificial = vec![false; n];
        let mut logical = vec![NONE; m];
        for (r, &(ci, s)) in rows.iter().enumerate() {
            let c = &model.constraints[ci];
            if c.rel == Relation::Le {
                cols.push(vec![(r, s)]);
                cost.push(T::zero());
                artificial.push(false);
                if s > T::zero() {
                    logical[r] = cols.len() - 1;
                }
            }
            if logical[r] == NONE {
                cols.push(vec![(r, T::one())]);
                cost.push(T::zero());
                artificial.push(true);
                logical[r] = cols.len() - 1;
            }
        }
        let ncols = cols.len();
        let mut col_start = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        col_start.push(0);
        for c in &cols {
            for &(i, v) in c {
                row_idx.push(i);
                vals.push(v);
            }
            col_start.push(row_idx.len());
        }
        Ok(Standard { m, ncols, nstruct: n, col_start, row_idx, vals, b, cost, artificial, logical, origin: rows })
    }

    fn col(&self, j: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (s, e) = (self.col_start[j], self.col_start[j + 1]);
        self.row_idx[s..e].iter().copied().zip(self.vals[s..e].iter().copied())
    }

    fn col_vec(&self, j: usize) -> Vec<(usize, T)> {
        self.col(j).collect()
    }
}

struct State<T> {
    b: Vec<T>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    x_b: Vec<T>,
    factor: Factor<T>,
    stats: SolveStats,
    max_iter: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl<T: Scalar> State<T> {
    fn refactor(&mut self, sf: &Standard<T>) {
        loop {
            let cols: Vec<Vec<(usize, T)>> = self.basis.iter().map(|&j| sf.col_vec(j)).collect();
            let refs: Vec<&[(usize, T)]> = cols.iter().map(|c| c.as_slice()).collect();
            match Factor::factorize(sf.m, &refs) {
                Ok(f) => {
                    self.factor = f;
                    break;
                }
                Err(sing) => {
                    for &pos in &sing.positions {
                        self.pos_of[self.basis[pos]] = NONE;
                    }
                    for (&pos, &row) in sing.positions.iter().zip(sing.rows.iter()) {
                        let new = sf.logical[row];
                        self.basis[pos] = new;
                        self.pos_of[new] = pos;
                    }
                }
            }
        }
        self.stats.refactorizations += 1;
        let mut rhs = self.b.clone();
        let mut x = vec![T::zero(); sf.m];
        self.factor.ftran(&mut rhs, &mut x);
        self.x_b = x;
    }

    fn column(&self, sf: &Standard<T>, j: usize) -> Vec<T> {
        let mut a = vec![T::zero(); sf.m];
        for (i, v) in sf.col(j) {
            a[i] = v;
        }
        let mut out = vec![T::zero(); sf.m];
        self.factor.ftran(&mut a, &mut out);
        out
    }

    fn duals(&self, sf: &Standard<T>, cost: &[T]) -> Vec<T> {
        let mut c: Vec<T> = self.basis.iter().map(|&j| cost[j]).collect();
        let mut y = vec![T::zero(); sf.m];
        self.factor.btran(&mut c, &mut y);
        y
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[T], theta: T) {
        for (i, x) in self.x_b.iter_mut().enumerate() {
            if alpha[i] != T::zero() {
                *x = *x - theta * alpha[i];
            }
        }
        self.x_b[r] = theta;
        let old = self.basis[r];
        self.pos_of[old] = NONE;
        self.basis[r] = q;
        self.pos_of[q] = r;
        self.factor.push_eta(r, alpha);
    }

    fn run(&mut self, sf: &Standard<T>, cost: &[T], phase2: bool) -> Result<PhaseEnd, LpError> {
        let opt_tol = T::of(T::FEAS_TOL);
        let piv_tol = T::of(T::PIVOT_TOL);
        let feas = T::of(T::FEAS_TOL);
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.stats.iterations >= self.max_iter {
                return Err(LpError::IterationLimit(self.max_iter));
            }
            if self.factor.stale(REFACTOR_EVERY) {
                self.refactor(sf);
            }
            let y = self.duals(sf, cost);
            let mut q = NONE;
            let mut best = opt_tol;
            for j in 0..sf.ncols {
                if self.pos_of[j] != NONE || sf.artificial[j] {
                    continue;
                }
                let mut d = cost[j];
                for (i, v) in sf.col(j) {
                    d = d - y[i] * v;
                }
                if d > best {
                    q = j;
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            if q == NONE {
                return Ok(PhaseEnd::Optimal);
            }
            let alpha = self.column(sf, q);
            let mut r = NONE;
            if phase2 {
                let mut big = T::zero();
                for (i, &a) in alpha.iter().enumerate() {
                    if sf.artificial[self.basis[i]] && a.abs() > piv_tol && a.abs() > big {
                        big = a.abs();
                        r = i;
                    }
                }
            }
            if r == NONE {
                if bland {
                    let mut best_ratio = T::infinity();
                    for (i, &a) in alpha.iter().enumerate() {
                        if a > piv_tol {
                            let ratio = self.x_b[i].max(T::zero()) / a;
                            if ratio < best_ratio
                                || (ratio == best_ratio && self.basis[i] < self.basis[r])
                            {
                                best_ratio = ratio;
                                r = i;
                            }
                        }
                    }
                } else {
                    let mut theta_max = T::infinity();
                    for (i, &a) in alpha.iter().enumerate() {
                        if a > piv_tol {
                            let t = (self.x_b[i].max(T::zero()) + feas) / a;
                            if t < theta_max {
                                theta_max = t;
                            }
                        }
                    }
                    let mut big = T::zero();
                    for (i, &a) in alpha.iter().enumerate() {
                        if a > piv_tol && self.x_b[i].max(T::zero()) / a <= theta_max && a > big {
                            big = a;
                            r = i;
                        }
                    }
                }
            }
            if r == NONE {
                return Ok(PhaseEnd::Unbounded);
            }
            let theta = if sf.artificial[self.basis[r]] && phase2 {
                T::zero()
            } else {
                (self.x_b[r].max(T::zero()) / alpha[r]).max(T::zero())
            };
            if theta <= feas * T::of(1e-3) {
                degenerate += 1;
                if degenerate > DEGENERATE_LIMIT && !bland {
                    bland = true;
                    self.stats.bland_switches += 1;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
            if bland {
                self.stats.bland_iterations += 1;
            }
            if theta <= feas * T::of(1e-3) {
                self.stats.degenerate_iterations += 1;
            }
            self.pivot(r, q, &alpha, theta);
            for x in self.x_b.iter_mut() {
                if *x < T::zero() && *x > -feas {
                    *x = T::zero();
                }
            }
            self.stats.iterations += 1;
        }
    }

    /// Dual simplex passes restoring primal feasibility of a dual-feasible basis.
    fn dual_cleanup(&mut self, sf: &Standard<T>, cost: &[T]) -> Result<bool, LpError> {
        let piv_tol = T::of(T::PIVOT_TOL);
        let feas = T::of(T::FEAS_TOL);
        loop {
            if self.stats.iterations >= self.max_iter {
                return Err(LpError::IterationLimit(self.max_iter));
            }
            if self.factor.stale(REFACTOR_EVERY) {
                self.refactor(sf);
            }
            let mut r = NONE;
            let mut worst = -feas;
            for (i, &x) in self.x_b.iter().enumerate() {
                if x < worst {
                    worst = x;
                    r = i;
                }
            }
            if r == NONE {
                return Ok(true);
            }
            let mut e = vec![T::zero(); sf.m];
            e[r] = T::one();
            let mut rho = vec![T::zero(); sf.m];
            self.factor.btran(&mut e, &mut rho);
            let y = self.duals(sf, cost);
            let mut cands = Vec::new();
            let mut bound = T::infinity();
            for j in 0..sf.ncols {
                if self.pos_of[j] != NONE || sf.artificial[j] {
                    continue;
                }
                let mut a = T::zero();
                let mut d = cost[j];
                for (i, v) in sf.col(j) {
                    a = a + rho[i] * v;
                    d = d - y[i] * v;
                }
                if a < -piv_tol {
                    let slack = (-d).max(T::zero());
                    bound = bound.min((slack + feas) / (-a));
                    cands.push((j, -a, slack));
                }
            }
            let mut q = NONE;
            let mut best_piv = T::zero();
            for &(j, a, slack) in &cands {
                if slack / a <= bound && a > best_piv {
                    best_piv = a;
                    q = j;
                }
            }
            if q == NONE {
                return Ok(false);
            }
            let alpha = self.column(sf, q);
            let theta = self.x_b[r] / alpha[r];
            self.pivot(r, q, &alpha, theta);
            self.stats.iterations += 1;
        }
    }

    /// Pivots basic artificials out where some structural or slack column allows it.
    fn drive_out_artificials(&mut self, sf: &Standard<T>) {
        let piv_tol = T::of(T::PIVOT_TOL);
        for r in 0..sf.m {
            if !sf.artificial[self.basis[r]] {
                continue;
            }
            let mut e = vec![T::zero(); sf.m];
            e[r] = T::one();
            let mut rho = vec![T::zero(); sf.m];
            self.factor.btran(&mut e, &mut rho);
            let mut best = piv_tol;
            let mut q = NONE;
            for j in 0..sf.ncols {
                if self.pos_of[j] != NONE || sf.artificial[j] {
                    continue;
                }
                let v: T = sf.col(j).map(|(i, a)| rho[i] * a).sum();
                if v.abs() > best {
                    best = v.abs();
                    q = j;
                }
            }
            if q != NONE {
                let alpha = self.column(sf, q);
                self.pivot(r, q, &alpha, T::zero());
                if self.factor.stale(REFACTOR_EVERY) {
                    self.refactor(sf);
                }
            }
        }
    }
}

pub(super) fn solve<T: Scalar>(model: &LpModel<T>, tol: T) -> Result<LpResult<T>, LpError> {
    let n = model.num_vars;
    let sf = match Standard::build(model) {
        Ok(sf) => sf,
        Err(status) => {
            return Ok(LpResult {
                status,
                value: T::zero(),
                primal: vec![T::zero(); n],
                dual: Vec::new(),
                stats: SolveStats::default(),
            })
        }
    };
    let m = sf.m;
    let mut pos_of = vec![NONE; sf.ncols];
    let basis: Vec<usize> = sf.logical.clone();
    for (p, &j) in basis.iter().enumerate() {
        pos_of[j] = p;
    }
    let empty: Vec<&[(usize, T)]> = Vec::new();
    let placeholder = Factor::factorize(0, &empty).ok().expect("empty factor");
    let mut b = sf.b.clone();
    for (r, &(ci, s)) in sf.origin.iter().enumerate() {
        if model.constraints[ci].rel == Relation::Le && s > T::zero() {
            let u = ((r as f64) * 0.618_033_988_749_895).fract();
            b[r] = b[r] + T::of(PERTURB * (1.0 + u)) * (T::one() + b[r].abs());
        }
    }
    let mut st = State {
        b,
        basis,
        pos_of,
        x_b: vec![T::zero(); m],
        factor: placeholder,
        stats: SolveStats::default(),
        max_iter: 200 * (m + sf.ncols) + 10_000,
    };
    st.refactor(&sf);

    if sf.artificial.iter().any(|&a| a) {
        let cost1: Vec<T> = sf.artificial.iter().map(|&a| if a { -T::one() } else { T::zero() }).collect();
        st.run(&sf, &cost1, false)?;
        st.refactor(&sf);
        st.stats.phase1_iterations = st.stats.iterations;
        let infeas: T = st
            .basis
            .iter()
            .zip(st.x_b.iter())
            .filter(|(&j, _)| sf.artificial[j])
            .map(|(_, &x)| x.max(T::zero()))
            .sum();
        let bscale = st.b.iter().fold(T::one(), |acc, &v| acc.max(v.abs()));
        if infeas > T::of(T::FEAS_TOL * 100.0 + PERTURB * 10.0) * bscale {
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                value: T::zero(),
                primal: vec![T::zero(); n],
                dual: Vec::new(),
                stats: st.stats,
            });
        }
        st.drive_out_artificials(&sf);
        st.refactor(&sf);
    }

    match st.run(&sf, &sf.cost, true)? {
        PhaseEnd::Unbounded => {
            return Ok(LpResult {
                status: LpStatus::Unbounded,
                value: T::infinity(),
                primal: vec![T::zero(); n],
                dual: Vec::new(),
                stats: st.stats,
            })
        }
        PhaseEnd::Optimal => {}
    }
    st.b = sf.b.clone();
    st.refactor(&sf);
    loop {
        if !st.dual_cleanup(&sf, &sf.cost)? {
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                value: T::zero(),
                primal: vec![T::zero(); n],
                dual: Vec::new(),
                stats: st.stats,
            });
        }
        match st.run(&sf, &sf.cost, true)? {
            PhaseEnd::Unbounded => {
                return Ok(LpResult {
                    status: LpStatus::Unbounded,
                    value: T::infinity(),
                    primal: vec![T::zero(); n],
                    dual: Vec::new(),
                    stats: st.stats,
                })
            }
            PhaseEnd::Optimal => {}
        }
        st.refactor(&sf);
        if st.x_b.iter().all(|&x| x >= -T::of(T::FEAS_TOL)) {
            break;
        }
    }
    let mut primal = vec![T::zero(); n];
    for (p, &j) in st.basis.iter().enumerate() {
        if j < sf.nstruct {
            primal[j] = st.x_b[p].max(T::zero());
        }
    }
    let y = st.duals(&sf, &sf.cost);
    let mut dual = vec![T::zero(); model.constraints.len()];
    for (r, &(ci, s)) in sf.origin.iter().enumerate() {
        dual[ci] = y[r] * s;
    }
    let report = lp_check_point(model, &primal, tol.f());
    if !report.passed {
        return Err(LpError::Unstable { residual: report.max_residual, tol: tol.f() });
    }
    Ok(LpResult { status: LpStatus::Optimal, value: model.objective_value(&primal), primal, dual, stats: st.stats })
}
