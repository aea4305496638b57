use super::analytic::analytic_bound;
use super::model::{opt_plus, FactorError};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Log-spaced T grid used to tabulate `opt_plus(q, ·)`.
pub fn default_t_grid() -> Vec<f64> {
    let mut g = Vec::new();
    let mut t = 0.05;
    while t < 250.0 {
        g.push(t);
        t *= 1.3;
    }
    g
}

fn cache() -> &'static Mutex<HashMap<(usize, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `opt_plus(q, t)` with a process-wide memo table (`None` = ∞).
pub fn opt_plus_cached(q: usize, t: Option<f64>) -> Result<f64, FactorError> {
    let key = (q, t.map_or(u64::MAX, f64::to_bits));
    if let Some(&v) = cache().lock().unwrap().get(&key) {
        return Ok(v);
    }
    let (v, _) = opt_plus(q, t)?;
    cache().lock().unwrap().insert(key, v);
    Ok(v)
}

/// Tabulated `opt_plus(q, ·)` with a concave upper envelope between grid points.
#[derive(Debug, Clone)]
pub struct PlusCurve {
    pub q: usize,
    pub ts: Vec<f64>,
    pub vals: Vec<f64>,
    pub at_inf: f64,
}

impl PlusCurve {
    pub fn build(q: usize, grid: &[f64]) -> Result<Self, FactorError> {
        use rayon::prelude::*;
        let mut ts: Vec<f64> = grid.to_vec();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        let vals = ts.par_iter().map(|&t| opt_plus_cached(q, Some(t))).collect::<Result<Vec<_>, _>>()?;
        let at_inf = opt_plus_cached(q, None)?;
        Ok(PlusCurve { q, ts, vals, at_inf })
    }

    fn chord(&self, k: usize, t: f64) -> f64 {
        let (t0, t1) = (self.ts[k], self.ts[k + 1]);
        let (v0, v1) = (self.vals[k], self.vals[k + 1]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Upper bound on `opt_plus(q, t)` valid for a concave non-decreasing curve.
    pub fn upper(&self, t: f64) -> f64 {
        let n = self.ts.len();
        if t <= self.ts[0] {
            let mut u = self.vals[0];
            if n >= 2 {
                u = u.min(self.chord(0, t));
            }
            return u.max(0.0);
        }
        if t >= self.ts[n - 1] {
            let mut u = self.at_inf;
            if n >= 2 {
                u = u.min(self.chord(n - 2, t));
            }
            return u;
        }
        let b = self.ts.partition_point(|&x| x < t);
        if self.ts[b] == t {
            return self.vals[b];
        }
        let a = b - 1;
        let mut u = self.vals[b];
        if a >= 1 {
            u = u.min(self.chord(a - 1, t));
        }
        if b + 1 < n {
            u = u.min(self.chord(b, t));
        }
        u
    }
}

/// How `opt_JMS(T)` is bounded inside the searches: a tabulated curve
/// from either the plus program or the closed-form bound.
#[derive(Debug, Clone)]
pub enum RhoEval {
    Lp(Arc<PlusCurve>),
    Analytic(Arc<PlusCurve>),
}

impl RhoEval {
    pub fn lp(q: usize) -> Result<Self, FactorError> {
        Self::lp_with_grid(q, &default_t_grid())
    }

    pub fn lp_with_grid(q: usize, grid: &[f64]) -> Result<Self, FactorError> {
        if q < 2 {
            return Err(FactorError::PlusUnbounded);
        }
        Ok(RhoEval::Lp(Arc::new(PlusCurve::build(q, grid)?)))
    }

    pub fn analytic() -> Self {
        let ts: Vec<f64> = (0..=600).map(|k| 1e-3 * 10f64.powf(k as f64 / 100.0)).collect();
        let vals = ts.iter().map(|&t| analytic_bound(t).0).collect();
        RhoEval::Analytic(Arc::new(PlusCurve { q: 0, ts, vals, at_inf: 2.0 }))
    }

    pub fn curve(&self) -> &PlusCurve {
        match self {
            RhoEval::Lp(c) | RhoEval::Analytic(c) => c,
        }
    }

    pub fn bound(&self, t: f64) -> f64 {
        let c = self.curve();
        if t.is_infinite() {
            c.at_inf
        } else {
            c.upper(t.max(0.0))
        }
    }
}

/// Maximizes `f` on `[a, b]` by an `n`-point scan followed by golden section
/// around the best scan point.
pub fn scan_max(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize, tol: f64) -> (f64, f64) {
    let n = n.max(2);
    let xs: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
    let mut best = (xs[0], f(xs[0]));
    let mut kb = 0;
    for (k, &x) in xs.iter().enumerate().skip(1) {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            kb = k;
        }
    }
    let mut lo = xs[kb.saturating_sub(1)];
    let mut hi = xs[(kb + 1).min(n)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    for x in [c, d] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eta2Point {
    pub eta2: f64,
    pub delta: f64,
    pub alpha_l: f64,
    pub alpha_mm: f64,
    pub beta_mm: f64,
    pub t_l: f64,
    pub rho_a: f64,
    pub rho_b: f64,
}

pub fn rho_a(delta: f64, alpha_l: f64, alpha_mm: f64, beta_mm: f64) -> f64 {
    1.0 + 2.0 * alpha_l + delta / (1.0 - delta) * (beta_mm + alpha_mm)
}

pub fn t_l(delta: f64, alpha_l: f64, alpha_mm: f64, beta_mm: f64, beta2: f64) -> f64 {
    if alpha_l <= 0.0 || delta <= 0.0 {
        return f64::INFINITY;
    }
    2.0 / (delta * alpha_l)
        * (1.0 + (1.0 - delta) * beta2
            - (1.0 - delta * delta / (1.0 - delta)) * alpha_mm
            - (1.0 - delta / (1.0 - delta)) * beta_mm)
}

fn rho_b(eval: &RhoEval, alpha_l: f64, t: f64) -> f64 {
    if alpha_l <= 0.0 {
        return 2.0;
    }
    2.0 * (1.0 - alpha_l) + eval.bound(t) * alpha_l
}

/// Splits a mass `s` into `(β^{MM}, α^{MM})`, filling the cheaper β side first.
fn split_mass(s: f64, beta2: f64, cap_alpha: f64) -> (f64, f64) {
    let b = s.min(beta2);
    let a = (s - b).clamp(0.0, cap_alpha);
    (b, a)
}

fn eta2_inner(eval: &RhoEval, beta2: f64, delta: f64, alpha_l: f64) -> (f64, f64, f64) {
    let smax = beta2 + (1.0 - alpha_l);
    let f = |s: f64| {
        let (b, a) = split_mass(s, beta2, 1.0 - alpha_l);
        rho_a(delta, alpha_l, a, b).min(rho_b(eval, alpha_l, t_l(delta, alpha_l, a, b, beta2)))
    };
    let (s, v) = scan_max(&f, 0.0, smax, 48, 1e-7);
    let (b, a) = split_mass(s, beta2, 1.0 - alpha_l);
    (v, a, b)
}

fn eta2_at_delta(eval: &RhoEval, beta2: f64, delta: f64, fine: bool) -> Eta2Point {
    let n = if fine { 200 } else { 60 };
    let f = |al: f64| eta2_inner(eval, beta2, delta, al).0;
    let (al, v) = scan_max(&f, 0.0, 1.0, n, 1e-7);
    let (_, a, b) = eta2_inner(eval, beta2, delta, al);
    let tl = t_l(delta, al, a, b, beta2);
    Eta2Point {
        eta2: 2.0 - v,
        delta,
        alpha_l: al,
        alpha_mm: a,
        beta_mm: b,
        t_l: tl,
        rho_a: rho_a(delta, al, a, b),
        rho_b: rho_b(eval, al, tl),
    }
}

/// `2 − η₂ = min_δ max_{α^L, α^{MM}, β^{MM}} min{ρ^A, ρ^B}`; returns the worst point.
pub fn eta2_search(beta2: f64, eval: &RhoEval) -> Eta2Point {
    use rayon::prelude::*;
    let deltas: Vec<f64> = (0..=500).map(|k| k as f64 * 1e-3).collect();
    let coarse: Vec<Eta2Point> = deltas.par_iter().map(|&d| eta2_at_delta(eval, beta2, d, false)).collect();
    let kb = (0..coarse.len()).max_by(|&x, &y| coarse[x].eta2.partial_cmp(&coarse[y].eta2).unwrap()).unwrap();
    let lo = deltas[kb.saturating_sub(1)];
    let hi = deltas[(kb + 1).min(deltas.len() - 1)];
    let f = |d: f64| eta2_at_delta(eval, beta2, d, true).eta2;
    let (d, _) = scan_max(&f, lo, hi, 8, 1e-6);
    let mut best = eta2_at_delta(eval, beta2, d, true);
    let fine_kb = eta2_at_delta(eval, beta2, deltas[kb], true);
    if fine_kb.eta2 > best.eta2 {
        best = fine_kb;
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eta1Point {
    pub eta1: f64,
    pub delta: f64,
    pub alpha_l: f64,
    pub beta_l: f64,
    pub eta: f64,
    pub t1: f64,
}

pub fn t_1(delta: f64, alpha_l: f64, beta1: f64, beta_l: f64, eta: f64) -> f64 {
    if alpha_l <= 0.0 || delta <= 0.0 {
        return f64::INFINITY;
    }
    2.0 * ((1.0 + beta1 + beta_l) / (alpha_l * delta) + 1.0 / delta + eta)
}

/// `min_η max{2 − η, ρ^B₁(η)}` and the minimizing `η`.
fn eta1_inner_eta(eval: &RhoEval, delta: f64, alpha_l: f64, beta1: f64, beta_l: f64) -> (f64, f64) {
    let rb = |eta: f64| rho_b(eval, alpha_l, t_1(delta, alpha_l, beta1, beta_l, eta));
    let g = |eta: f64| (2.0 - eta) - rb(eta);
    if g(0.0) <= 0.0 {
        return (rb(0.0).max(2.0), 0.0);
    }
    if g(1.0) >= 0.0 {
        return (rb(1.0).max(1.0), 1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = (2.0 - hi).max(rb(hi));
    (v, hi)
}

fn eta1_value(eval: &RhoEval, delta: f64, alpha_l: f64, beta1: f64, beta_l: f64) -> (f64, f64) {
    let ra = rho_a(delta, alpha_l, 1.0 - alpha_l, beta1 - beta_l);
    let (rb, eta) = eta1_inner_eta(eval, delta, alpha_l, beta1, beta_l);
    (ra.min(rb), eta)
}

fn eta1_at_delta(eval: &RhoEval, beta1: f64, delta: f64, n: usize) -> Eta1Point {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for ia in 0..=n {
        let al = ia as f64 / n as f64;
        for ib in 0..=n {
            let bl = beta1 * ib as f64 / n as f64;
            let v = eta1_value(eval, delta, al, beta1, bl).0;
            if v > best.0 {
                best = (v, al, bl);
            }
        }
    }
    let (mut al, mut bl) = (best.1, best.2);
    let (mut wa, mut wb) = (1.0 / n as f64, beta1 / n as f64);
    for _ in 0..6 {
        let fa = |x: f64| eta1_value(eval, delta, x, beta1, bl).0;
        al = scan_max(&fa, (al - wa).max(0.0), (al + wa).min(1.0), 8, 1e-8).0;
        let fb = |x: f64| eta1_value(eval, delta, al, beta1, x).0;
        bl = scan_max(&fb, (bl - wb).max(0.0), (bl + wb).min(beta1), 8, 1e-8).0;
        wa *= 0.5;
        wb *= 0.5;
    }
    let (v, eta) = eta1_value(eval, delta, al, beta1, bl);
    let (v, al, bl, eta) = if v >= best.0 {
        (v, al, bl, eta)
    } else {
        let (v0, e0) = eta1_value(eval, delta, best.1, beta1, best.2);
        (v0, best.1, best.2, e0)
    };
    Eta1Point { eta1: 2.0 - v, delta, alpha_l: al, beta_l: bl, eta, t1: t_1(delta, al, beta1, bl, eta) }
}

/// `2 − η₁(a)` search with `β₁` as given (the default is `2/a`).
pub fn eta1_search(a: f64, beta1: Option<f64>, eval: &RhoEval) -> Result<Eta1Point, FactorError> {
    use rayon::prelude::*;
    if !(a > 0.0 && a <= 1.0) {
        return Err(FactorError::Invalid(format!("a = {a} outside (0, 1]")));
    }
    let beta1 = beta1.unwrap_or(2.0 / a);
    let deltas: Vec<f64> = (1..=100).map(|k| k as f64 * 5e-3).collect();
    let coarse: Vec<Eta1Point> = deltas.par_iter().map(|&d| eta1_at_delta(eval, beta1, d, 24)).collect();
    let kb = (0..coarse.len()).max_by(|&x, &y| coarse[x].eta1.partial_cmp(&coarse[y].eta1).unwrap()).unwrap();
    let lo = deltas[kb.saturating_sub(1)];
    let hi = deltas[(kb + 1).min(deltas.len() - 1)];
    let f = |d: f64| eta1_at_delta(eval, beta1, d, 24).eta1;
    let (d, _) = scan_max(&f, lo, hi, 6, 1e-6);
    let mut best = eta1_at_delta(eval, beta1, d, 40);
    let at_kb = eta1_at_delta(eval, beta1, deltas[kb], 40);
    if at_kb.eta1 > best.eta1 {
        best = at_kb;
    }
    Ok(best)
}

/// Closed-form lower bound on the general-cost improvement for a given δ.
pub fn eta_general_fl(delta: f64) -> Result<f64, FactorError> {
    let gap = 1.9 - (1.0 + 4.0 * delta) / (1.0 - delta);
    if !(delta > 0.0) || !(gap > 0.0) {
        return Err(FactorError::Invalid(format!("delta = {delta} outside the positive range")));
    }
    let g = gap / 4.0;
    let t = (234.0 / delta) / g;
    Ok(g / (4.0 * (7.0 + 3.0 * t)))
}

/// Maximizes [`eta_general_fl`] over a δ grid; returns `(η, δ*)`.
pub fn eta_general_fl_max() -> (f64, f64) {
    let hi = 0.9 / 5.9;
    let f = |d: f64| eta_general_fl(d).unwrap_or(0.0);
    let (d, v) = scan_max(&f, 1e-4, hi - 1e-9, 2000, 1e-10);
    (v, d)
}
