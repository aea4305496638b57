//! Lagrangian bipoint search for k-median, cost scaling for general
//! opening costs, and the k-median factor formulas.

use crate::factor_lp::{eta_general_fl_max, scan_max, Eta1Point, Eta2Point};
use crate::instance::{Instance, InstanceError, Solution};
use crate::jms::jms_run;
use crate::local_search::{localsearch_jms, swap_local_search, SearchConfig};
use crate::scalar::Scalar;

pub const RHO_BR: f64 = 1.3371;

#[derive(Debug, Clone)]
pub struct Bipoint<T = f64> {
    pub lambda: T,
    pub s1: Solution<T>,
    pub s2: Solution<T>,
    pub k: usize,
    pub a: f64,
    pub b: f64,
    /// `a·d(S1) + b·d(S2)`.
    pub combined_connection: T,
    pub probes: usize,
    /// Some probe returned exactly `k` facilities.
    pub degenerate: bool,
    /// Probes whose size contradicted monotonicity in λ.
    pub non_monotone: usize,
}

impl<T: Scalar> Bipoint<T> {
    fn new(lambda: T, s1: Solution<T>, s2: Solution<T>, k: usize, probes: usize, degenerate: bool, non_monotone: usize) -> Self {
        let (k1, k2) = (s1.k(), s2.k());
        let a = if k2 == k1 { 1.0 } else { (k2 - k) as f64 / (k2 - k1) as f64 };
        let b = 1.0 - a;
        let combined_connection = T::of(a) * s1.connection_cost + T::of(b) * s2.connection_cost;
        Bipoint { lambda, s1, s2, k, a, b, combined_connection, probes, degenerate, non_monotone }
    }
}

fn total_distance<T: Scalar>(inst: &Instance<T>) -> T {
    (0..inst.n()).flat_map(|c| (0..inst.m()).map(move |f| (c, f))).map(|(c, f)| inst.d(c, f)).sum()
}

/// Best single facility under the given costs.
fn cheapest_single<T: Scalar>(inst: &Instance<T>) -> Result<Solution<T>, InstanceError> {
    let lo = inst.open_cost.iter().copied().fold(T::infinity(), T::min);
    let mut best: Option<Solution<T>> = None;
    for f in (0..inst.m()).filter(|&f| inst.open_cost[f] == lo) {
        let s = inst.evaluate(&[f])?;
        if best.as_ref().map_or(true, |b| s.connection_cost < b.connection_cost) {
            best = Some(s);
        }
    }
    Ok(best.expect("m ≥ 1"))
}

/// Facilities nearest to some client.
fn nearest_solution<T: Scalar>(inst: &Instance<T>) -> Result<Solution<T>, InstanceError> {
    let all = inst.evaluate(&(0..inst.m()).collect::<Vec<_>>())?;
    let mut used = all.assign.clone();
    used.sort_unstable();
    used.dedup();
    inst.evaluate(&used)
}

/// Solution at multiplier λ for the uniform-cost instance: JMS followed by swaps.
pub fn lagrangian_probe<T: Scalar>(inst: &Instance<T>, lambda: T, lambda_max: T, cfg: &SearchConfig) -> Result<Solution<T>, InstanceError> {
    let scaled = inst.with_costs(vec![lambda; inst.m()]);
    if lambda <= T::zero() {
        return scaled.evaluate(&(0..inst.m()).collect::<Vec<_>>());
    }
    if lambda >= lambda_max {
        return cheapest_single(&scaled);
    }
    let (seed, _) = jms_run(&scaled);
    Ok(swap_local_search(&scaled, &seed, cfg)?.solution)
}

/// Binary search on the uniform multiplier until two probes bracket `k`.
pub fn bipoint_search<T: Scalar>(inst: &Instance<T>, k: usize, eps: f64, cfg: &SearchConfig) -> Result<Bipoint<T>, InstanceError> {
    let m = inst.m();
    if k == 0 || k >= m {
        return Err(InstanceError::Dimension(format!("need 1 ≤ k < m, got k = {k}, m = {m}")));
    }
    let lambda_max = T::of(3.0) * total_distance(inst);
    let mut lo = (T::zero(), lagrangian_probe(inst, T::zero(), lambda_max, cfg)?);
    let mut hi = (lambda_max, lagrangian_probe(inst, lambda_max, lambda_max, cfg)?);
    let mut probes = 2;
    let mut non_monotone = 0;
    for _ in 0..200 {
        let bp = Bipoint::new(hi.0, hi.1.clone(), lo.1.clone(), k, probes, false, non_monotone);
        let gap = (hi.0 - lo.0) * T::usize(k);
        if gap <= T::of(eps / 3.0) * bp.combined_connection || hi.0 - lo.0 <= T::of(1e-13) * lambda_max {
            return Ok(bp);
        }
        let mid = (lo.0 + hi.0) / T::of(2.0);
        let s = lagrangian_probe(inst, mid, lambda_max, cfg)?;
        probes += 1;
        if s.k() > hi.1.k().max(lo.1.k()) || s.k() < lo.1.k().min(hi.1.k()) {
            non_monotone += 1;
        }
        if s.k() == k {
            return Ok(Bipoint::new(mid, s, lo.1, k, probes, true, non_monotone));
        }
        if s.k() > k {
            lo = (mid, s);
        } else {
            hi = (mid, s);
        }
    }
    Ok(Bipoint::new(hi.0, hi.1, lo.1, k, probes, false, non_monotone))
}

/// Greedy rounding: drop the facility whose removal raises `d` the least.
pub fn trim<T: Scalar>(inst: &Instance<T>, s: &Solution<T>, k: usize) -> Result<Solution<T>, InstanceError> {
    let mut open = s.open.clone();
    while open.len() > k {
        let mut best: Option<(T, usize)> = None;
        for i in 0..open.len() {
            let mut rest = open.clone();
            rest.remove(i);
            let d = inst.evaluate(&rest)?.connection_cost;
            if best.map_or(true, |(b, _)| d < b) {
                best = Some((d, i));
            }
        }
        open.remove(best.expect("nonempty").1);
    }
    inst.evaluate(&open)
}

#[derive(Debug, Clone)]
pub struct KmedianOutcome<T = f64> {
    pub solution: Solution<T>,
    pub bipoint: Option<Bipoint<T>>,
    /// `"s1"`, `"trim"` or `"all"`.
    pub source: &'static str,
}

/// Best of `S1` and the greedy trim of `S2` (the trim carries no guarantee).
pub fn kmedian_solve<T: Scalar>(inst: &Instance<T>, k: usize, eps: f64, cfg: &SearchConfig) -> Result<KmedianOutcome<T>, InstanceError> {
    if k >= inst.m() {
        let all = inst.evaluate(&(0..inst.m()).collect::<Vec<_>>())?;
        return Ok(KmedianOutcome { solution: all, bipoint: None, source: "all" });
    }
    let bp = bipoint_search(inst, k, eps, cfg)?;
    let s1 = inst.evaluate(&bp.s1.open)?;
    let t = trim(inst, &bp.s2, k)?;
    let (solution, source) = if t.connection_cost < s1.connection_cost { (t, "trim") } else { (s1, "s1") };
    Ok(KmedianOutcome { solution, bipoint: Some(bp), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingBranch {
    /// `S(0)` already spends at most the guess.
    NearestIsCheap,
    /// Even one cheapest facility exceeds the guess.
    GuessTooSmall,
    Bracketed,
}

#[derive(Debug, Clone)]
pub struct CostScaling<T = f64> {
    pub branch: ScalingBranch,
    pub lambda: T,
    pub lambda_max: T,
    /// `open(S1) ≤ guess`, probed at the upper end of the bracket.
    pub s1: Solution<T>,
    pub s2: Solution<T>,
    pub a: f64,
    pub probes: usize,
}

impl<T: Scalar> CostScaling<T> {
    /// `a·(λ·open(S1) + d1) + (1-a)·(λ·open(S2) + d2)`.
    pub fn scaled_mix(&self) -> T {
        let sc = |s: &Solution<T>| self.lambda * s.facility_cost + s.connection_cost;
        T::of(self.a) * sc(&self.s1) + T::of(1.0 - self.a) * sc(&self.s2)
    }

    pub fn combined_connection(&self) -> T {
        T::of(self.a) * self.s1.connection_cost + T::of(1.0 - self.a) * self.s2.connection_cost
    }
}

/// `S(λ)` for opening costs scaled by λ, priced with the original costs.
pub fn scaled_probe<T: Scalar>(inst: &Instance<T>, lambda: T, lambda_max: T, cfg: &SearchConfig) -> Result<Solution<T>, InstanceError> {
    if lambda <= T::zero() {
        return nearest_solution(inst);
    }
    if lambda >= lambda_max {
        return inst.evaluate(&cheapest_single(inst)?.open);
    }
    let scaled = inst.with_costs(inst.open_cost.iter().map(|&c| c * lambda).collect());
    let (seed, _) = jms_run(&scaled);
    let out = localsearch_jms(&scaled, &seed, cfg)?.solution;
    inst.evaluate(&out.open)
}

/// Binary search on the cost multiplier until the facility spend brackets `open_guess`.
///
/// `eps` is the threshold parameter handed to LocalSearch-JMS.
pub fn cost_scaling_lmp<T: Scalar>(inst: &Instance<T>, eps: f64, open_guess: T, cfg: &SearchConfig) -> Result<CostScaling<T>, InstanceError> {
    if !(open_guess > T::zero()) {
        return Err(InstanceError::Dimension("open_guess must be positive".into()));
    }
    let cfg = &SearchConfig { eps, ..cfg.clone() };
    let s0 = nearest_solution(inst)?;
    let mut costs: Vec<T> = inst.open_cost.clone();
    costs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut gamma = T::infinity();
    if costs[0] > T::zero() {
        gamma = costs[0];
    }
    for w in costs.windows(2) {
        if w[1] > w[0] {
            gamma = gamma.min(w[1] - w[0]);
        }
    }
    let lambda_max = if gamma.is_finite() { T::of(3.0) * total_distance(inst) / gamma } else { T::one() };
    if s0.facility_cost <= open_guess {
        return Ok(CostScaling { branch: ScalingBranch::NearestIsCheap, lambda: T::zero(), lambda_max, s1: s0.clone(), s2: s0, a: 1.0, probes: 1 });
    }
    let top = scaled_probe(inst, lambda_max, lambda_max, cfg)?;
    if top.facility_cost > open_guess {
        return Ok(CostScaling { branch: ScalingBranch::GuessTooSmall, lambda: lambda_max, lambda_max, s1: top.clone(), s2: top, a: 1.0, probes: 2 });
    }
    let (mut lo, mut s_lo) = (T::zero(), s0);
    let (mut hi, mut s_hi) = (lambda_max, top);
    let mut probes = 2;
    while hi - lo > T::of(1e-12) * hi && probes < 400 {
        let mid = (lo + hi) / T::of(2.0);
        let s = scaled_probe(inst, mid, lambda_max, cfg)?;
        probes += 1;
        if s.facility_cost <= open_guess {
            hi = mid;
            s_hi = s;
        } else {
            lo = mid;
            s_lo = s;
        }
    }
    let (o1, o2) = (s_hi.facility_cost, s_lo.facility_cost);
    let a = if o2 > o1 { ((o2 - open_guess) / (o2 - o1)).f().clamp(0.0, 1.0) } else { 1.0 };
    Ok(CostScaling { branch: ScalingBranch::Bracketed, lambda: lo, lambda_max, s1: s_hi, s2: s_lo, a, probes })
}

/// `2(1+2a)/(1+2a²)`.
pub fn li_svensson(a: f64) -> f64 {
    2.0 * (1.0 + 2.0 * a) / (1.0 + 2.0 * a * a)
}

/// `max_a min{2(1+2a)/(1+2a²), ρ_BR(2 − (1−a)η₂)}`; returns `(ρ, a)`.
pub fn rho_kmed_eval(eta2: f64, rho_br: f64) -> (f64, f64) {
    let f2 = |a: f64| rho_br * (2.0 - (1.0 - a) * eta2);
    let g = |a: f64| li_svensson(a).min(f2(a));
    // past the peak of the first curve the two cross at most once
    let peak = (3f64.sqrt() - 1.0) / 2.0;
    let diff = |a: f64| li_svensson(a) - f2(a);
    if diff(peak) > 0.0 && diff(1.0) < 0.0 {
        let (mut l, mut r) = (peak, 1.0);
        while r - l > 1e-13 {
            let m = 0.5 * (l + r);
            if diff(m) > 0.0 {
                l = m;
            } else {
                r = m;
            }
        }
        let a = 0.5 * (l + r);
        let (ga, gs) = scan_max(&g, 0.0, 1.0, 4000, 1e-12);
        if gs <= g(a) + 1e-12 {
            return (g(a), a);
        }
        return (gs, ga);
    }
    let (a, v) = scan_max(&g, 0.0, 1.0, 4000, 1e-12);
    (v, a)
}

/// Refined factor with `β₁`-dependent improvements; returns `(ρ, a, β₁)`.
pub fn rho_kmed_refined(
    eta1: &dyn Fn(f64, f64) -> f64,
    eta2: &dyn Fn(f64, f64) -> f64,
    rho_br: f64,
    eps: f64,
    grid: usize,
) -> (f64, f64, f64) {
    let val = |a: f64, b1: f64| {
        let br = rho_br * (2.0 - a * eta1(a, b1) - (1.0 - a) * eta2(a, b1));
        b1.min(li_svensson(a) + eps).min(br)
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 2.0);
    let n = grid.max(4);
    for i in 1..n {
        let a = i as f64 / n as f64;
        let top = 2.0 / a;
        for j in 0..=n {
            let b1 = 2.0 + (top - 2.0) * j as f64 / n as f64;
            let v = val(a, b1);
            if v > best.0 {
                best = (v, a, b1);
            }
        }
    }
    // coordinate refinement around the grid optimum
    let mut step_a = 1.0 / n as f64;
    let (mut a, mut b1) = (best.1, best.2);
    for _ in 0..60 {
        let step_b = step_a * (2.0 / a.max(1e-9) - 2.0).max(1.0);
        let mut moved = false;
        for (da, db) in [(step_a, 0.0), (-step_a, 0.0), (0.0, step_b), (0.0, -step_b)] {
            let (na, nb) = (a + da, b1 + db);
            if na <= 0.0 || na >= 1.0 || nb < 2.0 || nb > 2.0 / na {
                continue;
            }
            let v = val(na, nb);
            if v > best.0 {
                best = (v, na, nb);
                a = na;
                b1 = nb;
                moved = true;
            }
        }
        if !moved {
            step_a /= 2.0;
        }
    }
    best
}

/// Constants produced by the bound searches.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub eta2: Eta2Point,
    pub eta1_by_a: Vec<(f64, Eta1Point)>,
    pub rho_br: f64,
    pub rho_kmed: f64,
    pub worst_a: f64,
    /// Half of the best general-cost improvement, and its δ.
    pub general_fl: (f64, f64),
}

impl BoundsReport {
    pub fn new(eta2: Eta2Point, eta1_by_a: Vec<(f64, Eta1Point)>, rho_br: f64) -> Self {
        let (rho_kmed, worst_a) = rho_kmed_eval(eta2.eta2, rho_br);
        let (eta, delta) = eta_general_fl_max();
        BoundsReport { eta2, eta1_by_a, rho_br, rho_kmed, worst_a, general_fl: (eta / 2.0, delta) }
    }

    pub fn to_kv(&self) -> String {
        let e = &self.eta2;
        let mut s = format!(
            "eta2={}\neta2.delta={}\neta2.alpha_l={}\neta2.alpha_mm={}\neta2.beta_mm={}\neta2.t_l={}\nrho_br={}\nrho_kmed={}\nworst_a={}\ngeneral_fl.eta_half={}\ngeneral_fl.delta={}\n",
            e.eta2, e.delta, e.alpha_l, e.alpha_mm, e.beta_mm, e.t_l, self.rho_br, self.rho_kmed, self.worst_a, self.general_fl.0, self.general_fl.1
        );
        for (a, p) in &self.eta1_by_a {
            s += &format!("eta1[a={a}]={}\n", p.eta1);
        }
        s
    }
}
