//! Matched/lonely classification of a solution against a reference, cost
//! decompositions and checkable forms of the structural inequalities.

use crate::instance::{Instance, InstanceError, Solution};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, VecDeque};

/// Fraction of the clients of `f` in `sref` that `g` serves in `s`.
pub fn capture_fraction<T: Scalar>(s: &Solution<T>, sref: &Solution<T>, f: usize, g: usize) -> f64 {
    let (mut both, mut total) = (0usize, 0usize);
    for (c, &h) in sref.assign.iter().enumerate() {
        if h == f {
            total += 1;
            if s.assign[c] == g {
                both += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        both as f64 / total as f64
    }
}

/// Strict capture: more than an `a` fraction.
pub fn captures<T: Scalar>(s: &Solution<T>, sref: &Solution<T>, f: usize, g: usize, a: f64) -> bool {
    let (mut both, mut total) = (0usize, 0usize);
    for (c, &h) in sref.assign.iter().enumerate() {
        if h == f {
            total += 1;
            if s.assign[c] == g {
                both += 1;
            }
        }
    }
    total > 0 && both as f64 > a * total as f64
}

/// Set version: clients of `f` in `sref` served in `s` by any of `set`.
fn set_captures<T: Scalar>(s: &Solution<T>, sref: &Solution<T>, f: usize, set: &[usize], a: f64) -> bool {
    let (mut both, mut total) = (0usize, 0usize);
    for (c, &h) in sref.assign.iter().enumerate() {
        if h == f {
            total += 1;
            if set.contains(&s.assign[c]) {
                both += 1;
            }
        }
    }
    total > 0 && both as f64 > a * total as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralParams {
    pub delta1: f64,
    pub delta2: f64,
    pub delta1_prime: f64,
    pub delta2_prime: f64,
}

impl GeneralParams {
    pub fn new(delta1: f64, delta2: f64, delta1_prime: f64, delta2_prime: f64) -> Result<Self, String> {
        let ok = 0.0 < delta1_prime && delta1_prime <= delta1 && delta1 <= 0.5 && 0.0 < delta2_prime && delta2_prime < delta2 && delta2 <= 0.5;
        if ok {
            Ok(GeneralParams { delta1, delta2, delta1_prime, delta2_prime })
        } else {
            Err(format!("need 0 < δ'₁ ≤ δ₁ ≤ 1/2 and 0 < δ'₂ < δ₂ ≤ 1/2, got {delta1} {delta2} {delta1_prime} {delta2_prime}"))
        }
    }

    /// `δ₁ = δ'₁ = δ`, `δ₂ = 1/2`, `δ'₂ = 1/4`.
    pub fn standard(delta: f64) -> Self {
        GeneralParams { delta1: delta, delta2: 0.5, delta1_prime: delta, delta2_prime: 0.25 }
    }

    /// `t(δ₁, δ'₂)` of the lonely facility-cost bound.
    pub fn t(&self) -> f64 {
        let d2p = self.delta2_prime;
        1.0 + 1.0 / (self.delta1 * d2p) + ((1.0 - d2p) / d2p).max(1.0 / (1.0 - d2p))
    }

    /// `t'(δ₂, δ'₁)`.
    pub fn t_prime(&self) -> f64 {
        let d1p = self.delta1_prime;
        0.5 * (1.0 + 1.0 / (self.delta2 * d1p) + ((1.0 - d1p) / d1p).max(1.0 / (1.0 - d1p)))
    }

    pub fn zeta(&self) -> f64 {
        0.5 - (1.0 - self.delta1) * (1.0 - self.delta2) / (2.0 * (1.0 - self.delta1_prime) * (1.0 - self.delta2_prime))
    }
}

/// Cost masses of `(S', OPT)` split by class; the first letter refers to
/// the class of the client's facility in `S'`, the second to `OPT`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostDecomposition {
    pub opt: f64,
    pub opt_l: f64,
    pub opt_m: f64,
    pub opt_mm: f64,
    pub opt_lm: f64,
    pub opt_ml: f64,
    pub opt_ll: f64,
    pub d_prime: f64,
    pub d_mm: f64,
    pub d_lm: f64,
    pub d_ml: f64,
    pub d_ll: f64,
    /// `S'` cost of the clients served by lonely `OPT` facilities.
    pub d_l: f64,
    pub alpha_l: f64,
    pub alpha_m: f64,
    pub alpha_mm: f64,
    pub beta: f64,
    pub beta_mm: f64,
    pub beta_l: f64,
    pub k_l: usize,
    pub k_m: usize,
    pub kprime_l: usize,
    pub kprime_m: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub s_matched: BTreeSet<usize>,
    pub s_lonely: BTreeSet<usize>,
    pub opt_matched: BTreeSet<usize>,
    pub opt_lonely: BTreeSet<usize>,
    /// `(S' side, OPT side)` of every matched group.
    pub pairs: Vec<(Vec<usize>, Vec<usize>)>,
    pub decomposition: CostDecomposition,
}

fn finish<T: Scalar>(sp: &Solution<T>, opt: &Solution<T>, s_matched: BTreeSet<usize>, opt_matched: BTreeSet<usize>, pairs: Vec<(Vec<usize>, Vec<usize>)>) -> Classification {
    let s_lonely: BTreeSet<usize> = sp.open.iter().copied().filter(|f| !s_matched.contains(f)).collect();
    let opt_lonely: BTreeSet<usize> = opt.open.iter().copied().filter(|f| !opt_matched.contains(f)).collect();
    let mut dc = CostDecomposition::default();
    for c in 0..sp.assign.len() {
        let (o, d) = (opt.per_client[c].f(), sp.per_client[c].f());
        let sm = s_matched.contains(&sp.assign[c]);
        let om = opt_matched.contains(&opt.assign[c]);
        dc.opt += o;
        dc.d_prime += d;
        if om {
            dc.opt_m += o;
        } else {
            dc.opt_l += o;
            dc.d_l += d;
        }
        match (sm, om) {
            (true, true) => (dc.opt_mm += o, dc.d_mm += d),
            (true, false) => (dc.opt_ml += o, dc.d_ml += d),
            (false, true) => (dc.opt_lm += o, dc.d_lm += d),
            (false, false) => (dc.opt_ll += o, dc.d_ll += d),
        };
    }
    if dc.opt > 0.0 {
        dc.alpha_l = dc.opt_l / dc.opt;
        dc.alpha_m = dc.opt_m / dc.opt;
        dc.alpha_mm = dc.opt_mm / dc.opt;
        dc.beta = dc.d_prime / dc.opt;
        dc.beta_mm = dc.d_mm / dc.opt;
        dc.beta_l = dc.d_l / dc.opt;
    } else {
        dc.alpha_m = 1.0;
    }
    dc.k_l = opt_lonely.len();
    dc.k_m = opt_matched.len();
    dc.kprime_l = s_lonely.len();
    dc.kprime_m = s_matched.len();
    Classification { s_matched, s_lonely, opt_matched, opt_lonely, pairs, decomposition: dc }
}

/// Uniform-cost classification; `k = |OPT|` selects the case.
pub fn classify_uniform<T: Scalar>(sp: &Solution<T>, opt: &Solution<T>, delta: f64) -> Classification {
    let (mut sm, mut om, mut pairs) = (BTreeSet::new(), BTreeSet::new(), Vec::new());
    if sp.k() <= opt.k() {
        for &fs in &opt.open {
            let m: Vec<usize> = sp.open.iter().copied().filter(|&g| captures(opt, sp, g, fs, 0.5)).collect();
            if !m.is_empty() && set_captures(sp, opt, fs, &m, 1.0 - delta) {
                om.insert(fs);
                sm.extend(m.iter().copied());
                pairs.push((m, vec![fs]));
            }
        }
    } else {
        for &fp in &sp.open {
            let m: Vec<usize> = opt.open.iter().copied().filter(|&g| captures(sp, opt, g, fp, 1.0 - delta)).collect();
            if !m.is_empty() && set_captures(opt, sp, fp, &m, 0.5) {
                sm.insert(fp);
                om.extend(m.iter().copied());
                pairs.push((vec![fp], m));
            }
        }
    }
    finish(sp, opt, sm, om, pairs)
}

/// General-cost classification: one-to-one pairs by mutual capture.
pub fn classify_general<T: Scalar>(sp: &Solution<T>, opt: &Solution<T>, p: &GeneralParams) -> Classification {
    let (mut sm, mut om, mut pairs) = (BTreeSet::new(), BTreeSet::new(), Vec::new());
    for &fp in &sp.open {
        for &fs in &opt.open {
            if captures(sp, opt, fs, fp, 1.0 - p.delta1) && captures(opt, sp, fp, fs, 1.0 - p.delta2) {
                sm.insert(fp);
                om.insert(fs);
                pairs.push((vec![fp], vec![fs]));
            }
        }
    }
    finish(sp, opt, sm, om, pairs)
}

/// One inequality `lhs ≤ rhs`, evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub violated: bool,
    pub extra: Vec<(String, f64)>,
}

impl InequalityReport {
    fn new(name: &str, lhs: f64, rhs: f64, extra: Vec<(String, f64)>) -> Self {
        let margin = rhs - lhs;
        let tol = 1e-9 * lhs.abs().max(rhs.abs()).max(1.0);
        InequalityReport { name: name.into(), lhs, rhs, margin, violated: margin < -tol, extra }
    }

    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = format!("{0}.lhs={1}\n{0}.rhs={2}\n{0}.margin={3}\n", self.name, self.lhs, self.rhs, self.margin);
        for (k, v) in &self.extra {
            s += &format!("{}.{k}={v}\n", self.name);
        }
        s += &format!("violated={}\n", self.violated as u8);
        s
    }
}

fn decomposition_kv(dc: &CostDecomposition) -> Vec<(String, f64)> {
    vec![
        ("opt".into(), dc.opt),
        ("opt_l".into(), dc.opt_l),
        ("opt_m".into(), dc.opt_m),
        ("opt_mm".into(), dc.opt_mm),
        ("d_prime".into(), dc.d_prime),
        ("d_mm".into(), dc.d_mm),
        ("alpha_l".into(), dc.alpha_l),
        ("alpha_mm".into(), dc.alpha_mm),
        ("beta".into(), dc.beta),
        ("beta_mm".into(), dc.beta_mm),
        ("k_l".into(), dc.k_l as f64),
        ("kprime_l".into(), dc.kprime_l as f64),
    ]
}

/// `λk' + d' ≤ λk + 3opt^L + opt^M + δ/(1-δ)(d^MM + opt^MM) + coef·ε·(d' + opt)`.
pub fn check_theorem_3_1<T: Scalar>(
    sp: &Solution<T>,
    opt: &Solution<T>,
    lambda: f64,
    delta: f64,
    eps: f64,
    slack_coef: f64,
) -> InequalityReport {
    let cl = classify_uniform(sp, opt, delta);
    let dc = &cl.decomposition;
    let lhs = lambda * sp.k() as f64 + dc.d_prime;
    let rhs = lambda * opt.k() as f64
        + 3.0 * dc.opt_l
        + dc.opt_m
        + delta / (1.0 - delta) * (dc.d_mm + dc.opt_mm)
        + slack_coef * eps * (dc.d_prime + dc.opt);
    InequalityReport::new("thm31", lhs, rhs, decomposition_kv(dc))
}

/// `λk^L₂ ≤ (2/δ(1-α^MM) + 2(1-δ)/δ(β₂-β₂^MM) + 2δ/(1-δ)(β₂^MM+α^MM))·opt`.
pub fn check_lemma_4_2<T: Scalar>(s2: &Solution<T>, opt: &Solution<T>, lambda: f64, delta: f64) -> InequalityReport {
    let cl = classify_uniform(s2, opt, delta);
    let dc = &cl.decomposition;
    let lhs = lambda * dc.kprime_l as f64;
    let coef = 2.0 / delta * (1.0 - dc.alpha_mm)
        + 2.0 * (1.0 - delta) / delta * (dc.beta - dc.beta_mm)
        + 2.0 * delta / (1.0 - delta) * (dc.beta_mm + dc.alpha_mm);
    let mut extra = decomposition_kv(dc);
    extra.push(("coef".into(), coef));
    InequalityReport::new("lem42", lhs, coef * dc.opt, extra)
}

/// `open(S')+d' ≤ open(OPT) + δ/(1-δ)d' + opt^M/(1-δ) + 4opt^L + coef·ε·(d'+opt)`.
pub fn check_theorem_6_4<T: Scalar>(
    sp: &Solution<T>,
    opt: &Solution<T>,
    delta: f64,
    eps: f64,
    slack_coef: f64,
) -> InequalityReport {
    let p = GeneralParams { delta1: delta, delta2: 0.5, delta1_prime: delta / 2.0, delta2_prime: 0.25 };
    let cl = classify_general(sp, opt, &p);
    let dc = &cl.decomposition;
    let lhs = sp.cost().f();
    let rhs = opt.facility_cost.f()
        + delta / (1.0 - delta) * dc.d_prime
        + dc.opt_m / (1.0 - delta)
        + 4.0 * dc.opt_l
        + slack_coef * eps * (dc.d_prime + dc.opt);
    InequalityReport::new("thm64", lhs, rhs, decomposition_kv(dc))
}

/// `open(S^L) ≤ (1-δ₂)/(1-δ'₂)·open(OPT^L) + t·(opt + d')`.
pub fn check_lemma_6_2<T: Scalar>(inst: &Instance<T>, sp: &Solution<T>, opt: &Solution<T>, p: &GeneralParams) -> InequalityReport {
    let cl = classify_general(sp, opt, p);
    let dc = &cl.decomposition;
    let open = |set: &BTreeSet<usize>| set.iter().map(|&f| inst.open_cost[f].f()).sum::<f64>();
    let lhs = open(&cl.s_lonely);
    let t = p.t();
    let rhs = (1.0 - p.delta2) / (1.0 - p.delta2_prime) * open(&cl.opt_lonely) + t * (dc.opt + dc.d_prime);
    let mut extra = decomposition_kv(dc);
    extra.push(("t".into(), t));
    InequalityReport::new("lem62", lhs, rhs, extra)
}

/// Splits `lonely ⊆ OPT` along the closest-neighbour digraph.
///
/// Ties go to the lowest facility id. Returns `(D_A, D_B)`.
pub fn partition_lonely_bipartite<T: Scalar>(inst: &Instance<T>, opt: &Solution<T>, lonely: &BTreeSet<usize>) -> (Vec<usize>, Vec<usize>) {
    let closest = |f: usize| -> Option<usize> {
        let mut best: Option<(T, usize)> = None;
        for &g in &opt.open {
            if g != f {
                let d = inst.ff(f, g);
                if best.map_or(true, |(b, _)| d < b) {
                    best = Some((d, g));
                }
            }
        }
        best.map(|(_, g)| g)
    };
    let nodes: Vec<usize> = lonely.iter().copied().collect();
    let idx = |f: usize| nodes.binary_search(&f).ok();
    let mut adj = vec![Vec::new(); nodes.len()];
    let mut out = vec![None; nodes.len()];
    for (i, &f) in nodes.iter().enumerate() {
        if let Some(j) = closest(f).and_then(idx) {
            out[i] = Some(j);
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    // only 2-cycles may close
    for s in 0..nodes.len() {
        let (mut x, mut steps) = (s, 0);
        while let Some(y) = out[x] {
            x = y;
            steps += 1;
            if x == s {
                assert!(steps <= 2, "closest-neighbour cycle of length {steps}");
                break;
            }
            if steps > nodes.len() {
                break;
            }
        }
    }
    let mut color = vec![u8::MAX; nodes.len()];
    for s in 0..nodes.len() {
        if color[s] != u8::MAX {
            continue;
        }
        color[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &y in &adj[x] {
                if color[y] == u8::MAX {
                    color[y] = 1 - color[x];
                    q.push_back(y);
                } else {
                    assert_ne!(color[y], color[x], "closest-neighbour graph is not bipartite");
                }
            }
        }
    }
    let pick = |c: u8| nodes.iter().zip(&color).filter(|(_, &k)| k == c).map(|(&f, _)| f).collect();
    (pick(0), pick(1))
}

/// Monte-Carlo estimate of the randomized `OPT†` costs against their bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DaggerReport {
    pub samples: usize,
    pub skipped: bool,
    pub mean_open: f64,
    pub se_open: f64,
    pub bound_open: f64,
    pub mean_conn: f64,
    pub se_conn: f64,
    pub bound_conn: f64,
    /// Largest empirical reopening frequency over `S^L`.
    pub max_reopen: f64,
    pub bound_reopen: f64,
    pub violated: bool,
}

impl DaggerReport {
    pub fn to_kv(&self) -> String {
        format!(
            "lem63.samples={}\nlem63.skipped={}\nlem63.mean_open={}\nlem63.se_open={}\nlem63.bound_open={}\nlem63.mean_conn={}\nlem63.se_conn={}\nlem63.bound_conn={}\nlem63.max_reopen={}\nlem63.bound_reopen={}\nviolated={}\n",
            self.samples,
            self.skipped as u8,
            self.mean_open,
            self.se_open,
            self.bound_open,
            self.mean_conn,
            self.se_conn,
            self.bound_conn,
            self.max_reopen,
            self.bound_reopen,
            self.violated as u8
        )
    }
}

/// Samples `OPT†`: pick `D_A` or `D_B` with probability 1/2, delete it and
/// reopen captured `S'` facilities as in the deletion argument.
pub fn sample_opt_dagger<T: Scalar>(
    inst: &Instance<T>,
    sp: &Solution<T>,
    opt: &Solution<T>,
    p: &GeneralParams,
    samples: usize,
    seed: u64,
) -> Result<DaggerReport, InstanceError> {
    let cl = classify_general(sp, opt, p);
    let dc = &cl.decomposition;
    let open_of = |it: &mut dyn Iterator<Item = usize>| it.map(|f| inst.open_cost[f].f()).sum::<f64>();
    let open_opt = opt.facility_cost.f();
    let open_opt_l = open_of(&mut cl.opt_lonely.iter().copied());
    let bound_open = open_opt - p.zeta() * open_opt_l + p.t() * (dc.opt + dc.d_prime);
    let bound_conn = p.t_prime() * (dc.opt + dc.d_prime);
    let bound_reopen = (1.0 - p.delta1) / (2.0 * (1.0 - p.delta1_prime));
    if opt.k() < 2 || cl.opt_lonely.is_empty() {
        let (o, d) = (open_opt, dc.opt);
        return Ok(DaggerReport {
            samples: 0,
            skipped: opt.k() < 2,
            mean_open: o,
            se_open: 0.0,
            bound_open,
            mean_conn: d,
            se_conn: 0.0,
            bound_conn,
            max_reopen: 0.0,
            bound_reopen,
            violated: o > bound_open + 1e-9 || d > bound_conn + 1e-9,
        });
    }
    let (da, db) = partition_lonely_bipartite(inst, opt, &cl.opt_lonely);
    // per deleted f*: candidate S' facilities with their weights
    let reopen_plan = |fs: usize| -> Vec<(usize, usize)> {
        let m: Vec<usize> = sp.open.iter().copied().filter(|&g| captures(opt, sp, g, fs, 1.0 - p.delta2)).collect();
        if m.is_empty() || !set_captures(sp, opt, fs, &m, 1.0 - p.delta1_prime) {
            return Vec::new();
        }
        m.iter()
            .map(|&g| (g, (0..sp.assign.len()).filter(|&c| opt.assign[c] == fs && sp.assign[c] == g).count()))
            .filter(|&(_, w)| w > 0)
            .collect()
    };
    let plans: Vec<(usize, Vec<(usize, usize)>)> = cl.opt_lonely.iter().map(|&f| (f, reopen_plan(f))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut so, mut so2, mut sd, mut sd2) = (0.0, 0.0, 0.0, 0.0);
    let mut reopen_count = std::collections::BTreeMap::<usize, usize>::new();
    for _ in 0..samples {
        let del = if rng.gen_bool(0.5) { &da } else { &db };
        let mut set: BTreeSet<usize> = opt.open.iter().copied().filter(|f| !del.contains(f)).collect();
        for (f, plan) in &plans {
            if !del.contains(f) || plan.is_empty() {
                continue;
            }
            let total: usize = plan.iter().map(|x| x.1).sum();
            let mut r = rng.gen_range(0..total);
            for &(g, w) in plan {
                if r < w {
                    set.insert(g);
                    *reopen_count.entry(g).or_default() += 1;
                    break;
                }
                r -= w;
            }
        }
        let s = inst.evaluate(&set.into_iter().collect::<Vec<_>>())?;
        let (o, d) = (s.facility_cost.f(), s.connection_cost.f());
        so += o;
        so2 += o * o;
        sd += d;
        sd2 += d * d;
    }
    let n = samples as f64;
    let (mo, md) = (so / n, sd / n);
    let se = |s2: f64, m: f64| ((s2 / n - m * m).max(0.0) / n).sqrt();
    let (se_o, se_d) = (se(so2, mo), se(sd2, md));
    let max_reopen = reopen_count.values().map(|&c| c as f64 / n).fold(0.0, f64::max);
    let violated = mo - 3.0 * se_o > bound_open + 1e-9 || md - 3.0 * se_d > bound_conn + 1e-9;
    Ok(DaggerReport {
        samples,
        skipped: false,
        mean_open: mo,
        se_open: se_o,
        bound_open,
        mean_conn: md,
        se_conn: se_d,
        bound_conn,
        max_reopen,
        bound_reopen,
        violated,
    })
}
