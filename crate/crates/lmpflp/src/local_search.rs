//! Swap local search and LocalSearch-JMS.

use crate::instance::{Instance, InstanceError, Solution};
use crate::jms::extend_jms;
use crate::scalar::Scalar;
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    Strict,
    /// Accept only if `new < cur / (1 + eps³/n'⁵)`.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveFamily {
    Swap,
    JmsExtended,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Max facilities swapped out and in, each (swap family).
    pub delta: usize,
    /// Threshold parameter of the relative mode.
    pub eps: f64,
    /// Width parameter of LocalSearch-JMS: `|S''△S'| ≤ ⌊1/width_eps⌋ + 1`.
    pub width_eps: f64,
    pub threshold: ThresholdMode,
    pub move_budget: usize,
    /// 0 keeps the natural id order.
    pub seed: u64,
    /// Objective `alpha·open + beta·d`.
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            delta: 2,
            eps: 0.5,
            width_eps: 0.5,
            threshold: ThresholdMode::Strict,
            move_budget: 100_000,
            seed: 0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl SearchConfig {
    pub fn jms_width(&self) -> usize {
        (1.0 / self.width_eps).floor() as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Swap,
    Extend,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Move<T = f64> {
    pub kind: MoveKind,
    pub removed: Vec<usize>,
    pub added: Vec<usize>,
    /// Objective value after the move.
    pub cost: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoveRecord<T = f64> {
    pub step: usize,
    pub mv: Move<T>,
}

impl<T: Scalar> fmt::Display for MoveRecord<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.mv.kind {
            MoveKind::Swap => "swap",
            MoveKind::Extend => "extend",
        };
        let ids = |v: &[usize]| v.iter().join(",");
        write!(
            f,
            "step={} kind={kind} removed=[{}] added=[{}] cost={}",
            self.step,
            ids(&self.mv.removed),
            ids(&self.mv.added),
            self.mv.cost.f()
        )
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome<T = f64> {
    pub solution: Solution<T>,
    pub log: Vec<MoveRecord<T>>,
    pub budget_exhausted: bool,
}

impl<T: Scalar> SearchOutcome<T> {
    pub fn log_text(&self) -> String {
        self.log.iter().map(|r| format!("{r}\n")).collect()
    }
}

fn objective<T: Scalar>(sol: &Solution<T>, cfg: &SearchConfig) -> T {
    T::of(cfg.alpha) * sol.facility_cost + T::of(cfg.beta) * sol.connection_cost
}

fn accepts<T: Scalar>(inst: &Instance<T>, new: T, cur: T, cfg: &SearchConfig) -> bool {
    match cfg.threshold {
        ThresholdMode::Strict => new < cur - T::of(1e-12) * cur.abs().max(T::one()),
        ThresholdMode::Relative => {
            let np = (inst.m() + inst.n()) as f64;
            new < cur / T::of(1.0 + cfg.eps.powi(3) / np.powi(5))
        }
    }
}

fn apply(open: &[usize], removed: &[usize], added: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = open.iter().copied().filter(|f| !removed.contains(f)).chain(added.iter().copied()).collect();
    s.sort_unstable();
    s
}

fn orders(m: usize, seed: u64) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..m).collect();
    if seed != 0 {
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    ids
}

/// First improving move from `sol`, scanning deterministically.
fn find_move<T: Scalar>(
    inst: &Instance<T>,
    sol: &Solution<T>,
    cfg: &SearchConfig,
    family: MoveFamily,
) -> Result<Option<Move<T>>, InstanceError> {
    let cur = objective(sol, cfg);
    let ids = orders(inst.m(), cfg.seed);
    let inside: Vec<usize> = ids.iter().copied().filter(|&f| sol.is_open(f)).collect();
    let outside: Vec<usize> = ids.iter().copied().filter(|&f| !sol.is_open(f)).collect();
    let try_swap = |removed: &[usize], added: &[usize]| -> Result<Option<Move<T>>, InstanceError> {
        if removed.len() == inside.len() && added.is_empty() {
            return Ok(None);
        }
        let new = inst.evaluate(&apply(&sol.open, removed, added))?;
        let c = objective(&new, cfg);
        Ok(accepts(inst, c, cur, cfg).then(|| Move {
            kind: MoveKind::Swap,
            removed: removed.to_vec(),
            added: added.to_vec(),
            cost: c,
        }))
    };
    let (max_out, max_in, max_total) = match family {
        MoveFamily::Swap => (cfg.delta, cfg.delta, 2 * cfg.delta),
        MoveFamily::JmsExtended => (cfg.jms_width(), cfg.jms_width(), cfg.jms_width()),
    };
    for total in 1..=max_total {
        for a in 0..=total.min(max_out).min(inside.len()) {
            let b = total - a;
            if b > max_in || b > outside.len() {
                continue;
            }
            for removed in inside.iter().copied().combinations(a) {
                for added in outside.iter().copied().combinations(b) {
                    if let Some(mv) = try_swap(&removed, &added)? {
                        return Ok(Some(mv));
                    }
                }
            }
        }
    }
    if family == MoveFamily::JmsExtended {
        let mut seeds: Vec<(Vec<usize>, Vec<usize>)> = vec![(vec![], vec![])];
        for &f in &inside {
            seeds.push((vec![f], vec![]));
            for &g in &outside {
                seeds.push((vec![f], vec![g]));
            }
        }
        for (removed, added) in seeds {
            let free = apply(&sol.open, &removed, &added);
            let out = extend_jms(inst, &free)?.solution;
            let c = objective(&out, cfg);
            if accepts(inst, c, cur, cfg) {
                let removed = sol.open.iter().copied().filter(|&f| !out.is_open(f)).collect();
                let added = out.open.iter().copied().filter(|&f| !sol.is_open(f)).collect();
                return Ok(Some(Move { kind: MoveKind::Extend, removed, added, cost: c }));
            }
        }
    }
    Ok(None)
}

fn run<T: Scalar>(
    inst: &Instance<T>,
    init: &Solution<T>,
    cfg: &SearchConfig,
    family: MoveFamily,
) -> Result<SearchOutcome<T>, InstanceError> {
    let mut sol = inst.evaluate(&init.open)?;
    let mut log = Vec::new();
    while log.len() < cfg.move_budget {
        match find_move(inst, &sol, cfg, family)? {
            None => return Ok(SearchOutcome { solution: sol, log, budget_exhausted: false }),
            Some(mv) => {
                sol = inst.evaluate(&apply(&sol.open, &mv.removed, &mv.added))?;
                log.push(MoveRecord { step: log.len() + 1, mv });
            }
        }
    }
    let budget_exhausted = find_move(inst, &sol, cfg, family)?.is_some();
    Ok(SearchOutcome { solution: sol, log, budget_exhausted })
}

/// Swaps of at most `delta` facilities out and `delta` in.
pub fn swap_local_search<T: Scalar>(
    inst: &Instance<T>,
    init: &Solution<T>,
    cfg: &SearchConfig,
) -> Result<SearchOutcome<T>, InstanceError> {
    run(inst, init, cfg, MoveFamily::Swap)
}

/// LocalSearch-JMS: narrow swaps plus Extend-JMS moves.
pub fn localsearch_jms<T: Scalar>(
    inst: &Instance<T>,
    init: &Solution<T>,
    cfg: &SearchConfig,
) -> Result<SearchOutcome<T>, InstanceError> {
    run(inst, init, cfg, MoveFamily::JmsExtended)
}

/// `None` if `sol` is a local optimum, else the first improving move.
pub fn is_local_opt<T: Scalar>(
    inst: &Instance<T>,
    sol: &Solution<T>,
    cfg: &SearchConfig,
    family: MoveFamily,
) -> Result<Option<Move<T>>, InstanceError> {
    find_move(inst, sol, cfg, family)
}

/// A connected piece of the instance, with the original ids of its points.
#[derive(Debug, Clone)]
pub struct Component<T = f64> {
    pub facilities: Vec<usize>,
    pub clients: Vec<usize>,
    pub instance: Instance<T>,
}

/// Splits the instance along the graph of pairs at distance ≤ `eta`, and
/// contracts pairs closer than `eps·eta/n'²` inside each piece.
///
/// Pieces without clients are dropped.
pub fn preprocess_components<T: Scalar>(inst: &Instance<T>, eta: T, eps: T) -> Result<Vec<Component<T>>, InstanceError> {
    let (m, n) = (inst.m(), inst.n());
    let p = m + n;
    let mut parent: Vec<usize> = (0..p).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in 0..p {
        for b in a + 1..p {
            if inst.dist(a, b) <= eta {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for x in 0..p {
        let r = find(&mut parent, x);
        groups.entry(r).or_default().push(x);
    }
    let mut out = Vec::new();
    for pts in groups.into_values() {
        let facilities: Vec<usize> = pts.iter().copied().filter(|&x| x < m).collect();
        let clients: Vec<usize> = pts.iter().copied().filter(|&x| x >= m).map(|x| x - m).collect();
        if clients.is_empty() {
            continue;
        }
        if facilities.is_empty() {
            return Err(InstanceError::Dimension(format!("component of client {} has no facility", clients[0])));
        }
        let q = pts.len();
        let floor = eps * eta / T::usize(q * q);
        let mut d: Vec<Vec<T>> = pts
            .iter()
            .map(|&a| pts.iter().map(|&b| if inst.dist(a, b) < floor { T::zero() } else { inst.dist(a, b) }).collect())
            .collect();
        for k in 0..q {
            for i in 0..q {
                for j in 0..q {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        let costs = facilities.iter().map(|&f| inst.open_cost[f]).collect();
        let instance = Instance::from_matrix(costs, clients.len(), d)?;
        out.push(Component { facilities, clients, instance });
    }
    Ok(out)
}

/// Maps per-component open sets back to original ids and evaluates them together.
pub fn merge_components<T: Scalar>(
    inst: &Instance<T>,
    comps: &[Component<T>],
    opens: &[Vec<usize>],
) -> Result<Solution<T>, InstanceError> {
    let open: Vec<usize> = comps.iter().zip(opens).flat_map(|(c, o)| o.iter().map(|&f| c.facilities[f])).collect();
    inst.evaluate(&open)
}
