//! Facility location instances, the FLP v1 text format, generators and
//! exhaustive oracles.

use crate::scalar::Scalar;
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("facility {0} has negative opening cost")]
    NegativeCost(usize),
    #[error("non-metric: d({0},{1}) exceeds d({0},{2}) + d({2},{1}) by {3:e}")]
    NonMetric(usize, usize, usize, f64),
    #[error("asymmetric matrix at ({0},{1})")]
    Asymmetric(usize, usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("open set is empty")]
    EmptyOpenSet,
    #[error("facility id {0} out of range")]
    BadFacility(usize),
    #[error("enumeration too large: {0}")]
    TooLarge(String),
}

/// How distances were specified.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric<T> {
    Explicit,
    Euclidean { dim: usize, coords: Vec<Vec<T>> },
}

/// Facilities `0..m`, clients `m..m+n`; `dist` is the full symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T = f64> {
    pub open_cost: Vec<T>,
    pub n_clients: usize,
    pub metric: Metric<T>,
    dist: Vec<T>,
}

/// An open set with its canonical nearest-facility assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T = f64> {
    /// Sorted facility ids.
    pub open: Vec<usize>,
    /// Facility serving each client (client index `0..n`).
    pub assign: Vec<usize>,
    pub facility_cost: T,
    pub connection_cost: T,
    pub per_client: Vec<T>,
}

impl<T: Scalar> Solution<T> {
    pub fn cost(&self) -> T {
        self.facility_cost + self.connection_cost
    }

    pub fn k(&self) -> usize {
        self.open.len()
    }

    pub fn is_open(&self, f: usize) -> bool {
        self.open.binary_search(&f).is_ok()
    }

    /// Clients served by `f`.
    pub fn clients_of(&self, f: usize) -> Vec<usize> {
        (0..self.assign.len()).filter(|&c| self.assign[c] == f).collect()
    }
}

impl<T: Scalar> Instance<T> {
    /// Builds an instance from an explicit matrix over facilities ∪ clients.
    pub fn from_matrix(open_cost: Vec<T>, n_clients: usize, dist: Vec<Vec<T>>) -> Result<Self, InstanceError> {
        let p = open_cost.len() + n_clients;
        if open_cost.is_empty() || n_clients == 0 {
            return Err(InstanceError::Dimension("need m ≥ 1 and n ≥ 1".into()));
        }
        if dist.len() != p || dist.iter().any(|r| r.len() != p) {
            return Err(InstanceError::Dimension(format!("matrix must be {p}×{p}")));
        }
        if let Some(f) = open_cost.iter().position(|&c| !(c >= T::zero())) {
            return Err(InstanceError::NegativeCost(f));
        }
        let scale = dist.iter().flatten().fold(T::zero(), |a, &b| a.max(b.abs()));
        let sym_tol = T::of(1e-12) * scale;
        let mut flat = vec![T::zero(); p * p];
        for i in 0..p {
            for j in 0..p {
                let (a, b) = (dist[i][j], dist[j][i]);
                if !a.is_finite() || a < T::zero() {
                    return Err(InstanceError::Dimension(format!("bad distance at ({i},{j})")));
                }
                if (a - b).abs() > sym_tol {
                    return Err(InstanceError::Asymmetric(i, j));
                }
                flat[i * p + j] = if i == j { T::zero() } else { (a + b) / T::of(2.0) };
            }
        }
        Ok(Instance { open_cost, n_clients, metric: Metric::Explicit, dist: flat })
    }

    pub fn from_coords(open_cost: Vec<T>, n_clients: usize, dim: usize, coords: Vec<Vec<T>>) -> Result<Self, InstanceError> {
        let m = open_cost.len();
        let p = m + n_clients;
        if m == 0 || n_clients == 0 {
            return Err(InstanceError::Dimension("need m ≥ 1 and n ≥ 1".into()));
        }
        if coords.len() != p || coords.iter().any(|c| c.len() != dim) {
            return Err(InstanceError::Dimension(format!("expected {p} points of dimension {dim}")));
        }
        if let Some(f) = open_cost.iter().position(|&c| !(c >= T::zero())) {
            return Err(InstanceError::NegativeCost(f));
        }
        let mut dist = vec![T::zero(); p * p];
        for i in 0..p {
            for j in i + 1..p {
                let d = coords[i].iter().zip(&coords[j]).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
                dist[i * p + j] = d;
                dist[j * p + i] = d;
            }
        }
        Ok(Instance { open_cost, n_clients, metric: Metric::Euclidean { dim, coords }, dist })
    }

    pub fn m(&self) -> usize {
        self.open_cost.len()
    }

    pub fn n(&self) -> usize {
        self.n_clients
    }

    fn points(&self) -> usize {
        self.m() + self.n_clients
    }

    /// Distance between two points (facility ids first, then clients).
    pub fn dist(&self, a: usize, b: usize) -> T {
        self.dist[a * self.points() + b]
    }

    /// Distance from client `c` (0-based) to facility `f`.
    #[inline]
    pub fn d(&self, c: usize, f: usize) -> T {
        self.dist[(self.m() + c) * self.points() + f]
    }

    /// Facility–facility distance.
    pub fn ff(&self, f: usize, g: usize) -> T {
        self.dist[f * self.points() + g]
    }

    pub fn max_dist(&self) -> T {
        self.dist.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    pub fn uniform_cost(&self) -> bool {
        self.open_cost.iter().all(|&c| c == self.open_cost[0])
    }

    pub fn with_costs(&self, open_cost: Vec<T>) -> Self {
        assert_eq!(open_cost.len(), self.m());
        Instance { open_cost, ..self.clone() }
    }

    /// Checks the triangle inequality with tolerance `1e-9·maxdist`.
    pub fn validate_metric(&self) -> Result<(), InstanceError> {
        let p = self.points();
        let tol = T::of(1e-9) * self.max_dist();
        for k in 0..p {
            for i in 0..p {
                let dik = self.dist(i, k);
                for j in 0..p {
                    let excess = self.dist(i, j) - (dik + self.dist(k, j));
                    if excess > tol {
                        return Err(InstanceError::NonMetric(i, j, k, excess.f()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical evaluation of an open set: nearest facility, ties to the lowest id.
    pub fn evaluate(&self, open: &[usize]) -> Result<Solution<T>, InstanceError> {
        let mut open: Vec<usize> = open.to_vec();
        open.sort_unstable();
        open.dedup();
        if open.is_empty() {
            return Err(InstanceError::EmptyOpenSet);
        }
        if let Some(&f) = open.iter().find(|&&f| f >= self.m()) {
            return Err(InstanceError::BadFacility(f));
        }
        let mut assign = Vec::with_capacity(self.n());
        let mut per_client = Vec::with_capacity(self.n());
        for c in 0..self.n() {
            let mut best = open[0];
            let mut bd = self.d(c, best);
            for &f in &open[1..] {
                let d = self.d(c, f);
                if d < bd {
                    bd = d;
                    best = f;
                }
            }
            assign.push(best);
            per_client.push(bd);
        }
        let facility_cost = open.iter().map(|&f| self.open_cost[f]).sum();
        let connection_cost = per_client.iter().copied().sum();
        Ok(Solution { open, assign, facility_cost, connection_cost, per_client })
    }

    /// Connection cost of an open set given as a bit mask.
    pub fn conn_of_mask(&self, mask: u64) -> T {
        (0..self.n())
            .map(|c| {
                (0..self.m()).filter(|&f| mask >> f & 1 == 1).map(|f| self.d(c, f)).fold(T::infinity(), T::min)
            })
            .sum()
    }

    pub fn open_of_mask(&self, mask: u64) -> T {
        (0..self.m()).filter(|&f| mask >> f & 1 == 1).map(|f| self.open_cost[f]).sum()
    }
}

pub fn mask_to_set(mask: u64) -> Vec<usize> {
    (0..64).filter(|&f| mask >> f & 1 == 1).collect()
}

pub fn set_to_mask(set: &[usize]) -> u64 {
    set.iter().fold(0u64, |m, &f| m | 1 << f)
}

/// Costs of every nonempty subset, indexed by bit mask (entry 0 unused).
#[derive(Debug, Clone)]
pub struct SubsetTable<T = f64> {
    pub m: usize,
    pub open: Vec<T>,
    pub conn: Vec<T>,
}

pub const MAX_ENUM_FACILITIES: usize = 22;

/// Exhaustive UFL optimum; with `table`, also every subset's cost split.
pub fn brute_force_ufl<T: Scalar>(inst: &Instance<T>, table: bool) -> Result<(Solution<T>, Option<SubsetTable<T>>), InstanceError> {
    let m = inst.m();
    if m > MAX_ENUM_FACILITIES {
        return Err(InstanceError::TooLarge(format!("m = {m} > {MAX_ENUM_FACILITIES}")));
    }
    let n = inst.n();
    let full = 1usize << m;
    // best[c] for the mask with its lowest bit removed, kept per mask
    let mut near = vec![T::zero(); if table || m <= 16 { full * n } else { 0 }];
    let mut open_tab = vec![T::zero(); full];
    let mut conn_tab = vec![T::zero(); full];
    let mut best: Option<(T, usize)> = None;
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let (o, d) = if !near.is_empty() {
            let mut d = T::zero();
            for c in 0..n {
                let v = if rest == 0 { inst.d(c, low) } else { near[rest * n + c].min(inst.d(c, low)) };
                near[mask * n + c] = v;
                d = d + v;
            }
            (open_tab[rest] + inst.open_cost[low], d)
        } else {
            (inst.open_of_mask(mask as u64), inst.conn_of_mask(mask as u64))
        };
        open_tab[mask] = o;
        conn_tab[mask] = d;
        let cost = o + d;
        if best.map_or(true, |(b, _)| cost < b) {
            best = Some((cost, mask));
        }
    }
    let (_, mask) = best.expect("m ≥ 1");
    let sol = inst.evaluate(&mask_to_set(mask as u64))?;
    let tab = table.then(|| SubsetTable { m, open: open_tab, conn: conn_tab });
    Ok((sol, tab))
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exhaustive k-median: minimizes connection cost over `|S| = k`.
pub fn brute_force_kmedian<T: Scalar>(inst: &Instance<T>, k: usize) -> Result<Solution<T>, InstanceError> {
    let m = inst.m();
    if k == 0 || k > m {
        return Err(InstanceError::Dimension(format!("k = {k} outside 1..={m}")));
    }
    if binom(m, k) > 2e6 {
        return Err(InstanceError::TooLarge(format!("C({m},{k}) > 2e6")));
    }
    let mut best: Option<(T, Vec<usize>)> = None;
    for set in (0..m).combinations(k) {
        let d: T = (0..inst.n()).map(|c| set.iter().map(|&f| inst.d(c, f)).fold(T::infinity(), T::min)).sum();
        if best.as_ref().map_or(true, |(b, _)| d < *b) {
            best = Some((d, set));
        }
    }
    inst.evaluate(&best.expect("k ≤ m").1)
}

/// Opening-cost law for generated instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostLaw {
    Uniform(f64),
    Range(f64, f64),
}

/// i.i.d. uniform points in `[0,1]^dim`, deterministic in `seed`.
pub fn gen_euclidean<T: Scalar>(seed: u64, m: usize, n: usize, dim: usize, law: CostLaw) -> Result<Instance<T>, InstanceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Vec<T>> = (0..m + n).map(|_| (0..dim).map(|_| T::of(rng.gen::<f64>())).collect()).collect();
    let costs = (0..m)
        .map(|_| match law {
            CostLaw::Uniform(l) => T::of(l),
            CostLaw::Range(lo, hi) => T::of(rng.gen_range(lo..=hi)),
        })
        .collect();
    Instance::from_coords(costs, n, dim, coords)
}

/// Parameters of the local-search trap instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LsTrap<T = f64> {
    pub instance: Instance<T>,
    pub n: usize,
    pub x: f64,
    pub y: f64,
    /// `{f₀}`.
    pub s: Vec<usize>,
    /// `{f₁, …, f_n}`.
    pub opt: Vec<usize>,
}

/// Builds the trap instance for width `delta` and objective `α·open + β·d`.
///
/// Facility `0` is `f₀`, facility `i` is co-located with client `i−1`.
pub fn gen_ls_counterexample<T: Scalar>(delta: usize, alpha: f64, beta: f64) -> Result<LsTrap<T>, InstanceError> {
    if delta == 0 || !(alpha > 0.0) || !(beta > 0.0) {
        return Err(InstanceError::Dimension("need Δ ≥ 1 and α, β > 0".into()));
    }
    let b = beta / alpha;
    let y = b + b.min(1.0) / 2.0;
    for n in delta + 1..=1_000_000usize {
        let lo = (n as f64 * (y - 1.0)).max(0.0);
        let hi = (1..=delta).map(|r| r as f64 * y + b * (n as f64 - 2.0 * r as f64)).fold(f64::INFINITY, f64::min);
        if hi - lo > 1e-6 * (1.0 + hi.abs()) {
            let x = 0.5 * (lo + hi);
            let ok = y > b
                && (1..=delta).all(|r| alpha * (x - r as f64 * y) < beta * (n as f64 - 2.0 * r as f64))
                && (n as f64) * y < x + n as f64
                && x > 0.0;
            if !ok {
                continue;
            }
            let m = n + 1;
            let p = m + n;
            let mut dist = vec![vec![T::zero(); p]; p];
            let set = |dist: &mut Vec<Vec<T>>, a: usize, c: usize, v: f64| {
                dist[a][c] = T::of(v);
                dist[c][a] = T::of(v);
            };
            for i in 1..=n {
                set(&mut dist, 0, i, 1.0);
                set(&mut dist, 0, m + i - 1, 1.0);
                for j in 1..=n {
                    set(&mut dist, i, m + j - 1, if i == j { 0.0 } else { 2.0 });
                    if j > i {
                        set(&mut dist, i, j, 2.0);
                        set(&mut dist, m + i - 1, m + j - 1, 2.0);
                    }
                }
            }
            let mut costs = vec![T::of(y); m];
            costs[0] = T::of(x);
            let instance = Instance::from_matrix(costs, n, dist)?;
            return Ok(LsTrap { instance, n, x, y, s: vec![0], opt: (1..=n).collect() });
        }
    }
    Err(InstanceError::TooLarge("no n ≤ 10^6 satisfies the trap inequalities".into()))
}

fn fmt_num<T: Scalar>(v: T) -> String {
    format!("{:.*e}", T::DIGITS - 1, v)
}

/// Serializes to FLP v1.
pub fn serialize_instance<T: Scalar>(inst: &Instance<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "flp 1");
    let _ = writeln!(s, "facilities {}", inst.m());
    for (f, &c) in inst.open_cost.iter().enumerate() {
        let _ = writeln!(s, "{f} {}", fmt_num(c));
    }
    let _ = writeln!(s, "clients {}", inst.n());
    match &inst.metric {
        Metric::Explicit => {
            let _ = writeln!(s, "metric explicit");
            let p = inst.points();
            for i in 0..p {
                let row: Vec<String> = (0..p).map(|j| fmt_num(inst.dist(i, j))).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
        Metric::Euclidean { dim, coords } => {
            let _ = writeln!(s, "metric euclidean {dim}");
            for c in coords {
                let row: Vec<String> = c.iter().map(|&v| fmt_num(v)).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
    }
    s
}

struct Lines<'a> {
    it: std::iter::Peekable<Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect::<Vec<_>>()))
                .filter(|(_, t)| !t.is_empty()),
        );
        Lines { it: it.peekable(), last: 0 }
    }

    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), InstanceError> {
        match self.it.next() {
            Some((n, t)) => {
                self.last = n;
                Ok((n, t))
            }
            None => Err(InstanceError::Syntax { line: self.last + 1, msg: format!("unexpected end of input, expected {what}") }),
        }
    }
}

fn num<T: Scalar>(tok: &str, line: usize) -> Result<T, InstanceError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(T::of)
        .ok_or_else(|| InstanceError::Syntax { line, msg: format!("bad number {tok:?}") })
}

fn count(tok: Option<&&str>, line: usize) -> Result<usize, InstanceError> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| InstanceError::Syntax { line, msg: "expected a count".into() })
}

fn header<'a>(lines: &mut Lines<'a>, key: &str) -> Result<(usize, Vec<&'a str>), InstanceError> {
    let (ln, t) = lines.next(key)?;
    if t[0] != key {
        return Err(InstanceError::Syntax { line: ln, msg: format!("expected `{key}`, found {:?}", t[0]) });
    }
    Ok((ln, t))
}

/// Parses FLP v1; `validate` additionally checks the triangle inequality.
pub fn parse_instance<T: Scalar>(text: &str, validate: bool) -> Result<Instance<T>, InstanceError> {
    let mut lines = Lines::new(text);
    let (ln, t) = header(&mut lines, "flp")?;
    if t.get(1) != Some(&"1") || t.len() != 2 {
        return Err(InstanceError::Syntax { line: ln, msg: "expected `flp 1`".into() });
    }
    let (ln, t) = header(&mut lines, "facilities")?;
    let m = count(t.get(1), ln)?;
    let mut costs = Vec::with_capacity(m);
    for f in 0..m {
        let (ln, t) = lines.next("facility line")?;
        if t.len() != 2 || t[0].parse::<usize>().ok() != Some(f) {
            return Err(InstanceError::Syntax { line: ln, msg: format!("expected `{f} <cost>`") });
        }
        let c: T = num(t[1], ln)?;
        if c < T::zero() {
            return Err(InstanceError::NegativeCost(f));
        }
        costs.push(c);
    }
    let (ln, t) = header(&mut lines, "clients")?;
    let n = count(t.get(1), ln)?;
    let (ln, t) = header(&mut lines, "metric")?;
    let p = m + n;
    let inst = match (t.get(1).copied(), t.len()) {
        (Some("explicit"), 2) => {
            let mut rows = Vec::with_capacity(p);
            for _ in 0..p {
                let (ln, t) = lines.next("matrix row")?;
                if t.len() != p {
                    return Err(InstanceError::Syntax { line: ln, msg: format!("expected {p} entries, found {}", t.len()) });
                }
                rows.push(t.iter().map(|s| num(s, ln)).collect::<Result<Vec<T>, _>>()?);
            }
            Instance::from_matrix(costs, n, rows)?
        }
        (Some("euclidean"), 3) => {
            let dim = count(t.get(2), ln)?;
            let mut pts = Vec::with_capacity(p);
            for _ in 0..p {
                let (ln, t) = lines.next("coordinate row")?;
                if t.len() != dim {
                    return Err(InstanceError::Syntax { line: ln, msg: format!("expected {dim} coordinates") });
                }
                pts.push(t.iter().map(|s| num(s, ln)).collect::<Result<Vec<T>, _>>()?);
            }
            Instance::from_coords(costs, n, dim, pts)?
        }
        _ => return Err(InstanceError::Syntax { line: ln, msg: "expected `metric explicit` or `metric euclidean <dim>`".into() }),
    };
    if let Some((ln, _)) = lines.it.next() {
        return Err(InstanceError::Syntax { line: ln, msg: "trailing content".into() });
    }
    if validate {
        inst.validate_metric()?;
    }
    Ok(inst)
}
