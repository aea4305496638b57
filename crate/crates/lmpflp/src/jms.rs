//! The JMS primal-dual algorithm, Extend-JMS and an exhaustive LMP checker.

use crate::instance::{brute_force_ufl, mask_to_set, Instance, InstanceError, Solution};
use crate::scalar::Scalar;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Event<T> {
    Open { t: T, f: usize, contributors: Vec<usize> },
    Connect { t: T, c: usize, f: usize },
}

impl<T: Scalar> Event<T> {
    pub fn time(&self) -> T {
        match self {
            Event::Open { t, .. } | Event::Connect { t, .. } => *t,
        }
    }
}

/// Dual values and the event log of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTrace<T = f64> {
    pub alpha: Vec<T>,
    pub events: Vec<Event<T>>,
    /// Per client: `(time, facility, distance)` of every (re)connection.
    pub witness_r: Vec<Vec<(T, usize, T)>>,
}

impl<T: Scalar> DualTrace<T> {
    pub fn dual_sum(&self) -> T {
        self.alpha.iter().copied().sum()
    }

    /// One event per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            let _ = match e {
                Event::Open { t, f, .. } => writeln!(s, "t={} open f={f}", t.f()),
                Event::Connect { t, c, f } => writeln!(s, "t={} connect c={c} f={f}", t.f()),
            };
        }
        s
    }
}

/// Runs JMS on `inst`.
pub fn jms_run<T: Scalar>(inst: &Instance<T>) -> (Solution<T>, DualTrace<T>) {
    jms_with_costs(inst, &inst.open_cost)
}

fn jms_with_costs<T: Scalar>(inst: &Instance<T>, cost: &[T]) -> (Solution<T>, DualTrace<T>) {
    let (m, n) = (inst.m(), inst.n());
    let scale = cost.iter().fold(inst.max_dist(), |a, &b| a.max(b)).max(T::one());
    let tol = T::of(1e-12) * scale;
    // clients sorted by distance, per facility
    let order: Vec<Vec<usize>> = (0..m)
        .map(|f| {
            let mut v: Vec<usize> = (0..n).collect();
            v.sort_by(|&a, &b| inst.d(a, f).partial_cmp(&inst.d(b, f)).unwrap().then(a.cmp(&b)));
            v
        })
        .collect();
    let mut active = vec![true; n];
    let mut n_active = n;
    let mut alpha = vec![T::zero(); n];
    let mut cur = vec![T::infinity(); n];
    let mut conn = vec![usize::MAX; n];
    let mut open = vec![false; m];
    let mut opened = Vec::new();
    let mut events = Vec::new();
    let mut witness: Vec<Vec<(T, usize, T)>> = vec![Vec::new(); n];
    let mut t = T::zero();

    while n_active > 0 {
        // earliest opening
        let mut best_open: Option<(T, usize)> = None;
        for f in (0..m).filter(|&f| !open[f]) {
            let w = cost[f];
            let mut fixed = T::zero();
            let mut positive = false;
            for j in (0..n).filter(|&j| !active[j]) {
                let o = cur[j] - inst.d(j, f);
                if o > tol {
                    fixed = fixed + o;
                    positive = true;
                }
            }
            let tau = if w <= T::zero() {
                if positive {
                    Some(t)
                } else {
                    order[f].iter().find(|&&j| active[j]).map(|&j| inst.d(j, f).max(t))
                }
            } else if fixed >= w - tol {
                Some(t)
            } else {
                // solve fixed + Σ_{d_j < τ} (τ - d_j) = w over active clients
                let need = w - fixed;
                let (mut k, mut sum_d) = (T::zero(), T::zero());
                let mut found = None;
                let act: Vec<T> = order[f].iter().filter(|&&j| active[j]).map(|&j| inst.d(j, f)).collect();
                for (i, &dj) in act.iter().enumerate() {
                    k = k + T::one();
                    sum_d = sum_d + dj;
                    let tau = (need + sum_d) / k;
                    let next = act.get(i + 1).copied().unwrap_or(T::infinity());
                    if tau <= next {
                        found = Some(tau.max(t));
                        break;
                    }
                }
                found
            };
            if let Some(tau) = tau {
                if best_open.map_or(true, |(b, _)| tau < b - tol) {
                    best_open = Some((tau, f));
                }
            }
        }
        // earliest connection to an open facility
        let mut best_conn: Option<(T, usize, usize)> = None;
        for j in (0..n).filter(|&j| active[j]) {
            for &f in &opened {
                let tj = inst.d(j, f).max(t);
                let better = match best_conn {
                    None => true,
                    Some((b, bj, bf)) => tj < b - tol || (tj <= b + tol && (f, j) < (bf, bj)),
                };
                if better {
                    best_conn = Some((tj, j, f));
                }
            }
        }
        let open_first = match (best_open, best_conn) {
            (Some((to, _)), Some((tc, _, _))) => to <= tc + tol,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!("active clients always have a pending event"),
        };
        if open_first {
            let (tau, f) = best_open.unwrap();
            t = t.max(tau);
            open[f] = true;
            opened.push(f);
            let mut contributors = Vec::new();
            for j in 0..n {
                let dj = inst.d(j, f);
                let offer = if active[j] { t - dj } else { cur[j] - dj };
                if offer > tol {
                    contributors.push(j);
                    if active[j] {
                        active[j] = false;
                        n_active -= 1;
                        alpha[j] = t;
                    }
                    cur[j] = dj;
                    conn[j] = f;
                    witness[j].push((t, f, dj));
                }
            }
            events.push(Event::Open { t, f, contributors });
        } else {
            let (tau, j, f) = best_conn.unwrap();
            t = t.max(tau);
            active[j] = false;
            n_active -= 1;
            alpha[j] = t;
            cur[j] = inst.d(j, f);
            conn[j] = f;
            witness[j].push((t, f, cur[j]));
            events.push(Event::Connect { t, c: j, f });
        }
    }
    let sol = inst.evaluate(&opened).expect("JMS opens at least one facility");
    (sol, DualTrace { alpha, events, witness_r: witness })
}

/// Result of Extend-JMS in both cost views.
#[derive(Debug, Clone)]
pub struct Extended<T = f64> {
    /// Priced with the original opening costs.
    pub solution: Solution<T>,
    /// Priced with the free set at zero cost.
    pub modified: Solution<T>,
    pub trace: DualTrace<T>,
}

/// Runs JMS with the facilities in `free` at zero opening cost.
pub fn extend_jms<T: Scalar>(inst: &Instance<T>, free: &[usize]) -> Result<Extended<T>, InstanceError> {
    let mut cost = inst.open_cost.clone();
    for &f in free {
        *cost.get_mut(f).ok_or(InstanceError::BadFacility(f))? = T::zero();
    }
    let (modified, trace) = jms_with_costs(inst, &cost);
    let facility_cost = modified.open.iter().map(|&f| cost[f]).sum();
    let modified = Solution { facility_cost, ..modified };
    let solution = inst.evaluate(&modified.open)?;
    Ok(Extended { solution, modified, trace })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmpReport<T = f64> {
    pub passed: bool,
    /// Largest `(cost(sol) - open(S*)) / d(S*)` over `S*` with `d(S*) > 0`.
    pub worst_ratio: T,
    pub witness: Vec<usize>,
    /// Some `S*` with `d(S*) = 0` and `open(S*) < cost(sol)`, if any.
    pub zero_distance_violation: Option<Vec<usize>>,
}

/// Checks `cost(sol) ≤ open(S*) + ratio·d(S*)` against every nonempty `S*`.
pub fn verify_lmp<T: Scalar>(inst: &Instance<T>, sol: &Solution<T>, ratio: T) -> Result<LmpReport<T>, InstanceError> {
    let (_, tab) = brute_force_ufl(inst, true)?;
    let tab = tab.expect("table requested");
    let cost = sol.cost();
    let tol = T::of(1e-9) * cost.abs().max(T::one());
    let mut worst = (T::neg_infinity(), 0usize);
    let mut zero = None;
    let mut passed = true;
    for mask in 1..tab.open.len() {
        let (o, d) = (tab.open[mask], tab.conn[mask]);
        if cost > o + ratio * d + tol {
            passed = false;
        }
        if d > tol {
            let r = (cost - o) / d;
            if r > worst.0 {
                worst = (r, mask);
            }
        } else if cost > o + tol && zero.is_none() {
            zero = Some(mask_to_set(mask as u64));
        }
    }
    Ok(LmpReport { passed, worst_ratio: worst.0, witness: mask_to_set(worst.1 as u64), zero_distance_violation: zero })
}
