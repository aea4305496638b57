//! Linear programming kernel: models, a two-phase revised simplex and
//! point feasibility checks.

mod lu;
mod simplex;

use crate::scalar::Scalar;
use std::fmt::Write as _;
use thiserror::Error;

pub use simplex::SolveStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint<T> {
    pub coeffs: Vec<(usize, T)>,
    pub rel: Relation,
    pub rhs: T,
}

/// `max c·x` subject to sparse rows, all variables nonnegative.
#[derive(Debug, Clone, Default)]
pub struct LpModel<T> {
    pub num_vars: usize,
    pub objective: Vec<(usize, T)>,
    pub constraints: Vec<Constraint<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult<T> {
    pub status: LpStatus,
    pub value: T,
    pub primal: Vec<T>,
    /// One multiplier per constraint; empty unless optimal.
    pub dual: Vec<T>,
    pub stats: SolveStats,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("numerical instability: residual {residual:e} exceeds tolerance {tol:e}")]
    Unstable { residual: f64, tol: f64 },
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
}

impl<T: Scalar> LpModel<T> {
    pub fn new(num_vars: usize) -> Self {
        LpModel { num_vars, objective: Vec::new(), constraints: Vec::new() }
    }

    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn le(&mut self, coeffs: Vec<(usize, T)>, rhs: T) -> usize {
        self.constraints.push(Constraint { coeffs, rel: Relation::Le, rhs });
        self.constraints.len() - 1
    }

    pub fn eq(&mut self, coeffs: Vec<(usize, T)>, rhs: T) -> usize {
        self.constraints.push(Constraint { coeffs, rel: Relation::Eq, rhs });
        self.constraints.len() - 1
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let check = |row: &[(usize, T)], what: &str| -> Result<(), LpError> {
            let mut seen = std::collections::HashSet::new();
            for &(j, v) in row {
                if j >= self.num_vars {
                    return Err(LpError::Malformed(format!("{what}: index {j} out of range")));
                }
                if !v.is_finite() {
                    return Err(LpError::Malformed(format!("{what}: non-finite coefficient")));
                }
                if !seen.insert(j) {
                    return Err(LpError::Malformed(format!("{what}: duplicate index {j}")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (i, c) in self.constraints.iter().enumerate() {
            check(&c.coeffs, &format!("row {i}"))?;
            if !c.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i}: non-finite rhs")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Plain-text listing, one constraint per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vars {}", self.num_vars);
        let _ = write!(s, "max");
        for &(j, c) in &self.objective {
            let _ = write!(s, " {j}:{c:e}");
        }
        s.push('\n');
        for c in &self.constraints {
            let rel = match c.rel {
                Relation::Le => "<=",
                Relation::Eq => "=",
            };
            let _ = write!(s, "{rel} {:e}", c.rhs);
            for &(j, v) in &c.coeffs {
                let _ = write!(s, " {j}:{v:e}");
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    /// Row index, or `None` for a negative variable.
    pub row: Option<usize>,
    pub var: Option<usize>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub passed: bool,
    pub max_residual: f64,
    pub violations: Vec<Violation>,
}

/// Lists every row (and sign constraint) violated by more than `tol`.
pub fn lp_check_point<T: Scalar>(model: &LpModel<T>, point: &[T], tol: f64) -> FeasibilityReport {
    assert_eq!(point.len(), model.num_vars, "point length must equal num_vars");
    let mut violations = Vec::new();
    let mut max_residual = 0.0f64;
    for (j, &x) in point.iter().enumerate() {
        let r = -x.f();
        if r > 0.0 {
            max_residual = max_residual.max(r);
        }
        if r > tol || x.is_nan() {
            violations.push(Violation { row: None, var: Some(j), residual: r });
        }
    }
    for (i, c) in model.constraints.iter().enumerate() {
        let lhs: f64 = c.coeffs.iter().map(|&(j, v)| v.f() * point[j].f()).sum();
        let r = match c.rel {
            Relation::Le => lhs - c.rhs.f(),
            Relation::Eq => (lhs - c.rhs.f()).abs(),
        };
        if r > 0.0 {
            max_residual = max_residual.max(r);
        }
        if r > tol || r.is_nan() {
            violations.push(Violation { row: Some(i), var: None, residual: r });
        }
    }
    FeasibilityReport { passed: violations.is_empty(), max_residual, violations }
}

/// Solves the model; `tol` bounds the accepted row residual of the optimum.
pub fn lp_solve<T: Scalar>(model: &LpModel<T>, tol: T) -> Result<LpResult<T>, LpError> {
    model.validate()?;
    simplex::solve(model, tol)
}
