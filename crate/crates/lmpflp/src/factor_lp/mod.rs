//! Factor-revealing programs, their solution transforms, the analytic
//! bound and the discretized dual witness.

mod analytic;
mod dual;
mod eta;
mod model;
mod transform;

pub use model::{build_lp, opt_jms, opt_plus, solve_factor, FactorError, FactorLpPoint, IndexMap, Variant};
pub use transform::{aggregate_solution, lift_solution};
pub use analytic::{analytic_bound, analytic_value, corollary_bound, m_integral_form, m_minus_one, v_of_z};
pub use dual::{discrete_dual, DualWitness};
pub use eta::{
    default_t_grid, eta1_search, eta2_search, eta_general_fl, eta_general_fl_max, opt_plus_cached, rho_a, scan_max, t_1, t_l, Eta1Point,
    Eta2Point, PlusCurve, RhoEval,
};
