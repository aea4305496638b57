use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point type the solvers and models are generic over.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Pivot magnitude below which a simplex entry counts as zero.
    const PIVOT_TOL: f64;
    /// Primal / dual feasibility tolerance used inside the simplex.
    const FEAS_TOL: f64;
    /// Relative tolerance for event-time comparisons.
    const TIME_TOL: f64;
    /// Significant digits emitted by serializers.
    const DIGITS: usize;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    fn f(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn usize(n: usize) -> Self {
        Self::from_usize(n).expect("representable count")
    }
}

impl Scalar for f64 {
    const PIVOT_TOL: f64 = 1e-9;
    const FEAS_TOL: f64 = 1e-9;
    const TIME_TOL: f64 = 1e-12;
    const DIGITS: usize = 17;
}

impl Scalar for f32 {
    const PIVOT_TOL: f64 = 1e-5;
    const FEAS_TOL: f64 = 1e-4;
    const TIME_TOL: f64 = 1e-6;
    const DIGITS: usize = 9;
}
