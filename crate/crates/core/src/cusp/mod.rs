//! The two-branch cusp map T of the interval.
//!
//! T has an increasing branch on [0, x₀] and a decreasing branch on
//! [x₀, 1], both onto [0,1], with the derivative blowing up at the cusp
//! x₀ and prescribed power-law behaviors at 0, 1 and on both sides of x₀.
//! Two representations share one interface: a closed-form analytic family
//! (the test oracle) and empirical fits built from normalized
//! successive-maxima pairs.

mod analytic;
mod empirical;
mod exponents;
mod lattice;
mod lemma1;

pub use analytic::AnalyticFamily;
pub use empirical::{build_empirical, EmpiricalMap, Pchip};
pub use exponents::{fit_exponents, ExponentFit, FitWindow, LocalExponents};
pub use lattice::{build_lattice, PreimageLattice};
pub use lemma1::{check_lemma1, Lemma1Report};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CuspError {
    #[error("{0} outside the unit interval")]
    DomainError(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empirical fit failed: {0}")]
    FitFailure(String),
    #[error("need at least {need} pairs, got {got}")]
    TooFewPairs { need: usize, got: usize },
    #[error("preimage lattice inconsistent: {0}")]
    LatticeInconsistency(String),
    #[error("lattice depth {depth} too shallow, need {need}")]
    DepthError { depth: usize, need: usize },
}

/// A piecewise-monotone interval map with two full branches. The left
/// branch lives on [0, split], the right on [split, 1]; both are onto
/// [0, 1]. Evaluation outside [0,1] is a caller bug.
pub trait IntervalMap {
    /// Branch boundary.
    fn split(&self) -> f64;

    /// Map value at x ∈ [0,1].
    fn eval(&self, x: f64) -> f64;

    /// Derivative at x; ±∞ where it blows up (the cusp itself reports the
    /// left limit, +∞).
    fn deriv(&self, x: f64) -> f64;

    /// Preimage of y under the left branch, in [0, split].
    fn invert_left(&self, y: f64, tol: f64) -> f64;

    /// Preimage of y under the right branch, in [split, 1].
    fn invert_right(&self, y: f64, tol: f64) -> f64;
}

/// Which monotone branch of the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Left,
    Right,
}

/// Representation-tagged cusp map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "representation", rename_all = "snake_case")]
pub enum CuspMap {
    Analytic(AnalyticFamily),
    Empirical(EmpiricalMap),
}

impl CuspMap {
    pub fn x0(&self) -> f64 {
        match self {
            CuspMap::Analytic(m) => m.x0,
            CuspMap::Empirical(m) => m.x0,
        }
    }

    /// Checked evaluation; errors outside [0,1].
    pub fn try_eval(&self, x: f64) -> Result<f64, CuspError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(CuspError::DomainError(x));
        }
        Ok(self.eval(x))
    }

    /// Checked derivative; errors outside [0,1]. Returns a signed-infinity
    /// sentinel at the cusp.
    pub fn try_deriv(&self, x: f64) -> Result<f64, CuspError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(CuspError::DomainError(x));
        }
        Ok(self.deriv(x))
    }

    /// Preimage on the requested branch with |T(x*) − y| < tol.
    ///
    /// Near y = 1 the achievable residual is limited by the cusp: one ulp
    /// in x moves T by O(|DT|·ε), so the residual floor there is
    /// O(ε^B) even though x* itself is exact to machine precision.
    pub fn invert_branch(&self, branch: Branch, y: f64, tol: f64) -> Result<f64, CuspError> {
        if !(0.0..=1.0).contains(&y) {
            return Err(CuspError::DomainError(y));
        }
        Ok(match branch {
            Branch::Left => self.invert_left(y, tol),
            Branch::Right => self.invert_right(y, tol),
        })
    }
}

impl IntervalMap for CuspMap {
    fn split(&self) -> f64 {
        self.x0()
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            CuspMap::Analytic(m) => m.eval(x),
            CuspMap::Empirical(m) => m.eval(x),
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match self {
            CuspMap::Analytic(m) => m.deriv(x),
            CuspMap::Empirical(m) => m.deriv(x),
        }
    }

    fn invert_left(&self, y: f64, tol: f64) -> f64 {
        match self {
            CuspMap::Analytic(m) => m.invert_left(y, tol),
            CuspMap::Empirical(m) => m.invert_left(y, tol),
        }
    }

    fn invert_right(&self, y: f64, tol: f64) -> f64 {
        match self {
            CuspMap::Analytic(m) => m.invert_right(y, tol),
            CuspMap::Empirical(m) => m.invert_right(y, tol),
        }
    }
}

/// Residual-driven bisection for a monotone branch: finds x in [lo, hi]
/// with |f(x) − y| < tol, where `increasing` states the branch direction.
pub(crate) fn invert_monotone(
    f: impl Fn(f64) -> f64,
    y: f64,
    mut lo: f64,
    mut hi: f64,
    increasing: bool,
    tol: f64,
) -> f64 {
    let mut best = 0.5 * (lo + hi);
    let mut best_res = f64::INFINITY;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        let res = (fm - y).abs();
        if res < best_res {
            best_res = res;
            best = m;
        }
        if res < tol || m <= lo || m >= hi {
            return best;
        }
        let go_right = if increasing { fm < y } else { fm > y };
        if go_right {
            lo = m;
        } else {
            hi = m;
        }
    }
    best
}

/// Shared construction-time validation: endpoint values and strict branch
/// monotonicity on a fine grid.
pub(crate) fn validate_cusp_shape(
    map: &impl IntervalMap,
    label: &str,
) -> Result<(), CuspError> {
    let x0 = map.split();
    if !(0.0 < x0 && x0 < 1.0) {
        return Err(CuspError::InvalidParameter(format!("{label}: cusp {x0} not in (0,1)")));
    }
    let checks = [
        (map.eval(0.0), 0.0, "T(0)"),
        (map.eval(x0), 1.0, "T(x0)"),
        (map.eval(1.0), 0.0, "T(1)"),
    ];
    for (got, want, what) in checks {
        if (got - want).abs() > 1e-9 {
            return Err(CuspError::InvalidParameter(format!(
                "{label}: {what} = {got}, expected {want}"
            )));
        }
    }
    const GRID: usize = 10_000;
    let mut prev = map.eval(0.0);
    for i in 1..=GRID {
        let x = x0 * i as f64 / GRID as f64;
        let v = map.eval(x);
        if !(v > prev) {
            return Err(CuspError::InvalidParameter(format!(
                "{label}: left branch not strictly increasing near x = {x}"
            )));
        }
        prev = v;
    }
    let mut prev = map.eval(x0);
    for i in 1..=GRID {
        let x = x0 + (1.0 - x0) * i as f64 / GRID as f64;
        let v = map.eval(x);
        if !(v < prev) {
            return Err(CuspError::InvalidParameter(format!(
                "{label}: right branch not strictly decreasing near x = {x}"
            )));
        }
        prev = v;
    }
    Ok(())
}
