//! Ordered preimage families of the cusp point.
//!
//! With T₁, T₂ the two branches and x₀ the cusp:
//!   a₀  = T₂⁻¹x₀,  a₀′ = T₁⁻¹x₀,
//!   a′_p = T₁⁻¹a′_{p−1}  (decreasing to 0),
//!   a_p  = T₂⁻¹a′_{p−1}  (increasing to 1),
//!   b_p  = T₂⁻¹a_{p−1} ∈ (x₀, a₀),  b′_p = T₁⁻¹a_{p−1} ∈ (a₀′, x₀),
//! so T b_p = T b′_p = a_{p−1}. These families delimit the inducing
//! interval I = (a₀′, a₀) and its first-return cylinders.

use super::{CuspError, IntervalMap};
use serde::{Deserialize, Serialize};

const INV_TOL: f64 = 1e-11;
const FWD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreimageLattice {
    pub x0: f64,
    /// a_p for p = 0..=depth (index = p).
    pub a: Vec<f64>,
    /// a′_p for p = 0..=depth (index = p).
    pub a_prime: Vec<f64>,
    /// b_p for p = 1..=depth (index = p − 1).
    pub b: Vec<f64>,
    /// b′_p for p = 1..=depth (index = p − 1).
    pub b_prime: Vec<f64>,
}

impl PreimageLattice {
    pub fn depth(&self) -> usize {
        self.b.len()
    }

    pub fn a0(&self) -> f64 {
        self.a[0]
    }

    pub fn a0_prime(&self) -> f64 {
        self.a_prime[0]
    }

    pub fn a(&self, p: usize) -> f64 {
        self.a[p]
    }

    pub fn a_prime(&self, p: usize) -> f64 {
        self.a_prime[p]
    }

    /// b_p, p ≥ 1.
    pub fn b(&self, p: usize) -> f64 {
        self.b[p - 1]
    }

    /// b′_p, p ≥ 1.
    pub fn b_prime(&self, p: usize) -> f64 {
        self.b_prime[p - 1]
    }
}

/// Build the lattice to the requested depth by repeated branch inversion,
/// asserting the orderings and the defining forward relations.
pub fn build_lattice(map: &impl IntervalMap, depth: usize) -> Result<PreimageLattice, CuspError> {
    if depth < 3 {
        return Err(CuspError::InvalidParameter(format!("lattice depth {depth} < 3")));
    }
    let x0 = map.split();
    let mut a = Vec::with_capacity(depth + 1);
    let mut a_prime = Vec::with_capacity(depth + 1);
    a.push(map.invert_right(x0, INV_TOL));
    a_prime.push(map.invert_left(x0, INV_TOL));
    for p in 1..=depth {
        a_prime.push(map.invert_left(a_prime[p - 1], INV_TOL));
        a.push(map.invert_right(a_prime[p - 1], INV_TOL));
    }
    let mut b = Vec::with_capacity(depth);
    let mut b_prime = Vec::with_capacity(depth);
    for p in 1..=depth {
        b.push(map.invert_right(a[p - 1], INV_TOL));
        b_prime.push(map.invert_left(a[p - 1], INV_TOL));
    }

    let lat = PreimageLattice { x0, a, a_prime, b, b_prime };
    check_orderings(&lat)?;
    check_forward_relations(map, &lat)?;
    Ok(lat)
}

fn check_orderings(l: &PreimageLattice) -> Result<(), CuspError> {
    let fail = |msg: String| Err(CuspError::LatticeInconsistency(msg));
    if !(l.a0_prime() < l.x0 && l.x0 < l.a0()) {
        return fail(format!("a0' {} < x0 {} < a0 {} violated", l.a0_prime(), l.x0, l.a0()));
    }
    for p in 1..l.a_prime.len() {
        if !(l.a_prime[p] < l.a_prime[p - 1] && l.a_prime[p] > 0.0) {
            return fail(format!("a'_p not strictly decreasing to 0 at p = {p}"));
        }
        if !(l.a[p] > l.a[p - 1] && l.a[p] < 1.0) {
            return fail(format!("a_p not strictly increasing to 1 at p = {p}"));
        }
    }
    for i in 0..l.b.len() {
        if !(l.b[i] > l.x0 && l.b[i] < l.a0()) {
            return fail(format!("b_{} outside (x0, a0)", i + 1));
        }
        if !(l.b_prime[i] < l.x0 && l.b_prime[i] > l.a0_prime()) {
            return fail(format!("b'_{} outside (a0', x0)", i + 1));
        }
        if i > 0 && !(l.b[i] < l.b[i - 1] && l.b_prime[i] > l.b_prime[i - 1]) {
            return fail(format!("b families not monotone towards x0 at p = {}", i + 1));
        }
    }
    Ok(())
}

fn check_forward_relations(map: &impl IntervalMap, l: &PreimageLattice) -> Result<(), CuspError> {
    let fail = |what: &str, p: usize, res: f64| {
        Err(CuspError::LatticeInconsistency(format!(
            "forward relation {what} fails at p = {p}: residual {res:.2e}"
        )))
    };
    let r0 = (map.eval(l.a0()) - l.x0).abs();
    if r0 > FWD_TOL {
        return fail("T(a0) = x0", 0, r0);
    }
    let r1 = (map.eval(l.a0_prime()) - l.x0).abs();
    if r1 > FWD_TOL {
        return fail("T(a0') = x0", 0, r1);
    }
    for p in 1..l.a_prime.len() {
        let r = (map.eval(l.a_prime[p]) - l.a_prime[p - 1]).abs();
        if r > FWD_TOL {
            return fail("T(a'_p) = a'_{p-1}", p, r);
        }
        let r = (map.eval(l.a[p]) - l.a_prime[p - 1]).abs();
        if r > FWD_TOL {
            return fail("T(a_p) = a'_{p-1}", p, r);
        }
    }
    for p in 1..=l.b.len() {
        let r = (map.eval(l.b(p)) - l.a(p - 1)).abs();
        if r > FWD_TOL {
            return fail("T(b_p) = a_{p-1}", p, r);
        }
        let r = (map.eval(l.b_prime(p)) - l.a(p - 1)).abs();
        if r > FWD_TOL {
            return fail("T(b'_p) = a_{p-1}", p, r);
        }
    }
    Ok(())
}
