//! Numerical verification that the first-return maps are uniformly
//! expanding: the three finite checks that bound |D(T^τ)| below away
//! from a prescribed margin on every cylinder.
//!
//! With d = inf |DT| over (b₁, a₀) and a margin 1 < m ≤ min(d, α′):
//!   (i)   d > 1;
//!   (ii)  |DT(b₁)| ≥ DT(a₀′);
//!   (iii) |DT(a_{p−1})|·DT(a_{p−2}′)···DT(a₀′) > m for every
//!         p ≤ p* = ⌊1 + log(m/α)/log α′⌋
//! (beyond p* the chain is automatically expanding because every factor
//! DT(a′_k) exceeds α′ and |DT(a_{p−1})| exceeds α).

use super::{CuspError, IntervalMap, LocalExponents, PreimageLattice};
use crate::numeric::golden_min;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Report {
    /// inf of |DT| over (b₁, a₀).
    pub d_10: f64,
    /// Expansion margin the chains are checked against.
    pub alpha_double_prime: f64,
    /// Largest return time that needs an explicit chain check.
    pub p_star: usize,
    pub check_i: bool,
    pub check_ii: bool,
    pub check_iii: bool,
    /// |DT(b₁)| and DT(a₀′) entering check (ii).
    pub dt_b1: f64,
    pub dt_a0_prime: f64,
    /// The chain products for p = 2..=p*.
    pub chain_products: Vec<f64>,
}

impl Lemma1Report {
    pub fn all_pass(&self) -> bool {
        self.check_i && self.check_ii && self.check_iii
    }
}

/// Grid scan plus golden-section refinement of inf |DT| over (lo, hi).
fn inf_abs_deriv(map: &impl IntervalMap, lo: f64, hi: f64) -> f64 {
    const SCAN: usize = 400;
    let f = |x: f64| map.deriv(x).abs();
    let mut best_x = lo;
    let mut best = f64::INFINITY;
    for i in 1..SCAN {
        let x = lo + (hi - lo) * i as f64 / SCAN as f64;
        let v = f(x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    let h = (hi - lo) / SCAN as f64;
    let (_, v) = golden_min(f, (best_x - h).max(lo), (best_x + h).min(hi), 1e-8);
    v.min(best)
}

pub fn check_lemma1(
    map: &impl IntervalMap,
    exps: &LocalExponents,
    lattice: &PreimageLattice,
    alpha_double_prime: f64,
) -> Result<Lemma1Report, CuspError> {
    let d_10 = inf_abs_deriv(map, lattice.b(1), lattice.a0());
    exps.validate()?;
    if !(alpha_double_prime > 1.0) {
        return Err(CuspError::InvalidParameter(format!(
            "expansion margin {alpha_double_prime} must exceed 1"
        )));
    }
    if alpha_double_prime > d_10.min(exps.alpha_prime) {
        return Err(CuspError::InvalidParameter(format!(
            "expansion margin {alpha_double_prime} exceeds min(d_10, alpha') = {}",
            d_10.min(exps.alpha_prime)
        )));
    }

    let p_star = (1.0 + (alpha_double_prime / exps.alpha).ln() / exps.alpha_prime.ln()).floor();
    if !(p_star.is_finite() && p_star >= 1.0) {
        return Err(CuspError::InvalidParameter(format!("degenerate p* = {p_star}")));
    }
    let p_star = p_star as usize;
    if lattice.depth() + 1 < p_star {
        return Err(CuspError::DepthError { depth: lattice.depth(), need: p_star });
    }

    let dt_b1 = map.deriv(lattice.b(1)).abs();
    let dt_a0_prime = map.deriv(lattice.a0_prime());
    let check_i = d_10 > 1.0;
    let check_ii = dt_b1 >= dt_a0_prime;

    let mut chain_products = Vec::new();
    let mut check_iii = true;
    for p in 2..=p_star {
        let mut prod = map.deriv(lattice.a(p - 1)).abs();
        for k in 0..=p - 2 {
            prod *= map.deriv(lattice.a_prime(k));
        }
        if prod <= alpha_double_prime {
            check_iii = false;
        }
        chain_products.push(prod);
    }

    Ok(Lemma1Report {
        d_10,
        alpha_double_prime,
        p_star,
        check_i,
        check_ii,
        check_iii,
        dt_b1,
        dt_a0_prime,
        chain_products,
    })
}
