//! Local expansion constants of a cusp map and their recovery from an
//! evaluable map.
//!
//! Conventions near the four distinguished points (T₁ = left branch,
//! T₂ = right branch):
//!
//!   T(x) = α′x + β′x^(1+ψ) + o(x^(1+ψ)),              x → 0⁺,
//!   T(x) = 1 − A′(x₀−x)^(B′) + o((x₀−x)^(B′)),        x → x₀⁻,
//!   T(x) = 1 − A(x−x₀)^B + o((x−x₀)^B),               x → x₀⁺,
//!   T(x) = α(1−x) + β̃(1−x)^(1+κ) + o((1−x)^(1+κ)),   x → 1⁻,
//!
//! with α′ > 1, 0 < α < 1, ψ, κ > 1 and B, B′ ∈ (0,1).

use super::{CuspError, IntervalMap};
use crate::numeric::linear_fit;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExponents {
    /// Expansion slope at the fixed point 0 (α′ > 1).
    pub alpha_prime: f64,
    /// Correction exponent at 0 (ψ > 1).
    pub psi: f64,
    /// Correction amplitude at 0 (β′ > 0).
    pub beta_prime: f64,
    /// |slope| at 1 (0 < α < 1).
    pub alpha: f64,
    /// Correction exponent at 1 (κ > 1).
    pub kappa: f64,
    /// Correction amplitude at 1 (β̃ > 0).
    pub beta_tilde: f64,
    /// Amplitude A′ of the left cusp germ.
    pub amp_left: f64,
    /// Exponent B′ ∈ (0,1) of the left cusp germ.
    pub exp_left: f64,
    /// Amplitude A of the right cusp germ.
    pub amp_right: f64,
    /// Exponent B ∈ (0,1) of the right cusp germ.
    pub exp_right: f64,
}

impl LocalExponents {
    /// B* = max(B, B′), the exponent governing the density boundary
    /// scaling and the return-time tail.
    pub fn b_star(&self) -> f64 {
        self.exp_left.max(self.exp_right)
    }

    pub fn validate(&self) -> Result<(), CuspError> {
        let bad = |msg: String| Err(CuspError::InvalidParameter(msg));
        if !(self.alpha_prime > 1.0) {
            return bad(format!("alpha_prime = {} must exceed 1", self.alpha_prime));
        }
        if !(self.psi > 1.0) {
            return bad(format!("psi = {} must exceed 1", self.psi));
        }
        if !(self.beta_prime > 0.0) {
            return bad(format!("beta_prime = {} must be positive", self.beta_prime));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return bad(format!("alpha = {} must be in (0,1)", self.alpha));
        }
        if !(self.kappa > 1.0) {
            return bad(format!("kappa = {} must exceed 1", self.kappa));
        }
        if !(self.beta_tilde > 0.0) {
            return bad(format!("beta_tilde = {} must be positive", self.beta_tilde));
        }
        if !(self.amp_left > 0.0 && self.amp_right > 0.0) {
            return bad("cusp germ amplitudes must be positive".into());
        }
        if !(0.0 < self.exp_left && self.exp_left < 1.0) {
            return bad(format!("exp_left = {} must be in (0,1)", self.exp_left));
        }
        if !(0.0 < self.exp_right && self.exp_right < 1.0) {
            return bad(format!("exp_right = {} must be in (0,1)", self.exp_right));
        }
        Ok(())
    }
}

/// Log-log fit window diagnostics for one germ.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitWindow {
    /// Distance-to-anchor range [lo, hi] used for the fit.
    pub lo: f64,
    pub hi: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponents: LocalExponents,
    pub window_left: FitWindow,
    pub window_right: FitWindow,
}

/// Best dyadic window [2^-k, 2^-k+4] log-log fit of `value(d)` against
/// distance d, maximizing r². Returns (slope, intercept, window).
fn dyadic_loglog_fit(value: impl Fn(f64) -> f64, d_max: f64) -> (f64, f64, FitWindow) {
    let mut best: Option<(f64, f64, FitWindow)> = None;
    for k in 4..=14 {
        let hi = 2f64.powi(-(k - 4)).min(d_max);
        let lo = 2f64.powi(-k);
        if lo >= hi {
            continue;
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let n = 48;
        for i in 0..n {
            let d = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            let v = value(d);
            if v > 1e-14 && v.is_finite() {
                xs.push(d.ln());
                ys.push(v.ln());
            }
        }
        if xs.len() < 16 {
            continue;
        }
        let (slope, intercept, r2) = linear_fit(&xs, &ys);
        let w = FitWindow { lo, hi, r2 };
        if best.as_ref().map_or(true, |(_, _, bw)| r2 > bw.r2) {
            best = Some((slope, intercept, w));
        }
    }
    best.unwrap_or((f64::NAN, f64::NAN, FitWindow { lo: 0.0, hi: 0.0, r2: 0.0 }))
}

/// Recover the local expansion constants of an evaluable cusp map.
///
/// Slopes at the interval ends come from small-offset limits of the
/// difference quotient; the cusp germ constants from r²-maximizing dyadic
/// log-log fits of 1 − T against the distance to the cusp; the correction
/// terms (ψ, β′), (κ, β̃) from log-log fits of the slope-subtracted
/// remainder.
pub fn fit_exponents(map: &impl IntervalMap) -> Result<ExponentFit, CuspError> {
    let x0 = map.split();

    let h = 1e-9;
    let alpha_prime = map.eval(h) / h;
    let alpha = map.eval(1.0 - h) / h;

    let (bl, la, wl) = dyadic_loglog_fit(|d| 1.0 - map.eval(x0 - d), x0 * 0.9);
    let (br, ra, wr) = dyadic_loglog_fit(|d| 1.0 - map.eval(x0 + d), (1.0 - x0) * 0.9);
    let (exp_left, amp_left) = (bl, la.exp());
    let (exp_right, amp_right) = (br, ra.exp());

    let (s0, i0, _) = dyadic_loglog_fit(|d| map.eval(d) - alpha_prime * d, 0.2);
    let (psi, beta_prime) = if s0.is_finite() && s0 > 1.999 {
        (s0 - 1.0, i0.exp())
    } else {
        // remainder below the resolution floor: quadratic-correction default
        (2.0, 0.0f64.max(i0.exp()))
    };
    let (s1, i1, _) = dyadic_loglog_fit(|d| map.eval(1.0 - d) - alpha * d, 0.2);
    let (kappa, beta_tilde) = if s1.is_finite() && s1 > 1.999 {
        (s1 - 1.0, i1.exp())
    } else {
        (2.0, 0.0f64.max(i1.exp()))
    };

    let exponents = LocalExponents {
        alpha_prime,
        psi,
        beta_prime,
        alpha,
        kappa,
        beta_tilde,
        amp_left,
        exp_left,
        amp_right,
        exp_right,
    };
    Ok(ExponentFit { exponents, window_left: wl, window_right: wr })
}
