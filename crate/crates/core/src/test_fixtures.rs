//! Shared test fixtures.

use crate::cusp::{invert_monotone, IntervalMap};

/// The doubling map x ↦ 2x mod 1 as two full increasing branches split at
/// 1/2. Lebesgue measure is invariant, which pins the expected output of
/// every density estimator exactly.
pub struct DoublingMap;

impl IntervalMap for DoublingMap {
    fn split(&self) -> f64 {
        0.5
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= 0.5 {
            2.0 * x
        } else {
            2.0 * x - 1.0
        }
    }

    fn deriv(&self, _x: f64) -> f64 {
        2.0
    }

    fn invert_left(&self, y: f64, _tol: f64) -> f64 {
        0.5 * y
    }

    fn invert_right(&self, y: f64, _tol: f64) -> f64 {
        0.5 * (y + 1.0)
    }
}

/// A tent-like asymmetric map with an interior maximum at `peak`:
/// increasing on [0, peak], decreasing on [peak, 1], both branches onto
/// and piecewise linear (finite slopes, no cusp blow-up).
pub struct SkewTent {
    pub peak: f64,
}

impl IntervalMap for SkewTent {
    fn split(&self) -> f64 {
        self.peak
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= self.peak {
            x / self.peak
        } else {
            (1.0 - x) / (1.0 - self.peak)
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        if x <= self.peak {
            1.0 / self.peak
        } else {
            -1.0 / (1.0 - self.peak)
        }
    }

    fn invert_left(&self, y: f64, tol: f64) -> f64 {
        invert_monotone(|x| self.eval(x), y, 0.0, self.peak, true, tol)
    }

    fn invert_right(&self, y: f64, tol: f64) -> f64 {
        invert_monotone(|x| self.eval(x), y, self.peak, 1.0, false, tol)
    }
}
