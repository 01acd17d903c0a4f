//! Invariant-density estimation on a uniform grid.
//!
//! Three independent estimators (single-orbit histogram, Ulam matrix,
//! Perron-Frobenius pointwise iteration) share one [`DensityEstimate`]
//! representation, plus the L¹ metric and the boundary-scaling and
//! ansatz fits used to characterize the density.

mod estimators;
mod fit;

pub use estimators::{
    boundary_exponent, histogram_density, pf_iterate, pf_residual, ulam_density,
    ulam_eigenvalue_residual, BoundarySide,
};
pub use fit::{ansatz_normalizer, ansatz_value, constants_relation, fit_ansatz, FitResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("need at least {need} samples/iterations, got {got}")]
    TooFewSamples { need: u64, got: u64 },
    #[error("grids incompatible: {0}")]
    GridMismatch(String),
    #[error("power iteration did not reach residual {target:.1e} in {iters} iterations")]
    ConvergenceError { target: f64, iters: usize },
    #[error("boundary window unusable: {0}")]
    WindowError(String),
    #[error("ansatz fit failed: {0}")]
    FitError(String),
}

/// Uniform grid of bins on [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n_bins: usize,
}

impl Grid {
    /// Grid on the unit interval; bin count must be a power of two ≥ 2⁹.
    pub fn unit(n_bins: usize) -> Result<Self, DensityError> {
        if n_bins < 512 || !n_bins.is_power_of_two() {
            return Err(DensityError::InvalidGrid(format!(
                "unit grid needs a power-of-two bin count >= 512, got {n_bins}"
            )));
        }
        Ok(Self { lo: 0.0, hi: 1.0, n_bins })
    }

    /// General sub-interval grid (used for induced densities).
    pub fn on(lo: f64, hi: f64, n_bins: usize) -> Result<Self, DensityError> {
        if !(lo < hi) || n_bins < 2 {
            return Err(DensityError::InvalidGrid(format!("[{lo}, {hi}] with {n_bins} bins")));
        }
        Ok(Self { lo, hi, n_bins })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n_bins as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn bin_of(&self, x: f64) -> usize {
        (((x - self.lo) / self.width()) as usize).min(self.n_bins - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Histogram,
    Ulam,
    PfIteration,
    Reconstruction,
}

/// A nonnegative density on a grid, normalized to unit integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub method: Method,
    /// Sample count (histogram) or iteration count (operator methods).
    pub effort: u64,
    /// Cusp-collision restarts (histogram) or excluded nodes (PF).
    pub exceptions: u64,
}

impl DensityEstimate {
    pub fn new(grid: Grid, values: Vec<f64>, method: Method) -> Self {
        let mut est = Self { grid, values, method, effort: 0, exceptions: 0 };
        est.normalize();
        est
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.width()
    }

    pub fn normalize(&mut self) {
        let z = self.integral();
        if z > 0.0 {
            for v in &mut self.values {
                *v /= z;
            }
        }
    }

    /// Center of the bin with the largest value (the empirical mode;
    /// reported, not asserted against anything).
    pub fn argmax_x(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        self.grid.center(i)
    }

    /// Piecewise-linear interpolation between bin midpoints (constant on
    /// the outer half-bins, zero outside the grid).
    pub fn value_at(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < g.lo || x > g.hi {
            return 0.0;
        }
        let w = g.width();
        let s = (x - g.lo) / w - 0.5;
        if s <= 0.0 {
            return self.values[0];
        }
        let n = self.values.len();
        if s >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = s as usize;
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Exact integral of the interpolant over [a, b] ∩ grid.
    pub fn integral_over(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.grid.lo);
        let b = b.min(self.grid.hi);
        if a >= b {
            return 0.0;
        }
        // trapezoid on a fine subdivision of the interpolant (the
        // interpolant is piecewise linear, so per-segment trapezoids are
        // exact once segment boundaries are included)
        let w = self.grid.width();
        let mut knots = vec![a];
        let mut k = ((a - self.grid.lo) / w - 0.5).ceil().max(0.0) as usize;
        while self.grid.lo + (k as f64 + 0.5) * w < b {
            let t = self.grid.lo + (k as f64 + 0.5) * w;
            if t > a {
                knots.push(t);
            }
            k += 1;
        }
        knots.push(b);
        let mut s = 0.0;
        for seg in knots.windows(2) {
            s += 0.5 * (self.value_at(seg[0]) + self.value_at(seg[1])) * (seg[1] - seg[0]);
        }
        s
    }

    /// Bin-average down to a coarser grid with the same span.
    pub fn resample_to(&self, n_bins: usize) -> Result<Self, DensityError> {
        if n_bins == self.grid.n_bins {
            return Ok(self.clone());
        }
        if n_bins > self.grid.n_bins || self.grid.n_bins % n_bins != 0 {
            return Err(DensityError::GridMismatch(format!(
                "cannot resample {} bins to {}",
                self.grid.n_bins, n_bins
            )));
        }
        let k = self.grid.n_bins / n_bins;
        let values: Vec<f64> = (0..n_bins)
            .map(|i| self.values[i * k..(i + 1) * k].iter().sum::<f64>() / k as f64)
            .collect();
        Ok(Self {
            grid: Grid { lo: self.grid.lo, hi: self.grid.hi, n_bins },
            values,
            method: self.method,
            effort: self.effort,
            exceptions: self.exceptions,
        })
    }
}

/// L¹ distance between two densities; a finer estimate is bin-averaged
/// down to the coarser grid first.
pub fn l1_distance(a: &DensityEstimate, b: &DensityEstimate) -> Result<f64, DensityError> {
    if (a.grid.lo, a.grid.hi) != (b.grid.lo, b.grid.hi) {
        return Err(DensityError::GridMismatch(format!(
            "spans differ: [{}, {}] vs [{}, {}]",
            a.grid.lo, a.grid.hi, b.grid.lo, b.grid.hi
        )));
    }
    let n = a.grid.n_bins.min(b.grid.n_bins);
    let ar = a.resample_to(n)?;
    let br = b.resample_to(n)?;
    Ok(ar
        .values
        .iter()
        .zip(&br.values)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * ar.grid.width())
}
