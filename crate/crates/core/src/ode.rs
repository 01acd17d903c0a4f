//! Embedded Dormand-Prince 5(4) integrator with cubic-Hermite dense output.
//!
//! The stepper is generic over the right-hand side so the same machinery
//! integrates the full Lorenz field, perturbed variants and the
//! conservative (Hamiltonian-only) test field. FSAL gives the derivative
//! at both step endpoints for free, which is exactly what the Hermite
//! interpolant and the section event refinement need.

use crate::flow::{field, FlowParams, Perturbation, State};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("tolerance {0} outside (1e-14, 1e-3)")]
    InvalidTolerance(f64),
    #[error("t_end must be positive, got {0}")]
    InvalidHorizon(f64),
    #[error("step size underflow at t = {0} (stiffness or event accumulation)")]
    StepSizeUnderflow(f64),
    #[error("state diverged to non-finite values at t = {0}")]
    Divergence(f64),
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

fn axpy(y: State, h: f64, terms: &[(f64, State)]) -> State {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
        out[2] += h * c * k[2];
    }
    out
}

/// One accepted step: endpoint times, states and derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub t0: f64,
    pub y0: State,
    pub f0: State,
    pub t1: f64,
    pub y1: State,
    pub f1: State,
}

impl Step {
    /// Cubic-Hermite interpolation of the state at `t` ∈ [t0, t1].
    pub fn interpolate(&self, t: f64) -> State {
        hermite(self.t0, self.y0, self.f0, self.t1, self.y1, self.f1, t)
    }
}

pub(crate) fn hermite(t0: f64, y0: State, f0: State, t1: f64, y1: State, f1: State, t: f64) -> State {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    out
}

/// Adaptive stepper over an arbitrary autonomous field.
pub struct Stepper<F: Fn(State) -> State> {
    f: F,
    t: f64,
    y: State,
    dy: State,
    h: f64,
    tol: f64,
    pub n_accepted: u64,
    pub n_rejected: u64,
}

impl<F: Fn(State) -> State> Stepper<F> {
    pub fn new(f: F, t0: f64, y0: State, tol: f64) -> Result<Self, OdeError> {
        if !(tol > 1e-14 && tol < 1e-3) {
            return Err(OdeError::InvalidTolerance(tol));
        }
        let dy = f(y0);
        Ok(Self { f, t: t0, y: y0, dy, h: 1e-4, tol, n_accepted: 0, n_rejected: 0 })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> State {
        self.y
    }

    /// Advance by one accepted step, not beyond `t_max`.
    pub fn step(&mut self, t_max: f64) -> Result<Step, OdeError> {
        loop {
            let mut h = self.h.min(t_max - self.t);
            if h <= 0.0 {
                h = self.h;
            }
            let hmin = 16.0 * f64::EPSILON * self.t.abs().max(1.0);
            if h < hmin {
                return Err(OdeError::StepSizeUnderflow(self.t));
            }

            let (t0, y0, k1) = (self.t, self.y, self.dy);
            let k2 = (self.f)(axpy(y0, h, &[(A21, k1)]));
            let k3 = (self.f)(axpy(y0, h, &[(A31, k1), (A32, k2)]));
            let k4 = (self.f)(axpy(y0, h, &[(A41, k1), (A42, k2), (A43, k3)]));
            let k5 = (self.f)(axpy(y0, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
            let k6 = (self.f)(axpy(y0, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
            let y1 = axpy(y0, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
            let k7 = (self.f)(y1);

            if !y1.iter().all(|c| c.is_finite()) {
                return Err(OdeError::Divergence(t0));
            }

            let mut err2 = 0.0;
            for i in 0..3 {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = self.tol + self.tol * y0[i].abs().max(y1[i].abs());
                err2 += (e / sc) * (e / sc);
            }
            let err = (err2 / 3.0).sqrt();

            let factor = if err > 0.0 {
                (0.65 * err.powf(-0.2)).clamp(0.2, 4.0)
            } else {
                4.0
            };

            if err <= 1.0 {
                self.h = h * factor;
                self.t = t0 + h;
                self.y = y1;
                self.dy = k7;
                self.n_accepted += 1;
                return Ok(Step { t0, y0, f0: k1, t1: self.t, y1, f1: k7 });
            }
            self.h = h * factor;
            self.n_rejected += 1;
        }
    }

    // avoid clippy complaints about the c-row constants being unused
    #[allow(dead_code)]
    fn stage_times(&self, h: f64) -> [f64; 4] {
        [self.t + C2 * h, self.t + C3 * h, self.t + C4 * h, self.t + C5 * h]
    }
}

/// A stored orbit with dense output on every accepted step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub derivs: Vec<State>,
    pub n_steps: u64,
    pub n_rejected: u64,
    pub tol: f64,
}

impl Trajectory {
    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn end_state(&self) -> State {
        *self.states.last().unwrap()
    }

    /// Dense-output sample at `t` (clamped to the stored span).
    pub fn sample(&self, t: f64) -> State {
        let t = t.clamp(self.start_time(), self.end_time());
        let k = match self.times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.times.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.times.len() - 2),
        };
        hermite(
            self.times[k],
            self.states[k],
            self.derivs[k],
            self.times[k + 1],
            self.states[k + 1],
            self.derivs[k + 1],
            t,
        )
    }

    /// Iterator over the accepted steps as dense-output segments.
    pub fn steps(&self) -> impl Iterator<Item = Step> + '_ {
        (0..self.times.len() - 1).map(move |k| Step {
            t0: self.times[k],
            y0: self.states[k],
            f0: self.derivs[k],
            t1: self.times[k + 1],
            y1: self.states[k + 1],
            f1: self.derivs[k + 1],
        })
    }
}

/// Integrate an arbitrary autonomous field, storing every accepted step.
pub fn integrate_field(
    f: impl Fn(State) -> State,
    u0: State,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, OdeError> {
    if !(t_end > 0.0) {
        return Err(OdeError::InvalidHorizon(t_end));
    }
    let mut st = Stepper::new(&f, 0.0, u0, tol)?;
    let cap = 1024.min((t_end * 1000.0) as usize + 2);
    let mut times = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap);
    let mut derivs = Vec::with_capacity(cap);
    times.push(0.0);
    states.push(u0);
    derivs.push(f(u0));
    while st.time() < t_end {
        let s = st.step(t_end)?;
        times.push(s.t1);
        states.push(s.y1);
        derivs.push(s.f1);
    }
    Ok(Trajectory { times, states, derivs, n_steps: st.n_accepted, n_rejected: st.n_rejected, tol })
}

/// Integrate the (possibly perturbed) shifted Lorenz field from `u0`.
pub fn integrate(
    p: &FlowParams,
    pert: &Perturbation,
    u0: State,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, OdeError> {
    let p = *p;
    let pert = *pert;
    integrate_field(move |u| field(&p, &pert, u), u0, t_end, tol)
}
