//! Poincaré section on the relative maxima of the Casimir function.
//!
//! A maximum of C(t) is a zero crossing of dC/dt from + to − with
//! d²C/dt² < 0. Crossings are located per accepted integrator step by
//! bisection on the dense output, refined until the rate falls below the
//! event tolerance. Events carry the lobe label (sign of u₁, i.e. the
//! half-space containing c₁ or c₂) and the Casimir value, from which the
//! normalized successive-maxima pairs on [0,1]² are produced.

use crate::flow::{casimir, casimir_rate2_of, casimir_rate_of, FlowParams, Perturbation, State};
use crate::ode::{OdeError, Step, Stepper, Trajectory};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SectionError {
    #[error("no section events found (empty section)")]
    EmptySection,
    #[error("trajectory span {0} shorter than transient + 10 time units")]
    TrajectoryTooShort(f64),
    #[error("degenerate Casimir range: z_min == z_max == {0}")]
    DegenerateRange(f64),
    #[error("lobe label undefined at u1 = 0")]
    AmbiguousLobe,
    #[error("fewer than 2 events, cannot form pairs")]
    TooFewEvents,
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Which closed component of the section the event lies on: `Plus` is the
/// half-space u₁ > 0 containing c₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lobe {
    Plus,
    Minus,
}

pub fn lobe_label(u: State) -> Result<Lobe, SectionError> {
    if u[0] > 0.0 {
        Ok(Lobe::Plus)
    } else if u[0] < 0.0 {
        Ok(Lobe::Minus)
    } else {
        Err(SectionError::AmbiguousLobe)
    }
}

/// One local maximum of C(t).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CasimirEvent {
    pub t: f64,
    pub u: State,
    pub c_value: f64,
    pub lobe: Lobe,
}

/// Ordered maxima of a single orbit.
#[derive(Debug, Clone, Default)]
pub struct MaximaSeries {
    pub events: Vec<CasimirEvent>,
}

impl MaximaSeries {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Empirical range [z_min, z_max] of the Casimir values.
    pub fn z_range(&self) -> Option<(f64, f64)> {
        z_range(&self.events)
    }

    /// Mean time gap between successive events.
    pub fn mean_gap(&self) -> f64 {
        if self.events.len() < 2 {
            return f64::NAN;
        }
        let span = self.events.last().unwrap().t - self.events[0].t;
        span / (self.events.len() - 1) as f64
    }
}

fn z_range(events: &[CasimirEvent]) -> Option<(f64, f64)> {
    let mut it = events.iter();
    let first = it.next()?.c_value;
    let mut lo = first;
    let mut hi = first;
    for e in it {
        lo = lo.min(e.c_value);
        hi = hi.max(e.c_value);
    }
    Some((lo, hi))
}

/// A set of independent orbits' maxima analyzed together.
#[derive(Debug, Clone, Default)]
pub struct MaximaCollection {
    pub series: Vec<MaximaSeries>,
}

impl MaximaCollection {
    pub fn total_events(&self) -> usize {
        self.series.iter().map(|s| s.len()).sum()
    }

    pub fn z_range(&self) -> Option<(f64, f64)> {
        let mut out: Option<(f64, f64)> = None;
        for s in &self.series {
            if let Some((lo, hi)) = s.z_range() {
                out = Some(match out {
                    None => (lo, hi),
                    Some((a, b)) => (a.min(lo), b.max(hi)),
                });
            }
        }
        out
    }

    pub fn all_events(&self) -> impl Iterator<Item = &CasimirEvent> {
        self.series.iter().flat_map(|s| s.events.iter())
    }

    /// Mean inter-event gap pooled over orbits.
    pub fn mean_gap(&self) -> f64 {
        let mut span = 0.0;
        let mut n = 0usize;
        for s in &self.series {
            if s.len() >= 2 {
                span += s.events.last().unwrap().t - s.events[0].t;
                n += s.len() - 1;
            }
        }
        span / n as f64
    }
}

/// Normalized successive-maxima pairs (s_k, s_{k+1}) ∈ [0,1]².
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizedPairs {
    pub pairs: Vec<(f64, f64)>,
    pub z_min: f64,
    pub z_max: f64,
}

impl NormalizedPairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Normalize a single orbit's maxima with its own empirical [z_min, z_max].
pub fn normalize(series: &MaximaSeries) -> Result<NormalizedPairs, SectionError> {
    if series.len() < 2 {
        return Err(SectionError::TooFewEvents);
    }
    let (z_min, z_max) = series.z_range().unwrap();
    if z_max == z_min {
        return Err(SectionError::DegenerateRange(z_min));
    }
    normalize_with(std::slice::from_ref(series), z_min, z_max)
}

/// Normalize an ensemble with a shared [z_min, z_max] taken over all orbits;
/// pairs never cross orbit boundaries.
pub fn normalize_collection(coll: &MaximaCollection) -> Result<NormalizedPairs, SectionError> {
    if coll.total_events() < 2 {
        return Err(SectionError::TooFewEvents);
    }
    let (z_min, z_max) = coll.z_range().unwrap();
    if z_max == z_min {
        return Err(SectionError::DegenerateRange(z_min));
    }
    normalize_with(&coll.series, z_min, z_max)
}

fn normalize_with(
    series: &[MaximaSeries],
    z_min: f64,
    z_max: f64,
) -> Result<NormalizedPairs, SectionError> {
    let width = z_max - z_min;
    let mut pairs = Vec::new();
    for s in series {
        for w in s.events.windows(2) {
            let a = (w[0].c_value - z_min) / width;
            let b = (w[1].c_value - z_min) / width;
            pairs.push((a, b));
        }
    }
    Ok(NormalizedPairs { pairs, z_min, z_max })
}

/// Normalized values s_k (not pairs) of every event, shared z-range.
pub fn normalized_values(coll: &MaximaCollection) -> Result<Vec<f64>, SectionError> {
    let (z_min, z_max) = coll.z_range().ok_or(SectionError::EmptySection)?;
    if z_max == z_min {
        return Err(SectionError::DegenerateRange(z_min));
    }
    Ok(coll
        .all_events()
        .map(|e| (e.c_value - z_min) / (z_max - z_min))
        .collect())
}

/// Return-time counts of the lobe sequence: for each event, the number of
/// section crossings until the orbit next hits the same lobe. The trailing
/// unfinished visit of each orbit is dropped.
pub fn winding_counts(coll: &MaximaCollection) -> Vec<u32> {
    let mut out = Vec::new();
    for s in &coll.series {
        let labels: Vec<Lobe> = s.events.iter().map(|e| e.lobe).collect();
        out.extend(winding_counts_from_labels(&labels));
    }
    out
}

pub fn winding_counts_from_labels(labels: &[Lobe]) -> Vec<u32> {
    let mut out = Vec::new();
    for i in 0..labels.len() {
        let mut j = i + 1;
        while j < labels.len() && labels[j] != labels[i] {
            j += 1;
        }
        if j < labels.len() {
            out.push((j - i) as u32);
        }
    }
    out
}

/// Revolutions around the far fixed point per crossing excursion: for
/// each event followed by a lobe switch, the length of the opposite-lobe
/// run before the orbit re-enters the starting lobe. This is the
/// statistic distributed like the return time of the interval map to
/// (x₀, 1): a switch happens exactly when the current normalized maximum
/// exceeds the cusp, so the sampled starting points carry the invariant
/// measure restricted to (x₀, 1).
pub fn crossing_run_lengths(coll: &MaximaCollection) -> Vec<u32> {
    let mut out = Vec::new();
    for s in &coll.series {
        let labels: Vec<Lobe> = s.events.iter().map(|e| e.lobe).collect();
        for i in 0..labels.len().saturating_sub(1) {
            if labels[i + 1] == labels[i] {
                continue;
            }
            let mut j = i + 1;
            while j < labels.len() && labels[j] != labels[i] {
                j += 1;
            }
            if j < labels.len() {
                out.push((j - i - 1) as u32);
            }
        }
    }
    out
}

/// Detection options for the section events.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SectionOptions {
    /// Integrator tolerance for streaming extraction.
    pub tol: f64,
    /// Event acceptance threshold on |dC/dt|.
    pub refine_tol: f64,
    /// Initial time span whose events are discarded.
    pub transient: f64,
    /// Events closer than this merge into the larger one.
    pub merge_gap: f64,
}

impl Default for SectionOptions {
    fn default() -> Self {
        Self { tol: 1e-10, refine_tol: 1e-6, transient: 100.0, merge_gap: 1e-3 }
    }
}

/// Incremental event detector over dense-output steps.
struct EventDetector {
    p: FlowParams,
    pert: Perturbation,
    opts: SectionOptions,
    events: Vec<CasimirEvent>,
    dropped_unrefined: u64,
}

impl EventDetector {
    fn new(p: FlowParams, pert: Perturbation, opts: SectionOptions) -> Self {
        Self { p, pert, opts, events: Vec::new(), dropped_unrefined: 0 }
    }

    fn rate_at(&self, step: &Step, t: f64) -> f64 {
        casimir_rate_of(&self.p, &self.pert, step.interpolate(t))
    }

    fn process(&mut self, step: &Step) {
        let r0 = casimir_rate_of(&self.p, &self.pert, step.y0);
        let r1 = casimir_rate_of(&self.p, &self.pert, step.y1);
        if !(r0 > 0.0 && r1 <= 0.0) {
            return;
        }
        // bisect the + → − crossing: at least down to a 1e-10 window, and
        // further (to the f64 floor) while the rate is still above tolerance
        let mut a = step.t0;
        let mut b = step.t1;
        let eps_floor = 8.0 * f64::EPSILON * b.abs().max(1.0);
        let mut t = 0.5 * (a + b);
        let mut rate = self.rate_at(step, t);
        while b - a > eps_floor && (b - a > 1e-10 || rate.abs() >= self.opts.refine_tol) {
            if rate > 0.0 {
                a = t;
            } else {
                b = t;
            }
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            t = m;
            rate = self.rate_at(step, t);
        }
        let u = step.interpolate(t);
        let rate = casimir_rate_of(&self.p, &self.pert, u);
        if rate.abs() >= self.opts.refine_tol {
            self.dropped_unrefined += 1;
            return;
        }
        // strictly concave in time; the margin rejects rounding noise at
        // degenerate (fixed-point) configurations where ddC/dt² = 0
        let c = casimir(u);
        if casimir_rate2_of(&self.p, &self.pert, u) >= -1e-6 * (1.0 + c) {
            return;
        }
        if t < self.opts.transient {
            return;
        }
        let lobe = match lobe_label(u) {
            Ok(l) => l,
            Err(_) => return, // u₁ = 0 events are discarded
        };
        let ev = CasimirEvent { t, u, c_value: c, lobe };
        if let Some(last) = self.events.last() {
            if ev.t - last.t < self.opts.merge_gap {
                if ev.c_value > last.c_value {
                    *self.events.last_mut().unwrap() = ev;
                }
                return;
            }
        }
        self.events.push(ev);
    }
}

/// Extract the Casimir maxima of a stored trajectory.
pub fn extract_maxima(
    p: &FlowParams,
    pert: &Perturbation,
    traj: &Trajectory,
    opts: SectionOptions,
) -> Result<MaximaSeries, SectionError> {
    let span = traj.end_time() - traj.start_time();
    if span < opts.transient + 10.0 {
        return Err(SectionError::TrajectoryTooShort(span));
    }
    let mut det = EventDetector::new(*p, *pert, opts);
    for step in traj.steps() {
        det.process(&step);
    }
    if det.events.is_empty() {
        return Err(SectionError::EmptySection);
    }
    Ok(MaximaSeries { events: det.events })
}

/// Integrate from `u0` and stream events until `target_events` have been
/// collected after the transient (or `max_time` is reached). The trajectory
/// itself is not stored.
pub fn collect_maxima(
    p: &FlowParams,
    pert: &Perturbation,
    u0: State,
    target_events: usize,
    max_time: f64,
    opts: SectionOptions,
) -> Result<MaximaSeries, SectionError> {
    let pc = *p;
    let pertc = *pert;
    let f = move |u: State| crate::flow::field(&pc, &pertc, u);
    let mut stepper = Stepper::new(f, 0.0, u0, opts.tol)?;
    let mut det = EventDetector::new(*p, *pert, opts);
    while det.events.len() < target_events && stepper.time() < max_time {
        let step = stepper.step(max_time)?;
        det.process(&step);
    }
    if det.events.is_empty() {
        return Err(SectionError::EmptySection);
    }
    det.events.truncate(target_events);
    Ok(MaximaSeries { events: det.events })
}
