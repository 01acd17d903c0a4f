//! Lorenz '63 Casimir-maxima return maps.
//!
//! The crate reconstructs the one-dimensional cusp map that links two
//! subsequent relative maxima of the Casimir function C(u) = ‖u‖² along
//! orbits of the Lorenz '63 flow written in shifted (rigid-body)
//! coordinates, and studies its statistics:
//!
//! * [`flow`] — the vector field, its energy-Casimir decomposition and an
//!   adaptive dense-output integrator ([`ode`]);
//! * [`section`] — detection of Casimir maxima (the Poincaré section),
//!   lobe labels, normalization to [0,1] and winding counts;
//! * [`cusp`] — the two-branch interval map (analytic family and empirical
//!   fits), local exponents, preimage lattice and the expansion checks;
//! * [`inducing`] — first-return maps, cylinder sets, symbolic coding,
//!   return-time statistics and the Pianigiani reconstruction;
//! * [`density`] — invariant-density estimation (histogram, Ulam,
//!   Perron-Frobenius iteration) and the Bessel-normalized ansatz fit;
//! * [`stability`] — forcing perturbations and L¹ statistical-stability
//!   experiments;
//! * [`pipeline`] — the orbit-ensemble runner that chains everything.
//!
//! With the default `parallel` feature the ensemble integration, Ulam rows
//! and sampling loops run on rayon; disabling the feature falls back to
//! sequential loops with identical results.

pub mod cusp;
pub mod density;
pub mod export;
pub mod flow;
pub mod inducing;
pub mod numeric;
pub mod ode;
pub mod par;
pub mod pipeline;
pub mod section;
pub mod special;
pub mod stability;

#[cfg(test)]
pub(crate) mod test_fixtures;



pub use flow::{FlowParams, Perturbation, State};
pub use ode::Trajectory;
pub use cusp::{CuspMap, IntervalMap, Lemma1Report, LocalExponents, PreimageLattice};
pub use section::{CasimirEvent, Lobe, MaximaSeries, NormalizedPairs};
