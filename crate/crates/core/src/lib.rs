//! Numerical stability laboratory for second-order evolution equations
//!
//! ```text
//! u''(t) + A u(t) + B1 B1* u'(t) + B2 B2* u'(t - tau) = 0
//! ```
//!
//! with an instantaneous damping `B1` and a delayed damping `B2`.
//!
//! The crate is organised bottom-up:
//!
//! * [`system`] holds the semi-discrete operator triple `(A, B1, B2)`, the
//!   state, and the energy functionals with their dissipation bounds.
//! * [`delay`] supplies the delayed trace `B2* u'(t - tau)` either from a ring
//!   buffer or from the transport variable `z(rho, t)`.
//! * [`integrator`] advances the system with an average-acceleration Newmark
//!   scheme and records energy traces.
//! * [`models`] assembles 1D wave and beam instances by finite differences.
//! * [`constants`] evaluates the explicit decay constants and the small-gain
//!   threshold for the delay feedback.
//! * [`analysis`] fits decay rates, estimates observability constants and
//!   computes spectra of the discretized generator.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
pub mod delay;
mod error;
pub mod integrator;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod system;

pub use error::{Error, Result};

pub use analysis::{
    assemble_generator, estimate_observability, fit_decay, spectral_abscissa, DecayEstimate,
    ObservabilityEstimate, SpectralReport,
};
pub use constants::{beta_threshold, check_small_gain, DecayConstants};
pub use delay::{DelayLine, HistoryBuffer, TransportField};
pub use integrator::{simulate, Mechanism, Mode, SchemeParams, Simulation};
pub use models::{DampingProfile, Model};
pub use system::{EnergyBreakdown, EnergyTrace, SemiDiscreteSystem, State};
