//! Decay-rate fitting, observability estimation, and generator spectra.

mod fit;
mod observability;
mod spectrum;

pub use fit::{fit_decay, fit_decay_with, DecayEstimate, DEFAULT_ENVELOPE_BLOCKS};
pub use observability::{estimate_observability, ensemble_member, ObservabilityEstimate};
pub use spectrum::{
    assemble_generator, balance, eigenvalues, spectral_abscissa, spectral_report, SpectralReport,
};
