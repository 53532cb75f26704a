//! Three-flavor neutrino oscillations with gravity-induced (Diósi–Penrose)
//! damping of the mass-eigenstate interference terms.
//!
//! Natural units throughout: ħ = c = 1, energies in eV, lengths and times
//! in eV⁻¹, G = 1/m_P². [`constants::PhysicalConstants`] converts to and
//! from laboratory units.

pub mod cli;
pub mod collapse;
pub mod constants;
pub mod error;
pub mod flavor;
pub mod flux;
pub mod numeric;
pub mod observability;
pub mod oracle;
pub mod oscillation;

pub use collapse::{
    damped_probability_matrix, damping_exponent, decoherence_onset, CollapseParams,
};
pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use flavor::{Flavor, MassSpectrum, MixingAngles, MixingMatrix};
pub use flux::{detector_flux, pion_chain_source, FlavorFlux};
pub use observability::{observability_length, scan_window, xi_upper_bound};
pub use oscillation::{probability_matrix, transition_probability, Beam, ProbabilityMatrix};
