//! Numerical laboratory for a heralded linear-optical qubit amplifier.
//!
//! The amplifier mixes a vacuum/qubit signal with an entangled ancilla pair
//! `cos χ |HH⟩ + sin χ |VV⟩` on two partially polarizing beam splitters of
//! reflectivity `r`, and heralds on one photon in each of two detectors.
//!
//! * [`amp`] holds the closed-form model: branch states, filtrations, success
//!   probability, gains, fidelities.
//! * [`fock`] re-derives the same branch states by brute-force creation
//!   operator algebra and is used as an oracle for [`amp`].
//! * [`sweep`] maps the reachable (fidelity, gain) region over `(χ, r)` and
//!   maximizes success probability under fidelity/gain constraints.
//! * [`vmf`] provides the von Mises–Fisher prior on the Poincaré sphere and
//!   prior-averaged metrics.
//! * [`tradeoff`] builds success-probability versus fidelity curves and the
//!   merit function.

pub mod amp;
pub mod error;
pub mod fock;
pub mod simplex;
pub mod sweep;
pub mod tradeoff;
pub mod vmf;

pub use amp::{AmplifierParams, Gain, MetricSet, SignalState};
pub use error::AmpError;
