use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmpError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A filtration ratio `x₋/x₊` or `y₋/y₊` has a vanishing denominator while
    /// the numerator does not.
    #[error("feed-forward filter undefined: {component} denominator vanishes")]
    DegenerateFilter { component: &'static str },

    /// The heralded output never contains a photon, so no qubit state exists.
    #[error("output qubit subspace is empty")]
    EmptyQubitSubspace,

    #[error("unit fidelity is unreachable at the requested gain")]
    UnreachableUnitFidelity,
}
