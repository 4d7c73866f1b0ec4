//! Closed-form amplifier model.
//!
//! Every quantity here is a pure function of the device knobs
//! [`AmplifierParams`] and, where relevant, the input [`SignalState`].
//! Branch states are kept unnormalized so their squared norms are directly
//! the heralding probabilities of the corresponding detector coincidences.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use num_complex::Complex64;

use crate::error::AmpError;

/// Magnitude below which a denominator (or a subspace norm) counts as zero.
pub const DENOMINATOR_CUTOFF: f64 = 1e-14;

const NORMALIZATION_TOL: f64 = 1e-12;
const RANGE_SLACK: f64 = 1e-12;
const PHYSICAL_SLACK: f64 = 1e-12;

/// The two tunable device settings: ancilla angle `chi` and PPBS amplitude
/// reflectivity `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifierParams {
    chi: f64,
    r: f64,
}

impl AmplifierParams {
    /// Values within `1e-12` outside the allowed ranges are clamped onto them.
    pub fn new(chi: f64, r: f64) -> Result<Self, AmpError> {
        if !chi.is_finite() || !(-RANGE_SLACK..=FRAC_PI_4 + RANGE_SLACK).contains(&chi) {
            return Err(AmpError::InvalidParameter(format!(
                "chi = {chi} must lie in [0, pi/4]"
            )));
        }
        if !r.is_finite() || !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&r) {
            return Err(AmpError::InvalidParameter(format!(
                "r = {r} must lie in [0, 1]"
            )));
        }
        Ok(Self {
            chi: chi.clamp(0.0, FRAC_PI_4),
            r: r.clamp(0.0, 1.0),
        })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

/// Signal `α|0⟩ + β|Q⟩` with `|Q⟩ = cos(θ/2)|H⟩ + sin(θ/2)e^{iφ}|V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalState {
    alpha: Complex64,
    beta: Complex64,
    theta: f64,
    phi: f64,
}

impl SignalState {
    pub fn new(alpha: Complex64, beta: Complex64, theta: f64, phi: f64) -> Result<Self, AmpError> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(AmpError::InvalidParameter(format!(
                "|alpha|^2 + |beta|^2 = {norm} must equal 1"
            )));
        }
        if !theta.is_finite() || !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(AmpError::InvalidParameter(format!(
                "theta = {theta} must lie in [0, pi]"
            )));
        }
        if !phi.is_finite() || !(0.0..std::f64::consts::TAU).contains(&phi) {
            return Err(AmpError::InvalidParameter(format!(
                "phi = {phi} must lie in [0, 2 pi)"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            theta,
            phi,
        })
    }

    /// Real, non-negative `α = √(1 − |β|²)` and `β`.
    pub fn from_beta_sq(beta_sq: f64, theta: f64, phi: f64) -> Result<Self, AmpError> {
        if !beta_sq.is_finite() || !(0.0..=1.0).contains(&beta_sq) {
            return Err(AmpError::InvalidParameter(format!(
                "|beta|^2 = {beta_sq} must lie in [0, 1]"
            )));
        }
        Self::new(
            Complex64::new((1.0 - beta_sq).sqrt(), 0.0),
            Complex64::new(beta_sq.sqrt(), 0.0),
            theta,
            phi,
        )
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `(⟨H|Q⟩, ⟨V|Q⟩)`.
    pub fn qubit(&self) -> [Complex64; 2] {
        let (s, c) = (self.theta / 2.0).sin_cos();
        [
            Complex64::new(c, 0.0),
            Complex64::from_polar(s, self.phi),
        ]
    }
}

/// `(cos²(θ/2), sin²(θ/2))`.
pub fn populations(theta: f64) -> (f64, f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    (c * c, s * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyCoefficients {
    pub x_plus: f64,
    pub x_minus: f64,
    pub y_plus: f64,
    pub y_minus: f64,
}

pub fn xy_coefficients(params: AmplifierParams) -> XyCoefficients {
    let (sin_chi, cos_chi) = params.chi.sin_cos();
    let r2 = params.r * params.r;
    let common = 2.0 * r2 - 1.0;
    XyCoefficients {
        x_plus: common * cos_chi + r2 * sin_chi,
        x_minus: common * cos_chi - r2 * sin_chi,
        y_plus: common * sin_chi + r2 * cos_chi,
        y_minus: common * sin_chi - r2 * cos_chi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `DD` or `AA` coincidence.
    Out1,
    /// `DA` or `AD` coincidence.
    Out2,
    Out1FF,
    Out2FF,
}

/// Unnormalized heralded output `vac|0⟩ + h|H⟩ + v|V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAmplitudes {
    pub vac: Complex64,
    pub h: Complex64,
    pub v: Complex64,
    pub branch: Branch,
}

impl BranchAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.vac.norm_sqr() + self.h.norm_sqr() + self.v.norm_sqr()
    }

    pub fn qubit_norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    /// Largest componentwise modulus difference, ignoring the branch tag.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        (self.vac - other.vac)
            .norm()
            .max((self.h - other.h).norm())
            .max((self.v - other.v).norm())
    }
}

/// `(Out1, Out2)`: the `DD/AA` and `DA/AD` heralded states.
pub fn branch_states(
    signal: &SignalState,
    params: AmplifierParams,
) -> (BranchAmplitudes, BranchAmplitudes) {
    let xy = xy_coefficients(params);
    let (sin_chi, cos_chi) = params.chi.sin_cos();
    let (s, c) = (signal.theta / 2.0).sin_cos();
    let phase = Complex64::from_polar(1.0, signal.phi);
    let vac = signal.alpha * params.r / 2.0;
    let qubit = signal.beta / 2.0;

    let out1 = BranchAmplitudes {
        vac: vac * (cos_chi + sin_chi),
        h: qubit * xy.x_plus * c,
        v: qubit * xy.y_plus * s * phase,
        branch: Branch::Out1,
    };
    let out2 = BranchAmplitudes {
        vac: vac * (cos_chi - sin_chi),
        h: qubit * xy.x_minus * c,
        v: -qubit * xy.y_minus * s * phase,
        branch: Branch::Out2,
    };
    (out1, out2)
}

/// Feed-forward filtrations applied on `DD/AA` heralds.
///
/// A ratio is `None` when its denominator vanishes but its numerator does not.
/// When both vanish that polarization is absent from both branches and no
/// filtration is needed, so the ratio is reported as `1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterTransmittances {
    pub tau_h: Option<f64>,
    pub tau_v: Option<f64>,
    pub physical: bool,
}

impl FilterTransmittances {
    pub fn require(&self) -> Result<(f64, f64), AmpError> {
        let tau_h = self
            .tau_h
            .ok_or(AmpError::DegenerateFilter { component: "x_plus" })?;
        let tau_v = self
            .tau_v
            .ok_or(AmpError::DegenerateFilter { component: "y_plus" })?;
        Ok((tau_h, tau_v))
    }
}

fn filter_ratio(num: f64, den: f64) -> Option<f64> {
    if den.abs() < DENOMINATOR_CUTOFF {
        (num.abs() < DENOMINATOR_CUTOFF).then_some(1.0)
    } else {
        Some(num / den)
    }
}

pub fn filter_transmittances(params: AmplifierParams) -> FilterTransmittances {
    let xy = xy_coefficients(params);
    let tau_h = filter_ratio(xy.x_minus, xy.x_plus);
    let tau_v = filter_ratio(xy.y_minus, xy.y_plus);
    let physical = match (tau_h, tau_v) {
        (Some(h), Some(v)) => h.abs() <= 1.0 + PHYSICAL_SLACK && v.abs() <= 1.0 + PHYSICAL_SLACK,
        _ => false,
    };
    FilterTransmittances {
        tau_h,
        tau_v,
        physical,
    }
}

/// Branch states after filtration on `DD/AA` and the `V → −V` flip on
/// `DA/AD`. Both branches end up with the qubit part of `Out2`.
pub fn feedforward_states(
    signal: &SignalState,
    params: AmplifierParams,
) -> Result<(BranchAmplitudes, BranchAmplitudes), AmpError> {
    filter_transmittances(params).require()?;
    let xy = xy_coefficients(params);
    let (sin_chi, cos_chi) = params.chi.sin_cos();
    let (s, c) = (signal.theta / 2.0).sin_cos();
    let phase = Complex64::from_polar(1.0, signal.phi);
    let vac = signal.alpha * params.r / 2.0;
    let h = signal.beta / 2.0 * xy.x_minus * c;
    let v = signal.beta / 2.0 * xy.y_minus * s * phase;
    Ok((
        BranchAmplitudes {
            vac: vac * (cos_chi + sin_chi),
            h,
            v,
            branch: Branch::Out1FF,
        },
        BranchAmplitudes {
            vac: vac * (cos_chi - sin_chi),
            h,
            v,
            branch: Branch::Out2FF,
        },
    ))
}

pub fn success_probability(signal: &SignalState, params: AmplifierParams, feedforward: bool) -> f64 {
    let xy = xy_coefficients(params);
    let (c2, s2) = populations(signal.theta);
    let vacuum = signal.alpha.norm_sqr() * params.r * params.r;
    let qubit = if feedforward {
        xy.x_minus * xy.x_minus * c2 + xy.y_minus * xy.y_minus * s2
    } else {
        (xy.x_plus * xy.x_plus + xy.x_minus * xy.x_minus) / 2.0 * c2
            + (xy.y_plus * xy.y_plus + xy.y_minus * xy.y_minus) / 2.0 * s2
    };
    // Exactly 1 along r = 1; rounding may land one ulp above.
    (vacuum + signal.beta.norm_sqr() * qubit).min(1.0)
}

/// Linear gain; `Infinite` exactly when the heralded output has no vacuum
/// component (`r = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gain {
    Finite(f64),
    Infinite,
}

impl Gain {
    pub fn from_db(db: f64) -> Self {
        if db == f64::INFINITY {
            Gain::Infinite
        } else {
            Gain::Finite(10f64.powf(db / 10.0))
        }
    }

    /// `10 log₁₀ G`; `+∞` for `Infinite`, `−∞` for a zero gain.
    pub fn db(self) -> f64 {
        match self {
            Gain::Finite(g) => 10.0 * g.log10(),
            Gain::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Gain::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Gain::Finite(g) => Some(g),
            Gain::Infinite => None,
        }
    }
}

impl fmt::Display for Gain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gain::Finite(g) => write!(f, "{g}"),
            Gain::Infinite => f.write_str("inf"),
        }
    }
}

/// Per-polarization gains `(G_H, G_V)`.
pub fn gains(params: AmplifierParams, feedforward: bool) -> (Gain, Gain) {
    if params.r == 0.0 {
        return (Gain::Infinite, Gain::Infinite);
    }
    let xy = xy_coefficients(params);
    let r2 = params.r * params.r;
    if feedforward {
        (
            Gain::Finite(xy.x_minus * xy.x_minus / r2),
            Gain::Finite(xy.y_minus * xy.y_minus / r2),
        )
    } else {
        (
            Gain::Finite((xy.x_plus * xy.x_plus + xy.x_minus * xy.x_minus) / (2.0 * r2)),
            Gain::Finite((xy.y_plus * xy.y_plus + xy.y_minus * xy.y_minus) / (2.0 * r2)),
        )
    }
}

/// Overall gain for the weights `c2 = cos²(θ/2)`, `s2 = sin²(θ/2)`.
pub fn overall_gain_from_populations(c2: f64, s2: f64, params: AmplifierParams, feedforward: bool) -> Gain {
    match gains(params, feedforward) {
        (Gain::Finite(gh), Gain::Finite(gv)) => Gain::Finite(c2 * gh + s2 * gv),
        _ => Gain::Infinite,
    }
}

pub fn overall_gain(theta: f64, params: AmplifierParams, feedforward: bool) -> Gain {
    let (c2, s2) = populations(theta);
    overall_gain_from_populations(c2, s2, params, feedforward)
}

/// Qubit fidelity for the weights `c2 = cos²(θ/2)`, `s2 = sin²(θ/2)`.
pub fn fidelity_from_populations(
    c2: f64,
    s2: f64,
    xy: &XyCoefficients,
    feedforward: bool,
) -> Result<f64, AmpError> {
    let (num, den) = if feedforward {
        let overlap = xy.x_minus * c2 + xy.y_minus * s2;
        (
            overlap * overlap,
            xy.x_minus * xy.x_minus * c2 + xy.y_minus * xy.y_minus * s2,
        )
    } else {
        let plus = xy.x_plus * c2 + xy.y_plus * s2;
        let minus = xy.x_minus * c2 + xy.y_minus * s2;
        (
            plus * plus + minus * minus,
            (xy.x_plus * xy.x_plus + xy.x_minus * xy.x_minus) * c2
                + (xy.y_plus * xy.y_plus + xy.y_minus * xy.y_minus) * s2,
        )
    };
    if den.sqrt() < DENOMINATOR_CUTOFF {
        return Err(AmpError::EmptyQubitSubspace);
    }
    // Cauchy–Schwarz bounds the ratio by 1; only rounding can exceed it.
    Ok((num / den).min(1.0))
}

pub fn fidelity(theta: f64, params: AmplifierParams, feedforward: bool) -> Result<f64, AmpError> {
    let (c2, s2) = populations(theta);
    fidelity_from_populations(c2, s2, &xy_coefficients(params), feedforward)
}

/// Normalized 2×2 density matrix in the `{H, V}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity {
    m: [[Complex64; 2]; 2],
}

impl QubitDensity {
    /// Normalized balanced mixture of the given unnormalized qubit vectors.
    pub fn mixture(vectors: &[[Complex64; 2]]) -> Result<Self, AmpError> {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for q in vectors {
            for (i, row) in m.iter_mut().enumerate() {
                for (j, entry) in row.iter_mut().enumerate() {
                    *entry += q[i] * q[j].conj();
                }
            }
        }
        let trace = m[0][0].re + m[1][1].re;
        if trace.sqrt() < DENOMINATOR_CUTOFF {
            return Err(AmpError::EmptyQubitSubspace);
        }
        for row in m.iter_mut() {
            for entry in row.iter_mut() {
                *entry /= trace;
            }
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn hermiticity_error(&self) -> f64 {
        let diag = self.m[0][0].im.abs().max(self.m[1][1].im.abs());
        diag.max((self.m[0][1] - self.m[1][0].conj()).norm())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = self.m[0][1];
        let mean = (a + d) / 2.0;
        let radius = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized `ψ`.
    pub fn expectation(&self, psi: &[Complex64; 2]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += psi[i].conj() * self.m[i][j] * psi[j];
            }
        }
        acc.re
    }
}

/// Qubit part of the balanced `Out1`/`Out2` mixture, with `V → −V` applied to
/// `Out2`, normalized.
pub fn output_qubit_density(
    signal: &SignalState,
    params: AmplifierParams,
) -> Result<QubitDensity, AmpError> {
    let (out1, out2) = branch_states(signal, params);
    QubitDensity::mixture(&[[out1.h, out1.v], [out2.h, -out2.v]])
}

/// `(P_succ, F)` in the infinite-gain regime `r = 0` with the feed-forward
/// phase flip. `F` is `None` when the output qubit subspace is empty.
pub fn infinite_gain_metrics(beta_sq: f64, theta: f64, chi: f64) -> (f64, Option<f64>) {
    let (c2, s2) = populations(theta);
    let (sin_chi, cos_chi) = chi.sin_cos();
    let weight = cos_chi * cos_chi * c2 + sin_chi * sin_chi * s2;
    let overlap = cos_chi * c2 + sin_chi * s2;
    let fidelity = (weight.sqrt() >= DENOMINATOR_CUTOFF).then(|| (overlap * overlap / weight).min(1.0));
    (beta_sq * weight, fidelity)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub p_succ: f64,
    pub g_h: Gain,
    pub g_v: Gain,
    pub g_overall: Gain,
    /// `None` when the signal carries no qubit or the output subspace is empty.
    pub fidelity: Option<f64>,
    pub feedforward: bool,
    pub physical_filter: bool,
}

pub fn metrics(signal: &SignalState, params: AmplifierParams, feedforward: bool) -> MetricSet {
    let (g_h, g_v) = gains(params, feedforward);
    let fidelity = if signal.beta.norm() < DENOMINATOR_CUTOFF {
        None
    } else {
        fidelity(signal.theta, params, feedforward).ok()
    };
    MetricSet {
        p_succ: success_probability(signal, params, feedforward),
        g_h,
        g_v,
        g_overall: overall_gain(signal.theta, params, feedforward),
        fidelity,
        feedforward,
        physical_filter: filter_transmittances(params).physical,
    }
}
