//! Brute-force Fock-basis simulation of the amplifier circuit.
//!
//! States are sparse superpositions over photon-number configurations of the
//! twelve `(location, polarization)` modes. The optical network acts on
//! creation operators; each configuration is expanded monomial by monomial
//! with exact bosonic `√n!` normalization. Nothing here reuses the closed-form
//! expressions of [`crate::amp`].

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::amp::{
    AmplifierParams, Branch, BranchAmplitudes, FilterTransmittances, Gain, MetricSet, QubitDensity,
    SignalState, DENOMINATOR_CUTOFF,
};

/// Amplitudes below this modulus are dropped after each transformation.
pub const PRUNE_BELOW: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    In,
    A1,
    A2,
    Out,
    D1,
    D2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpticalMode {
    pub location: Location,
    pub polarization: Polarization,
}

pub const MODE_COUNT: usize = 12;

impl OpticalMode {
    pub const fn new(location: Location, polarization: Polarization) -> Self {
        Self {
            location,
            polarization,
        }
    }

    pub fn index(self) -> usize {
        2 * self.location as usize + self.polarization as usize
    }

    pub fn from_index(index: usize) -> Self {
        const LOCATIONS: [Location; 6] = [
            Location::In,
            Location::A1,
            Location::A2,
            Location::Out,
            Location::D1,
            Location::D2,
        ];
        let polarization = if index.is_multiple_of(2) {
            Polarization::H
        } else {
            Polarization::V
        };
        Self::new(LOCATIONS[index / 2], polarization)
    }
}

use Location::*;
use Polarization::{H, V};

/// Photon counts per mode, indexed by [`OpticalMode::index`].
pub type Occupation = [u8; MODE_COUNT];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonConfiguration {
    pub occupation: Occupation,
    pub amplitude: Complex64,
}

impl PhotonConfiguration {
    pub fn count(&self, mode: OpticalMode) -> u8 {
        self.occupation[mode.index()]
    }

    pub fn photons_at(&self, location: Location) -> u8 {
        self.count(OpticalMode::new(location, H)) + self.count(OpticalMode::new(location, V))
    }

    pub fn total_photons(&self) -> u32 {
        self.occupation.iter().map(|&n| n as u32).sum()
    }
}

/// Sparse superposition of Fock configurations with deterministic ordering.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Superposition {
    terms: BTreeMap<Occupation, Complex64>,
}

impl Superposition {
    pub fn vacuum() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert([0; MODE_COUNT], Complex64::new(1.0, 0.0));
        Self { terms }
    }

    pub fn add(&mut self, occupation: Occupation, amplitude: Complex64) {
        *self.terms.entry(occupation).or_default() += amplitude;
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, occupation: &Occupation) -> Complex64 {
        self.terms.get(occupation).copied().unwrap_or_default()
    }

    pub fn configurations(&self) -> impl Iterator<Item = PhotonConfiguration> + '_ {
        self.terms.iter().map(|(&occupation, &amplitude)| PhotonConfiguration {
            occupation,
            amplitude,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_BELOW);
    }

    /// Tensor product with another superposition over disjoint modes.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (a, &amp_a) in &self.terms {
            for (b, &amp_b) in &other.terms {
                let mut occ = *a;
                for (n, m) in occ.iter_mut().zip(b) {
                    *n += m;
                }
                out.add(occ, amp_a * amp_b);
            }
        }
        out.prune();
        out
    }

    /// Applies a linear map on creation operators, `a†_k → Σ c_kj a†_j`.
    /// Modes for which `image` returns `None` are left untouched.
    pub fn transform<F>(&self, image: F) -> Self
    where
        F: Fn(OpticalMode) -> Option<Vec<(OpticalMode, f64)>>,
    {
        let mut out = Self::default();
        for (occ, &amplitude) in &self.terms {
            // Expand Π (a†_k)^{n_k} / √(n_k!) into monomials of output operators.
            let mut monomials: Vec<(Occupation, f64)> = vec![([0; MODE_COUNT], 1.0)];
            let mut input_norm = 1.0;
            for (index, &n) in occ.iter().enumerate() {
                if n == 0 {
                    continue;
                }
                input_norm *= factorial(n);
                let mode = OpticalMode::from_index(index);
                let targets = image(mode).unwrap_or_else(|| vec![(mode, 1.0)]);
                for _ in 0..n {
                    let mut next = Vec::with_capacity(monomials.len() * targets.len());
                    for (mono, coef) in &monomials {
                        for &(target, c) in &targets {
                            let mut m = *mono;
                            m[target.index()] += 1;
                            next.push((m, coef * c));
                        }
                    }
                    monomials = next;
                }
            }
            let scale = amplitude / input_norm.sqrt();
            for (mono, coef) in monomials {
                // Π (a†_j)^{m_j} |0⟩ = Π √(m_j!) |m⟩
                let output_norm: f64 = mono.iter().map(|&m| factorial(m)).product();
                out.add(mono, scale * coef * output_norm.sqrt());
            }
        }
        out.prune();
        out
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

fn single(location: Location, polarization: Polarization) -> Occupation {
    let mut occ = [0; MODE_COUNT];
    occ[OpticalMode::new(location, polarization).index()] = 1;
    occ
}

fn pair(a: OpticalMode, b: OpticalMode) -> Occupation {
    let mut occ = [0; MODE_COUNT];
    occ[a.index()] += 1;
    occ[b.index()] += 1;
    occ
}

/// Signal on the `In` modes tensored with the ancilla pair on `A1`, `A2`.
pub fn build_input(signal: &SignalState, chi: f64) -> Superposition {
    let mut sig = Superposition::default();
    let [qh, qv] = signal.qubit();
    sig.add([0; MODE_COUNT], signal.alpha());
    sig.add(single(In, H), signal.beta() * qh);
    sig.add(single(In, V), signal.beta() * qv);
    sig.prune();

    let (sin_chi, cos_chi) = chi.sin_cos();
    let mut ancilla = Superposition::default();
    ancilla.add(
        pair(OpticalMode::new(A1, H), OpticalMode::new(A2, H)),
        Complex64::new(cos_chi, 0.0),
    );
    ancilla.add(
        pair(OpticalMode::new(A1, V), OpticalMode::new(A2, V)),
        Complex64::new(sin_chi, 0.0),
    );
    ancilla.prune();
    sig.tensor(&ancilla)
}

/// Elementary stages of the network, in order of traversal.
///
/// The input PBS sends `In,H` to PPBS1 and `In,V` to PPBS2, and the output
/// PBS merges the two `Out` paths back into one spatial mode; both are
/// bookkeeping only in this mode basis, so the PPBSs are the only stages
/// that change amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Reflectivity `r` for H, fully reflects V.
    Ppbs1,
    /// Reflectivity `r` for V, fully reflects H.
    Ppbs2,
}

pub const NETWORK: [Stage; 2] = [Stage::Ppbs1, Stage::Ppbs2];

pub fn stage_image(stage: Stage, mode: OpticalMode, r: f64) -> Option<Vec<(OpticalMode, f64)>> {
    let t = (1.0 - r * r).max(0.0).sqrt();
    let m = OpticalMode::new;
    match (stage, mode.location, mode.polarization) {
        (Stage::Ppbs1, In, H) => Some(vec![(m(Out, H), r), (m(D1, H), t)]),
        (Stage::Ppbs1, A1, H) => Some(vec![(m(D1, H), -r), (m(Out, H), t)]),
        (Stage::Ppbs1, A1, V) => Some(vec![(m(D1, V), -1.0)]),
        (Stage::Ppbs2, In, V) => Some(vec![(m(Out, V), r), (m(D2, V), t)]),
        (Stage::Ppbs2, A2, V) => Some(vec![(m(D2, V), -r), (m(Out, V), t)]),
        (Stage::Ppbs2, A2, H) => Some(vec![(m(D2, H), -1.0)]),
        _ => None,
    }
}

pub fn apply_network(state: &Superposition, r: f64) -> Superposition {
    NETWORK
        .iter()
        .fold(state.clone(), |acc, &stage| acc.transform(|mode| stage_image(stage, mode, r)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorBasis {
    /// `(|H⟩ + |V⟩)/√2`
    D,
    /// `(|H⟩ − |V⟩)/√2`
    A,
}

impl DetectorBasis {
    fn overlap(self, polarization: Polarization) -> f64 {
        match (self, polarization) {
            (DetectorBasis::A, V) => -std::f64::consts::FRAC_1_SQRT_2,
            _ => std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DetectionPattern {
    pub d1: DetectorBasis,
    pub d2: DetectorBasis,
}

impl DetectionPattern {
    pub const ALL: [DetectionPattern; 4] = [
        DetectionPattern::new(DetectorBasis::D, DetectorBasis::D),
        DetectionPattern::new(DetectorBasis::A, DetectorBasis::A),
        DetectionPattern::new(DetectorBasis::D, DetectorBasis::A),
        DetectionPattern::new(DetectorBasis::A, DetectorBasis::D),
    ];

    pub const fn new(d1: DetectorBasis, d2: DetectorBasis) -> Self {
        Self { d1, d2 }
    }

    /// Same-basis coincidences herald `Out1`, orthogonal ones `Out2`.
    pub fn branch(self) -> Branch {
        if self.d1 == self.d2 {
            Branch::Out1
        } else {
            Branch::Out2
        }
    }
}

fn detected_polarization(config: &PhotonConfiguration, location: Location) -> Option<Polarization> {
    match (
        config.count(OpticalMode::new(location, H)),
        config.count(OpticalMode::new(location, V)),
    ) {
        (1, 0) => Some(H),
        (0, 1) => Some(V),
        _ => None,
    }
}

/// Projects `D1`, `D2` onto the pattern's polarizations, keeping only terms
/// with exactly one photon per detector, and returns the `Out` amplitudes.
pub fn postselect(state: &Superposition, pattern: DetectionPattern) -> BranchAmplitudes {
    let mut out = BranchAmplitudes {
        vac: Complex64::default(),
        h: Complex64::default(),
        v: Complex64::default(),
        branch: pattern.branch(),
    };
    for config in state.configurations() {
        let (Some(p1), Some(p2)) = (
            detected_polarization(&config, D1),
            detected_polarization(&config, D2),
        ) else {
            continue;
        };
        if config.photons_at(In) + config.photons_at(A1) + config.photons_at(A2) != 0 {
            continue;
        }
        let amplitude = config.amplitude * pattern.d1.overlap(p1) * pattern.d2.overlap(p2);
        match (config.count(OpticalMode::new(Out, H)), config.count(OpticalMode::new(Out, V))) {
            (0, 0) => out.vac += amplitude,
            (1, 0) => out.h += amplitude,
            (0, 1) => out.v += amplitude,
            _ => {}
        }
    }
    out
}

/// All four heralded branches, in [`DetectionPattern::ALL`] order.
pub fn heralded_branches(signal: &SignalState, params: AmplifierParams) -> [BranchAmplitudes; 4] {
    let output = apply_network(&build_input(signal, params.chi()), params.r());
    DetectionPattern::ALL.map(|pattern| postselect(&output, pattern))
}

/// Qubit vector of a heralded branch after the free `V → −V` flip on `Out2`.
fn phase_corrected(branch: &BranchAmplitudes) -> [Complex64; 2] {
    match branch.branch {
        Branch::Out2 | Branch::Out2FF => [branch.h, -branch.v],
        Branch::Out1 | Branch::Out1FF => [branch.h, branch.v],
    }
}

/// Overall gain measured on a balanced probe `(|0⟩ + |Q(θ, φ)⟩)/√2`.
fn probe_gain(theta: f64, phi: f64, params: AmplifierParams) -> Gain {
    let probe = SignalState::from_beta_sq(0.5, theta, phi).expect("probe signal is valid");
    let branches = heralded_branches(&probe, params);
    let vacuum: f64 = branches.iter().map(|b| b.vac.norm_sqr()).sum();
    let qubit: f64 = branches.iter().map(BranchAmplitudes::qubit_norm_sqr).sum();
    if vacuum == 0.0 {
        Gain::Infinite
    } else {
        Gain::Finite(qubit / vacuum)
    }
}

/// Filtrations read off the heralded amplitudes of H and V probes.
pub fn oracle_filter(params: AmplifierParams) -> FilterTransmittances {
    let ratio = |theta: f64, sign: f64, pick: fn(&BranchAmplitudes) -> Complex64| {
        let probe = SignalState::from_beta_sq(1.0, theta, 0.0).expect("probe signal is valid");
        let [dd, _, da, _] = heralded_branches(&probe, params);
        let (num, den) = (sign * pick(&da).re, pick(&dd).re);
        if den.abs() < DENOMINATOR_CUTOFF {
            (num.abs() < DENOMINATOR_CUTOFF).then_some(1.0)
        } else {
            Some(num / den)
        }
    };
    // Out1 carries x₊, y₊ and Out2 carries x₋, −y₋, each times β/2 and the
    // probe's polarization amplitude.
    let tau_h = ratio(0.0, 1.0, |b| 2.0 * b.h);
    let tau_v = ratio(std::f64::consts::PI, -1.0, |b| 2.0 * b.v);
    let physical = matches!((tau_h, tau_v), (Some(h), Some(v)) if h.abs() <= 1.0 + 1e-12 && v.abs() <= 1.0 + 1e-12);
    FilterTransmittances {
        tau_h,
        tau_v,
        physical,
    }
}

/// Metrics without lossy feed-forward, assembled purely from enumerated
/// detection patterns.
pub fn oracle_metrics(signal: &SignalState, params: AmplifierParams) -> MetricSet {
    let branches = heralded_branches(signal, params);
    let p_succ = branches.iter().map(BranchAmplitudes::norm_sqr).sum();
    let vectors: Vec<[Complex64; 2]> = branches.iter().map(phase_corrected).collect();
    let fidelity = QubitDensity::mixture(&vectors)
        .ok()
        .map(|rho| rho.expectation(&signal.qubit()).clamp(0.0, 1.0));
    MetricSet {
        p_succ,
        g_h: probe_gain(0.0, 0.0, params),
        g_v: probe_gain(std::f64::consts::PI, 0.0, params),
        g_overall: probe_gain(signal.theta(), signal.phi(), params),
        fidelity,
        feedforward: false,
        physical_filter: oracle_filter(params).physical,
    }
}
