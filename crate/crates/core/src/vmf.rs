//! Isotropic von Mises–Fisher prior on the Poincaré sphere, centered on `|H⟩`.
//!
//! `g(θ, κ) = κ / (4π sinh κ) · exp(κ cos θ)` per steradian. All metrics are
//! independent of `φ`, so averages reduce to one-dimensional integrals in
//! `u = cos θ` with weight `2π g`.

use std::f64::consts::PI;

use crate::amp::{self, AmplifierParams, Gain};
use crate::error::AmpError;

/// Below this concentration the closed forms switch to series expansions.
pub const SMALL_KAPPA: f64 = 1e-6;
/// `coth κ − 1/κ` loses digits to cancellation well above [`SMALL_KAPPA`].
const MEAN_COS_SERIES_BELOW: f64 = 1e-3;

pub const DEFAULT_NODES: usize = 256;
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnowledgePrior {
    kappa: f64,
}

impl KnowledgePrior {
    pub fn new(kappa: f64) -> Result<Self, AmpError> {
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(AmpError::InvalidParameter(format!(
                "kappa = {kappa} must be finite and non-negative"
            )));
        }
        Ok(Self { kappa })
    }

    pub fn uniform() -> Self {
        Self { kappa: 0.0 }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// `κ / (1 − e^{−2κ})`, continuous at `κ = 0`.
fn scaled_normalizer(kappa: f64) -> f64 {
    if kappa < SMALL_KAPPA {
        0.5 + kappa / 2.0 + kappa * kappa / 6.0
    } else {
        -kappa / (-2.0 * kappa).exp_m1()
    }
}

/// Density per steradian.
pub fn density(theta: f64, prior: KnowledgePrior) -> f64 {
    density_in_cos(theta.cos(), prior) / (2.0 * PI)
}

/// Density of `u = cos θ` on `[−1, 1]` after integrating out `φ`.
pub fn density_in_cos(u: f64, prior: KnowledgePrior) -> f64 {
    let k = prior.kappa;
    scaled_normalizer(k) * (k * (u - 1.0)).exp()
}

/// Probability mass within polar angle `θ` of the `H` pole.
pub fn cdf(theta: f64, prior: KnowledgePrior) -> f64 {
    let k = prior.kappa;
    let gap = 1.0 - theta.cos();
    let value = if k < f64::MIN_POSITIVE {
        gap / 2.0
    } else {
        (-k * gap).exp_m1() / (-2.0 * k).exp_m1()
    };
    value.clamp(0.0, 1.0)
}

/// Inverse of [`cdf`] for `0 < p < 1`.
pub fn quantile(p: f64, prior: KnowledgePrior) -> Result<f64, AmpError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AmpError::InvalidParameter(format!(
            "quantile level p = {p} must lie in (0, 1)"
        )));
    }
    let k = prior.kappa;
    let cos_theta = if k < f64::MIN_POSITIVE {
        1.0 - 2.0 * p
    } else {
        // ln((1 − p)e^κ + p e^{−κ}) / κ, rewritten to survive large κ.
        1.0 + (p * (-2.0 * k).exp_m1()).ln_1p() / k
    };
    Ok(cos_theta.clamp(-1.0, 1.0).acos())
}

/// `⟨cos θ⟩ = coth κ − 1/κ`.
pub fn mean_cos(prior: KnowledgePrior) -> f64 {
    let k = prior.kappa;
    if k < MEAN_COS_SERIES_BELOW {
        let k2 = k * k;
        k / 3.0 - k * k2 / 45.0 + 2.0 * k * k2 * k2 / 945.0
    } else {
        1.0 / k.tanh() - 1.0 / k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureScheme {
    GaussLegendreInCosTheta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub scheme: QuadratureScheme,
}

impl QuadratureSpec {
    pub fn new(nodes: usize) -> Result<Self, AmpError> {
        if nodes < MIN_NODES {
            return Err(AmpError::InvalidParameter(format!(
                "quadrature needs at least {MIN_NODES} nodes, got {nodes}"
            )));
        }
        Ok(Self {
            nodes,
            scheme: QuadratureScheme::GaussLegendreInCosTheta,
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: DEFAULT_NODES,
            scheme: QuadratureScheme::GaussLegendreInCosTheta,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule for expectations under one prior: `⟨f⟩ ≈ Σ wᵢ f(uᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorQuadrature {
    prior: KnowledgePrior,
    cos_theta: Vec<f64>,
    weights: Vec<f64>,
}

impl PriorQuadrature {
    pub fn new(prior: KnowledgePrior, quad: QuadratureSpec) -> Self {
        let (nodes, gl_weights) = gauss_legendre(quad.nodes);
        let weights = nodes
            .iter()
            .zip(&gl_weights)
            .map(|(&u, &w)| w * density_in_cos(u, prior))
            .collect();
        Self {
            prior,
            cos_theta: nodes,
            weights,
        }
    }

    pub fn prior(&self) -> KnowledgePrior {
        self.prior
    }

    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.cos_theta
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * f(u))
            .sum()
    }

    /// Like [`expectation`](Self::expectation) but `None` if `f` is undefined at any node.
    pub fn try_expectation<F: Fn(f64) -> Option<f64>>(&self, f: F) -> Option<f64> {
        let mut acc = 0.0;
        for (&u, &w) in self.cos_theta.iter().zip(&self.weights) {
            acc += w * f(u)?;
        }
        Some(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedMetrics {
    pub p_succ: f64,
    pub gain: Gain,
    /// `None` if the output qubit subspace is empty for some input state.
    pub fidelity: Option<f64>,
}

/// `⟨P⟩` and `⟨G⟩` use the closed forms linear in `⟨cos θ⟩`; `⟨F⟩` is integrated.
pub fn average_metrics_with(
    params: AmplifierParams,
    quadrature: &PriorQuadrature,
    beta_sq: f64,
    feedforward: bool,
) -> AveragedMetrics {
    let xy = amp::xy_coefficients(params);
    let c2 = (1.0 + mean_cos(quadrature.prior)) / 2.0;
    let s2 = 1.0 - c2;
    let qubit = if feedforward {
        xy.x_minus * xy.x_minus * c2 + xy.y_minus * xy.y_minus * s2
    } else {
        (xy.x_plus * xy.x_plus + xy.x_minus * xy.x_minus) / 2.0 * c2
            + (xy.y_plus * xy.y_plus + xy.y_minus * xy.y_minus) / 2.0 * s2
    };
    let p_succ = ((1.0 - beta_sq) * params.r() * params.r() + beta_sq * qubit).min(1.0);
    let gain = amp::overall_gain_from_populations(c2, s2, params, feedforward);
    let fidelity = quadrature.try_expectation(|u| {
        amp::fidelity_from_populations((1.0 + u) / 2.0, (1.0 - u) / 2.0, &xy, feedforward).ok()
    });
    AveragedMetrics {
        p_succ,
        gain,
        fidelity: fidelity.map(|f| f.clamp(0.0, 1.0)),
    }
}

pub fn average_metrics(
    params: AmplifierParams,
    prior: KnowledgePrior,
    beta_sq: f64,
    quad: QuadratureSpec,
    feedforward: bool,
) -> AveragedMetrics {
    average_metrics_with(params, &PriorQuadrature::new(prior, quad), beta_sq, feedforward)
}
