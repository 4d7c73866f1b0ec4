//! Success probability versus fidelity curves at fixed gain, for a known
//! input state or averaged over a von Mises–Fisher prior, and the merit
//! function `M = max(P·F) / P(F = 1)`.
//!
//! One `(χ, r)` setting serves the whole prior; nothing adapts per input
//! state.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;

use crate::amp::{self, AmplifierParams, Gain, SignalState};
use crate::error::AmpError;
use crate::sweep::{
    Evaluate, FixedState, GainConstraint, Grid, Landscape, Target, Tolerances, TradeoffPoint,
};
use crate::vmf::{self, KnowledgePrior, PriorQuadrature, QuadratureSpec};

pub const DEFAULT_CURVE_POINTS: usize = 200;
/// Stand-in for `κ → ∞`.
pub const LARGE_KAPPA: f64 = 1e3;

/// Prior-averaged metrics as an optimization objective.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorAveraged {
    quadrature: PriorQuadrature,
    beta_sq: f64,
    feedforward: bool,
}

impl PriorAveraged {
    pub fn new(prior: KnowledgePrior, quad: QuadratureSpec, beta_sq: f64, feedforward: bool) -> Self {
        Self {
            quadrature: PriorQuadrature::new(prior, quad),
            beta_sq,
            feedforward,
        }
    }
}

impl Evaluate for PriorAveraged {
    fn evaluate(&self, params: AmplifierParams) -> TradeoffPoint {
        let m = vmf::average_metrics_with(params, &self.quadrature, self.beta_sq, self.feedforward);
        TradeoffPoint {
            chi: params.chi(),
            r: params.r(),
            fidelity: m.fidelity,
            gain: m.gain,
            p_succ: m.p_succ,
            physical_filter: amp::filter_transmittances(params).physical,
        }
    }
}

/// What is known about the input qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateKnowledge {
    /// Exactly `|Q(θ, 0)⟩`.
    FixedTheta(f64),
    Prior(KnowledgePrior),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub knowledge: StateKnowledge,
    pub g_target: Gain,
    /// Fidelity targets; empty selects [`DEFAULT_CURVE_POINTS`] targets from
    /// the threshold estimate up to 1.
    pub f_grid: Vec<f64>,
    pub beta_sq: f64,
    pub feedforward: bool,
    pub grid: Grid,
    pub quadrature: QuadratureSpec,
    pub tolerances: Tolerances,
    pub constraint: GainConstraint,
}

impl CurveSpec {
    pub fn new(knowledge: StateKnowledge, g_target: Gain, beta_sq: f64) -> Self {
        Self {
            knowledge,
            g_target,
            f_grid: Vec::new(),
            beta_sq,
            feedforward: true,
            grid: Grid::default(),
            quadrature: QuadratureSpec::default(),
            tolerances: Tolerances::default(),
            constraint: GainConstraint::Equality,
        }
    }

    fn validate(&self) -> Result<(), AmpError> {
        if !(0.0..=1.0).contains(&self.beta_sq) {
            return Err(AmpError::InvalidParameter(format!(
                "|beta|^2 = {} must lie in [0, 1]",
                self.beta_sq
            )));
        }
        if self.f_grid.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(AmpError::InvalidParameter(
                "fidelity targets must lie in (0, 1]".into(),
            ));
        }
        if self.f_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AmpError::InvalidParameter(
                "fidelity targets must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Fidelity coordinate of the curve (the target, or the exact fidelity for
    /// [`infinite_gain_curve`]). NaN only where the fidelity is undefined.
    pub f: f64,
    pub best: Option<TradeoffPoint>,
}

impl CurvePoint {
    pub fn reachable(&self) -> bool {
        self.best.is_some()
    }

    pub fn p(&self) -> Option<f64> {
        self.best.map(|b| b.p_succ)
    }
}

/// `χ` swept over `[0, π/4]` at `r = 0`.
pub fn infinite_gain_curve(theta: f64, beta_sq: f64, chi_steps: usize) -> Result<Vec<CurvePoint>, AmpError> {
    if chi_steps < 2 {
        return Err(AmpError::InvalidParameter(format!(
            "chi_steps = {chi_steps} must be at least 2"
        )));
    }
    let signal = SignalState::from_beta_sq(beta_sq, theta, 0.0)?;
    let filter_ok = amp::filter_transmittances(AmplifierParams::new(0.0, 0.0)?).physical;
    Ok((0..chi_steps)
        .map(|i| {
            let chi = FRAC_PI_4 * (i as f64 / (chi_steps - 1) as f64);
            let (p, f) = amp::infinite_gain_metrics(signal.beta().norm_sqr(), theta, chi);
            CurvePoint {
                f: f.unwrap_or(f64::NAN),
                best: f.map(|f| TradeoffPoint {
                    chi,
                    r: 0.0,
                    fidelity: Some(f),
                    gain: Gain::Infinite,
                    p_succ: p,
                    physical_filter: filter_ok,
                }),
            }
        })
        .collect())
}

/// `n` evenly spaced targets from `lo` to 1 inclusive.
pub fn fidelity_targets(lo: f64, n: usize) -> Vec<f64> {
    let lo = lo.clamp(f64::MIN_POSITIVE, 1.0);
    if n <= 1 || lo >= 1.0 {
        return vec![1.0];
    }
    (0..n)
        .map(|k| {
            if k == n - 1 {
                1.0
            } else {
                lo + (1.0 - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn curve_on<E: Evaluate>(landscape: &Landscape<'_, E>, spec: &CurveSpec) -> Vec<CurvePoint> {
    let f_grid = if spec.f_grid.is_empty() {
        let threshold = landscape.min_fidelity(spec.g_target, spec.constraint, spec.tolerances.g_tol_db);
        // Nothing meets the gain: emit the full row count, all unreachable.
        let lo = threshold.unwrap_or(1.0 / DEFAULT_CURVE_POINTS as f64);
        fidelity_targets(lo, DEFAULT_CURVE_POINTS)
    } else {
        spec.f_grid.clone()
    };
    f_grid
        .par_iter()
        .map(|&f| {
            let target = Target {
                fidelity: f,
                gain: spec.g_target,
                constraint: spec.constraint,
                tolerances: spec.tolerances,
            };
            CurvePoint {
                f,
                best: landscape.maximize(&target, true).best,
            }
        })
        .collect()
}

/// Objective selected by a [`CurveSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum CurveObjective {
    Fixed(FixedState),
    Averaged(PriorAveraged),
}

impl CurveObjective {
    pub fn from_spec(spec: &CurveSpec) -> Result<Self, AmpError> {
        spec.validate()?;
        Ok(match spec.knowledge {
            StateKnowledge::FixedTheta(theta) => CurveObjective::Fixed(FixedState {
                signal: SignalState::from_beta_sq(spec.beta_sq, theta, 0.0)?,
                feedforward: spec.feedforward,
            }),
            StateKnowledge::Prior(prior) => CurveObjective::Averaged(PriorAveraged::new(
                prior,
                spec.quadrature,
                spec.beta_sq,
                spec.feedforward,
            )),
        })
    }
}

impl Evaluate for CurveObjective {
    fn evaluate(&self, params: AmplifierParams) -> TradeoffPoint {
        match self {
            CurveObjective::Fixed(e) => e.evaluate(params),
            CurveObjective::Averaged(e) => e.evaluate(params),
        }
    }
}

/// Maximum success probability at each fidelity target under the gain
/// constraint, one fixed `(χ, r)` per point.
pub fn averaged_tradeoff_curve(spec: &CurveSpec) -> Result<Vec<CurvePoint>, AmpError> {
    let objective = CurveObjective::from_spec(spec)?;
    Ok(curve_on(&Landscape::new(&objective, spec.grid), spec))
}

/// Threshold fidelity: the smallest fidelity reachable at the spec's gain.
pub fn threshold(spec: &CurveSpec) -> Result<Option<f64>, AmpError> {
    let objective = CurveObjective::from_spec(spec)?;
    Ok(Landscape::new(&objective, spec.grid).min_fidelity(
        spec.g_target,
        spec.constraint,
        spec.tolerances.g_tol_db,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritResult {
    pub merit: f64,
    /// Success probability of the unit-fidelity point.
    pub p_unit: f64,
    /// Curve point maximizing `P·F`.
    pub best: CurvePoint,
}

/// `max(P·F) / P(F = 1)` over the reachable points of a curve.
pub fn merit_from_curve(curve: &[CurvePoint]) -> Result<MeritResult, AmpError> {
    let p_unit = curve
        .iter()
        .filter(|c| c.f == 1.0)
        .find_map(CurvePoint::p)
        .ok_or(AmpError::UnreachableUnitFidelity)?;
    let mut best: Option<(f64, CurvePoint)> = None;
    for c in curve {
        if let Some(p) = c.p() {
            let product = p * c.f;
            if best.is_none_or(|(b, _)| product > b) {
                best = Some((product, *c));
            }
        }
    }
    let (product, best) = best.ok_or(AmpError::UnreachableUnitFidelity)?;
    Ok(MeritResult {
        merit: product / p_unit,
        p_unit,
        best,
    })
}

/// Merit for the spec's knowledge and gain. A unit-fidelity target is added
/// when the spec's fidelity grid lacks one.
pub fn merit(spec: &CurveSpec) -> Result<MeritResult, AmpError> {
    let mut spec = spec.clone();
    if !spec.f_grid.is_empty() && spec.f_grid.last() != Some(&1.0) {
        spec.f_grid.push(1.0);
    }
    merit_from_curve(&averaged_tradeoff_curve(&spec)?)
}

/// Fidelity at which the curve's success probability peaks.
pub fn peak(curve: &[CurvePoint]) -> Option<CurvePoint> {
    curve
        .iter()
        .filter(|c| c.reachable())
        .fold(None, |acc: Option<CurvePoint>, c| match acc {
            Some(a) if a.p() >= c.p() => Some(a),
            _ => Some(*c),
        })
}
