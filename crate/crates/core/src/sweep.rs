//! Grid sweeps over the device knobs `(χ, r)` and constrained maximization of
//! success probability.
//!
//! The optimizer is generic over an [`Evaluate`] implementation so the same
//! machinery serves fixed input states ([`FixedState`]) and prior-averaged
//! metrics ([`crate::tradeoff::PriorAveraged`]).
//!
//! Targets fix both fidelity and gain, so in the 2-parameter family the
//! feasible set is a handful of isolated points. The grid finds candidates
//! within tolerance; the optional refinement runs a penalized Nelder–Mead
//! search from the best feasible cell and from the local minima of the
//! constraint violation, and keeps whichever feasible point has the largest
//! success probability.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;

use crate::amp::{self, AmplifierParams, Gain, SignalState};
use crate::error::AmpError;
use crate::simplex::{self, SimplexOptions};

pub const DEFAULT_STEPS: usize = 401;
pub const DEFAULT_F_TOL: f64 = 5e-4;
pub const DEFAULT_G_TOL_DB: f64 = 0.05;
/// Weight of the squared constraint residuals in the refinement objective.
pub const PENALTY_WEIGHT: f64 = 1e6;
pub const REFINE_ITERATIONS: usize = 200;
/// Number of violation minima used as extra refinement starts.
pub const REFINE_SEEDS: usize = 8;

const UNDEFINED_PENALTY: f64 = 1e12;
const BISECTION_STEPS: usize = 60;

/// One evaluated setting of the device knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub chi: f64,
    pub r: f64,
    pub fidelity: Option<f64>,
    pub gain: Gain,
    pub p_succ: f64,
    pub physical_filter: bool,
}

impl TradeoffPoint {
    pub fn params(&self) -> AmplifierParams {
        AmplifierParams::new(self.chi, self.r).expect("grid points are valid")
    }
}

/// Maps device knobs to the figures of merit being optimized.
pub trait Evaluate: Sync {
    fn evaluate(&self, params: AmplifierParams) -> TradeoffPoint;
}

/// Metrics of a single known input state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedState {
    pub signal: SignalState,
    pub feedforward: bool,
}

impl Evaluate for FixedState {
    fn evaluate(&self, params: AmplifierParams) -> TradeoffPoint {
        let m = amp::metrics(&self.signal, params, self.feedforward);
        TradeoffPoint {
            chi: params.chi(),
            r: params.r(),
            fidelity: m.fidelity,
            gain: m.g_overall,
            p_succ: m.p_succ,
            physical_filter: m.physical_filter,
        }
    }
}

/// Uniform grid with `χ ∈ [0, π/4]` and `r ∈ [0, 1]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub chi_steps: usize,
    pub r_steps: usize,
}

impl Grid {
    pub fn new(chi_steps: usize, r_steps: usize) -> Result<Self, AmpError> {
        if chi_steps < 2 || r_steps < 2 {
            return Err(AmpError::InvalidParameter(format!(
                "grid needs at least 2 steps per axis, got {chi_steps} x {r_steps}"
            )));
        }
        Ok(Self { chi_steps, r_steps })
    }

    pub fn len(&self) -> usize {
        self.chi_steps * self.r_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn chi(&self, i: usize) -> f64 {
        FRAC_PI_4 * (i as f64 / (self.chi_steps - 1) as f64)
    }

    pub fn r(&self, j: usize) -> f64 {
        j as f64 / (self.r_steps - 1) as f64
    }

    pub fn chi_step(&self) -> f64 {
        FRAC_PI_4 / (self.chi_steps - 1) as f64
    }

    pub fn r_step(&self) -> f64 {
        1.0 / (self.r_steps - 1) as f64
    }

    /// Chi-major flat index.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.r_steps + j
    }

    pub fn params(&self, i: usize, j: usize) -> AmplifierParams {
        AmplifierParams::new(self.chi(i), self.r(j)).expect("grid points are valid")
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            chi_steps: DEFAULT_STEPS,
            r_steps: DEFAULT_STEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub chi_steps: usize,
    pub r_steps: usize,
    pub feedforward: bool,
    pub signal: SignalState,
}

impl SweepSpec {
    pub fn new(signal: SignalState, feedforward: bool) -> Self {
        Self {
            chi_steps: DEFAULT_STEPS,
            r_steps: DEFAULT_STEPS,
            feedforward,
            signal,
        }
    }

    pub fn with_steps(mut self, chi_steps: usize, r_steps: usize) -> Self {
        self.chi_steps = chi_steps;
        self.r_steps = r_steps;
        self
    }

    pub fn grid(&self) -> Result<Grid, AmpError> {
        Grid::new(self.chi_steps, self.r_steps)
    }

    pub fn evaluator(&self) -> FixedState {
        FixedState {
            signal: self.signal,
            feedforward: self.feedforward,
        }
    }
}

/// Evaluates every grid point, chi-major then r. Points are computed in
/// parallel but returned in grid order.
pub fn sweep<E: Evaluate>(evaluator: &E, grid: Grid) -> Vec<TradeoffPoint> {
    (0..grid.len())
        .into_par_iter()
        .map(|k| evaluator.evaluate(grid.params(k / grid.r_steps, k % grid.r_steps)))
        .collect()
}

pub fn grid_sweep(spec: &SweepSpec) -> Result<Vec<TradeoffPoint>, AmpError> {
    Ok(sweep(&spec.evaluator(), spec.grid()?))
}

/// How a finite gain target is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainConstraint {
    /// Gain within `g_tol_db` of the target.
    #[default]
    Equality,
    /// Gain no lower than the target minus `g_tol_db`.
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub f_tol: f64,
    pub g_tol_db: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            f_tol: DEFAULT_F_TOL,
            g_tol_db: DEFAULT_G_TOL_DB,
        }
    }
}

/// Signed gain residual in dB, or `None` when the point cannot satisfy the
/// gain target at all. Infinite targets only match infinite gains.
fn gain_residual(gain: Gain, target: Gain, constraint: GainConstraint) -> Option<f64> {
    match (target, gain) {
        (Gain::Infinite, Gain::Infinite) => Some(0.0),
        (Gain::Infinite, Gain::Finite(_)) => None,
        (Gain::Finite(_), Gain::Infinite) => match constraint {
            GainConstraint::Equality => None,
            GainConstraint::AtLeast => Some(0.0),
        },
        (Gain::Finite(t), Gain::Finite(g)) => {
            let d = 10.0 * (g / t).log10();
            if !d.is_finite() {
                return None;
            }
            Some(match constraint {
                GainConstraint::Equality => d,
                GainConstraint::AtLeast => d.min(0.0),
            })
        }
    }
}

/// Gain-only feasibility test shared by the optimizer and the threshold scan.
pub fn meets_gain(gain: Gain, target: Gain, constraint: GainConstraint, g_tol_db: f64) -> bool {
    gain_residual(gain, target, constraint).is_some_and(|d| d.abs() <= g_tol_db)
}

/// Fidelity and gain constraints for a maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub fidelity: f64,
    pub gain: Gain,
    pub constraint: GainConstraint,
    pub tolerances: Tolerances,
}

impl Target {
    pub fn new(fidelity: f64, gain: Gain) -> Self {
        Self {
            fidelity,
            gain,
            constraint: GainConstraint::Equality,
            tolerances: Tolerances::default(),
        }
    }

    pub fn satisfied_by(&self, point: &TradeoffPoint) -> bool {
        point
            .fidelity
            .is_some_and(|f| (f - self.fidelity).abs() <= self.tolerances.f_tol)
            && meets_gain(point.gain, self.gain, self.constraint, self.tolerances.g_tol_db)
    }

    /// Constraint residuals scaled by their tolerances; `∞` if unsatisfiable.
    fn violation(&self, point: &TradeoffPoint) -> f64 {
        match (point.fidelity, gain_residual(point.gain, self.gain, self.constraint)) {
            (Some(f), Some(dg)) => {
                ((f - self.fidelity) / self.tolerances.f_tol).powi(2)
                    + (dg / self.tolerances.g_tol_db).powi(2)
            }
            _ => f64::INFINITY,
        }
    }

    /// Minimized by the refinement: `−P + λ(ΔF² + ΔG_dB²)`.
    fn penalized(&self, point: &TradeoffPoint) -> f64 {
        match (point.fidelity, gain_residual(point.gain, self.gain, self.constraint)) {
            (Some(f), Some(dg)) => {
                -point.p_succ + PENALTY_WEIGHT * ((f - self.fidelity).powi(2) + dg * dg)
            }
            _ => UNDEFINED_PENALTY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedOptimum {
    /// `None` when no evaluated point meets both constraints.
    pub best: Option<TradeoffPoint>,
    pub f_target: f64,
    pub g_target: Gain,
    pub f_tol: f64,
    pub g_tol: f64,
}

impl ConstrainedOptimum {
    pub fn reachable(&self) -> bool {
        self.best.is_some()
    }
}

/// Strictly larger success probability wins, so earlier candidates (lower χ,
/// then lower r for grid points) keep ties.
fn improves(candidate: &TradeoffPoint, incumbent: Option<&TradeoffPoint>) -> bool {
    incumbent.is_none_or(|best| candidate.p_succ > best.p_succ)
}

/// A precomputed sweep that answers many constrained queries.
pub struct Landscape<'a, E: Evaluate> {
    evaluator: &'a E,
    grid: Grid,
    points: Vec<TradeoffPoint>,
}

impl<'a, E: Evaluate> Landscape<'a, E> {
    pub fn new(evaluator: &'a E, grid: Grid) -> Self {
        let points = sweep(evaluator, grid);
        Self {
            evaluator,
            grid,
            points,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn points(&self) -> &[TradeoffPoint] {
        &self.points
    }

    pub fn evaluator(&self) -> &E {
        self.evaluator
    }

    fn at(&self, i: usize, j: usize) -> &TradeoffPoint {
        &self.points[self.grid.index(i, j)]
    }

    /// Grid cells eligible for a target: only the `r = 0` row can carry an
    /// infinite gain, so infinite targets search that row alone.
    fn candidate_cells(&self, gain: Gain) -> Vec<(usize, usize)> {
        if gain.is_infinite() {
            (0..self.grid.chi_steps).map(|i| (i, 0)).collect()
        } else {
            (0..self.grid.chi_steps)
                .flat_map(|i| (0..self.grid.r_steps).map(move |j| (i, j)))
                .collect()
        }
    }

    /// Local minima of the constraint violation over the grid (8-neighbour,
    /// or 2-neighbour along the `r = 0` row), best first.
    fn violation_minima(&self, target: &Target) -> Vec<(usize, usize)> {
        let infinite = target.gain.is_infinite();
        let violation = |i: usize, j: usize| target.violation(self.at(i, j));
        let mut minima: Vec<(f64, usize, usize)> = Vec::new();
        for (i, j) in self.candidate_cells(target.gain) {
            let v = violation(i, j);
            if !v.is_finite() {
                continue;
            }
            let own = self.grid.index(i, j);
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if (di, dj) == (0, 0) || (infinite && dj != 0) {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0
                        || nj < 0
                        || ni >= self.grid.chi_steps as i64
                        || nj >= self.grid.r_steps as i64
                    {
                        continue;
                    }
                    let (ni, nj) = (ni as usize, nj as usize);
                    let nv = violation(ni, nj);
                    if nv < v || (nv == v && self.grid.index(ni, nj) < own) {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                minima.push((v, i, j));
            }
        }
        minima.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        minima.into_iter().map(|(_, i, j)| (i, j)).collect()
    }

    fn refine_from(&self, target: &Target, start: &TradeoffPoint) -> TradeoffPoint {
        let options = SimplexOptions {
            max_iterations: REFINE_ITERATIONS,
            ..Default::default()
        };
        let eval = |chi: f64, r: f64| {
            self.evaluator
                .evaluate(AmplifierParams::new(chi, r).expect("simplex stays in bounds"))
        };
        if target.gain.is_infinite() {
            let res = simplex::minimize(
                |x| target.penalized(&eval(x[0], 0.0)),
                &[start.chi],
                &[self.grid.chi_step()],
                &[0.0],
                &[FRAC_PI_4],
                options,
            );
            eval(res.x[0], 0.0)
        } else {
            let res = simplex::minimize(
                |x| target.penalized(&eval(x[0], x[1])),
                &[start.chi, start.r],
                &[self.grid.chi_step(), self.grid.r_step()],
                &[0.0, 0.0],
                &[FRAC_PI_4, 1.0],
                options,
            );
            eval(res.x[0], res.x[1])
        }
    }

    pub fn maximize(&self, target: &Target, refine: bool) -> ConstrainedOptimum {
        let mut best: Option<TradeoffPoint> = None;
        for (i, j) in self.candidate_cells(target.gain) {
            let p = self.at(i, j);
            if target.satisfied_by(p) && improves(p, best.as_ref()) {
                best = Some(*p);
            }
        }

        if refine {
            let mut starts: Vec<TradeoffPoint> = best.into_iter().collect();
            starts.extend(
                self.violation_minima(target)
                    .into_iter()
                    .take(REFINE_SEEDS)
                    .map(|(i, j)| *self.at(i, j)),
            );
            for start in starts {
                let refined = self.refine_from(target, &start);
                if target.satisfied_by(&refined) && improves(&refined, best.as_ref()) {
                    best = Some(refined);
                }
            }
        }

        ConstrainedOptimum {
            best,
            f_target: target.fidelity,
            g_target: target.gain,
            f_tol: target.tolerances.f_tol,
            g_tol: target.tolerances.g_tol_db,
        }
    }

    /// Point on the gain level set between two r-adjacent grid cells.
    fn bisect_gain(&self, i: usize, j: usize, target: Gain) -> Option<TradeoffPoint> {
        let chi = self.grid.chi(i);
        let residual = |p: &TradeoffPoint| gain_residual(p.gain, target, GainConstraint::Equality);
        let (mut lo, mut hi) = (self.grid.r(j), self.grid.r(j + 1));
        let mut d_lo = residual(self.at(i, j))?;
        let d_hi = residual(self.at(i, j + 1))?;
        if d_lo == 0.0 {
            return Some(*self.at(i, j));
        }
        if d_lo.signum() == d_hi.signum() {
            return None;
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let p = self.evaluator.evaluate(AmplifierParams::new(chi, mid).ok()?);
            let d = residual(&p)?;
            if d.signum() == d_lo.signum() {
                lo = mid;
                d_lo = d;
            } else {
                hi = mid;
            }
        }
        Some(self.evaluator.evaluate(AmplifierParams::new(chi, 0.5 * (lo + hi)).ok()?))
    }

    /// Smallest fidelity among settings meeting the gain constraint.
    ///
    /// Grid cells within tolerance are supplemented, for finite targets, by the
    /// exact gain level set traced column by column, so the estimate does not
    /// depend on the grid happening to land inside the tolerance band.
    pub fn min_fidelity(&self, gain: Gain, constraint: GainConstraint, g_tol_db: f64) -> Option<f64> {
        let mut f_min: Option<f64> = None;
        let mut consider = |p: &TradeoffPoint| {
            if let Some(f) = p.fidelity {
                f_min = Some(f_min.map_or(f, |m: f64| m.min(f)));
            }
        };
        for (i, j) in self.candidate_cells(gain) {
            let p = self.at(i, j);
            if meets_gain(p.gain, gain, constraint, g_tol_db) {
                consider(p);
            }
        }
        if !gain.is_infinite() {
            let crossings: Vec<TradeoffPoint> = (0..self.grid.chi_steps)
                .into_par_iter()
                .flat_map_iter(|i| {
                    (0..self.grid.r_steps - 1).filter_map(move |j| self.bisect_gain(i, j, gain))
                })
                .collect();
            crossings.iter().for_each(&mut consider);
        }
        f_min
    }
}

pub fn max_psucc_at(
    f_target: f64,
    g_target: Gain,
    spec: &SweepSpec,
    refine: bool,
) -> Result<ConstrainedOptimum, AmpError> {
    let evaluator = spec.evaluator();
    let landscape = Landscape::new(&evaluator, spec.grid()?);
    Ok(landscape.maximize(&Target::new(f_target, g_target), refine))
}

/// `(gain, f_min)` per requested gain; fidelities below `f_min` are
/// unreachable at that gain. `None` when no setting meets the gain.
pub fn threshold_curve(gains: &[Gain], spec: &SweepSpec) -> Result<Vec<(Gain, Option<f64>)>, AmpError> {
    let evaluator = spec.evaluator();
    let landscape = Landscape::new(&evaluator, spec.grid()?);
    Ok(gains
        .iter()
        .map(|&g| {
            (
                g,
                landscape.min_fidelity(g, GainConstraint::Equality, DEFAULT_G_TOL_DB),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn spec(theta: f64) -> SweepSpec {
        SweepSpec::new(SignalState::from_beta_sq(0.5, theta, 0.0).unwrap(), true)
    }

    #[test]
    fn corner_points_of_a_tiny_sweep() {
        let points = grid_sweep(&spec(FRAC_PI_2).with_steps(2, 2)).unwrap();
        assert_eq!(points.len(), 4);
        let corner = points[0];
        assert_eq!((corner.chi, corner.r), (0.0, 0.0));
        assert_abs_diff_eq!(corner.fidelity.unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(corner.p_succ, 0.25, epsilon = 1e-15);
        assert_eq!(corner.gain, Gain::Infinite);
        // χ-major order.
        assert_eq!((points[1].chi, points[1].r), (0.0, 1.0));
        assert_eq!((points[2].chi, points[2].r), (FRAC_PI_4, 0.0));
        // The (π/4, 1) corner has no qubit output with feed-forward.
        assert_eq!(points[3].fidelity, None);
    }

    #[test]
    fn sweep_length_is_total() {
        for (a, b) in [(2, 7), (13, 3), (5, 5)] {
            assert_eq!(grid_sweep(&spec(1.0).with_steps(a, b)).unwrap().len(), a * b);
        }
        assert!(grid_sweep(&spec(1.0).with_steps(1, 5)).is_err());
    }

    #[test]
    fn infinite_gain_row_spans_known_fidelities() {
        let points = grid_sweep(&spec(PI / 4.0).with_steps(41, 3)).unwrap();
        let row: Vec<f64> = points
            .iter()
            .filter(|p| p.r == 0.0)
            .map(|p| p.fidelity.unwrap())
            .collect();
        assert_abs_diff_eq!(row[0], (PI / 8.0).cos().powi(2), epsilon = 1e-14);
        assert_abs_diff_eq!(*row.last().unwrap(), 1.0, epsilon = 1e-14);
        assert!(row.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn unit_fidelity_at_infinite_gain() {
        let opt = max_psucc_at(1.0, Gain::Infinite, &spec(PI / 4.0), true).unwrap();
        let best = opt.best.unwrap();
        // P falls with χ while F ≈ 1 − O((π/4 − χ)²), so the optimum sits at
        // the lower edge of the fidelity band, not at χ = π/4 where P = 1/4.
        assert_eq!(best.r, 0.0);
        assert!(1.0 - best.fidelity.unwrap() <= DEFAULT_F_TOL);
        assert!(best.chi < FRAC_PI_4 && best.chi > 0.7);
        // Band maximum from a dense 1D sweep.
        assert!(best.p_succ <= 0.261_426_898 && best.p_succ > 0.26);
    }

    #[test]
    fn threshold_fidelity_at_infinite_gain() {
        let f = (PI / 8.0).cos().powi(2);
        let opt = max_psucc_at(f, Gain::Infinite, &spec(PI / 4.0), true).unwrap();
        let best = opt.best.unwrap();
        assert_abs_diff_eq!(best.chi, 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(best.p_succ, 0.5 * f, epsilon = 1e-4);
    }

    #[test]
    fn low_fidelity_is_unreachable_at_infinite_gain() {
        let opt = max_psucc_at(0.5, Gain::Infinite, &spec(PI / 4.0), true).unwrap();
        assert!(!opt.reachable());
    }

    #[test]
    fn threshold_examples() {
        let t = threshold_curve(&[Gain::Infinite], &spec(PI / 4.0)).unwrap();
        assert_abs_diff_eq!(t[0].1.unwrap(), (PI / 8.0).cos().powi(2), epsilon = 1e-12);
        let t = threshold_curve(&[Gain::Infinite], &spec(FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(t[0].1.unwrap(), 0.5, epsilon = 1e-12);
        let gains = [Gain::from_db(3.0), Gain::from_db(10.0), Gain::Infinite];
        for (_, f) in threshold_curve(&gains, &spec(0.0).with_steps(101, 101)).unwrap() {
            assert_abs_diff_eq!(f.unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn refinement_never_loses_probability() {
        let s = spec(PI / 3.0).with_steps(61, 61);
        for (f, g) in [(0.95, 10.0), (0.99, 3.0), (0.9, 20.0)] {
            let raw = max_psucc_at(f, Gain::from_db(g), &s, false).unwrap();
            let refined = max_psucc_at(f, Gain::from_db(g), &s, true).unwrap();
            if let Some(raw) = raw.best {
                assert!(refined.best.unwrap().p_succ >= raw.p_succ - 1e-12);
            }
        }
    }

    #[test]
    fn gain_constraint_modes() {
        let t = Gain::from_db(10.0);
        assert!(meets_gain(Gain::from_db(10.04), t, GainConstraint::Equality, 0.05));
        assert!(!meets_gain(Gain::from_db(11.0), t, GainConstraint::Equality, 0.05));
        assert!(meets_gain(Gain::from_db(11.0), t, GainConstraint::AtLeast, 0.05));
        assert!(meets_gain(Gain::Infinite, t, GainConstraint::AtLeast, 0.05));
        assert!(!meets_gain(Gain::Infinite, t, GainConstraint::Equality, 0.05));
        assert!(!meets_gain(Gain::Finite(1e9), Gain::Infinite, GainConstraint::AtLeast, 0.05));
        assert!(!meets_gain(Gain::Finite(0.0), t, GainConstraint::AtLeast, 0.05));
    }
}
