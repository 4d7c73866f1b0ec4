//! Constrained optimization over the device knobs: determinism, constraint
//! re-checks and convergence under grid refinement.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use qamp::amp;
use qamp::sweep::{self, GainConstraint, SweepSpec, Target};
use qamp::tradeoff::{self, CurveSpec, StateKnowledge};
use qamp::vmf::{self, KnowledgePrior, QuadratureSpec};
use qamp::{Gain, SignalState};

fn spec(theta: f64, steps: usize) -> SweepSpec {
    SweepSpec::new(SignalState::from_beta_sq(0.5, theta, 0.0).unwrap(), true).with_steps(steps, steps)
}

#[test]
fn threshold_converges_within_gain_band() {
    // Dense 1D root-finding along gain level sets: the exact target, and the
    // minimum over the ±0.05 dB band.
    let cases = [
        (FRAC_PI_4, 10.0, 0.874_645_795_442_580_3, 0.874_438_573_393_685),
        (PI / 3.0, 3.0, 0.863_986_968_045_916_8, 0.863_112_490_671_633_9),
        (PI / 3.0, 20.0, 0.753_686_271_762_344_8, 0.753_644_776_045_209_3),
    ];
    for (theta, db, exact, band) in cases {
        let mut errors = Vec::new();
        for steps in [51, 201, 401] {
            let t = sweep::threshold_curve(&[Gain::from_db(db)], &spec(theta, steps)).unwrap();
            let f = t[0].1.unwrap();
            assert!(f <= exact + 1e-9 && f >= band - 1e-9, "theta {theta} db {db}: {f}");
            errors.push(f - band);
        }
        assert!(errors[2] <= 5e-4, "theta {theta} db {db}: {errors:?}");
        assert!(errors[2] <= errors[0] + 1e-9, "theta {theta} db {db}: {errors:?}");
    }
}

#[test]
fn optimum_rechecks_through_closed_form() {
    let s = spec(PI / 3.0, 201);
    for (f, db) in [(0.9, 10.0), (0.97, 3.0), (0.95, 6.0)] {
        let target = Target::new(f, Gain::from_db(db));
        let opt = sweep::max_psucc_at(f, Gain::from_db(db), &s, true).unwrap();
        let best = opt.best.expect("target is reachable");
        let m = amp::metrics(&s.signal, best.params(), true);
        assert!((m.p_succ - best.p_succ).abs() <= 1e-14);
        assert!((m.fidelity.unwrap() - f).abs() <= target.tolerances.f_tol);
        assert!(sweep::meets_gain(m.g_overall, target.gain, GainConstraint::Equality, target.tolerances.g_tol_db));
    }
}

#[test]
fn results_are_deterministic() {
    let s = spec(1.1, 121);
    let a = sweep::max_psucc_at(0.93, Gain::from_db(7.0), &s, true).unwrap();
    let b = sweep::max_psucc_at(0.93, Gain::from_db(7.0), &s, true).unwrap();
    assert_eq!(a, b);
    assert_eq!(sweep::grid_sweep(&s).unwrap(), sweep::grid_sweep(&s).unwrap());
}

#[test]
fn at_least_never_beats_equality_on_reachability() {
    let s = spec(PI / 3.0, 101);
    let gain = Gain::from_db(10.0);
    let evaluator = s.evaluator();
    let landscape = sweep::Landscape::new(&evaluator, s.grid().unwrap());
    for f in [0.8, 0.9, 0.99] {
        let eq = landscape.maximize(&Target::new(f, gain), false);
        let ge = landscape.maximize(
            &Target {
                constraint: GainConstraint::AtLeast,
                ..Target::new(f, gain)
            },
            false,
        );
        if let Some(eq) = eq.best {
            assert!(ge.best.unwrap().p_succ >= eq.p_succ);
        }
    }
}

#[test]
fn averaged_curve_rechecks_through_prior() {
    let mut cs = CurveSpec::new(
        StateKnowledge::Prior(KnowledgePrior::new(3.0).unwrap()),
        Gain::from_db(10.0),
        0.5,
    );
    cs.grid = sweep::Grid::new(101, 101).unwrap();
    cs.quadrature = QuadratureSpec::new(64).unwrap();
    cs.f_grid = vec![0.8, 0.85, 0.9, 0.95, 1.0];
    let curve = tradeoff::averaged_tradeoff_curve(&cs).unwrap();
    assert_eq!(curve.len(), 5);
    for c in curve.iter().filter(|c| c.reachable()) {
        let best = c.best.unwrap();
        let m = vmf::average_metrics(best.params(), KnowledgePrior::new(3.0).unwrap(), 0.5, cs.quadrature, true);
        assert!((m.p_succ - best.p_succ).abs() <= 1e-14);
        assert!((m.fidelity.unwrap() - c.f).abs() <= cs.tolerances.f_tol);
        assert!(sweep::meets_gain(m.gain, cs.g_target, cs.constraint, cs.tolerances.g_tol_db));
    }
}

#[test]
fn balanced_state_curve_is_flat_at_infinite_gain() {
    let curve = tradeoff::infinite_gain_curve(FRAC_PI_2, 0.5, 401).unwrap();
    assert!(curve.iter().all(|c| (c.p().unwrap() - 0.25).abs() <= 1e-15));
}
