//! Knowledge prior: distribution identities and prior-averaged metrics.

use std::f64::consts::{FRAC_PI_4, PI};

use proptest::prelude::*;
use qamp::amp;
use qamp::vmf::{self, KnowledgePrior, PriorQuadrature, QuadratureSpec};
use qamp::{AmplifierParams, SignalState};

fn prior(k: f64) -> KnowledgePrior {
    KnowledgePrior::new(k).unwrap()
}

#[test]
fn mean_cos_matches_quadrature() {
    for k in [0.0, 1e-7, 1e-4, 0.5, 1.0, 3.0, 10.0, 100.0] {
        let q = PriorQuadrature::new(prior(k), QuadratureSpec::default());
        assert!((q.expectation(|u| u) - vmf::mean_cos(prior(k))).abs() <= 1e-10, "kappa {k}");
    }
}

#[test]
fn density_per_steradian_integrates_to_one() {
    // Midpoint rule in θ with the sin θ Jacobian.
    for k in [0.0, 1.0, 3.0, 10.0] {
        let n = 20_000;
        let h = PI / n as f64;
        let total: f64 = (0..n)
            .map(|i| {
                let theta = (i as f64 + 0.5) * h;
                2.0 * PI * vmf::density(theta, prior(k)) * theta.sin() * h
            })
            .sum();
        assert!((total - 1.0).abs() <= 1e-7, "kappa {k}: {total}");
    }
}

#[test]
fn averages_equal_pointwise_integrals() {
    let q = PriorQuadrature::new(prior(3.0), QuadratureSpec::default());
    for (chi, r) in [(0.0, 0.0), (0.2, 0.3), (FRAC_PI_4, 0.5), (0.6, 0.9)] {
        let params = AmplifierParams::new(chi, r).unwrap();
        for ff in [false, true] {
            let avg = vmf::average_metrics_with(params, &q, 0.4, ff);
            let p = q.expectation(|u| {
                let s = SignalState::from_beta_sq(0.4, u.clamp(-1.0, 1.0).acos(), 0.0).unwrap();
                amp::success_probability(&s, params, ff)
            });
            assert!((avg.p_succ - p).abs() <= 1e-12, "{params:?}");
            if let Some(g) = avg.gain.finite() {
                let direct = q.expectation(|u| {
                    amp::overall_gain(u.clamp(-1.0, 1.0).acos(), params, ff).finite().unwrap()
                });
                assert!((g - direct).abs() <= 1e-10 * g.max(1.0), "{params:?}");
            } else {
                assert_eq!(r, 0.0);
            }
        }
    }
}

#[test]
fn concentration_raises_mean_cos() {
    let values: Vec<f64> = [0.0, 0.1, 1.0, 3.0, 10.0, 1e3]
        .iter()
        .map(|&k| vmf::mean_cos(prior(k)))
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]));
    assert!(values.iter().all(|&m| (0.0..1.0).contains(&m)));
}

proptest! {
    #[test]
    fn quantile_inverts_cdf(k in 0.0..50.0f64, p in 0.001..0.999f64) {
        let theta = vmf::quantile(p, prior(k)).unwrap();
        prop_assert!((0.0..=PI).contains(&theta));
        prop_assert!((vmf::cdf(theta, prior(k)) - p).abs() <= 1e-9);
    }

    #[test]
    fn cdf_is_monotone(k in 0.0..50.0f64, a in 0.0..=PI, b in 0.0..=PI) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(vmf::cdf(lo, prior(k)) <= vmf::cdf(hi, prior(k)));
    }

    #[test]
    fn averaged_metrics_in_range(k in 0.0..20.0f64, chi in 0.0..=FRAC_PI_4, r in 0.0..=1.0f64, beta_sq in 0.0..=1.0f64, ff: bool) {
        let m = vmf::average_metrics(AmplifierParams::new(chi, r).unwrap(), prior(k), beta_sq, QuadratureSpec::new(32).unwrap(), ff);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&m.p_succ));
        if let Some(f) = m.fidelity {
            prop_assert!((0.0..=1.0).contains(&f));
        }
        prop_assert!(m.gain.finite().is_none_or(|g| g >= 0.0));
    }
}
