#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use qamp::{AmplifierParams, SignalState};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 42;

pub fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED)
}

/// Uniform over the Bloch sphere in `(θ, φ)` coordinates, random complex
/// `α, β` with `|α|² + |β|² = 1`.
pub fn random_signal(rng: &mut impl Rng) -> SignalState {
    let beta_sq: f64 = rng.gen_range(0.0..=1.0);
    let a = Complex64::from_polar((1.0 - beta_sq).sqrt(), rng.gen_range(0.0..2.0 * PI));
    let b = Complex64::from_polar(beta_sq.sqrt(), rng.gen_range(0.0..2.0 * PI));
    let theta = (1.0 - 2.0 * rng.gen::<f64>()).clamp(-1.0, 1.0).acos();
    let phi = rng.gen_range(0.0..2.0 * PI);
    SignalState::new(a, b, theta, phi).unwrap()
}

pub fn random_params(rng: &mut impl Rng) -> AmplifierParams {
    AmplifierParams::new(rng.gen_range(0.0..=FRAC_PI_4), rng.gen_range(0.0..=1.0)).unwrap()
}
