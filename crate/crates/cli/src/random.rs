use asym_core::{Complex, GaussianTerm, RabiProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A decay-free Gaussian-sum profile with an open excited channel, and a
/// velocity to probe it at. Same seed, same case.
pub fn random_case(seed: u64) -> (RabiProfile, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: f64 = rng.gen_range(2.0..20.0);
    let count = rng.gen_range(1..=3);
    let scale = 3.0 * v;
    let terms = (0..count)
        .map(|_| {
            let weight = Complex::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
            GaussianTerm::new(weight, rng.gen_range(-0.4..0.4), rng.gen_range(0.1..0.3)).expect("valid term")
        })
        .collect();
    // open channel: 4 v^2 + 8 Delta > 0
    let detuning = rng.gen_range(-0.4 * v * v..v * v);
    (RabiProfile::new(terms, detuning, 0.0).expect("valid profile"), v)
}
