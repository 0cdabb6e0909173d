//! Seeded generators for stress tests. Every generator takes its seed or RNG
//! explicitly.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::Result;
use crate::measures::MarkovMeasure;
use crate::potential::LocallyConstantFunction;
use crate::shift::TransitionMatrix;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for item `index` of stream `stream` under base seed `base`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    base.wrapping_add(stream << 32).wrapping_add(index)
}

/// Uniform point of the simplex (Dirichlet(1, ..., 1)).
pub fn random_probability_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
    v
}

/// Markov measure with Dirichlet(1, ..., 1) rows on the admissible transitions.
pub fn random_markov_measure(base: &TransitionMatrix, seed: u64) -> Result<MarkovMeasure> {
    let mut rng = rng_from_seed(seed);
    let n = base.size();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let succ = base.successors(i);
        let row = random_probability_vector(&mut rng, succ.len());
        for (&j, &x) in succ.iter().zip(&row) {
            p[(i, j)] = x;
        }
    }
    MarkovMeasure::new(base, p)
}

/// Function of the given range with table values uniform in `[lo, hi)`.
pub fn random_function(
    base: &TransitionMatrix,
    range: usize,
    theta: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<LocallyConstantFunction> {
    let mut rng = rng_from_seed(seed);
    LocallyConstantFunction::from_fn(base, range, theta, |_| rng.random_range(lo..hi))
}
