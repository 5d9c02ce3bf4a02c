use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, ExplainerConfig, Explanation, Method};
use crate::error::{Error, Result};

/// `k` distinct features drawn uniformly from `0..d`, deterministic in
/// `(v, seed)`.
pub fn explain_random(v: usize, d: usize, k: usize, seed: u64) -> Result<Explanation> {
    if k > d {
        return Err(Error::invalid(format!("cannot draw {k} of {d} features")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, v as u64));
    let selected = sample(&mut rng, d, k).into_vec();
    Ok(Explanation {
        node: v,
        method: Method::Random,
        weights: vec![1.0; selected.len()],
        selected,
        beta: None,
        n: 0,
        config: ExplainerConfig { top_k: k.max(1), seed, ..Default::default() },
    })
}
