use ndarray::{concatenate, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// Record of which columns of an augmented feature matrix are pure noise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseInjection {
    /// Always the last `count` columns of the augmented matrix.
    pub noisy_indices: Vec<usize>,
    pub seed: u64,
}

impl NoiseInjection {
    pub fn contains(&self, j: usize) -> bool {
        self.noisy_indices.binary_search(&j).is_ok()
    }
}

/// Appends `count` i.i.d. noise columns that mimic the marginal statistics
/// of the existing matrix.
///
/// Binary matrices get Bernoulli(p) columns with `p` the overall density;
/// anything else gets Normal(μ, σ²) with the pooled mean and deviation.
pub fn inject_noise_features(
    graph: &Graph,
    count: usize,
    seed: u64,
) -> Result<(Graph, NoiseInjection)> {
    if count == 0 {
        return Err(Error::invalid("noise feature count must be at least 1"));
    }
    let original = graph.features();
    let (n, d) = original.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let binary = original.iter().all(|&x| x == 0.0 || x == 1.0);
    let total = (n * d) as f64;
    let mean = original.sum() / total;
    let noise = if binary {
        let dist = Bernoulli::new(mean.clamp(0.0, 1.0)).expect("density lies in [0, 1]");
        Array2::from_shape_simple_fn((n, count), || f64::from(u8::from(dist.sample(&mut rng))))
    } else {
        let var = original.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / total;
        let dist = Normal::new(mean, var.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
        Array2::from_shape_simple_fn((n, count), || dist.sample(&mut rng))
    };

    let augmented = concatenate(Axis(1), &[original.view(), noise.view()])
        .expect("row counts agree");
    let mut out = graph.with_features(augmented)?;
    if let Some(names) = graph.feature_names() {
        let mut names = names.to_vec();
        names.extend((0..count).map(|i| format!("noise_{i}")));
        out = out.with_feature_names(names)?;
    }
    Ok((
        out,
        NoiseInjection {
            noisy_indices: (d..d + count).collect(),
            seed,
        },
    ))
}
