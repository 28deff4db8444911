use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use ubw1::measure::{DiscreteMeasure, MetricSpace};

/// Two measures on 3 to 8 random points of `[0, 3]²`; about a fifth of the
/// weights are zero.
pub fn random_pair(seed: u64) -> (DiscreteMeasure, DiscreteMeasure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=8);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)]).collect();
    let space = Arc::new(MetricSpace::euclidean(pts).unwrap());
    let weights = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.1..2.0) }).collect()
    };
    let w0 = weights(&mut rng);
    let w1 = weights(&mut rng);
    (DiscreteMeasure::new(space.clone(), w0).unwrap(), DiscreteMeasure::new(space, w1).unwrap())
}
