//! Seeded random inputs, keyed by (seed, trial) so that results do not depend
//! on scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::function::WeightedFunction;
use crate::scalar::ExtScalar;
use crate::space::{PointId, Space};

/// Values are drawn from `2^[-LOG_SPAN, LOG_SPAN)`.
pub const LOG_SPAN: i64 = 40;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Nonempty random subset of stored points: an inclusion probability is
/// drawn first, then each point is kept independently.
pub fn random_points(space: &Space, rng: &mut ChaCha8Rng) -> Vec<PointId> {
    let q: f64 = rng.gen();
    let mut pts: Vec<PointId> = space.ids().filter(|_| rng.gen::<f64>() < q).collect();
    if pts.is_empty() {
        pts.push(rng.gen_range(0..space.len() as PointId));
    }
    pts
}

/// Log-uniform value in `2^[-LOG_SPAN, LOG_SPAN)`.
pub fn log_uniform(rng: &mut ChaCha8Rng) -> ExtScalar {
    let x: f64 = rng.gen_range(-(LOG_SPAN as f64)..LOG_SPAN as f64);
    let e = x.floor();
    ExtScalar::from_f64((x - e).exp2()) * ExtScalar::pow2(e as i64)
}

/// Random nonnegative, not identically zero, function.
pub fn random_function(space: &Space, rng: &mut ChaCha8Rng) -> WeightedFunction {
    let support = random_points(space, rng);
    let mut f = WeightedFunction::zeros(space);
    for p in support {
        f.set(space, p, log_uniform(rng)).expect("valid point");
    }
    f
}
