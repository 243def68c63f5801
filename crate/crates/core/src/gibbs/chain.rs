use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::relational::World;

/// One persistent Gibbs chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub world: World,
    pub rng: ChaCha8Rng,
    pub seed: u64,
    pub sweeps: u64,
}

impl ChainState {
    pub fn new(world: World, seed: u64) -> Self {
        ChainState {
            world,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            sweeps: 0,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed derived from a base seed and a path of indices.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(base), |acc, &x| splitmix(acc ^ splitmix(x)))
}

/// Flips every atom independently with probability `pi_n`.
pub fn apply_noise<R: Rng + ?Sized>(world: &World, pi_n: f64, rng: &mut R) -> Result<World> {
    if !(0.0..=1.0).contains(&pi_n) {
        return Err(Error::InvalidArgument(format!("noise probability {pi_n} outside [0, 1]")));
    }
    let mut out = world.clone();
    if pi_n == 0.0 {
        return Ok(out);
    }
    for i in 0..out.len() {
        if rng.random_bool(pi_n) {
            out.flip(i);
        }
    }
    Ok(out)
}
