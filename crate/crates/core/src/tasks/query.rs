use crate::error::{Error, Result};
use crate::gibbs::{derive_seed, ChainState, ExclusionBlock, Sampler, SamplerConfig};
use crate::potential::Scorer;
use crate::relational::World;

/// Marginals of the `query` atoms with every other atom clamped to its
/// value in `evidence`. Query atoms start false.
pub fn query_marginals(
    scorer: &Scorer,
    evidence: &World,
    query: &[usize],
    config: &SamplerConfig,
    blocks: &[ExclusionBlock],
) -> Result<Vec<f64>> {
    if query.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(&a) = query.iter().find(|&&a| a >= evidence.len()) {
        return Err(Error::InvalidArgument(format!("query atom {a} out of range")));
    }
    let mut free = vec![false; evidence.len()];
    query.iter().for_each(|&a| free[a] = true);
    let blocks: Vec<ExclusionBlock> = blocks
        .iter()
        .filter(|b| b.atoms().iter().any(|&a| free[a]))
        .cloned()
        .collect();
    let sampler = Sampler::from_config(scorer, config, blocks)?.restricted(|a| free[a])?;
    let mut start = evidence.clone();
    query.iter().for_each(|&a| start.set(a, false));
    let mut chains: Vec<ChainState> = (0..config.chains)
        .map(|i| ChainState::new(start.clone(), derive_seed(config.seed, &[i as u64])))
        .collect();
    let m = sampler.estimate_marginals(&mut chains, config.burn_in, config.sweeps.max(1))?;
    Ok(query.iter().map(|&a| m[a]).collect())
}
