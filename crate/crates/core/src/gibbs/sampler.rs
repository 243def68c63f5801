use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{derive_seed, ChainState};
use super::constrained::{check_disjoint, ExclusionBlock};
use super::schedule::{build_schedule, Block, BlockSchedule};
use crate::error::{Error, Result};
use crate::potential::{sigmoid, Scorer, Scratch};
use crate::relational::World;

/// Groups with fewer blocks than this run on the calling thread.
const PAR_MIN_BLOCKS: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    #[default]
    Sequential,
    Blocked,
    Constrained,
}

impl std::str::FromStr for SamplerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(SamplerMode::Sequential),
            "blocked" => Ok(SamplerMode::Blocked),
            "constrained" => Ok(SamplerMode::Constrained),
            _ => Err(Error::Config(format!("unknown sampler mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Fragment size; must match the model when set.
    pub k: Option<usize>,
    pub mode: SamplerMode,
    pub chains: usize,
    pub burn_in: usize,
    /// Kept sweeps per chain.
    pub sweeps: usize,
    pub seed: u64,
    pub pi_n: f64,
    /// Fraction of empty constant pairs kept when subsampling k=2 fragments.
    pub neg_sample_rate: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            k: None,
            mode: SamplerMode::Sequential,
            chains: 10,
            burn_in: 1000,
            sweeps: 1000,
            seed: 0,
            pi_n: 0.0,
            neg_sample_rate: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        if !(0.0..=1.0).contains(&self.pi_n) {
            return Err(Error::Config(format!("pi_n = {} outside [0, 1]", self.pi_n)));
        }
        if let Some(r) = self.neg_sample_rate {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Config(format!("neg_sample_rate = {r} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// `config.chains` chains started from `starts` (cycled), with seeds
/// derived from `config.seed`.
pub fn init_chains(starts: &[World], config: &SamplerConfig) -> Result<Vec<ChainState>> {
    if starts.is_empty() {
        return Err(Error::InvalidArgument("no start worlds for chains".into()));
    }
    Ok((0..config.chains)
        .map(|i| {
            ChainState::new(
                starts[i % starts.len()].clone(),
                derive_seed(config.seed, &[i as u64]),
            )
        })
        .collect())
}

/// Gibbs transition kernel for one model.
pub struct Sampler<'s, 'm> {
    scorer: &'s Scorer<'m>,
    mode: SamplerMode,
    schedule: BlockSchedule,
    blocks: Vec<ExclusionBlock>,
}

impl<'s, 'm> Sampler<'s, 'm> {
    /// Resamples every atom once per sweep, in canonical order.
    pub fn sequential(scorer: &'s Scorer<'m>) -> Self {
        let sig = scorer.model().signature();
        Sampler {
            scorer,
            mode: SamplerMode::Sequential,
            schedule: BlockSchedule::sequential(sig),
            blocks: Vec::new(),
        }
    }

    /// Parallel blocked sweeps for models with `k <= 3`.
    pub fn blocked(scorer: &'s Scorer<'m>) -> Result<Self> {
        let model = scorer.model();
        Ok(Sampler {
            scorer,
            mode: SamplerMode::Blocked,
            schedule: build_schedule(model.signature(), model.k())?,
            blocks: Vec::new(),
        })
    }

    /// Each exclusion block is resampled jointly over its legal states;
    /// atoms outside every block get ordinary Gibbs updates.
    pub fn constrained(scorer: &'s Scorer<'m>, blocks: Vec<ExclusionBlock>) -> Result<Self> {
        let atoms = scorer.model().signature().atom_count();
        check_disjoint(&blocks, atoms)?;
        let mut covered = vec![false; atoms];
        blocks.iter().flat_map(|b| b.atoms()).for_each(|&a| covered[a] = true);
        let schedule = BlockSchedule::sequential(scorer.model().signature()).restricted(|a| !covered[a]);
        Ok(Sampler {
            scorer,
            mode: SamplerMode::Constrained,
            schedule,
            blocks,
        })
    }

    pub fn from_config(
        scorer: &'s Scorer<'m>,
        config: &SamplerConfig,
        blocks: Vec<ExclusionBlock>,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(k) = config.k {
            if k != scorer.model().k() {
                return Err(Error::Mode(format!(
                    "sampler configured for k = {k}, model has k = {}",
                    scorer.model().k()
                )));
            }
        }
        match config.mode {
            SamplerMode::Sequential => Ok(Sampler::sequential(scorer)),
            SamplerMode::Blocked => Sampler::blocked(scorer),
            SamplerMode::Constrained => Sampler::constrained(scorer, blocks),
        }
    }

    /// Only the atoms for which `free` holds are resampled; the rest stay
    /// clamped. Exclusion blocks must lie entirely inside or outside.
    pub fn restricted(mut self, free: impl Fn(usize) -> bool) -> Result<Self> {
        self.schedule = self.schedule.restricted(&free);
        let mut kept = Vec::new();
        for b in self.blocks {
            let inside = b.atoms().iter().filter(|&&a| free(a)).count();
            if inside == b.atoms().len() {
                kept.push(b);
            } else if inside > 0 {
                return Err(Error::InvalidArgument(
                    "exclusion block is partially clamped".into(),
                ));
            }
        }
        self.blocks = kept;
        Ok(self)
    }

    pub fn mode(&self) -> SamplerMode {
        self.mode
    }

    pub fn schedule(&self) -> &BlockSchedule {
        &self.schedule
    }

    pub fn scorer(&self) -> &'s Scorer<'m> {
        self.scorer
    }

    /// `P(atom = true | all other atoms)`.
    pub fn conditional_prob(&self, world: &World, atom: usize) -> Result<f64> {
        if atom >= world.len() {
            return Err(Error::InvalidArgument(format!("atom index {atom} out of range")));
        }
        let mut w = world.clone();
        Ok(sigmoid(self.scorer.logit(&mut w, atom, &mut Scratch::default())?))
    }

    /// Conditional distribution over `block.states()` given the rest of `world`.
    pub fn block_conditional(&self, world: &World, block: &ExclusionBlock) -> Result<Vec<f64>> {
        let mut w = world.clone();
        self.block_probs(&mut w, block, &mut Scratch::default())
    }

    fn block_probs(&self, world: &mut World, block: &ExclusionBlock, scratch: &mut Scratch) -> Result<Vec<f64>> {
        let saved: Vec<bool> = block.atoms().iter().map(|&a| world.get(a)).collect();
        let mut logits = Vec::new();
        for state in block.states() {
            block.set_state(world, state);
            logits.push(self.scorer.local_score(world, block.constants(), scratch)? * self.scorer.norm());
        }
        for (&a, &v) in block.atoms().iter().zip(&saved) {
            world.set(a, v);
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = p.iter().sum();
        if !z.is_finite() || z <= 0.0 {
            return Err(Error::Numeric("block conditional does not normalise".into()));
        }
        p.iter_mut().for_each(|x| *x /= z);
        Ok(p)
    }

    fn sample_block(&self, world: &mut World, block: &Block, rng: &mut impl Rng, scratch: &mut Scratch) -> Result<()> {
        for &a in &block.atoms {
            let p = sigmoid(self.scorer.logit(world, a, scratch)?);
            world.set(a, rng.random::<f64>() < p);
        }
        Ok(())
    }

    fn run_group(&self, chain: &mut ChainState, gi: usize, scratch: &mut Scratch) -> Result<()> {
        let group = &self.schedule.groups[gi];
        if group.blocks.len() == 1 {
            return self.sample_block(&mut chain.world, &group.blocks[0], &mut chain.rng, scratch);
        }
        let snapshot = &chain.world;
        let (seed, sweep) = (chain.seed, chain.sweeps);
        let work = |w: &mut World, scratch: &mut Scratch, bi: usize, block: &Block| -> Result<Vec<bool>> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[sweep, gi as u64, bi as u64]));
            self.sample_block(w, block, &mut rng, scratch)?;
            let vals = block.atoms.iter().map(|&a| w.get(a)).collect();
            for &a in &block.atoms {
                w.set(a, snapshot.get(a));
            }
            Ok(vals)
        };
        let results: Vec<Vec<bool>> = if group.blocks.len() >= PAR_MIN_BLOCKS {
            group
                .blocks
                .par_iter()
                .enumerate()
                .map_init(
                    || (snapshot.clone(), Scratch::default()),
                    |(w, s), (bi, block)| work(w, s, bi, block),
                )
                .collect::<Result<_>>()?
        } else {
            let mut w = snapshot.clone();
            group
                .blocks
                .iter()
                .enumerate()
                .map(|(bi, block)| work(&mut w, scratch, bi, block))
                .collect::<Result<_>>()?
        };
        for (block, vals) in group.blocks.iter().zip(results) {
            for (&a, v) in block.atoms.iter().zip(vals) {
                chain.world.set(a, v);
            }
        }
        Ok(())
    }

    /// One full sweep.
    pub fn sweep(&self, chain: &mut ChainState) -> Result<()> {
        let mut scratch = Scratch::default();
        for block in &self.blocks {
            let probs = self.block_probs(&mut chain.world, block, &mut scratch)?;
            let u: f64 = chain.rng.random();
            let mut acc = 0.0;
            let mut pick = probs.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            block.set_state(&mut chain.world, block.states()[pick]);
        }
        for gi in 0..self.schedule.groups.len() {
            self.run_group(chain, gi, &mut scratch)?;
        }
        chain.sweeps += 1;
        Ok(())
    }

    pub fn run(&self, chain: &mut ChainState, sweeps: usize) -> Result<()> {
        for _ in 0..sweeps {
            self.sweep(chain)?;
        }
        Ok(())
    }

    /// Advances every chain `sweeps` times, chains in parallel.
    pub fn run_all(&self, chains: &mut [ChainState], sweeps: usize) -> Result<()> {
        chains.par_iter_mut().try_for_each(|c| self.run(c, sweeps))
    }

    /// Fraction of kept sweeps (after `burn_in`) in which each atom is true,
    /// pooled over chains.
    pub fn estimate_marginals(&self, chains: &mut [ChainState], burn_in: usize, kept: usize) -> Result<Vec<f64>> {
        if chains.is_empty() || kept == 0 {
            return Err(Error::InvalidArgument("marginals need chains and kept sweeps".into()));
        }
        let atoms = chains[0].world.len();
        let counts: Vec<Vec<u64>> = chains
            .par_iter_mut()
            .map(|c| -> Result<Vec<u64>> {
                self.run(c, burn_in)?;
                let mut counts = vec![0u64; atoms];
                for _ in 0..kept {
                    self.sweep(c)?;
                    for a in c.world.bits().ones() {
                        counts[a] += 1;
                    }
                }
                Ok(counts)
            })
            .collect::<Result<_>>()?;
        let total = (chains.len() * kept) as f64;
        Ok((0..atoms)
            .map(|a| counts.iter().map(|c| c[a]).sum::<u64>() as f64 / total)
            .collect())
    }
}
