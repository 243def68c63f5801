//! Compares sequential and blocked Gibbs marginals with exact ones for a
//! random k=3 model, and prints the block schedule.

use std::sync::Arc;

use anyhow::Result;
use nmln::gibbs::{build_schedule, init_chains, Sampler, SamplerConfig, SamplerMode};
use nmln::oracle::exact_marginals;
use nmln::potential::{Activation, ModelSpec, PotentialModel, Scorer};
use nmln::relational::{Signature, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let sig = Arc::new(Signature::new(["a", "b", "c", "d"], [("p", 1), ("r", 2)])?);
    let schedule = build_schedule(&sig, 3)?;
    println!("k=3 schedule on 4 constants:");
    for (g, group) in schedule.groups.iter().enumerate() {
        let blocks: Vec<String> = group
            .blocks
            .iter()
            .map(|b| format!("{:?}:{}", b.constants, b.atoms.len()))
            .collect();
        println!("  group {g}: {}", blocks.join("  "));
    }

    // Three constants keep the exact oracle within reach.
    let sig = Arc::new(Signature::new(["a", "b", "c"], [("p", 1), ("r", 2)])?);
    let spec = ModelSpec {
        k: 3,
        hidden: vec![8],
        activation: Activation::Sigmoid,
        heads: 1,
        embedding_dim: None,
    };
    let mut model = PotentialModel::random(sig.clone(), &spec, &mut ChaCha8Rng::seed_from_u64(3))?;
    model.set_betas(&[3.0]);
    let exact = exact_marginals(&model)?;
    let scorer = Scorer::cached(&model)?;

    println!("\n{:<8} {:>7} {:>10} {:>8}", "atom", "exact", "sequential", "blocked");
    let mut est = Vec::new();
    for mode in [SamplerMode::Sequential, SamplerMode::Blocked] {
        let cfg = SamplerConfig {
            mode,
            chains: 4,
            burn_in: 500,
            sweeps: 5000,
            seed: 11,
            ..SamplerConfig::default()
        };
        let sampler = Sampler::from_config(&scorer, &cfg, Vec::new())?;
        let mut chains = init_chains(&[World::empty(sig.clone())], &cfg)?;
        est.push(sampler.estimate_marginals(&mut chains, cfg.burn_in, cfg.sweeps)?);
    }
    for (i, p) in exact.iter().enumerate() {
        println!(
            "{:<8} {p:>7.4} {:>10.4} {:>8.4}",
            sig.display_atom(&sig.atom_at(i)),
            est[0][i],
            est[1][i]
        );
    }
    Ok(())
}
