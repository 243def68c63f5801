//! Enumerates every world of a tiny domain under a random neural model and
//! reports the partition function, marginals and most probable worlds.

use std::sync::Arc;

use anyhow::Result;
use nmln::oracle::Distribution;
use nmln::potential::{Activation, ModelSpec, PotentialModel};
use nmln::relational::{Signature, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let sig = Arc::new(Signature::new(["a", "b", "c"], [("p", 1), ("r", 2)])?);
    let spec = ModelSpec {
        k: 2,
        hidden: vec![6],
        activation: Activation::Sigmoid,
        heads: 1,
        embedding_dim: None,
    };
    let mut model = PotentialModel::random(sig.clone(), &spec, &mut ChaCha8Rng::seed_from_u64(1))?;
    model.set_betas(&[4.0]);

    let dist = Distribution::of_model(&model, &[])?;
    println!("{} worlds, log Z = {:.6}", dist.worlds().len(), dist.log_z());

    println!("\nmarginals:");
    for (i, p) in dist.marginals().iter().enumerate() {
        println!("  {:<8} {p:.4}", sig.display_atom(&sig.atom_at(i)));
    }

    let mut ranked: Vec<(f64, u64)> = dist.probs().into_iter().zip(dist.worlds().iter().copied()).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    println!("\nmost probable worlds:");
    for (p, idx) in ranked.iter().take(5) {
        let w = World::from_index(sig.clone(), *idx);
        let atoms: Vec<String> = w.true_atoms().map(|a| sig.display_atom(&a)).collect();
        println!("  {p:.5}  {{{}}}", atoms.join(", "));
    }
    Ok(())
}
