//! Trains a k=3 symmetric model on the bundled Smokers world and completes
//! the missing friendships.
//!
//! Run with `cargo run --release --example smokers_completion [seed]`.

use std::path::Path;

use anyhow::Result;
use nmln::gibbs::{SamplerConfig, SamplerMode};
use nmln::io::load_kb;
use nmln::potential::{Activation, ModelSpec, PotentialModel, Scorer};
use nmln::tasks::query_marginals;
use nmln::train::{TrainConfig, Trainer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/smokers");
    let kb = load_kb(&dir.join("world.txt"), &dir.join("signature.txt"))?;
    let sig = kb.signature().clone();

    let spec = ModelSpec {
        k: 3,
        hidden: vec![30],
        activation: Activation::Sigmoid,
        heads: 1,
        embedding_dim: None,
    };
    let model = PotentialModel::random(sig.clone(), &spec, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let config = TrainConfig {
        learning_rate: 0.01,
        epochs: 600,
        chains: 10,
        sweeps_per_update: 1,
        sampler: SamplerMode::Blocked,
        seed,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(model, std::slice::from_ref(&kb), config)?;
    trainer.train(std::slice::from_ref(&kb), |r| {
        if r.step % 100 == 0 {
            println!("step {:4}  residual {:+.4}  |grad| {:.4}", r.step, r.residuals[0], r.grad_norm);
        }
    })?;
    let model = trainer.into_model();

    let fr = sig.predicate_id("fr").unwrap();
    let n = sig.num_constants();
    let absent: Vec<usize> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b)
        .map(|(a, b)| sig.binary_index(fr, a, b))
        .filter(|&i| !kb.get(i))
        .collect();
    let sampler = SamplerConfig {
        mode: SamplerMode::Blocked,
        chains: 4,
        burn_in: 200,
        sweeps: 2000,
        seed,
        ..SamplerConfig::default()
    };
    let scorer = Scorer::cached(&model)?;
    let marginals = query_marginals(&scorer, &kb, &absent, &sampler, &[])?;

    let mut ranked: Vec<(f64, usize)> = marginals.iter().copied().zip(absent.iter().copied()).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    println!("\nmost likely new facts:");
    for (p, i) in ranked.iter().take(8) {
        let atom = sig.atom_at(*i);
        let (a, b) = (atom.args[0], atom.args[1]);
        let reverse_given = kb.get(sig.binary_index(fr, b, a));
        println!(
            "  {:<14} {:.3}{}",
            sig.display_atom(&atom),
            p,
            if reverse_given { "  (reverse given)" } else { "" }
        );
    }
    Ok(())
}
