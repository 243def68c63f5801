//! Trains a symmetric model on the kinship knowledge base and ranks each
//! held-out fact against its filtered corruptions.
//!
//! Run with `cargo run --release --example kbc_ranking`.

use std::path::Path;

use anyhow::Result;
use nmln::gibbs::{SamplerConfig, SamplerMode};
use nmln::io::{load_kb, parse_worlds, to_labeled};
use nmln::potential::{Activation, ModelSpec, PotentialModel, Scorer};
use nmln::tasks::{kbc_metrics, rank_facts};
use nmln::train::{TrainConfig, Trainer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/kinship");
    let kb = load_kb(&dir.join("train.txt"), &dir.join("signature.txt"))?;
    let sig = kb.signature().clone();
    let raw: Vec<_> = parse_worlds(&std::fs::read_to_string(dir.join("test.txt"))?)?
        .into_iter()
        .flatten()
        .collect();
    let tests: Vec<_> = to_labeled(&sig, &raw)?
        .into_iter()
        .filter(|(_, l)| *l)
        .map(|(a, _)| a)
        .collect();

    let spec = ModelSpec {
        k: 2,
        hidden: vec![40],
        activation: Activation::Sigmoid,
        heads: 1,
        embedding_dim: None,
    };
    let model = PotentialModel::random(sig.clone(), &spec, &mut ChaCha8Rng::seed_from_u64(0))?;
    let config = TrainConfig {
        learning_rate: 0.01,
        epochs: 400,
        sampler: SamplerMode::Blocked,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(model, std::slice::from_ref(&kb), config)?;
    trainer.train(std::slice::from_ref(&kb), |_| {})?;
    let model = trainer.into_model();

    let sampler = SamplerConfig {
        mode: SamplerMode::Blocked,
        chains: 4,
        burn_in: 100,
        sweeps: 500,
        ..SamplerConfig::default()
    };
    let scorer = Scorer::cached(&model)?;
    let ranks = rank_facts(&scorer, &kb, &tests, &sampler)?;
    for r in &ranks {
        println!("{:<18} rank {:>4.1} of {:>2}  p = {:.3}", r.fact, r.rank, r.corruptions + 1, r.score);
    }
    let m = kbc_metrics(&ranks, &[1, 3, 10])?;
    println!("\nMRR {:.3}", m.mrr);
    for (k, v) in &m.hits {
        println!("Hits@{k} {v:.3}");
    }
    Ok(())
}
