//! Trains a k=3 model on small molecules, with skip bonds added between
//! atoms two bonds apart, under exactly-one element and at-most-one bond
//! constraints, and prints the most frequent structures
//! the persistent chains visit, up to isomorphism.
//!
//! Run with `cargo run --release --example molecule_generation [epochs]`.

use std::path::Path;
use std::sync::Arc;

use anyhow::Result;
use nmln::gibbs::{exclusion_blocks, SamplerMode};
use nmln::io::{format_world, parse_signature, parse_worlds, resolve_signature, to_world};
use nmln::potential::{Activation, ModelSpec, PotentialModel};
use nmln::tasks::{skip_bond_augment, train_and_collect, SampleLog};
use nmln::train::{TrainConfig, Trainer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let epochs: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(500);
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/molecules");
    let sf = parse_signature(&std::fs::read_to_string(dir.join("signature.txt"))?)?;
    let raw = parse_worlds(&std::fs::read_to_string(dir.join("train.txt"))?)?;
    let sig = Arc::new(resolve_signature(Some(&sf), raw.iter().flatten(), false)?);
    let id = |n: &str| sig.predicate_id(n).unwrap();
    let data: Vec<_> = raw
        .iter()
        .map(|w| skip_bond_augment(&to_world(&sig, w)?, &[id("single"), id("double")], id("skipbond")))
        .collect::<nmln::Result<_>>()?;
    let blocks = exclusion_blocks(&sig, &[id("c"), id("o"), id("n")], &[id("single"), id("double")])?;

    let spec = ModelSpec {
        k: 3,
        hidden: vec![30],
        activation: Activation::Sigmoid,
        heads: 1,
        embedding_dim: None,
    };
    let model = PotentialModel::random(sig.clone(), &spec, &mut ChaCha8Rng::seed_from_u64(0))?;
    let config = TrainConfig {
        learning_rate: 0.01,
        epochs,
        pi_n: 0.05,
        sampler: SamplerMode::Constrained,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::with_constraints(model, &data, config, blocks)?;
    let mut log = SampleLog::with_window(1000);
    train_and_collect(&mut trainer, &data, epochs, &mut log)?;

    println!("{} samples, {} distinct up to isomorphism", log.total(), log.distinct());
    for (e, recent) in log.recent_top(5) {
        let atoms = format_world(&e.world).trim_end().replace('\n', " ");
        println!("\n{recent} recent, {} total:\n  {atoms}", e.count);
    }
    Ok(())
}
