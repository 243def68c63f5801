//! Runs the train and classify tasks end to end through run configs,
//! writing artifacts under a temporary directory.
//!
//! Run with `cargo run --release --example triple_classification`.

use std::path::Path;

use anyhow::Result;
use nmln::io::{run, RunConfig, Task};

fn main() -> Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = std::env::temp_dir().join("nmln-triple-classification");

    let mut train = RunConfig::load(&root.join("configs/kinship_train.toml"))?;
    train.out_dir = out.join("train");
    let summary = run(&train)?;
    println!("trained: {:?}", summary.headline);

    let mut classify = RunConfig::load(&root.join("configs/kinship_classify.toml"))?;
    assert_eq!(classify.task, Task::Classify);
    classify.out_dir = out.join("classify");
    classify.model.path = Some(train.out_dir.join("model/model.json"));
    let summary = run(&classify)?;
    for (k, v) in &summary.headline {
        println!("{k} {v:.3}");
    }
    let metrics = std::fs::read_to_string(classify.out_dir.join("metrics/classify.json"))?;
    println!("\n{metrics}");
    Ok(())
}
