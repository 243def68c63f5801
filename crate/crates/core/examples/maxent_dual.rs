//! Fits the betas of fixed indicator potentials by exact maximum likelihood
//! and shows that the model's expected potentials match the data's.

use std::sync::Arc;

use anyhow::Result;
use nmln::oracle::expected_potentials;
use nmln::potential::{global_potential, IndicatorPotential, PotentialModel};
use nmln::relational::{Signature, World};
use nmln::train::{GradientMode, Optimizer, TrainConfig, Trainer};

fn main() -> Result<()> {
    let sig = Arc::new(Signature::new(["a", "b", "c"], [("p", 1), ("r", 2)])?);
    let indicators = vec![
        IndicatorPotential::new("p(x1)", 1.0, &sig)?,
        IndicatorPotential::new("r(x1,x2) -> r(x2,x1)", 1.0, &sig)?,
        IndicatorPotential::new("p(x1) & r(x1,x2)", 1.0, &sig)?,
    ];
    let data = World::from_atoms(
        sig.clone(),
        &[
            sig.atom("p", &["a"])?,
            sig.atom("r", &["a", "b"])?,
            sig.atom("r", &["b", "a"])?,
            sig.atom("r", &["b", "c"])?,
        ],
    )?;
    let mut model = PotentialModel::from_indicators(sig.clone(), 2, indicators)?;
    model.set_betas(&[0.0, 0.0, 0.0]);
    let target = global_potential(&data, &model)?;

    let config = TrainConfig {
        learning_rate: 0.05,
        epochs: 1000,
        optimizer: Optimizer::Adam,
        gradient: GradientMode::Exact,
        clip_norm: None,
        ..TrainConfig::default()
    };
    let data = [data];
    let mut trainer = Trainer::new(model, &data, config)?;
    trainer.train(&data, |r| {
        if r.step % 500 == 0 {
            println!("step {:5}  max |residual| {:.2e}", r.step, r.residuals.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        }
    })?;
    let model = trainer.into_model();
    let expected = expected_potentials(&model)?;

    println!("\n{:<24} {:>8} {:>8} {:>8}", "potential", "data", "model", "beta");
    for (j, ind) in model.indicators().iter().enumerate() {
        println!(
            "{:<24} {:>8.4} {:>8.4} {:>8.3}",
            ind.source(),
            target[j],
            expected[j],
            model.betas()[j]
        );
    }
    Ok(())
}
