//! Encodes a small Markov logic network as fixed indicator potentials and
//! checks the resulting distribution against direct rule counting.

use std::sync::Arc;

use anyhow::Result;
use nmln::oracle::{model_a_distribution, Distribution};
use nmln::potential::{IndicatorPotential, PotentialModel};
use nmln::relational::Signature;

fn main() -> Result<()> {
    let sig = Arc::new(Signature::new(["a", "b", "c"], [("sm", 1), ("ca", 1), ("fr", 2)])?);
    let rules = vec![
        IndicatorPotential::new("sm(x1) -> ca(x1)", 1.5, &sig)?,
        IndicatorPotential::new("fr(x1,x2) & sm(x1) -> sm(x2)", 2.0, &sig)?,
        IndicatorPotential::new("fr(x1,x2) <-> fr(x2,x1)", 0.7, &sig)?,
    ];
    for r in &rules {
        println!("{:>5.2}  {}", r.weight, r.formula.display(&sig));
    }

    let model = PotentialModel::from_indicators(sig.clone(), 2, rules.clone())?;
    let nmln = Distribution::of_model(&model, &[])?;
    let direct = model_a_distribution(sig.clone(), 2, &rules)?;

    let max_diff = nmln
        .probs()
        .iter()
        .zip(direct.probs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("\n{} worlds", nmln.worlds().len());
    println!("log Z (potentials)     {:.12}", nmln.log_z());
    println!("log Z (rule counting)  {:.12}", direct.log_z());
    println!("max |p - p'|           {max_diff:.3e}");
    Ok(())
}
