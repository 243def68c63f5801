//! Evaluates a random symmetric potential on a fragment and on a renamed
//! copy, then adds embeddings to break the symmetry.

use std::sync::Arc;

use anyhow::Result;
use nmln::potential::{general_potential, symmetric_potential, Activation, ModelSpec, PotentialModel};
use nmln::relational::{restrict, Signature, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let sig = Arc::new(Signature::new(["a", "b", "c", "d"], [("p", 1), ("r", 2)])?);
    let world = World::from_atoms(
        sig.clone(),
        &[
            sig.atom("p", &["a"])?,
            sig.atom("r", &["a", "b"])?,
            sig.atom("p", &["c"])?,
            sig.atom("r", &["c", "d"])?,
        ],
    )?;
    let ab = restrict(&world, &[0, 1])?;
    let cd = restrict(&world, &[2, 3])?;
    let ad = restrict(&world, &[0, 3])?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = ModelSpec {
        k: 2,
        hidden: vec![8],
        activation: Activation::Sigmoid,
        heads: 2,
        embedding_dim: None,
    };
    let sym = PotentialModel::random(sig.clone(), &spec, &mut rng)?;
    println!("symmetric model, two heads");
    for (name, f) in [("{a,b}", &ab), ("{c,d}", &cd), ("{a,d}", &ad)] {
        println!("  phi{name} = {:?}", symmetric_potential(f, &sym)?);
    }

    let spec = ModelSpec {
        embedding_dim: Some(3),
        ..spec
    };
    let emb = PotentialModel::random(sig.clone(), &spec, &mut rng)?;
    println!("with constant embeddings");
    for (name, f) in [("{a,b}", &ab), ("{c,d}", &cd), ("{a,d}", &ad)] {
        println!("  phi{name} = {:?}", general_potential(f, &emb)?);
    }
    Ok(())
}
