use crate::error::{Error, Result};
use crate::relational::World;

/// Sets `skip(x,z)` and `skip(z,x)` for all distinct `x, y, z` such that
/// `x` and `y`, and `y` and `z`, are joined by some bond predicate (in
/// either direction).
pub fn skip_bond_augment(world: &World, bonds: &[usize], skip: usize) -> Result<World> {
    let sig = world.signature();
    let binary = |p: usize| p < sig.predicates().len() && sig.arity(p) == 2;
    if !binary(skip) {
        return Err(Error::InvalidArgument("skip-bond predicate must be binary".into()));
    }
    if let Some(&p) = bonds.iter().find(|&&p| !binary(p)) {
        return Err(Error::InvalidArgument(format!("bond predicate {p} is not binary")));
    }
    let n = sig.num_constants();
    let adj = |a: usize, b: usize| {
        a != b
            && bonds
                .iter()
                .any(|&p| world.get(sig.binary_index(p, a, b)) || world.get(sig.binary_index(p, b, a)))
    };
    let mut out = world.clone();
    for y in 0..n {
        for x in (0..n).filter(|&x| adj(x, y)) {
            for z in (0..n).filter(|&z| z != x && adj(y, z)) {
                out.set(sig.binary_index(skip, x, z), true);
                out.set(sig.binary_index(skip, z, x), true);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::relational::Signature;

    fn sig() -> Arc<Signature> {
        Arc::new(Signature::new(["0", "1", "2"], [("single", 2), ("skipbond", 2)]).unwrap())
    }

    fn skips(w: &World) -> Vec<String> {
        let s = w.signature();
        w.true_atoms().filter(|a| a.pred == 1).map(|a| s.display_atom(&a)).collect()
    }

    #[test]
    fn chain_gets_end_to_end_skip() {
        let s = sig();
        let w = World::from_atoms(
            s.clone(),
            &[s.atom("single", &["0", "1"]).unwrap(), s.atom("single", &["1", "2"]).unwrap()],
        )
        .unwrap();
        assert_eq!(skips(&skip_bond_augment(&w, &[0], 1).unwrap()), ["skipbond(0,2)", "skipbond(2,0)"]);
    }

    #[test]
    fn no_bonds_no_change() {
        let w = World::empty(sig());
        assert_eq!(skip_bond_augment(&w, &[0], 1).unwrap(), w);
    }

    #[test]
    fn triangle_skips_every_pair() {
        let s = sig();
        let w = World::from_atoms(
            s.clone(),
            &[
                s.atom("single", &["0", "1"]).unwrap(),
                s.atom("single", &["1", "2"]).unwrap(),
                s.atom("single", &["0", "2"]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(skips(&skip_bond_augment(&w, &[0], 1).unwrap()).len(), 6);
    }

    #[test]
    fn skip_predicate_must_be_binary() {
        let s = Arc::new(Signature::new(["0"], [("b", 2), ("u", 1)]).unwrap());
        assert!(skip_bond_augment(&World::empty(s), &[0], 1).is_err());
    }
}
