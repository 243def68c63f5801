use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relational::{Signature, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cardinality {
    ExactlyOne,
    AtMostOne,
}

/// Atoms over one constant tuple whose joint state is restricted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExclusionBlock {
    atoms: Vec<usize>,
    constants: Vec<usize>,
    rule: Cardinality,
}

impl ExclusionBlock {
    pub fn new(signature: &Signature, atoms: Vec<usize>, rule: Cardinality) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("exclusion block has no atoms".into()));
        }
        if let Some(&a) = atoms.iter().find(|&&a| a >= signature.atom_count()) {
            return Err(Error::InvalidArgument(format!("atom index {a} out of range")));
        }
        let tuple = |a: usize| signature.atom_at(a).args;
        let first = tuple(atoms[0]);
        if atoms.iter().any(|&a| tuple(a) != first) {
            return Err(Error::InvalidArgument(
                "exclusion block atoms must share one constant tuple".into(),
            ));
        }
        let mut sorted = atoms.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != atoms.len() {
            return Err(Error::InvalidArgument("duplicate atom in exclusion block".into()));
        }
        let constants = signature.atom_at(atoms[0]).constants().to_vec();
        Ok(ExclusionBlock {
            atoms,
            constants,
            rule,
        })
    }

    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    /// Distinct constants of the shared tuple, ascending.
    pub fn constants(&self) -> &[usize] {
        &self.constants
    }

    pub fn rule(&self) -> Cardinality {
        self.rule
    }

    /// Legal states: `Some(i)` sets only atom `i` true, `None` sets all false.
    pub fn states(&self) -> Vec<Option<usize>> {
        let mut s: Vec<Option<usize>> = (0..self.atoms.len()).map(Some).collect();
        if self.rule == Cardinality::AtMostOne {
            s.push(None);
        }
        s
    }

    pub fn set_state(&self, world: &mut World, state: Option<usize>) {
        for (i, &a) in self.atoms.iter().enumerate() {
            world.set(a, state == Some(i));
        }
    }

    pub fn is_satisfied(&self, world: &World) -> bool {
        let on = self.atoms.iter().filter(|&&a| world.get(a)).count();
        match self.rule {
            Cardinality::ExactlyOne => on == 1,
            Cardinality::AtMostOne => on <= 1,
        }
    }
}

/// Exactly-one blocks over `unary` predicates for every constant, and
/// at-most-one blocks over `binary` predicates for every ordered pair of
/// distinct constants.
pub fn exclusion_blocks(signature: &Signature, unary: &[usize], binary: &[usize]) -> Result<Vec<ExclusionBlock>> {
    for &p in unary {
        if p >= signature.predicates().len() || signature.arity(p) != 1 {
            return Err(Error::InvalidArgument(format!("predicate {p} is not unary")));
        }
    }
    for &p in binary {
        if p >= signature.predicates().len() || signature.arity(p) != 2 {
            return Err(Error::InvalidArgument(format!("predicate {p} is not binary")));
        }
    }
    let n = signature.num_constants();
    let mut out = Vec::new();
    if !unary.is_empty() {
        for c in 0..n {
            let atoms = unary.iter().map(|&p| signature.unary_index(p, c)).collect();
            out.push(ExclusionBlock::new(signature, atoms, Cardinality::ExactlyOne)?);
        }
    }
    if !binary.is_empty() {
        for a in 0..n {
            for b in (0..n).filter(|&b| b != a) {
                let atoms = binary.iter().map(|&p| signature.binary_index(p, a, b)).collect();
                out.push(ExclusionBlock::new(signature, atoms, Cardinality::AtMostOne)?);
            }
        }
    }
    Ok(out)
}

/// Checks that no atom appears in two blocks.
pub fn check_disjoint(blocks: &[ExclusionBlock], atoms: usize) -> Result<()> {
    let mut seen = vec![false; atoms];
    for b in blocks {
        for &a in b.atoms() {
            if a >= atoms || std::mem::replace(&mut seen[a], true) {
                return Err(Error::InvalidArgument(format!(
                    "atom {a} is in more than one exclusion block"
                )));
            }
        }
    }
    Ok(())
}
