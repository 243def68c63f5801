use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::signature::{Atom, Signature};
use crate::error::Result;

/// A truth assignment to every ground atom of a signature.
#[derive(Clone)]
pub struct World {
    signature: Arc<Signature>,
    bits: FixedBitSet,
}

impl PartialEq for World {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits && *self.signature == *other.signature
    }
}

impl Eq for World {}

impl World {
    /// The all-false world.
    pub fn empty(signature: Arc<Signature>) -> Self {
        let bits = FixedBitSet::with_capacity(signature.atom_count());
        World { signature, bits }
    }

    pub fn from_atoms<'a>(
        signature: Arc<Signature>,
        atoms: impl IntoIterator<Item = &'a Atom>,
    ) -> Result<Self> {
        let mut w = World::empty(signature);
        for a in atoms {
            w.signature.check_atom(a)?;
            let i = w.signature.atom_index(a);
            w.bits.insert(i);
        }
        Ok(w)
    }

    /// World whose atom `i` is bit `i` of `index` (atom 0 is the lowest bit).
    pub fn from_index(signature: Arc<Signature>, index: u64) -> Self {
        let mut w = World::empty(signature);
        w.set_from_index(index);
        w
    }

    /// Overwrites the first 64 atoms from the bits of `index`.
    pub fn set_from_index(&mut self, index: u64) {
        let n = self.bits.len().min(64);
        for i in 0..n {
            self.bits.set(i, (index >> i) & 1 == 1);
        }
    }

    /// Inverse of [`World::from_index`]; only meaningful for up to 64 atoms.
    pub fn to_index(&self) -> u64 {
        self.bits.ones().filter(|&i| i < 64).fold(0, |acc, i| acc | (1 << i))
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.bits.contains(index)
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        self.bits.set(index, value);
    }

    #[inline]
    pub fn flip(&mut self, index: usize) {
        self.bits.toggle(index);
    }

    pub fn holds(&self, atom: &Atom) -> bool {
        self.get(self.signature.atom_index(atom))
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn count_true(&self) -> usize {
        self.bits.count_ones(..)
    }

    /// True atoms in canonical order.
    pub fn true_atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.bits.ones().map(|i| self.signature.atom_at(i))
    }
}

impl fmt::Debug for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self
            .true_atoms()
            .map(|a| self.signature.display_atom(&a))
            .collect();
        write!(f, "World{{{}}}", atoms.join(", "))
    }
}
