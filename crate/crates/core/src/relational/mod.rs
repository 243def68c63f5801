//! Signatures, possible worlds, fragments and anonymization codes.

mod fragment;
mod signature;
mod world;

pub use fragment::{
    binomial, enumerate_fragments, for_each_superset, isomorphic, permutations, restrict,
    restrict_named, AnonCode, Anonymizer, CodeLayout, Fragment, KSubsets,
};
pub use signature::{Args, Atom, Predicate, Signature, MAX_ARITY};
pub use world::World;
