use std::collections::HashMap;
use std::fmt;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Highest predicate arity supported.
pub const MAX_ARITY: usize = 2;

/// Argument tuple of a ground atom, as interned constant ids.
pub type Args = ArrayVec<usize, MAX_ARITY>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
}

/// A ground atom `pred(args..)` over interned ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: usize,
    pub args: Args,
}

impl Atom {
    pub fn new(pred: usize, args: &[usize]) -> Self {
        Atom {
            pred,
            args: args.iter().copied().collect(),
        }
    }

    /// Distinct constants of the atom, ascending.
    pub fn constants(&self) -> Args {
        let mut out = Args::new();
        for &c in &self.args {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Constants and predicates of a function-free language.
///
/// Ground atoms are laid out in a fixed canonical order: predicates in
/// declaration order, then argument tuples in row-major order over the
/// constants. Every atom index in the crate refers to this order.
#[derive(Clone, Debug)]
pub struct Signature {
    constants: Vec<String>,
    predicates: Vec<Predicate>,
    const_ids: HashMap<String, usize>,
    pred_ids: HashMap<String, usize>,
    offsets: Vec<usize>,
    atom_count: usize,
}

impl Eq for Signature {}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.constants == other.constants && self.predicates == other.predicates
    }
}

impl Signature {
    pub fn new<C, P, S>(constants: C, predicates: P) -> Result<Self>
    where
        C: IntoIterator<Item = S>,
        S: Into<String>,
        P: IntoIterator<Item = (S, usize)>,
    {
        let constants: Vec<String> = constants.into_iter().map(Into::into).collect();
        let predicates: Vec<Predicate> = predicates
            .into_iter()
            .map(|(name, arity)| Predicate {
                name: name.into(),
                arity,
            })
            .collect();

        let mut const_ids = HashMap::with_capacity(constants.len());
        for (i, c) in constants.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::InvalidArgument("empty constant name".into()));
            }
            if const_ids.insert(c.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate constant `{c}`")));
            }
        }
        let mut pred_ids = HashMap::with_capacity(predicates.len());
        for (i, p) in predicates.iter().enumerate() {
            if p.arity == 0 || p.arity > MAX_ARITY {
                return Err(Error::Unsupported(format!(
                    "predicate `{}` has arity {}; supported arities are 1..={MAX_ARITY}",
                    p.name, p.arity
                )));
            }
            if pred_ids.insert(p.name.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate predicate `{}`",
                    p.name
                )));
            }
        }

        let n = constants.len();
        let mut offsets = Vec::with_capacity(predicates.len());
        let mut atom_count = 0;
        for p in &predicates {
            offsets.push(atom_count);
            atom_count += n.pow(p.arity as u32);
        }
        Ok(Signature {
            constants,
            predicates,
            const_ids,
            pred_ids,
            offsets,
            atom_count,
        })
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn num_constants(&self) -> usize {
        self.constants.len()
    }

    /// Size of the ground-atom universe, `sum_i |R_i| * n^i`.
    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn constant_id(&self, name: &str) -> Option<usize> {
        self.const_ids.get(name).copied()
    }

    pub fn predicate_id(&self, name: &str) -> Option<usize> {
        self.pred_ids.get(name).copied()
    }

    pub fn arity(&self, pred: usize) -> usize {
        self.predicates[pred].arity
    }

    pub fn pred_offset(&self, pred: usize) -> usize {
        self.offsets[pred]
    }

    /// Number of ground atoms of `pred`.
    pub fn pred_len(&self, pred: usize) -> usize {
        self.num_constants().pow(self.arity(pred) as u32)
    }

    /// Index of an atom in the canonical order. Panics on malformed atoms
    /// in debug builds; use [`Signature::check_atom`] on untrusted input.
    #[inline]
    pub fn atom_index(&self, atom: &Atom) -> usize {
        debug_assert!(self.check_atom(atom).is_ok());
        let n = self.num_constants();
        let mut idx = 0;
        for &a in &atom.args {
            idx = idx * n + a;
        }
        self.offsets[atom.pred] + idx
    }

    #[inline]
    pub fn unary_index(&self, pred: usize, c: usize) -> usize {
        self.offsets[pred] + c
    }

    #[inline]
    pub fn binary_index(&self, pred: usize, a: usize, b: usize) -> usize {
        self.offsets[pred] + a * self.num_constants() + b
    }

    pub fn atom_at(&self, index: usize) -> Atom {
        assert!(index < self.atom_count, "atom index {index} out of range");
        let pred = match self.offsets.binary_search(&index) {
            Ok(p) => p,
            Err(p) => p - 1,
        };
        let n = self.num_constants();
        let mut rem = index - self.offsets[pred];
        let arity = self.arity(pred);
        let mut args = [0usize; MAX_ARITY];
        for slot in (0..arity).rev() {
            args[slot] = rem % n;
            rem /= n;
        }
        Atom::new(pred, &args[..arity])
    }

    pub fn check_atom(&self, atom: &Atom) -> Result<()> {
        let pred = self.predicates.get(atom.pred).ok_or_else(|| {
            Error::SignatureMismatch(format!("unknown predicate id {}", atom.pred))
        })?;
        if pred.arity != atom.args.len() {
            return Err(Error::Arity {
                pred: pred.name.clone(),
                expected: pred.arity,
                found: atom.args.len(),
            });
        }
        if let Some(&c) = atom.args.iter().find(|&&c| c >= self.num_constants()) {
            return Err(Error::SignatureMismatch(format!("unknown constant id {c}")));
        }
        Ok(())
    }

    /// Builds an atom from names, e.g. `("fr", &["Alice", "Bob"])`.
    pub fn atom(&self, pred: &str, args: &[&str]) -> Result<Atom> {
        let p = self
            .predicate_id(pred)
            .ok_or_else(|| Error::SignatureMismatch(format!("unknown predicate `{pred}`")))?;
        if args.len() != self.arity(p) {
            return Err(Error::Arity {
                pred: pred.to_string(),
                expected: self.arity(p),
                found: args.len(),
            });
        }
        let ids = args
            .iter()
            .map(|a| {
                self.constant_id(a)
                    .ok_or_else(|| Error::SignatureMismatch(format!("unknown constant `{a}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let atom = Atom::new(p, &ids);
        self.check_atom(&atom)?;
        Ok(atom)
    }

    pub fn display_atom(&self, atom: &Atom) -> String {
        let args: Vec<&str> = atom
            .args
            .iter()
            .map(|&c| self.constants[c].as_str())
            .collect();
        format!("{}({})", self.predicates[atom.pred].name, args.join(","))
    }

    /// Canonical ground-atom list over an arbitrary ordered constant pool:
    /// predicates in declaration order, argument tuples row-major over the pool.
    pub fn canonical_atom_order<T: Clone>(&self, pool: &[T]) -> Vec<(usize, Vec<T>)> {
        let mut out = Vec::new();
        for (p, pred) in self.predicates.iter().enumerate() {
            for_each_tuple(pool.len(), pred.arity, |t| {
                out.push((p, t.iter().map(|&i| pool[i].clone()).collect()));
            });
        }
        out
    }

    /// SHA-256 over the predicate list, and over the constants too when
    /// `with_constants` is set.
    pub fn hash(&self, with_constants: bool) -> String {
        let mut h = Sha256::new();
        for p in &self.predicates {
            h.update(p.name.as_bytes());
            h.update(b"/");
            h.update(p.arity.to_string().as_bytes());
            h.update(b"\n");
        }
        if with_constants {
            h.update(b"#constants\n");
            for c in &self.constants {
                h.update(c.as_bytes());
                h.update(b"\n");
            }
        }
        hex::encode(h.finalize())
    }

    /// Same predicates, different constants.
    pub fn with_constants<S: Into<String>>(
        &self,
        constants: impl IntoIterator<Item = S>,
    ) -> Result<Signature> {
        Signature::new(
            constants.into_iter().map(Into::into).collect::<Vec<String>>(),
            self.predicates
                .iter()
                .map(|p| (p.name.clone(), p.arity))
                .collect::<Vec<_>>(),
        )
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.predicates {
            writeln!(f, "{}/{}", p.name, p.arity)?;
        }
        if !self.constants.is_empty() {
            writeln!(f, "constants: {}", self.constants.join(", "))?;
        }
        Ok(())
    }
}

/// Calls `f` on every tuple in `{0..base}^len`, row-major.
pub(crate) fn for_each_tuple(base: usize, len: usize, mut f: impl FnMut(&[usize])) {
    if len > 0 && base == 0 {
        return;
    }
    let mut t = vec![0usize; len];
    loop {
        f(&t);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < base {
                break;
            }
            t[i] = 0;
        }
    }
}
