//! Fragments, anonymizations, and their binary codes.
//!
//! A fragment is the restriction of a world to a k-subset of constants. Its
//! anonymizations rename the constants to slots `0..k` in all `k!` ways; each
//! renaming yields a binary code over the ground atoms of the anonymized
//! language, laid out in the same canonical order as [`Signature`] atoms.

use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::signature::{for_each_tuple, Atom, Signature};
use super::world::World;
use crate::error::{Error, Result};

/// Layout of the anonymized ground atoms over slots `0..k`.
#[derive(Clone, Debug)]
pub struct CodeLayout {
    k: usize,
    /// `(pred, slots)` per code bit; unused slots are 0.
    entries: Vec<(usize, [usize; 2], usize)>,
    offsets: Vec<usize>,
}

impl CodeLayout {
    pub fn new(signature: &Signature, k: usize) -> Self {
        let mut entries = Vec::new();
        let mut offsets = Vec::with_capacity(signature.predicates().len());
        for (p, pred) in signature.predicates().iter().enumerate() {
            offsets.push(entries.len());
            for_each_tuple(k, pred.arity, |t| {
                let mut slots = [0; 2];
                slots[..t.len()].copy_from_slice(t);
                entries.push((p, slots, pred.arity));
            });
        }
        CodeLayout {
            k,
            entries,
            offsets,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Code length, `sum_i |R_i| * k^i`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Predicate and slot tuple of code bit `j`.
    pub fn entry(&self, j: usize) -> (usize, &[usize]) {
        let (p, ref slots, arity) = self.entries[j];
        (p, &slots[..arity])
    }

    #[inline]
    pub fn index(&self, pred: usize, slots: &[usize]) -> usize {
        let mut idx = 0;
        for &s in slots {
            idx = idx * self.k + s;
        }
        self.offsets[pred] + idx
    }
}

/// Restriction of a world to an ordered set of constants.
///
/// `truth` is indexed by the [`CodeLayout`] with slot `i` standing for
/// `constants[i]`, i.e. it is the code of the identity anonymization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragment {
    signature: Arc<Signature>,
    constants: Vec<usize>,
    truth: FixedBitSet,
}

impl Fragment {
    pub fn k(&self) -> usize {
        self.constants.len()
    }

    pub fn constants(&self) -> &[usize] {
        &self.constants
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn truth(&self) -> &FixedBitSet {
        &self.truth
    }

    /// Induced atoms that hold, in canonical order over the fragment's constants.
    pub fn true_atoms(&self) -> Vec<Atom> {
        let layout = CodeLayout::new(&self.signature, self.k());
        self.truth
            .ones()
            .map(|j| {
                let (p, slots) = layout.entry(j);
                let args: Vec<usize> = slots.iter().map(|&s| self.constants[s]).collect();
                Atom::new(p, &args)
            })
            .collect()
    }

    /// Builds a fragment directly from its constants and true atoms.
    pub fn from_atoms(
        signature: Arc<Signature>,
        constants: &[usize],
        atoms: &[Atom],
    ) -> Result<Self> {
        let layout = CodeLayout::new(&signature, constants.len());
        let mut truth = FixedBitSet::with_capacity(layout.len());
        for a in atoms {
            signature.check_atom(a)?;
            let slots = a
                .args
                .iter()
                .map(|c| {
                    constants.iter().position(|x| x == c).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "atom {} uses a constant outside the fragment",
                            signature.display_atom(a)
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            truth.insert(layout.index(a.pred, &slots));
        }
        Ok(Fragment {
            signature,
            constants: constants.to_vec(),
            truth,
        })
    }
}

/// Restriction of `world` to the constants `subset` (sorted into id order).
pub fn restrict(world: &World, subset: &[usize]) -> Result<Fragment> {
    let sig = world.signature();
    let mut constants = subset.to_vec();
    constants.sort_unstable();
    if constants.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("repeated constant in subset".into()));
    }
    if let Some(&c) = constants.iter().find(|&&c| c >= sig.num_constants()) {
        return Err(Error::SignatureMismatch(format!("unknown constant id {c}")));
    }
    let layout = CodeLayout::new(sig, constants.len());
    let mut truth = FixedBitSet::with_capacity(layout.len());
    for j in 0..layout.len() {
        let (p, slots) = layout.entry(j);
        let idx = match slots {
            [a] => sig.unary_index(p, constants[*a]),
            [a, b] => sig.binary_index(p, constants[*a], constants[*b]),
            _ => unreachable!(),
        };
        truth.set(j, world.get(idx));
    }
    Ok(Fragment {
        signature: sig.clone(),
        constants,
        truth,
    })
}

/// Restriction by constant names.
pub fn restrict_named(world: &World, names: &[&str]) -> Result<Fragment> {
    let ids = names
        .iter()
        .map(|n| {
            world
                .signature()
                .constant_id(n)
                .ok_or_else(|| Error::SignatureMismatch(format!("unknown constant `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    restrict(world, &ids)
}

/// All size-k fragments of `world`, subsets in lexicographic order.
pub fn enumerate_fragments(world: &World, k: usize) -> Result<impl Iterator<Item = Fragment> + '_> {
    let n = world.signature().num_constants();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "fragment size {k} not in 1..={n}"
        )));
    }
    Ok(KSubsets::new(n, k).map(move |s| restrict(world, &s).expect("valid subset")))
}

/// One anonymization of a fragment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnonCode {
    /// Binary code under the canonical [`CodeLayout`].
    pub bits: FixedBitSet,
    /// `map[i]` is the slot assigned to the fragment's `i`-th constant.
    pub map: Vec<usize>,
    /// Constant ids of the source fragment, in id order.
    pub constants: Vec<usize>,
}

impl AnonCode {
    /// `inverse()[slot]` is the constant mapped to `slot`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.map.len()];
        for (pos, &slot) in self.map.iter().enumerate() {
            inv[slot] = self.constants[pos];
        }
        inv
    }

    /// Renames the code back through the inverse map.
    pub fn decode(&self, signature: &Arc<Signature>) -> Fragment {
        let k = self.map.len();
        let layout = CodeLayout::new(signature, k);
        let mut truth = FixedBitSet::with_capacity(layout.len());
        let mut pos_slots = [0usize; 2];
        for j in self.bits.ones() {
            let (p, slots) = layout.entry(j);
            for (i, &s) in slots.iter().enumerate() {
                pos_slots[i] = self.map.iter().position(|&m| m == s).unwrap();
            }
            truth.insert(layout.index(p, &pos_slots[..slots.len()]));
        }
        Fragment {
            signature: signature.clone(),
            constants: self.constants.clone(),
            truth,
        }
    }

    pub fn to_vec(&self) -> Vec<u8> {
        (0..self.bits.len()).map(|j| self.bits.contains(j) as u8).collect()
    }
}

/// Precomputed permutation tables for size-k fragments of one signature.
#[derive(Clone, Debug)]
pub struct Anonymizer {
    layout: CodeLayout,
    /// Permutations `position -> slot`, lexicographic.
    perms: Vec<Vec<usize>>,
    /// Per permutation and code bit: `(pred, arity, position_a, position_b)`.
    gather: Vec<Vec<(usize, usize, usize, usize)>>,
    /// Per permutation and code bit: index into a fragment's `truth`.
    local: Vec<Vec<usize>>,
}

impl Anonymizer {
    pub fn new(signature: &Signature, k: usize) -> Self {
        let layout = CodeLayout::new(signature, k);
        let perms = permutations(k);
        let mut gather = Vec::with_capacity(perms.len());
        let mut local = Vec::with_capacity(perms.len());
        for perm in &perms {
            let mut inv = vec![0; k];
            for (pos, &slot) in perm.iter().enumerate() {
                inv[slot] = pos;
            }
            let mut g = Vec::with_capacity(layout.len());
            let mut l = Vec::with_capacity(layout.len());
            for j in 0..layout.len() {
                let (p, slots) = layout.entry(j);
                let pa = inv[slots[0]];
                let pb = if slots.len() > 1 { inv[slots[1]] } else { 0 };
                g.push((p, slots.len(), pa, pb));
                let pos: Vec<usize> = slots.iter().map(|&s| inv[s]).collect();
                l.push(layout.index(p, &pos));
            }
            gather.push(g);
            local.push(l);
        }
        Anonymizer {
            layout,
            perms,
            gather,
            local,
        }
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }

    pub fn k(&self) -> usize {
        self.layout.k
    }

    pub fn code_len(&self) -> usize {
        self.layout.len()
    }

    pub fn num_perms(&self) -> usize {
        self.perms.len()
    }

    /// Permutation `p` as `position -> slot`.
    pub fn perm(&self, p: usize) -> &[usize] {
        &self.perms[p]
    }

    /// Constants listed by slot for permutation `p` over the sorted subset.
    pub fn slot_constants(&self, p: usize, subset: &[usize], out: &mut [usize]) {
        for (pos, &slot) in self.perms[p].iter().enumerate() {
            out[slot] = subset[pos];
        }
    }

    /// All `k!` anonymizations of a fragment.
    pub fn anonymize(&self, fragment: &Fragment) -> Vec<AnonCode> {
        assert_eq!(fragment.k(), self.k(), "fragment size does not match");
        self.perms
            .iter()
            .zip(&self.local)
            .map(|(perm, local)| {
                let mut bits = FixedBitSet::with_capacity(local.len());
                for (j, &src) in local.iter().enumerate() {
                    bits.set(j, fragment.truth.contains(src));
                }
                AnonCode {
                    bits,
                    map: perm.clone(),
                    constants: fragment.constants.clone(),
                }
            })
            .collect()
    }

    #[inline]
    fn world_bit(world: &World, sig: &Signature, subset: &[usize], g: (usize, usize, usize, usize)) -> bool {
        let (p, arity, a, b) = g;
        let idx = if arity == 1 {
            sig.unary_index(p, subset[a])
        } else {
            sig.binary_index(p, subset[a], subset[b])
        };
        world.get(idx)
    }

    /// Code of permutation `p` read straight from the world, packed into a
    /// `u64` (code bit `j` is bit `j`). Requires `code_len() <= 64`.
    #[inline]
    pub fn code_u64(&self, world: &World, subset: &[usize], p: usize) -> u64 {
        debug_assert!(self.code_len() <= 64);
        let sig = world.signature();
        let mut code = 0u64;
        for (j, &g) in self.gather[p].iter().enumerate() {
            if Self::world_bit(world, sig, subset, g) {
                code |= 1 << j;
            }
        }
        code
    }

    /// Appends the code of permutation `p` as `0.0`/`1.0` values.
    pub fn code_f64(&self, world: &World, subset: &[usize], p: usize, out: &mut Vec<f64>) {
        let sig = world.signature();
        out.extend(
            self.gather[p]
                .iter()
                .map(|&g| Self::world_bit(world, sig, subset, g) as u8 as f64),
        );
    }

    /// Code of permutation `p` as packed words.
    pub fn code_words(&self, world: &World, subset: &[usize], p: usize, out: &mut Vec<u64>) {
        out.clear();
        out.resize(self.code_len().div_ceil(64), 0);
        let sig = world.signature();
        for (j, &g) in self.gather[p].iter().enumerate() {
            if Self::world_bit(world, sig, subset, g) {
                out[j / 64] |= 1 << (j % 64);
            }
        }
    }
}

/// Whether two fragments are related by a constant renaming, decided by
/// comparing their sorted anonymization multisets.
pub fn isomorphic(a: &Fragment, b: &Fragment) -> Result<bool> {
    if a.k() != b.k() {
        return Err(Error::InvalidArgument(format!(
            "fragments of different sizes ({} vs {})",
            a.k(),
            b.k()
        )));
    }
    if a.signature.predicates() != b.signature.predicates() {
        return Err(Error::SignatureMismatch("fragments over different predicates".into()));
    }
    let anon = Anonymizer::new(&a.signature, a.k());
    let key = |f: &Fragment| {
        let mut codes: Vec<Vec<u8>> = anon.anonymize(f).iter().map(AnonCode::to_vec).collect();
        codes.sort();
        codes
    };
    Ok(key(a) == key(b))
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..k).collect();
    let mut out = vec![cur.clone()];
    // next lexicographic permutation
    loop {
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// k-subsets of `0..n` in lexicographic order.
#[derive(Clone, Debug)]
pub struct KSubsets {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl KSubsets {
    pub fn new(n: usize, k: usize) -> Self {
        KSubsets {
            n,
            cur: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for KSubsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.cur.as_mut()?;
        let out = cur.clone();
        let k = cur.len();
        match (0..k).rev().find(|&i| cur[i] < self.n - k + i) {
            Some(i) => {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
            }
            None => self.cur = None,
        }
        Some(out)
    }
}

/// Calls `f` on every sorted k-subset of `0..n` that contains all of
/// `required` (itself sorted and distinct).
pub fn for_each_superset(n: usize, k: usize, required: &[usize], mut f: impl FnMut(&[usize])) {
    if required.len() > k {
        return;
    }
    let rest: Vec<usize> = (0..n).filter(|c| !required.contains(c)).collect();
    let mut buf = Vec::with_capacity(k);
    for extra in KSubsets::new(rest.len(), k - required.len()) {
        buf.clear();
        buf.extend_from_slice(required);
        buf.extend(extra.iter().map(|&i| rest[i]));
        buf.sort_unstable();
        f(&buf);
    }
}
