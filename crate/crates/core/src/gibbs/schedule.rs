use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relational::Signature;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    Sequential,
    K1,
    K2,
    K3,
}

/// Atoms resampled one after another by a single worker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    /// Constants the block is built around (empty for catch-all blocks).
    pub constants: Vec<usize>,
    pub atoms: Vec<usize>,
}

/// Blocks that may be resampled concurrently.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub blocks: Vec<Block>,
}

impl Group {
    pub fn atom_count(&self) -> usize {
        self.blocks.iter().map(|b| b.atoms.len()).sum()
    }
}

/// Ordered update groups covering every atom exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSchedule {
    pub mode: ScheduleMode,
    pub groups: Vec<Group>,
}

impl BlockSchedule {
    /// One group holding one block of all atoms in canonical order.
    pub fn sequential(signature: &Signature) -> Self {
        BlockSchedule {
            mode: ScheduleMode::Sequential,
            groups: vec![Group {
                blocks: vec![Block {
                    constants: Vec::new(),
                    atoms: (0..signature.atom_count()).collect(),
                }],
            }],
        }
    }

    /// Keeps only atoms for which `keep` holds, dropping emptied blocks and groups.
    pub fn restricted(&self, keep: impl Fn(usize) -> bool) -> Self {
        let groups = self
            .groups
            .iter()
            .map(|g| Group {
                blocks: g
                    .blocks
                    .iter()
                    .map(|b| Block {
                        constants: b.constants.clone(),
                        atoms: b.atoms.iter().copied().filter(|&a| keep(a)).collect(),
                    })
                    .filter(|b| !b.atoms.is_empty())
                    .collect(),
            })
            .filter(|g: &Group| !g.blocks.is_empty())
            .collect();
        BlockSchedule {
            mode: self.mode,
            groups,
        }
    }

    pub fn atom_count(&self) -> usize {
        self.groups.iter().map(Group::atom_count).sum()
    }
}

/// Unary atoms and reflexive binary atoms of constant `c`.
fn own_atoms(sig: &Signature, c: usize) -> Vec<usize> {
    (0..sig.predicates().len())
        .map(|p| match sig.arity(p) {
            1 => sig.unary_index(p, c),
            _ => sig.binary_index(p, c, c),
        })
        .collect()
}

/// Binary atoms `r(a,b)` and `r(b,a)` for every binary predicate `r`.
fn pair_atoms(sig: &Signature, a: usize, b: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for p in (0..sig.predicates().len()).filter(|&p| sig.arity(p) == 2) {
        out.push(sig.binary_index(p, a, b));
        out.push(sig.binary_index(p, b, a));
    }
    out
}

/// Round-robin 1-factorization of the complete graph on `0..n`: `n - 1`
/// rounds of disjoint pairs for even `n`, `n` rounds for odd `n`.
pub fn round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n < 2 {
        return Vec::new();
    }
    let m = n + n % 2;
    let r = m - 1;
    (0..r)
        .map(|round| {
            let mut pairs = Vec::with_capacity(m / 2);
            let mut push = |a: usize, b: usize| {
                if a < n && b < n {
                    pairs.push((a.min(b), a.max(b)));
                }
            };
            push(round, m - 1);
            for i in 1..m / 2 {
                push((round + i) % r, (round + r - i) % r);
            }
            pairs.sort_unstable();
            pairs
        })
        .collect()
}

/// Parallel update schedule for a model whose fragments have `k` constants.
///
/// * `k = 1`: one block per constant (its unary and reflexive atoms), then
///   the remaining binary atoms in per-pair blocks.
/// * `k = 2`: unary and reflexive atoms in one sequential block, then one
///   group with a block per unordered pair of constants.
/// * `k = 3`: unary and reflexive atoms first, then one group per round of
///   a round-robin 1-factorization of the constant pairs.
pub fn build_schedule(signature: &Signature, k: usize) -> Result<BlockSchedule> {
    let n = signature.num_constants();
    let own: Vec<Block> = (0..n)
        .map(|c| Block {
            constants: vec![c],
            atoms: own_atoms(signature, c),
        })
        .collect();
    let pair_block = |a: usize, b: usize| Block {
        constants: vec![a, b],
        atoms: pair_atoms(signature, a, b),
    };
    let all_pairs = || {
        (0..n)
            .flat_map(move |a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| pair_block(a, b))
            .collect::<Vec<_>>()
    };
    let has_binary = signature.predicates().iter().any(|p| p.arity == 2);
    let mut groups = Vec::new();
    let mode = match k {
        1 => {
            groups.push(Group { blocks: own });
            if has_binary {
                groups.push(Group { blocks: all_pairs() });
            }
            ScheduleMode::K1
        }
        2 | 3 => {
            groups.push(Group {
                blocks: vec![Block {
                    constants: Vec::new(),
                    atoms: own.into_iter().flat_map(|b| b.atoms).collect(),
                }],
            });
            if has_binary {
                if k == 2 {
                    groups.push(Group { blocks: all_pairs() });
                } else {
                    for round in round_robin(n) {
                        groups.push(Group {
                            blocks: round.into_iter().map(|(a, b)| pair_block(a, b)).collect(),
                        });
                    }
                }
            }
            if k == 2 {
                ScheduleMode::K2
            } else {
                ScheduleMode::K3
            }
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "blocked schedules exist for k in 1..=3, got {k}"
            )))
        }
    };
    let groups = groups.into_iter().filter(|g| g.atom_count() > 0).collect();
    Ok(BlockSchedule { mode, groups })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(n: usize) -> Signature {
        let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        Signature::new(names, [("sm".to_string(), 1), ("fr".to_string(), 2)]).unwrap()
    }

    fn covers_all(s: &BlockSchedule, atoms: usize) {
        let mut seen: Vec<usize> = s
            .groups
            .iter()
            .flat_map(|g| g.blocks.iter().flat_map(|b| b.atoms.iter().copied()))
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..atoms).collect::<Vec<_>>());
    }

    #[test]
    fn round_robin_group_counts() {
        assert_eq!(round_robin(4).len(), 3);
        assert!(round_robin(4).iter().all(|r| r.len() == 2));
        assert_eq!(round_robin(3).len(), 3);
        assert_eq!(round_robin(2), vec![vec![(0, 1)]]);
        assert_eq!(round_robin(6).len(), 5);
        assert_eq!(round_robin(7).len(), 7);
    }

    #[test]
    fn round_robin_covers_each_pair_once_with_disjoint_rounds() {
        for n in 2..12 {
            let mut all = Vec::new();
            for round in round_robin(n) {
                let mut used: Vec<usize> = round.iter().flat_map(|&(a, b)| [a, b]).collect();
                let len = used.len();
                used.sort_unstable();
                used.dedup();
                assert_eq!(used.len(), len);
                all.extend(round);
            }
            all.sort_unstable();
            let want: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
            assert_eq!(all, want);
        }
    }

    #[test]
    fn schedules_partition_the_atoms() {
        for n in 1..6 {
            let s = sig(n);
            for k in 1..=3 {
                covers_all(&build_schedule(&s, k).unwrap(), s.atom_count());
            }
            covers_all(&BlockSchedule::sequential(&s), s.atom_count());
        }
        assert!(build_schedule(&sig(3), 4).is_err());
    }

    #[test]
    fn k2_has_one_pair_group() {
        let s = build_schedule(&sig(4), 2).unwrap();
        assert_eq!(s.groups.len(), 2);
        assert_eq!(s.groups[1].blocks.len(), 6);
    }

    #[test]
    fn restriction_drops_empty_blocks() {
        let s = build_schedule(&sig(3), 2).unwrap().restricted(|a| a == 4);
        assert_eq!(s.atom_count(), 1);
        assert_eq!(s.groups.len(), 1);
    }
}
