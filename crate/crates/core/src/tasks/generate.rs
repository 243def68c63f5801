use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::gibbs::{init_chains, ExclusionBlock, Sampler, SamplerConfig};
use crate::potential::Scorer;
use crate::relational::{Atom, Signature, World};
use crate::train::Trainer;

/// Largest domain for which structures are canonicalized.
pub const MAX_CANONICAL_CONSTANTS: usize = 8;

/// Atoms over constant `c` and the constants already placed, in a fixed order.
fn extension_bits(sig: &Signature, world: &World, placed: &[usize], c: usize, out: &mut Vec<bool>) {
    out.clear();
    for p in 0..sig.predicates().len() {
        if sig.arity(p) == 1 {
            out.push(world.get(sig.unary_index(p, c)));
        } else {
            for &d in placed {
                out.push(world.get(sig.binary_index(p, d, c)));
                out.push(world.get(sig.binary_index(p, c, d)));
            }
            out.push(world.get(sig.binary_index(p, c, c)));
        }
    }
}

/// Isomorphism-invariant key of a world: the lexicographically smallest
/// encoding over all orderings of its constants, plus one ordering that
/// attains it.
pub fn canonical_form(world: &World) -> Result<(Vec<u64>, Vec<usize>)> {
    let sig = world.signature();
    let n = sig.num_constants();
    if n > MAX_CANONICAL_CONSTANTS {
        return Err(Error::TooLarge {
            atoms: n,
            cap: MAX_CANONICAL_CONSTANTS,
        });
    }
    let mut partials: Vec<Vec<usize>> = vec![Vec::new()];
    let mut key_bits = Vec::new();
    let mut buf = Vec::new();
    for _ in 0..n {
        let mut best: Option<Vec<bool>> = None;
        let mut next = Vec::new();
        for p in &partials {
            for c in (0..n).filter(|c| !p.contains(c)) {
                extension_bits(sig, world, p, c, &mut buf);
                let ord = best.as_ref().map(|b| buf.as_slice().cmp(b.as_slice()));
                match ord {
                    Some(std::cmp::Ordering::Greater) => continue,
                    Some(std::cmp::Ordering::Equal) => {}
                    _ => {
                        best = Some(buf.clone());
                        next.clear();
                    }
                }
                let mut q = p.clone();
                q.push(c);
                next.push(q);
            }
        }
        key_bits.extend(best.unwrap_or_default());
        partials = next;
    }
    let mut key = vec![0u64; key_bits.len().div_ceil(64) + 1];
    key[0] = key_bits.len() as u64;
    for (i, b) in key_bits.iter().enumerate() {
        if *b {
            key[1 + i / 64] |= 1 << (i % 64);
        }
    }
    Ok((key, partials.swap_remove(0)))
}

/// `world` with constant `order[i]` renamed to constant `i`.
pub fn relabel(world: &World, order: &[usize]) -> World {
    let mut slot = vec![0; order.len()];
    for (i, &c) in order.iter().enumerate() {
        slot[c] = i;
    }
    let atoms: Vec<Atom> = world
        .true_atoms()
        .map(|a| Atom::new(a.pred, &a.args.iter().map(|&c| slot[c]).collect::<Vec<_>>()))
        .collect();
    World::from_atoms(world.signature().clone(), &atoms).expect("renamed atoms stay in range")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleEntry {
    pub count: usize,
    pub first_seen: u64,
    /// Representative in canonical constant order.
    pub world: World,
}

/// Counts of sampled structures up to isomorphism.
#[derive(Clone, Debug, Default)]
pub struct SampleLog {
    entries: BTreeMap<Vec<u64>, SampleEntry>,
    total: usize,
    window: Option<usize>,
    recent: VecDeque<Vec<u64>>,
    cache: HashMap<Vec<usize>, Vec<u64>>,
}

impl SampleLog {
    pub fn new() -> Self {
        SampleLog::default()
    }

    /// Also remembers the keys of the last `n` samples.
    pub fn with_window(n: usize) -> Self {
        SampleLog {
            window: Some(n),
            ..SampleLog::default()
        }
    }

    pub fn record(&mut self, world: &World, sweep: u64) -> Result<()> {
        let raw: Vec<usize> = world.bits().ones().collect();
        let key = match self.cache.get(&raw) {
            Some(k) => k.clone(),
            None => {
                let (key, order) = canonical_form(world)?;
                self.cache.insert(raw, key.clone());
                self.entries.entry(key.clone()).or_insert_with(|| SampleEntry {
                    count: 0,
                    first_seen: sweep,
                    world: relabel(world, &order),
                });
                key
            }
        };
        self.entries.get_mut(&key).expect("entry exists").count += 1;
        self.total += 1;
        if let Some(n) = self.window {
            self.recent.push_back(key);
            if self.recent.len() > n {
                self.recent.pop_front();
            }
        }
        Ok(())
    }

    /// Number of recorded samples.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = &SampleEntry> {
        self.entries.values()
    }

    /// The `n` most frequent structures, ties broken by key order.
    pub fn top(&self, n: usize) -> Vec<&SampleEntry> {
        let mut v: Vec<(&Vec<u64>, &SampleEntry)> = self.entries.iter().collect();
        v.sort_by(|a, b| b.1.count.cmp(&a.1.count).then_with(|| a.0.cmp(b.0)));
        v.into_iter().take(n).map(|(_, e)| e).collect()
    }

    /// The `n` most frequent structures among the last-window samples, with
    /// their counts in that window.
    pub fn recent_top(&self, n: usize) -> Vec<(&SampleEntry, usize)> {
        let mut counts: BTreeMap<&Vec<u64>, usize> = BTreeMap::new();
        for k in &self.recent {
            *counts.entry(k).or_insert(0) += 1;
        }
        let mut v: Vec<(&Vec<u64>, usize)> = counts.into_iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v.into_iter()
            .take(n)
            .map(|(k, c)| (&self.entries[k], c))
            .collect()
    }
}

/// Runs chains from `start` under the model, recording every chain state
/// after each of `config.sweeps` kept sweeps.
pub fn collect_generations(
    scorer: &Scorer,
    start: &World,
    config: &SamplerConfig,
    blocks: Vec<ExclusionBlock>,
) -> Result<SampleLog> {
    let sampler = Sampler::from_config(scorer, config, blocks)?;
    let mut chains = init_chains(std::slice::from_ref(start), config)?;
    sampler.run_all(&mut chains, config.burn_in)?;
    let mut log = SampleLog::new();
    for s in 0..config.sweeps {
        sampler.run_all(&mut chains, 1)?;
        for c in &chains {
            log.record(&c.world, s as u64)?;
        }
    }
    Ok(log)
}

/// Trains for `epochs` epochs, recording the persistent chains after each.
pub fn train_and_collect(trainer: &mut Trainer, data: &[World], epochs: usize, log: &mut SampleLog) -> Result<()> {
    for e in 0..epochs {
        trainer.epoch(data)?;
        for c in trainer.chains() {
            log.record(&c.world, e as u64)?;
        }
    }
    Ok(())
}
