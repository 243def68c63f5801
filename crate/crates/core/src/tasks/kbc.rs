use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::query::query_marginals;
use crate::error::{Error, Result};
use crate::gibbs::{derive_seed, SamplerConfig};
use crate::potential::Scorer;
use crate::relational::{Atom, World};

/// Corruptions `r(a',b)` then `r(a,b')` of a binary fact, in constant
/// order, skipping the fact itself and atoms true in `kb`.
pub fn corruptions(fact: &Atom, kb: &World) -> Result<Vec<Atom>> {
    let sig = kb.signature();
    sig.check_atom(fact)?;
    if fact.args.len() != 2 {
        return Err(Error::Unsupported("corruptions are defined for binary facts".into()));
    }
    let (a, b) = (fact.args[0], fact.args[1]);
    let n = sig.num_constants();
    let first = (0..n).map(|c| Atom::new(fact.pred, &[c, b]));
    let second = (0..n).map(|c| Atom::new(fact.pred, &[a, c]));
    Ok(first
        .chain(second)
        .filter(|x| x != fact && !kb.holds(x))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    pub fact: String,
    pub corruptions: usize,
    /// `1 + higher + ties / 2`, between 1 and `corruptions + 1`.
    pub rank: f64,
    pub reciprocal_rank: f64,
    pub score: f64,
}

/// Rank of `gold` among `corrupted` scores, ties counted half.
pub fn rank_of(gold: f64, corrupted: &[f64]) -> f64 {
    let higher = corrupted.iter().filter(|&&s| s > gold).count();
    let ties = corrupted.iter().filter(|&&s| s == gold).count();
    1.0 + higher as f64 + ties as f64 / 2.0
}

/// Ranks `fact` against its corruptions by marginals estimated with the
/// rest of `evidence` clamped.
pub fn rank_fact(
    scorer: &Scorer,
    evidence: &World,
    fact: &Atom,
    corrupted: &[Atom],
    config: &SamplerConfig,
) -> Result<RankResult> {
    let sig = evidence.signature();
    let mut query = vec![sig.atom_index(fact)];
    query.extend(corrupted.iter().map(|a| sig.atom_index(a)));
    let m = query_marginals(scorer, evidence, &query, config, &[])?;
    let rank = rank_of(m[0], &m[1..]);
    Ok(RankResult {
        fact: sig.display_atom(fact),
        corruptions: corrupted.len(),
        rank,
        reciprocal_rank: 1.0 / rank,
        score: m[0],
    })
}

/// Ranks every test fact in parallel. `kb` holds the training facts; all
/// test facts other than the one being ranked stay false.
pub fn rank_facts(scorer: &Scorer, kb: &World, tests: &[Atom], config: &SamplerConfig) -> Result<Vec<RankResult>> {
    tests
        .par_iter()
        .enumerate()
        .map(|(i, fact)| {
            let cfg = SamplerConfig {
                seed: derive_seed(config.seed, &[i as u64]),
                ..config.clone()
            };
            let corrupted = corruptions(fact, kb)?;
            rank_fact(scorer, kb, fact, &corrupted, &cfg)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KbcMetrics {
    pub count: usize,
    pub mrr: f64,
    pub hits: BTreeMap<usize, f64>,
}

pub fn kbc_metrics(results: &[RankResult], ms: &[usize]) -> Result<KbcMetrics> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("no ranking results".into()));
    }
    let n = results.len() as f64;
    let mrr = results.iter().map(|r| r.reciprocal_rank).sum::<f64>() / n;
    let hits = ms
        .iter()
        .map(|&m| (m, results.iter().filter(|r| r.rank <= m as f64).count() as f64 / n))
        .collect();
    Ok(KbcMetrics {
        count: results.len(),
        mrr,
        hits,
    })
}
