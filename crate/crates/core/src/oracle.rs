//! Exact inference by enumerating every possible world of a tiny domain.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibbs::ExclusionBlock;
use crate::potential::{IndicatorPotential, PotentialModel, Scorer};
use crate::relational::{binomial, permutations, KSubsets, Signature, World};

/// Largest number of ground atoms enumerated by default.
pub const MAX_EXACT_ATOMS: usize = 20;

/// An explicit distribution over (a subset of) the worlds of a signature.
/// World `i` has atom `j` true iff bit `j` of `i` is set.
#[derive(Clone, Debug)]
pub struct Distribution {
    signature: Arc<Signature>,
    worlds: Vec<u64>,
    scores: Vec<f64>,
    log_z: f64,
}

fn check_size(signature: &Signature, cap: usize) -> Result<()> {
    let atoms = signature.atom_count();
    if atoms > cap.min(63) {
        return Err(Error::TooLarge { atoms, cap });
    }
    Ok(())
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl Distribution {
    /// Scores every world accepted by `filter` with `score`, in parallel.
    pub fn from_scores(
        signature: Arc<Signature>,
        cap: usize,
        filter: Option<&(dyn Fn(&World) -> bool + Sync)>,
        score: impl Fn(&World) -> Result<f64> + Sync,
    ) -> Result<Self> {
        check_size(&signature, cap)?;
        let total = 1u64 << signature.atom_count();
        let scored: Vec<Option<(u64, f64)>> = (0..total)
            .into_par_iter()
            .map_init(
                || World::empty(signature.clone()),
                |w, i| -> Result<Option<(u64, f64)>> {
                    w.set_from_index(i);
                    if filter.is_some_and(|f| !f(w)) {
                        return Ok(None);
                    }
                    Ok(Some((i, score(w)?)))
                },
            )
            .collect::<Result<_>>()?;
        let (worlds, scores): (Vec<u64>, Vec<f64>) = scored.into_iter().flatten().unzip();
        if worlds.is_empty() {
            return Err(Error::InvalidArgument("no world satisfies the constraints".into()));
        }
        let log_z = log_sum_exp(&scores);
        if !log_z.is_finite() {
            return Err(Error::Numeric("log partition function is not finite".into()));
        }
        Ok(Distribution {
            signature,
            worlds,
            scores,
            log_z,
        })
    }

    /// The model distribution, optionally restricted to worlds satisfying
    /// every exclusion block.
    pub fn of_model(model: &PotentialModel, blocks: &[ExclusionBlock]) -> Result<Self> {
        Self::of_model_capped(model, blocks, MAX_EXACT_ATOMS)
    }

    pub fn of_model_capped(model: &PotentialModel, blocks: &[ExclusionBlock], cap: usize) -> Result<Self> {
        check_size(model.signature(), cap)?;
        let scorer = Scorer::cached(model)?;
        let filter = |w: &World| blocks.iter().all(|b| b.is_satisfied(w));
        let filter: Option<&(dyn Fn(&World) -> bool + Sync)> = if blocks.is_empty() { None } else { Some(&filter) };
        Self::from_scores(model.signature().clone(), cap, filter, |w| scorer.world_score(w))
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// Indices of the supported worlds, ascending.
    pub fn worlds(&self) -> &[u64] {
        &self.worlds
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn probs(&self) -> Vec<f64> {
        self.scores.iter().map(|s| (s - self.log_z).exp()).collect()
    }

    /// Probability of world `index` (zero outside the support).
    pub fn prob(&self, index: u64) -> f64 {
        match self.worlds.binary_search(&index) {
            Ok(i) => (self.scores[i] - self.log_z).exp(),
            Err(_) => 0.0,
        }
    }

    pub fn log_prob(&self, world: &World) -> Option<f64> {
        let i = self.worlds.binary_search(&world.to_index()).ok()?;
        Some(self.scores[i] - self.log_z)
    }

    /// `P(atom = true)` for every atom.
    pub fn marginals(&self) -> Vec<f64> {
        let atoms = self.signature.atom_count();
        let mut m = vec![0.0; atoms];
        for (&w, p) in self.worlds.iter().zip(self.probs()) {
            for (a, v) in m.iter_mut().enumerate() {
                if (w >> a) & 1 == 1 {
                    *v += p;
                }
            }
        }
        m
    }

    /// `E[f(world)]`.
    pub fn expectation(&self, f: impl Fn(&World) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = Vec::new();
        let mut w = World::empty(self.signature.clone());
        for (&i, p) in self.worlds.iter().zip(self.probs()) {
            w.set_from_index(i);
            let v = f(&w)?;
            if out.is_empty() {
                out = vec![0.0; v.len()];
            }
            out.iter_mut().zip(&v).for_each(|(o, x)| *o += p * x);
        }
        Ok(out)
    }
}

pub fn partition(model: &PotentialModel) -> Result<f64> {
    Ok(Distribution::of_model(model, &[])?.log_z())
}

pub fn exact_marginals(model: &PotentialModel) -> Result<Vec<f64>> {
    Ok(Distribution::of_model(model, &[])?.marginals())
}

/// Marginals of the model restricted to worlds satisfying every block.
pub fn exact_marginals_constrained(model: &PotentialModel, blocks: &[ExclusionBlock]) -> Result<Vec<f64>> {
    Ok(Distribution::of_model(model, blocks)?.marginals())
}

/// `E_P[Phi_i]` for every potential.
pub fn expected_potentials(model: &PotentialModel) -> Result<Vec<f64>> {
    let dist = Distribution::of_model(model, &[])?;
    let scorer = Scorer::cached(model)?;
    dist.expectation(|w| scorer.global_potentials(w))
}

/// Exact mean log-likelihood of `data` and its gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactGrad {
    pub log_likelihood: f64,
    pub grad: Vec<f64>,
    /// Mean global potentials of the data.
    pub data_potentials: Vec<f64>,
    /// `E_P[Phi_i]`.
    pub model_potentials: Vec<f64>,
}

pub fn exact_gradient(model: &PotentialModel, data: &[World]) -> Result<ExactGrad> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("no data worlds".into()));
    }
    let dist = Distribution::of_model(model, &[])?;
    let scorer = Scorer::cached(model)?;
    let inv = 1.0 / data.len() as f64;

    let mut pos = scorer.grad_accumulator();
    let mut ll = 0.0;
    for d in data {
        pos.add_world(d, inv)?;
        ll += inv * scorer.world_score(d)?;
    }
    let pos = pos.finish()?;

    let mut neg = scorer.grad_accumulator();
    let mut w = World::empty(model.signature().clone());
    for (&i, p) in dist.worlds().iter().zip(dist.probs()) {
        w.set_from_index(i);
        neg.add_world(&w, p)?;
    }
    let neg = neg.finish()?;

    Ok(ExactGrad {
        log_likelihood: ll - dist.log_z(),
        grad: pos.grad.iter().zip(&neg.grad).map(|(a, b)| a - b).collect(),
        data_potentials: pos.potentials,
        model_potentials: neg.potentials,
    })
}

/// Fraction of (k-subset, injective assignment of the formula's variables
/// into it) pairs under which `rule` holds in `world`, evaluated directly
/// on the world's atoms.
pub fn subset_fraction(world: &World, k: usize, rule: &IndicatorPotential) -> Result<f64> {
    let sig = world.signature();
    let n = sig.num_constants();
    if rule.arity() > k || k > n {
        return Err(Error::InvalidArgument(format!(
            "rule with {} variables on {n} constants with k = {k}",
            rule.arity()
        )));
    }
    let perms = permutations(k);
    let mut sat = 0usize;
    for subset in KSubsets::new(n, k) {
        for p in &perms {
            let holds = rule.formula.eval(&|pred, vars: &[usize]| {
                let c = |v: usize| subset[p[v]];
                match vars.len() {
                    1 => world.get(sig.unary_index(pred, c(vars[0]))),
                    _ => world.get(sig.binary_index(pred, c(vars[0]), c(vars[1]))),
                }
            });
            sat += holds as usize;
        }
    }
    Ok(sat as f64 / (binomial(n, k) * perms.len()) as f64)
}

/// Distribution `p(w) ~ exp(sum_j w_j #_k(a_j, w))` with `#_k` the
/// satisfied fraction from [`subset_fraction`].
pub fn model_a_distribution(
    signature: Arc<Signature>,
    k: usize,
    rules: &[IndicatorPotential],
) -> Result<Distribution> {
    for r in rules {
        if r.arity() > k {
            return Err(Error::InvalidArgument(format!(
                "rule `{}` has more than {k} variables",
                r.source()
            )));
        }
    }
    Distribution::from_scores(signature, MAX_EXACT_ATOMS, None, |w| {
        let mut s = 0.0;
        for r in rules {
            s += r.weight * subset_fraction(w, k, r)?;
        }
        Ok(s)
    })
}
