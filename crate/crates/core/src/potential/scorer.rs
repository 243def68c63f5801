//! Evaluation of fragment potentials, global potentials, world scores and
//! their gradients.
//!
//! A fragment's score is the sum over its `k!` anonymizations of the
//! per-code contribution `sum_h beta_h net(code)_h + sum_j beta_j w_j [code |= a_j] / k!`;
//! a world's score is the mean fragment score over all k-subsets.

use std::collections::BTreeMap;

use super::model::PotentialModel;
use super::net::{BackwardScratch, Tape};
use crate::error::{Error, Result};
use crate::relational::{
    binomial, for_each_superset, Anonymizer, Atom, Fragment, KSubsets, World,
};

/// Largest code length for which [`Scorer::cached`] tabulates every code.
pub const TABLE_MAX_BITS: usize = 16;

/// Reusable buffers for one evaluating thread.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    input: Vec<f64>,
    tape: Tape,
    slots: Vec<usize>,
}

/// Evaluates one model over worlds of its signature.
pub struct Scorer<'m> {
    model: &'m PotentialModel,
    anon: Anonymizer,
    n: usize,
    norm: f64,
    inv_perms: f64,
    table: Option<Vec<f64>>,
}

impl<'m> Scorer<'m> {
    pub fn new(model: &'m PotentialModel) -> Result<Self> {
        let sig = model.signature();
        let n = sig.num_constants();
        let k = model.k();
        if n < k {
            return Err(Error::InvalidArgument(format!(
                "domain of {n} constants is smaller than fragment size {k}"
            )));
        }
        let anon = Anonymizer::new(sig, k);
        let inv_perms = 1.0 / anon.num_perms() as f64;
        Ok(Scorer {
            model,
            anon,
            n,
            norm: 1.0 / binomial(n, k) as f64,
            inv_perms,
            table: None,
        })
    }

    /// Like [`Scorer::new`], but for symmetric models with short codes the
    /// per-code contribution is tabulated once up front.
    pub fn cached(model: &'m PotentialModel) -> Result<Self> {
        let mut s = Scorer::new(model)?;
        let bits = s.anon.code_len();
        if model.is_symmetric() && bits <= TABLE_MAX_BITS {
            let mut scratch = Scratch::default();
            let mut table = Vec::with_capacity(1 << bits);
            for code in 0..(1usize << bits) {
                scratch.input.clear();
                scratch
                    .input
                    .extend((0..bits).map(|j| ((code >> j) & 1) as f64));
                table.push(s.contribution(&mut scratch)?);
            }
            s.table = Some(table);
        }
        Ok(s)
    }

    pub fn model(&self) -> &'m PotentialModel {
        self.model
    }

    pub fn anonymizer(&self) -> &Anonymizer {
        &self.anon
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }

    /// `1 / C(n, k)`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    fn check_world(&self, world: &World) -> Result<()> {
        let sig = world.signature();
        if sig.predicates() != self.model.signature().predicates() || sig.num_constants() != self.n {
            return Err(Error::SignatureMismatch(
                "world and model signatures differ".into(),
            ));
        }
        Ok(())
    }

    /// Score contribution of the code (and embeddings) in `scratch.input`.
    fn contribution(&self, scratch: &mut Scratch) -> Result<f64> {
        let m = self.model;
        let mut s = 0.0;
        let heads = m.heads();
        if let Some(net) = m.net() {
            net.forward_into(&scratch.input, &mut scratch.tape)?;
            for (b, o) in m.betas()[..heads].iter().zip(scratch.tape.output()) {
                s += b * o;
            }
        }
        let layout = self.anon.layout();
        let input = &scratch.input;
        for (ind, b) in m.indicators().iter().zip(&m.betas()[heads..]) {
            if ind.holds_on_code(layout, |j| input[j] > 0.5) {
                s += b * ind.weight * self.inv_perms;
            }
        }
        Ok(s)
    }

    fn fill_input(&self, world: &World, subset: &[usize], p: usize, scratch: &mut Scratch) {
        scratch.input.clear();
        self.anon.code_f64(world, subset, p, &mut scratch.input);
        if let Some(e) = self.model.embeddings() {
            scratch.slots.resize(subset.len(), 0);
            self.anon.slot_constants(p, subset, &mut scratch.slots);
            for &c in &scratch.slots {
                scratch.input.extend_from_slice(e.row(c));
            }
        }
    }

    /// Weighted score of the fragment on the sorted `subset`.
    pub fn fragment_score(&self, world: &World, subset: &[usize], scratch: &mut Scratch) -> Result<f64> {
        let mut s = 0.0;
        for p in 0..self.anon.num_perms() {
            s += match &self.table {
                Some(t) => t[self.anon.code_u64(world, subset, p) as usize],
                None => {
                    self.fill_input(world, subset, p, scratch);
                    self.contribution(scratch)?
                }
            };
        }
        Ok(s)
    }

    /// Unweighted fragment potentials (heads, then indicators), added into `out`.
    pub fn fragment_potentials(
        &self,
        world: &World,
        subset: &[usize],
        scratch: &mut Scratch,
        out: &mut [f64],
    ) -> Result<()> {
        let m = self.model;
        let heads = m.heads();
        let layout = self.anon.layout();
        for p in 0..self.anon.num_perms() {
            self.fill_input(world, subset, p, scratch);
            if let Some(net) = m.net() {
                net.forward_into(&scratch.input, &mut scratch.tape)?;
                for (o, v) in out.iter_mut().zip(scratch.tape.output()) {
                    *o += v;
                }
            }
            let input = &scratch.input;
            for (j, ind) in m.indicators().iter().enumerate() {
                if ind.holds_on_code(layout, |b| input[b] > 0.5) {
                    out[heads + j] += ind.weight * self.inv_perms;
                }
            }
        }
        Ok(())
    }

    /// Mean fragment potentials over all k-subsets.
    pub fn global_potentials(&self, world: &World) -> Result<Vec<f64>> {
        self.check_world(world)?;
        let mut out = vec![0.0; self.model.num_potentials()];
        let mut scratch = Scratch::default();
        for s in KSubsets::new(self.n, self.model.k()) {
            self.fragment_potentials(world, &s, &mut scratch, &mut out)?;
        }
        out.iter_mut().for_each(|v| *v *= self.norm);
        Ok(out)
    }

    /// Unnormalised log-probability `sum_i beta_i Phi_i(world)`.
    pub fn world_score(&self, world: &World) -> Result<f64> {
        self.check_world(world)?;
        let mut scratch = Scratch::default();
        let mut total = 0.0;
        for s in KSubsets::new(self.n, self.model.k()) {
            total += self.fragment_score(world, &s, &mut scratch)?;
        }
        let score = total * self.norm;
        if !score.is_finite() {
            return Err(Error::Numeric("non-finite world score".into()));
        }
        Ok(score)
    }

    /// Sum of fragment scores over the subsets containing all of `required`.
    pub fn local_score(&self, world: &World, required: &[usize], scratch: &mut Scratch) -> Result<f64> {
        let mut total = 0.0;
        let mut err = None;
        for_each_superset(self.n, self.model.k(), required, |s| {
            if err.is_none() {
                match self.fragment_score(world, s, scratch) {
                    Ok(v) => total += v,
                    Err(e) => err = Some(e),
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    /// Number of fragments whose score depends on `atom`.
    pub fn affected_fragments(&self, atom: &Atom) -> usize {
        let a = atom.constants().len();
        if a > self.model.k() {
            0
        } else {
            binomial(self.n - a, self.model.k() - a)
        }
    }

    /// `score(atom = true) - score(atom = false)`, re-evaluating only the
    /// fragments that contain the atom's constants. `world` is restored.
    pub fn logit(&self, world: &mut World, atom: usize, scratch: &mut Scratch) -> Result<f64> {
        let a = world.signature().atom_at(atom);
        let consts = a.constants();
        if consts.len() > self.model.k() {
            return Ok(0.0);
        }
        let orig = world.get(atom);
        world.set(atom, true);
        let s1 = self.local_score(world, &consts, scratch);
        world.set(atom, false);
        let s0 = self.local_score(world, &consts, scratch);
        world.set(atom, orig);
        Ok((s1? - s0?) * self.norm)
    }

    /// `world_score(world with atom flipped) - world_score(world)`.
    pub fn score_delta(&self, world: &World, atom: usize) -> Result<f64> {
        self.check_world(world)?;
        if atom >= world.len() {
            return Err(Error::InvalidArgument(format!("atom index {atom} out of range")));
        }
        let mut w = world.clone();
        let d = self.logit(&mut w, atom, &mut Scratch::default())?;
        Ok(if world.get(atom) { -d } else { d })
    }

    pub fn grad_accumulator(&self) -> GradAccumulator<'_, 'm> {
        GradAccumulator {
            scorer: self,
            hist: BTreeMap::new(),
            words: Vec::new(),
        }
    }

    /// Gradient of `world_score` and the global potentials at `world`.
    pub fn score_grad(&self, world: &World) -> Result<ScoreGrad> {
        let mut acc = self.grad_accumulator();
        acc.add_world(world, 1.0)?;
        acc.finish()
    }
}

/// Gradient of a weighted sum of world scores, with the same weighted sum
/// of global potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreGrad {
    /// Flat, in [`PotentialModel::params`] order.
    pub grad: Vec<f64>,
    /// Heads then indicators.
    pub potentials: Vec<f64>,
}

type InputKey = (Vec<u64>, Vec<usize>);

/// Accumulates `sum_w weight_w * grad score(w)` by first counting distinct
/// network inputs, then running one backward pass per distinct input in a
/// fixed (sorted) order.
pub struct GradAccumulator<'s, 'm> {
    scorer: &'s Scorer<'m>,
    hist: BTreeMap<InputKey, f64>,
    words: Vec<u64>,
}

impl GradAccumulator<'_, '_> {
    pub fn add_world(&mut self, world: &World, weight: f64) -> Result<()> {
        let s = self.scorer;
        s.check_world(world)?;
        let w = weight * s.norm;
        for subset in KSubsets::new(s.n, s.model.k()) {
            self.add_fragment(world, &subset, w);
        }
        Ok(())
    }

    /// Adds the listed fragments, each with weight `weight`.
    pub fn add_fragments(&mut self, world: &World, subsets: &[Vec<usize>], weight: f64) -> Result<()> {
        self.scorer.check_world(world)?;
        for subset in subsets {
            self.add_fragment(world, subset, weight);
        }
        Ok(())
    }

    fn add_fragment(&mut self, world: &World, subset: &[usize], weight: f64) {
        let s = self.scorer;
        let embedded = s.model.embeddings().is_some();
        for p in 0..s.anon.num_perms() {
            s.anon.code_words(world, subset, p, &mut self.words);
            let slots = if embedded {
                let mut v = vec![0; subset.len()];
                s.anon.slot_constants(p, subset, &mut v);
                v
            } else {
                Vec::new()
            };
            *self.hist.entry((self.words.clone(), slots)).or_insert(0.0) += weight;
        }
    }

    pub fn finish(self) -> Result<ScoreGrad> {
        let s = self.scorer;
        let m = s.model;
        let layout = m.param_layout();
        let heads = m.heads();
        let code_len = s.anon.code_len();
        let mut grad = vec![0.0; layout.len()];
        let mut potentials = vec![0.0; m.num_potentials()];
        let mut input = Vec::new();
        let mut tape = Tape::default();
        let mut back = BackwardScratch::default();
        let mut cot = vec![0.0; heads];
        let mut input_grads = Vec::new();

        for ((words, slots), c) in &self.hist {
            input.clear();
            input.extend((0..code_len).map(|j| ((words[j / 64] >> (j % 64)) & 1) as f64));
            if let Some(e) = m.embeddings() {
                for &c in slots {
                    input.extend_from_slice(e.row(c));
                }
            }
            if let Some(net) = m.net() {
                net.forward_into(&input, &mut tape)?;
                for h in 0..heads {
                    let v = c * tape.output()[h];
                    potentials[h] += v;
                    grad[layout.betas.start + h] += v;
                    cot[h] = c * m.betas()[h];
                }
                let (net_grad, rest) = grad.split_at_mut(layout.net.end);
                if let Some(e) = m.embeddings() {
                    input_grads.clear();
                    input_grads.resize(input.len(), 0.0);
                    net.backward(&tape, &cot, net_grad, Some(&mut input_grads), &mut back)?;
                    let d = e.dim();
                    for (slot, &cst) in slots.iter().enumerate() {
                        let src = &input_grads[code_len + slot * d..code_len + (slot + 1) * d];
                        let dst = &mut rest[cst * d..(cst + 1) * d];
                        for (g, v) in dst.iter_mut().zip(src) {
                            *g += v;
                        }
                    }
                } else {
                    net.backward(&tape, &cot, net_grad, None, &mut back)?;
                }
            }
            for (j, ind) in m.indicators().iter().enumerate() {
                if ind.holds_on_code(s.anon.layout(), |b| input[b] > 0.5) {
                    let v = c * ind.weight * s.inv_perms;
                    potentials[heads + j] += v;
                    grad[layout.betas.start + heads + j] += v;
                }
            }
        }
        if grad.iter().chain(&potentials).any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        Ok(ScoreGrad { grad, potentials })
    }
}

fn anonymized_outputs(fragment: &Fragment, model: &PotentialModel, embed: bool) -> Result<Vec<f64>> {
    if fragment.signature().predicates() != model.signature().predicates() || fragment.k() != model.k() {
        return Err(Error::SignatureMismatch("fragment does not fit the model".into()));
    }
    let net = model
        .net()
        .ok_or_else(|| Error::Mode("model has no neural potential".into()))?;
    let anon = Anonymizer::new(fragment.signature(), fragment.k());
    let mut out = vec![0.0; net.output_width()];
    let mut input = Vec::new();
    let mut tape = Tape::default();
    for code in anon.anonymize(fragment) {
        input.clear();
        input.extend((0..code.bits.len()).map(|j| code.bits.contains(j) as u8 as f64));
        if embed {
            let e = model.embeddings().unwrap();
            for c in code.inverse() {
                if c >= e.len() {
                    return Err(Error::InvalidArgument(format!(
                        "constant {c} has no embedding row"
                    )));
                }
                input.extend_from_slice(e.row(c));
            }
        }
        net.forward_into(&input, &mut tape)?;
        for (o, v) in out.iter_mut().zip(tape.output()) {
            *o += v;
        }
    }
    Ok(out)
}

/// Per-head sum of the network over all anonymizations of `fragment`.
pub fn symmetric_potential(fragment: &Fragment, model: &PotentialModel) -> Result<Vec<f64>> {
    if !model.is_symmetric() {
        return Err(Error::Mode("model has embeddings; use general_potential".into()));
    }
    anonymized_outputs(fragment, model, false)
}

/// Per-head sum over anonymizations with the embeddings of the constants
/// mapped to slots `1..k` appended to each code.
pub fn general_potential(fragment: &Fragment, model: &PotentialModel) -> Result<Vec<f64>> {
    if model.is_symmetric() {
        return Err(Error::Mode("model has no embeddings; use symmetric_potential".into()));
    }
    anonymized_outputs(fragment, model, true)
}

/// Mean fragment potentials (heads, then indicators).
pub fn global_potential(world: &World, model: &PotentialModel) -> Result<Vec<f64>> {
    Scorer::new(model)?.global_potentials(world)
}

pub fn world_score(world: &World, model: &PotentialModel) -> Result<f64> {
    Scorer::new(model)?.world_score(world)
}

pub fn score_delta(world: &World, atom: usize, model: &PotentialModel) -> Result<f64> {
    Scorer::new(model)?.score_delta(world, atom)
}
