//! Maximum-likelihood training with persistent Gibbs chains.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{apply_noise, derive_seed, ChainState, ExclusionBlock, Sampler, SamplerMode};
use crate::oracle::exact_gradient;
use crate::potential::{PotentialModel, ScoreGrad, Scorer};
use crate::relational::{KSubsets, World};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

/// How model expectations are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMode {
    /// Averages over persistent Gibbs chains.
    #[default]
    Sampled,
    /// Full enumeration; tiny domains only.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Per-atom flip probability applied to the data at every epoch start.
    pub pi_n: f64,
    pub chains: usize,
    pub sweeps_per_update: usize,
    pub optimizer: Optimizer,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Data worlds per update; `None` uses every world.
    pub batch_size: Option<usize>,
    pub gradient: GradientMode,
    pub sampler: SamplerMode,
    pub seed: u64,
    /// For `k = 2`: replace the full fragment average by all connected
    /// pairs plus a sample of disconnected ones.
    pub subsample: bool,
    /// Disconnected pairs kept per connected pair when subsampling.
    pub disconnected_per_connected: usize,
    /// If set, keep each disconnected pair with this probability instead.
    pub neg_sample_rate: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 100,
            pi_n: 0.0,
            chains: 10,
            sweeps_per_update: 1,
            optimizer: Optimizer::Adam,
            clip_norm: Some(10.0),
            batch_size: None,
            gradient: GradientMode::Sampled,
            sampler: SamplerMode::Sequential,
            seed: 0,
            subsample: false,
            disconnected_per_connected: 2,
            neg_sample_rate: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.sweeps_per_update == 0 {
            return Err(Error::Config("sweeps_per_update must be at least 1".into()));
        }
        // 0.5 is accepted: it turns the data into pure noise, a useful sanity run.
        if !(0.0..=0.5).contains(&self.pi_n) {
            return Err(Error::Config(format!("pi_n = {} outside [0, 0.5]", self.pi_n)));
        }
        if self.chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config("clip_norm must be positive".into()));
            }
        }
        if let Some(r) = self.neg_sample_rate {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Config(format!("neg_sample_rate = {r} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Diagnostics of one parameter update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub epoch: usize,
    pub step: u64,
    pub grad_norm_net: f64,
    pub grad_norm_embeddings: f64,
    pub grad_norm_betas: f64,
    pub grad_norm: f64,
    pub clipped: bool,
    /// `Phi_i` of the (noisy) data, heads then indicators.
    pub data_potentials: Vec<f64>,
    /// Estimated or exact `E_P[Phi_i]`.
    pub model_potentials: Vec<f64>,
    /// `data - model`, the gradient with respect to each beta.
    pub residuals: Vec<f64>,
    /// Exact mean log-likelihood, available in exact mode.
    pub log_likelihood: Option<f64>,
}

impl GradientReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serialises")
    }
}

#[derive(Clone, Debug)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn norm(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Owns the model being trained and its persistent chains.
pub struct Trainer {
    config: TrainConfig,
    model: PotentialModel,
    chains: Vec<ChainState>,
    blocks: Vec<ExclusionBlock>,
    adam: Adam,
    rng: ChaCha8Rng,
    step: u64,
    epoch: usize,
}

impl Trainer {
    /// Chains start from noisy copies of the data worlds.
    pub fn new(model: PotentialModel, data: &[World], config: TrainConfig) -> Result<Self> {
        Self::with_constraints(model, data, config, Vec::new())
    }

    /// As [`Trainer::new`], with exclusion blocks enforced by the chains
    /// (the sampler mode must be `constrained`).
    pub fn with_constraints(
        model: PotentialModel,
        data: &[World],
        config: TrainConfig,
        blocks: Vec<ExclusionBlock>,
    ) -> Result<Self> {
        config.validate()?;
        check_data(&model, data)?;
        if config.subsample && model.k() != 2 {
            return Err(Error::Mode("fragment subsampling requires k = 2".into()));
        }
        if !blocks.is_empty() && config.sampler != SamplerMode::Constrained {
            return Err(Error::Mode("exclusion blocks need the constrained sampler".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let chains = (0..config.chains)
            .map(|i| {
                let w = apply_noise(&data[i % data.len()], config.pi_n, &mut rng)?;
                Ok(ChainState::new(w, derive_seed(config.seed, &[1, i as u64])))
            })
            .collect::<Result<_>>()?;
        let n = model.param_layout().len();
        Ok(Trainer {
            config,
            model,
            chains,
            blocks,
            adam: Adam {
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
            rng,
            step: 0,
            epoch: 0,
        })
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn into_model(self) -> PotentialModel {
        self.model
    }

    pub fn chains(&self) -> &[ChainState] {
        &self.chains
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Fragments kept for one world under subsampling: every pair with a
    /// true binary atom between its constants, plus disconnected pairs.
    fn subsample_pairs(&mut self, world: &World) -> Vec<Vec<usize>> {
        let sig = world.signature().clone();
        let binary: Vec<usize> = (0..sig.predicates().len()).filter(|&p| sig.arity(p) == 2).collect();
        let (mut connected, mut empty) = (Vec::new(), Vec::new());
        for s in KSubsets::new(sig.num_constants(), 2) {
            let linked = binary.iter().any(|&p| {
                world.get(sig.binary_index(p, s[0], s[1])) || world.get(sig.binary_index(p, s[1], s[0]))
            });
            if linked {
                connected.push(s);
            } else {
                empty.push(s);
            }
        }
        match self.config.neg_sample_rate {
            Some(r) => connected.extend(empty.into_iter().filter(|_| self.rng.random_bool(r))),
            None => {
                let want = (connected.len() * self.config.disconnected_per_connected).min(empty.len());
                empty.shuffle(&mut self.rng);
                connected.extend(empty.into_iter().take(want));
            }
        }
        connected
    }

    fn side(&mut self, worlds: &[World]) -> Result<ScoreGrad> {
        let w = 1.0 / worlds.len() as f64;
        let picks: Option<Vec<Vec<Vec<usize>>>> = self
            .config
            .subsample
            .then(|| worlds.iter().map(|x| self.subsample_pairs(x)).collect());
        let scorer = Scorer::cached(&self.model)?;
        let mut acc = scorer.grad_accumulator();
        match picks {
            Some(picks) => {
                for (x, pairs) in worlds.iter().zip(&picks) {
                    if !pairs.is_empty() {
                        acc.add_fragments(x, pairs, w / pairs.len() as f64)?;
                    }
                }
            }
            None => {
                for x in worlds {
                    acc.add_world(x, w)?;
                }
            }
        }
        acc.finish()
    }

    /// One ascent step on the (already noisy) `batch`.
    pub fn grad_step(&mut self, batch: &[World]) -> Result<GradientReport> {
        check_data(&self.model, batch)?;
        let (mut grad, data_potentials, model_potentials, log_likelihood) = match self.config.gradient {
            GradientMode::Exact => {
                let g = exact_gradient(&self.model, batch)?;
                (g.grad, g.data_potentials, g.model_potentials, Some(g.log_likelihood))
            }
            GradientMode::Sampled => {
                let pos = self.side(batch)?;
                {
                    let scorer = Scorer::cached(&self.model)?;
                    let sampler = match self.config.sampler {
                        SamplerMode::Sequential => Sampler::sequential(&scorer),
                        SamplerMode::Blocked => Sampler::blocked(&scorer)?,
                        SamplerMode::Constrained => Sampler::constrained(&scorer, self.blocks.clone())?,
                    };
                    sampler.run_all(&mut self.chains, self.config.sweeps_per_update)?;
                }
                let worlds: Vec<World> = self.chains.iter().map(|c| c.world.clone()).collect();
                let neg = self.side(&worlds)?;
                let grad = pos.grad.iter().zip(&neg.grad).map(|(a, b)| a - b).collect();
                (grad, pos.potentials, neg.potentials, None)
            }
        };
        if grad.iter().any(|g: &f64| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        let layout = self.model.param_layout();
        let total = norm(&grad);
        let mut clipped = false;
        if let Some(c) = self.config.clip_norm {
            if total > c {
                let s = c / total;
                grad.iter_mut().for_each(|g| *g *= s);
                clipped = true;
            }
        }
        let residuals = data_potentials.iter().zip(&model_potentials).map(|(a, b)| a - b).collect();
        let report = GradientReport {
            epoch: self.epoch,
            step: self.step,
            grad_norm_net: norm(&grad[layout.net.clone()]),
            grad_norm_embeddings: norm(&grad[layout.embeddings.clone()]),
            grad_norm_betas: norm(&grad[layout.betas.clone()]),
            grad_norm: total,
            clipped,
            data_potentials,
            model_potentials,
            residuals,
            log_likelihood,
        };
        self.apply(&grad)?;
        self.step += 1;
        Ok(report)
    }

    fn apply(&mut self, grad: &[f64]) -> Result<()> {
        let mut theta = self.model.params();
        let lr = self.config.learning_rate;
        match self.config.optimizer {
            Optimizer::Sgd => theta.iter_mut().zip(grad).for_each(|(t, g)| *t += lr * g),
            Optimizer::Adam => {
                let a = &mut self.adam;
                a.t += 1;
                let c1 = 1.0 - ADAM_B1.powi(a.t);
                let c2 = 1.0 - ADAM_B2.powi(a.t);
                for i in 0..theta.len() {
                    a.m[i] = ADAM_B1 * a.m[i] + (1.0 - ADAM_B1) * grad[i];
                    a.v[i] = ADAM_B2 * a.v[i] + (1.0 - ADAM_B2) * grad[i] * grad[i];
                    theta[i] += lr * (a.m[i] / c1) / ((a.v[i] / c2).sqrt() + ADAM_EPS);
                }
            }
        }
        self.model.set_params(&theta)
    }

    /// One pass over `data`: fresh noise, then one step per batch.
    pub fn epoch(&mut self, data: &[World]) -> Result<Vec<GradientReport>> {
        let noisy: Vec<World> = data
            .iter()
            .map(|w| apply_noise(w, self.config.pi_n, &mut self.rng))
            .collect::<Result<_>>()?;
        let batch = self.config.batch_size.unwrap_or(noisy.len()).min(noisy.len());
        let mut reports = Vec::new();
        for chunk in noisy.chunks(batch) {
            reports.push(self.grad_step(chunk)?);
        }
        self.epoch += 1;
        Ok(reports)
    }

    /// Runs the configured number of epochs, passing every report to `hook`.
    pub fn train(&mut self, data: &[World], mut hook: impl FnMut(&GradientReport)) -> Result<()> {
        for _ in 0..self.config.epochs {
            for r in self.epoch(data)? {
                hook(&r);
            }
        }
        Ok(())
    }
}

fn check_data(model: &PotentialModel, data: &[World]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("no training worlds".into()));
    }
    let sig = model.signature();
    if data.iter().any(|w| w.signature().predicates() != sig.predicates() || w.signature().num_constants() != sig.num_constants()) {
        return Err(Error::SignatureMismatch("training world does not match the model".into()));
    }
    Ok(())
}

/// Trains `model` on `data` and returns it with the report stream.
pub fn train(model: PotentialModel, data: &[World], config: TrainConfig) -> Result<(PotentialModel, Vec<GradientReport>)> {
    let mut t = Trainer::new(model, data, config)?;
    let mut reports = Vec::new();
    t.train(data, |r| reports.push(r.clone()))?;
    Ok((t.into_model(), reports))
}

/// Exact gradient of the mean log-likelihood, for domains of at most 16 atoms.
pub fn exact_grad(model: &PotentialModel, data: &[World]) -> Result<Vec<f64>> {
    let atoms = model.signature().atom_count();
    if atoms > 16 {
        return Err(Error::TooLarge { atoms, cap: 16 });
    }
    Ok(exact_gradient(model, data)?.grad)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::oracle::{exact_marginals, Distribution};
    use crate::potential::{Activation, IndicatorPotential, ModelSpec};
    use crate::relational::Signature;

    fn sig(n: usize) -> Arc<Signature> {
        let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        Arc::new(Signature::new(names, [("sm".to_string(), 1), ("fr".to_string(), 2)]).unwrap())
    }

    fn data(s: &Arc<Signature>) -> World {
        let atoms = [
            s.atom("sm", &["c0"]).unwrap(),
            s.atom("fr", &["c0", "c1"]).unwrap(),
            s.atom("fr", &["c1", "c0"]).unwrap(),
            s.atom("fr", &["c1", "c2"]).unwrap(),
        ];
        World::from_atoms(s.clone(), &atoms).unwrap()
    }

    fn spec(k: usize, emb: Option<usize>) -> ModelSpec {
        ModelSpec {
            k,
            hidden: vec![5],
            activation: Activation::Sigmoid,
            heads: 1,
            embedding_dim: emb,
        }
    }

    #[test]
    fn exact_gradient_matches_finite_differences_of_log_likelihood() {
        let s = sig(3);
        let d = [data(&s)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = PotentialModel::random(s.clone(), &spec(2, Some(2)), &mut rng).unwrap();
        let g = exact_grad(&m, &d).unwrap();
        let theta = m.params();
        let h = 1e-5;
        let ll = |m: &PotentialModel| exact_gradient(m, &d).unwrap().log_likelihood;
        for i in 0..theta.len() {
            let mut t = theta.clone();
            t[i] += h;
            m.set_params(&t).unwrap();
            let up = ll(&m);
            t[i] -= 2.0 * h;
            m.set_params(&t).unwrap();
            let down = ll(&m);
            let fd = (up - down) / (2.0 * h);
            let rel = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-5);
            assert!(rel < 1e-4, "param {i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn zero_betas_give_zero_network_gradients() {
        let s = sig(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = PotentialModel::random(s.clone(), &spec(2, Some(2)), &mut rng).unwrap();
        m.set_betas(&[0.0]);
        let g = exact_grad(&m, &[data(&s)]).unwrap();
        let layout = m.param_layout();
        assert!(g[layout.net.start..layout.embeddings.end].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn chains_at_data_with_no_noise_cancel_beta_gradient() {
        let s = sig(3);
        let d = data(&s);
        let m = PotentialModel::from_indicators(
            s.clone(),
            2,
            vec![IndicatorPotential::new("fr(x1,x2) -> fr(x2,x1)", 1.0, &s).unwrap()],
        )
        .unwrap();
        let t = Trainer::new(m, std::slice::from_ref(&d), TrainConfig::default()).unwrap();
        let scorer = Scorer::new(t.model()).unwrap();
        let mut acc = scorer.grad_accumulator();
        acc.add_world(&d, 1.0).unwrap();
        for c in t.chains() {
            acc.add_world(&c.world, -1.0 / t.chains().len() as f64).unwrap();
        }
        assert!(acc.finish().unwrap().grad.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn exact_training_increases_likelihood() {
        let s = sig(3);
        let d = [data(&s)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = PotentialModel::random(s.clone(), &spec(2, None), &mut rng).unwrap();
        let cfg = TrainConfig {
            gradient: GradientMode::Exact,
            learning_rate: 0.05,
            epochs: 150,
            ..TrainConfig::default()
        };
        let (_, reports) = train(m, &d, cfg).unwrap();
        let ll: Vec<f64> = reports.iter().map(|r| r.log_likelihood.unwrap()).collect();
        let window = |i: usize| ll[i..i + 50].iter().sum::<f64>() / 50.0;
        assert!(window(0) < window(50) && window(50) < window(100));
    }

    #[test]
    fn pure_noise_data_gives_near_uniform_marginals() {
        let s = sig(3);
        let d = [data(&s)];
        let m = PotentialModel::random(s.clone(), &spec(2, None), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let cfg = TrainConfig {
            gradient: GradientMode::Exact,
            pi_n: 0.5,
            learning_rate: 0.01,
            epochs: 300,
            seed: 4,
            ..TrainConfig::default()
        };
        let (m, _) = train(m, &d, cfg).unwrap();
        for p in exact_marginals(&m).unwrap() {
            assert!((p - 0.5).abs() < 0.05, "{p}");
        }
    }

    #[test]
    fn sampled_training_is_reproducible() {
        let s = sig(4);
        let mut w = World::empty(s.clone());
        w.set(0, true);
        w.set(6, true);
        let run = || {
            let m = PotentialModel::random(s.clone(), &spec(2, Some(2)), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            let cfg = TrainConfig {
                epochs: 5,
                pi_n: 0.1,
                chains: 3,
                subsample: true,
                sampler: SamplerMode::Blocked,
                seed: 9,
                ..TrainConfig::default()
            };
            train(m, std::slice::from_ref(&w), cfg).unwrap().0.params()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
            TrainConfig { sweeps_per_update: 0, ..TrainConfig::default() },
            TrainConfig { pi_n: 0.7, ..TrainConfig::default() },
            TrainConfig { chains: 0, ..TrainConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn stationary_betas_at_matched_statistics() {
        // A zero-weight rule is trivially satisfied by the uniform model:
        // both sides equal w * fraction = 0.
        let s = sig(3);
        let r = IndicatorPotential::new("sm(x1)", 0.0, &s).unwrap();
        let m = PotentialModel::from_indicators(s.clone(), 2, vec![r]).unwrap();
        let g = exact_gradient(&m, &[data(&s)]).unwrap();
        assert!(g.grad.iter().all(|x| x.abs() < 1e-9));
        let _ = Distribution::of_model(&m, &[]).unwrap();
    }
}
