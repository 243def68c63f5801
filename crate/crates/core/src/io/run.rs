//! Task execution with on-disk artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{GenerateSource, RunConfig, Task};
use super::model_file::{check_compatible, load_model, save_model};
use super::text::{
    format_world, format_worlds, parse_signature, parse_worlds, resolve_signature, to_labeled, to_world, RawAtom,
    SignatureFile,
};
use crate::error::{Error, Result};
use crate::gibbs::{exclusion_blocks, ExclusionBlock};
use crate::oracle::Distribution;
use crate::potential::{IndicatorPotential, PotentialModel, Scorer};
use crate::relational::{Atom, Signature, World};
use crate::tasks::{
    classify_triples, collect_generations, kbc_metrics, query_marginals, rank_facts, skip_bond_augment,
    train_and_collect, SampleLog, ScoredTriple,
};
use crate::train::{GradientReport, Trainer};

/// Largest domain on which `train` and `eval` also report exact likelihoods.
const EXACT_REPORT_ATOMS: usize = 16;

/// What a run produced.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    /// `(metric, value)` lines for the console.
    pub headline: Vec<(String, f64)>,
    pub files: Vec<PathBuf>,
}

struct Inputs {
    signature: Arc<Signature>,
    train: Vec<World>,
    valid: Option<Vec<RawAtom>>,
    test: Option<Vec<RawAtom>>,
    model: Option<PotentialModel>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let model = cfg.model.path.as_deref().map(load_model).transpose()?;
    let sig_file = match (&cfg.data.signature, &model) {
        (Some(p), _) => Some(parse_signature(&read(p)?)?),
        (None, Some(m)) => Some(SignatureFile {
            predicates: m.signature().predicates().to_vec(),
            constants: m.embeddings().map(|_| m.signature().constants().to_vec()),
        }),
        (None, None) => None,
    };
    let mut train_raw = Vec::new();
    for p in &cfg.data.train {
        train_raw.extend(parse_worlds(&read(p)?)?);
    }
    let flat = |p: &Option<PathBuf>| -> Result<Option<Vec<RawAtom>>> {
        p.as_deref()
            .map(|p| Ok(parse_worlds(&read(p)?)?.into_iter().flatten().collect()))
            .transpose()
    };
    let valid = flat(&cfg.data.valid)?;
    let test = flat(&cfg.data.test)?;
    let all = train_raw
        .iter()
        .flatten()
        .chain(valid.iter().flatten())
        .chain(test.iter().flatten());
    let signature = Arc::new(resolve_signature(sig_file.as_ref(), all, cfg.data.auto_extend)?);
    let train = train_raw
        .iter()
        .map(|w| to_world(&signature, w))
        .collect::<Result<_>>()?;
    let model = match model {
        Some(m) => {
            check_compatible(&m, &signature)?;
            Some(m.with_signature(signature.clone())?)
        }
        None => None,
    };
    Ok(Inputs {
        signature,
        train,
        valid,
        test,
        model,
    })
}

fn build_model(cfg: &RunConfig, signature: &Arc<Signature>) -> Result<PotentialModel> {
    let indicators: Vec<IndicatorPotential> = cfg
        .model
        .indicators
        .iter()
        .map(|i| IndicatorPotential::new(&i.formula, i.weight, signature))
        .collect::<Result<_>>()?;
    if !cfg.model.neural {
        return PotentialModel::from_indicators(signature.clone(), cfg.model.k, indicators);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let neural = PotentialModel::random(signature.clone(), &cfg.model.spec(), &mut rng)?;
    let mut betas = neural.betas().to_vec();
    betas.extend(std::iter::repeat_n(1.0, indicators.len()));
    PotentialModel::new(
        signature.clone(),
        cfg.model.k,
        neural.net().cloned(),
        neural.embeddings().cloned(),
        indicators,
        betas,
    )
}

fn model_for(cfg: &RunConfig, inputs: &mut Inputs) -> Result<PotentialModel> {
    match inputs.model.take() {
        Some(m) => Ok(m),
        None => build_model(cfg, &inputs.signature),
    }
}

struct Out {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Out {
    fn new(root: &Path) -> Result<Self> {
        for d in ["model", "metrics", "samples", "logs"] {
            fs::create_dir_all(root.join(d))?;
        }
        Ok(Out {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let p = self.root.join(rel);
        fs::write(&p, contents)?;
        self.files.push(p);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(rel, &s)
    }

    fn model(&mut self, model: &PotentialModel) -> Result<()> {
        let p = self.root.join("model/model.json");
        save_model(model, &p)?;
        self.files.push(p);
        Ok(())
    }
}

/// Runs one task, writing `model/`, `metrics/`, `samples/` and `logs/`
/// under `config.out_dir`.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let mut cfg = config.clone();
    cfg.resolve()?;
    let mut out = Out::new(&cfg.out_dir)?;
    out.write("logs/config.toml", &cfg.to_toml())?;
    let mut inputs = load_inputs(&cfg)?;
    let headline = match cfg.task {
        Task::Train => run_train(&cfg, &mut inputs, &mut out)?,
        Task::Complete => run_complete(&cfg, &mut inputs, &mut out)?,
        Task::Classify => run_classify(&cfg, &mut inputs, &mut out)?,
        Task::Generate => run_generate(&cfg, &mut inputs, &mut out)?,
        Task::Oracle => run_oracle(&cfg, &mut inputs, &mut out)?,
        Task::Eval => run_eval(&cfg, &mut inputs, &mut out)?,
    };
    Ok(RunSummary {
        headline,
        files: out.files,
    })
}

fn need_train(inputs: &Inputs, task: Task) -> Result<()> {
    if inputs.train.is_empty() {
        return Err(Error::Config(format!("task `{task}` needs data.train")));
    }
    Ok(())
}

fn exact_ll(model: &PotentialModel, worlds: &[World]) -> Result<Option<f64>> {
    if model.signature().atom_count() > EXACT_REPORT_ATOMS {
        return Ok(None);
    }
    let d = Distribution::of_model(model, &[])?;
    let scorer = Scorer::cached(model)?;
    let mut ll = 0.0;
    for w in worlds {
        ll += scorer.world_score(w)? - d.log_z();
    }
    Ok(Some(ll / worlds.len() as f64))
}

#[derive(Serialize)]
struct TrainMetrics {
    epochs: usize,
    steps: usize,
    final_grad_norm: f64,
    final_residuals: Vec<f64>,
    exact_log_likelihood: Option<f64>,
}

fn write_reports(out: &mut Out, reports: &[GradientReport]) -> Result<()> {
    let mut s = String::new();
    for r in reports {
        s.push_str(&r.to_json_line());
        s.push('\n');
    }
    out.write("logs/train.jsonl", &s)
}

fn run_train(cfg: &RunConfig, inputs: &mut Inputs, out: &mut Out) -> Result<Vec<(String, f64)>> {
    need_train(inputs, cfg.task)?;
    let model = model_for(cfg, inputs)?;
    let mut trainer = Trainer::new(model, &inputs.train, cfg.train.clone())?;
    let mut reports = Vec::new();
    trainer.train(&inputs.train, |r| reports.push(r.clone()))?;
    write_reports(out, &reports)?;
    let model = trainer.into_model();
    out.model(&model)?;
    let last = reports.last();
    let m = TrainMetrics {
        epochs: cfg.train.epochs,
        steps: reports.len(),
        final_grad_norm: last.map_or(0.0, |r| r.grad_norm),
        final_residuals: last.map(|r| r.residuals.clone()).unwrap_or_default(),
        exact_log_likelihood: exact_ll(&model, &inputs.train)?,
    };
    out.json("metrics/train.json", &m)?;
    let mut h = vec![("steps".into(), m.steps as f64)];
    if let Some(ll) = m.exact_log_likelihood {
        h.push(("exact_log_likelihood".into(), ll));
    }
    Ok(h)
}

fn single_kb(inputs: &Inputs, task: Task) -> Result<World> {
    need_train(inputs, task)?;
    if inputs.train.len() != 1 {
        return Err(Error::Config(format!("task `{task}` needs exactly one knowledge-base world")));
    }
    Ok(inputs.train[0].clone())
}

fn run_complete(cfg: &RunConfig, inputs: &mut Inputs, out: &mut Out) -> Result<Vec<(String, f64)>> {
    let kb = single_kb(inputs, cfg.task)?;
    let model = model_for(cfg, inputs)?;
    let raw = inputs
        .test
        .as_ref()
        .ok_or_else(|| Error::Config("task `complete` needs data.test".into()))?;
    let tests: Vec<Atom> = to_labeled(&inputs.signature, raw)?
        .into_iter()
        .filter(|(_, l)| *l)
        .map(|(a, _)| a)
        .collect();
    let scorer = Scorer::cached(&model)?;
    let ranks = rank_facts(&scorer, &kb, &tests, &cfg.sampler)?;
    let mut lines = String::new();
    for r in &ranks {
        lines.push_str(&serde_json::to_string(r)?);
        lines.push('\n');
    }
    out.write("metrics/ranks.jsonl", &lines)?;
    let m = kbc_metrics(&ranks, &cfg.kbc.hits)?;
    out.json("metrics/kbc.json", &m)?;
    let mut h = vec![("mrr".into(), m.mrr)];
    h.extend(m.hits.iter().map(|(k, v)| (format!("hits@{k}"), *v)));
    Ok(h)
}

fn score_split(
    scorer: &Scorer,
    kb: &World,
    raw: &[RawAtom],
    cfg: &RunConfig,
    salt: u64,
) -> Result<Vec<ScoredTriple>> {
    let sig = kb.signature();
    let labeled = to_labeled(sig, raw)?;
    let query: Vec<usize> = labeled.iter().map(|(a, _)| sig.atom_index(a)).collect();
    let mut uniq = query.clone();
    uniq.sort_unstable();
    uniq.dedup();
    let sampler = crate::gibbs::SamplerConfig {
        seed: crate::gibbs::derive_seed(cfg.sampler.seed, &[salt]),
        ..cfg.sampler.clone()
    };
    let m = query_marginals(scorer, kb, &uniq, &sampler, &[])?;
    Ok(labeled
        .iter()
        .zip(&query)
        .map(|((a, l), q)| ScoredTriple {
            relation: a.pred,
            score: m[uniq.binary_search(q).expect("queried")],
            label: *l,
        })
        .collect())
}

fn run_classify(cfg: &RunConfig, inputs: &mut Inputs, out: &mut Out) -> Result<Vec<(String, f64)>> {
    let kb = single_kb(inputs, cfg.task)?;
    let model = model_for(cfg, inputs)?;
    let (valid, test) = match (&inputs.valid, &inputs.test) {
        (Some(v), Some(t)) => (v, t),
        _ => return Err(Error::Config("task `classify` needs data.valid and data.test".into())),
    };
    let scorer = Scorer::cached(&model)?;
    let v = score_split(&scorer, &kb, valid, cfg, 0)?;
    let t = score_split(&scorer, &kb, test, cfg, 1)?;
    let r = classify_triples(&v, &t)?;
    out.json("metrics/classify.json", &r)?;
    Ok(vec![("accuracy".into(), r.accuracy)])
}

fn pred_ids(sig: &Signature, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| sig.predicate_id(n).ok_or_else(|| Error::Config(format!("unknown predicate `{n}`"))))
        .collect()
}

#[derive(Serialize)]
struct GenerateEntry {
    count: usize,
    frequency: f64,
    true_atoms: usize,
}

#[derive(Serialize)]
struct GenerateMetrics {
    samples: usize,
    distinct: usize,
    top: Vec<GenerateEntry>,
}

fn run_generate(cfg: &RunConfig, inputs: &mut Inputs, out: &mut Out) -> Result<Vec<(String, f64)>> {
    let sig = inputs.signature.clone();
    let g = &cfg.generate;
    let blocks: Vec<ExclusionBlock> =
        exclusion_blocks(&sig, &pred_ids(&sig, &g.exactly_one)?, &pred_ids(&sig, &g.at_most_one)?)?;
    if let Some(sb) = &g.skip_bond {
        let bonds = pred_ids(&sig, &sb.bonds)?;
        let skip = pred_ids(&sig, std::slice::from_ref(&sb.skip))?[0];
        inputs.train = inputs
            .train
            .iter()
            .map(|w| skip_bond_augment(w, &bonds, skip))
            .collect::<Result<_>>()?;
    }
    let model = model_for(cfg, inputs)?;
    let log = match g.source {
        GenerateSource::Training => {
            need_train(inputs, cfg.task)?;
            let mut log = g.window.map_or_else(SampleLog::new, SampleLog::with_window);
            let mut trainer = Trainer::with_constraints(model, &inputs.train, cfg.train.clone(), blocks)?;
            train_and_collect(&mut trainer, &inputs.train, cfg.train.epochs, &mut log)?;
            out.model(trainer.model())?;
            log
        }
        GenerateSource::Model => {
            let start = inputs.train.first().cloned().unwrap_or_else(|| World::empty(sig.clone()));
            let scorer = Scorer::cached(&model)?;
            collect_generations(&scorer, &start, &cfg.sampler, blocks)?
        }
    };
    let top = log.top(g.top);
    out.write("samples/top.txt", &format_worlds(top.iter().map(|e| &e.world)))?;
    let total = log.total().max(1) as f64;
    let mut tsv = String::from("rank\tcount\tfrequency\tatoms\n");
    for (i, e) in top.iter().enumerate() {
        let atoms = format_world(&e.world).trim_end().replace('\n', " ");
        let _ = writeln!(tsv, "{}\t{}\t{}\t{}", i + 1, e.count, e.count as f64 / total, atoms);
    }
    out.write("samples/frequencies.tsv", &tsv)?;
    if g.window.is_some() {
        let recent = log.recent_top(g.top);
        out.write("samples/recent_top.txt", &format_worlds(recent.iter().map(|(e, _)| &e.world)))?;
    }
    let m = GenerateMetrics {
        samples: log.total(),
        distinct: log.distinct(),
        top: top
            .iter()
            .map(|e| GenerateEntry {
                count: e.count,
                frequency: e.count as f64 / total,
                true_atoms: e.world.count_true(),
            })
            .collect(),
    };
    out.json("metrics/generate.json", &m)?;
    Ok(vec![("samples".into(), m.samples as f64), ("distinct".into(), m.distinct as f64)])
}

#[derive(Serialize)]
struct Marginal {
    atom: String,
    p: f64,
}

#[derive(Serialize)]
struct OracleMetrics {
    log_z: f64,
    marginals: Vec<Marginal>,
}

fn run_oracle(cfg: &RunConfig, inputs: &mut Inputs, out: &mut Out) -> Result<Vec<(String, f64)>> {
    let model = model_for(cfg, inputs)?;
    let d = Distribution::of_model_capped(&model, &[], cfg.oracle.max_atoms)?;
    let sig = model.signature();
    let m = OracleMetrics {
        log_z: d.log_z(),
        marginals: d
            .marginals()
            .into_iter()
            .enumerate()
            .map(|(i, p)| Marginal {
                atom: sig.display_atom(&sig.atom_at(i)),
                p,
            })
            .collect(),
    };
    out.json("metrics/oracle.json", &m)?;
    if cfg.oracle.distribution {
        let mut s = String::from("world\tprobability\n");
        for (&w, p) in d.worlds().iter().zip(d.probs()) {
            let _ = writeln!(s, "{w}\t{p}");
        }
        out.write("samples/distribution.tsv", &s)?;
    }
    Ok(vec![("log_z".into(), m.log_z)])
}

#[derive(Serialize)]
struct EvalWorld {
    score: f64,
    global_potentials: Vec<f64>,
    log_likelihood: Option<f64>,
}

#[derive(Serialize)]
struct EvalMetrics {
    log_z: Option<f64>,
    worlds: Vec<EvalWorld>,
}

fn run_eval(cfg: &RunConfig, inputs: &mut Inputs, out: &mut Out) -> Result<Vec<(String, f64)>> {
    need_train(inputs, cfg.task)?;
    let model = model_for(cfg, inputs)?;
    let scorer = Scorer::cached(&model)?;
    let log_z = if model.signature().atom_count() <= cfg.oracle.max_atoms {
        Some(Distribution::of_model_capped(&model, &[], cfg.oracle.max_atoms)?.log_z())
    } else {
        None
    };
    let worlds = inputs
        .train
        .iter()
        .map(|w| {
            let score = scorer.world_score(w)?;
            Ok(EvalWorld {
                score,
                global_potentials: scorer.global_potentials(w)?,
                log_likelihood: log_z.map(|z| score - z),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut h = vec![("score".into(), worlds[0].score)];
    if let Some(ll) = worlds[0].log_likelihood {
        h.push(("log_likelihood".into(), ll));
    }
    out.json("metrics/eval.json", &EvalMetrics { log_z, worlds })?;
    Ok(h)
}
