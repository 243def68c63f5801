use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nmln::gibbs::SamplerMode;
use nmln::io::{run, RunConfig, Task};

#[derive(Parser)]
#[command(name = "nmln", version, about = "Neural Markov logic networks")]
struct Cli {
    #[command(subcommand)]
    task: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model by maximum likelihood.
    Train(Opts),
    /// Rank test facts against their corruptions (MRR, HITS@m).
    Complete(Opts),
    /// Threshold marginals to classify labelled triples.
    Classify(Opts),
    /// Collect frequent sampled structures.
    Generate(Opts),
    /// Exact partition function and marginals on tiny domains.
    Oracle(Opts),
    /// Score worlds under a model.
    Eval(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML run configuration; flags below override it.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    signature: Option<PathBuf>,
    /// World files (repeatable).
    #[arg(long)]
    train: Vec<PathBuf>,
    #[arg(long)]
    valid: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Model container to load.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    auto_extend: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mode: Option<SamplerMode>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    pi_n: Option<f64>,
    #[arg(long)]
    neg_sample_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    sweeps_per_update: Option<usize>,
}

fn build(task: Task, o: Opts) -> Result<RunConfig> {
    let mut c = match &o.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    c.task = task;
    if let Some(v) = o.out {
        c.out_dir = v;
    }
    if let Some(v) = o.seed {
        c.seed = v;
    }
    if o.signature.is_some() {
        c.data.signature = o.signature;
    }
    if !o.train.is_empty() {
        c.data.train = o.train;
    }
    if o.valid.is_some() {
        c.data.valid = o.valid;
    }
    if o.test.is_some() {
        c.data.test = o.test;
    }
    if o.model.is_some() {
        c.model.path = o.model;
    }
    c.data.auto_extend |= o.auto_extend;
    if let Some(k) = o.k {
        c.model.k = k;
        c.sampler.k = Some(k);
    }
    if let Some(v) = o.mode {
        c.sampler.mode = v;
        c.train.sampler = v;
    }
    if let Some(v) = o.chains {
        c.sampler.chains = v;
        c.train.chains = v;
    }
    if let Some(v) = o.burn_in {
        c.sampler.burn_in = v;
    }
    if let Some(v) = o.sweeps {
        c.sampler.sweeps = v;
    }
    if let Some(v) = o.pi_n {
        c.sampler.pi_n = v;
        c.train.pi_n = v;
    }
    if o.neg_sample_rate.is_some() {
        c.sampler.neg_sample_rate = o.neg_sample_rate;
        c.train.neg_sample_rate = o.neg_sample_rate;
    }
    if let Some(v) = o.epochs {
        c.train.epochs = v;
    }
    if let Some(v) = o.learning_rate {
        c.train.learning_rate = v;
    }
    if let Some(v) = o.sweeps_per_update {
        c.train.sweeps_per_update = v;
    }
    Ok(c)
}

fn main() -> Result<()> {
    if let Ok(n) = std::env::var("NMLN_THREADS") {
        let n: usize = n.parse().context("NMLN_THREADS must be a number")?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cli = Cli::parse();
    let (task, opts) = match cli.task {
        Command::Train(o) => (Task::Train, o),
        Command::Complete(o) => (Task::Complete, o),
        Command::Classify(o) => (Task::Classify, o),
        Command::Generate(o) => (Task::Generate, o),
        Command::Oracle(o) => (Task::Oracle, o),
        Command::Eval(o) => (Task::Eval, o),
    };
    let config = build(task, opts)?;
    let summary = run(&config).with_context(|| format!("task `{task}` failed"))?;
    for (k, v) in &summary.headline {
        println!("{k}\t{v}");
    }
    println!("resolved config: {}", config.out_dir.join("logs/config.toml").display());
    Ok(())
}
