//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to the real
//! stdout (bypassing the test harness capture) and then asserts.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use nmln::gibbs::{
    apply_noise, build_schedule, exclusion_blocks, init_chains, Sampler, SamplerConfig, SamplerMode,
};
use nmln::io::load_kb;
use nmln::oracle::{
    exact_gradient, exact_marginals, exact_marginals_constrained, expected_potentials, model_a_distribution,
    Distribution,
};
use nmln::potential::{
    general_potential, global_potential, symmetric_potential, Activation, DenseNet, IndicatorPotential, ModelSpec,
    PotentialModel, Scorer,
};
use nmln::relational::{permutations, Fragment, Signature, World};
use nmln::tasks::{collect_generations, query_marginals, relabel};
use nmln::train::{GradientMode, Optimizer, TrainConfig, Trainer};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: usize, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {criterion:>2} {:<4} {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn signature(n: usize, preds: &[(&str, usize)]) -> Arc<Signature> {
    let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let preds: Vec<(String, usize)> = preds.iter().map(|&(p, a)| (p.to_string(), a)).collect();
    Arc::new(Signature::new(names, preds).unwrap())
}

fn random_world(sig: &Arc<Signature>, density: f64, rng: &mut ChaCha8Rng) -> World {
    let mut w = World::empty(sig.clone());
    for i in 0..w.len() {
        w.set(i, rng.random_bool(density));
    }
    w
}

fn random_model(sig: &Arc<Signature>, k: usize, emb: Option<usize>, beta: f64, seed: u64) -> PotentialModel {
    let spec = ModelSpec {
        k,
        hidden: vec![5],
        activation: Activation::Sigmoid,
        heads: 1,
        embedding_dim: emb,
    };
    let mut m = PotentialModel::random(sig.clone(), &spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    m.set_betas(&[beta]);
    m
}

#[test]
fn c01_gradient_matches_finite_differences() {
    let start = std::time::Instant::now();
    let mut worst = 0.0f64;
    let mut params = 0;
    for case in 0..20u64 {
        let k = 1 + (case as usize % 3);
        let emb = if case % 2 == 0 { None } else { Some(2) };
        // n = 4 with unary predicates only, n = 3 with a binary one.
        let sig = if case % 4 == 3 {
            signature(4, &[("p", 1), ("q", 1)])
        } else {
            signature(3, &[("p", 1), ("r", 2)])
        };
        let mut rng = ChaCha8Rng::seed_from_u64(100 + case);
        let data: Vec<World> = (0..2).map(|_| random_world(&sig, 0.4, &mut rng)).collect();
        let mut model = random_model(&sig, k, emb, 1.3, case);
        let grad = exact_gradient(&model, &data).unwrap().grad;
        let theta = model.params();
        let ll = |m: &PotentialModel| {
            let log_z = Distribution::of_model(m, &[]).unwrap().log_z();
            let scorer = Scorer::new(m).unwrap();
            data.iter().map(|w| scorer.world_score(w).unwrap() - log_z).sum::<f64>() / data.len() as f64
        };
        // Fourth-order central stencil.
        let h = 1e-3;
        for i in 0..theta.len() {
            let mut at = |d: f64| {
                let mut t = theta.clone();
                t[i] = theta[i] + d;
                model.set_params(&t).unwrap();
                ll(&model)
            };
            let fd = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-5);
            worst = worst.max(rel);
            params += 1;
        }
        model.set_params(&theta).unwrap();
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-4 && secs < 120.0;
    report(
        1,
        "gradient vs finite differences",
        pass,
        &format!("20 models, {params} parameters, max rel err {worst:.2e}, {secs:.1}s"),
    );
    assert!(pass);
}

fn sampler_error(
    model: &PotentialModel,
    mode: SamplerMode,
    blocks: Vec<nmln::gibbs::ExclusionBlock>,
    start: World,
    exact: &[f64],
    seed: u64,
) -> f64 {
    let scorer = Scorer::cached(model).unwrap();
    let cfg = SamplerConfig {
        mode,
        chains: 4,
        burn_in: 1000,
        sweeps: 25_000,
        seed,
        ..SamplerConfig::default()
    };
    let sampler = Sampler::from_config(&scorer, &cfg, blocks).unwrap();
    let mut chains = init_chains(&[start], &cfg).unwrap();
    let est = sampler.estimate_marginals(&mut chains, cfg.burn_in, cfg.sweeps).unwrap();
    est.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn c02_samplers_agree_with_exact_marginals() {
    let start = std::time::Instant::now();
    let plain = signature(3, &[("p", 1), ("r", 2)]);
    let exclusive = signature(2, &[("a", 1), ("b", 1), ("r", 2), ("s", 2)]);
    let mut worst = [0.0f64; 4];
    for m in 0..10u64 {
        let emb = if m % 2 == 0 { None } else { Some(2) };
        let k2 = random_model(&plain, 2, emb, 3.0, 200 + m);
        let k3 = random_model(&plain, 3, emb, 3.0, 300 + m);
        let exact2 = exact_marginals(&k2).unwrap();
        let exact3 = exact_marginals(&k3).unwrap();
        let empty = World::empty(plain.clone());
        worst[0] = worst[0].max(sampler_error(&k2, SamplerMode::Sequential, Vec::new(), empty.clone(), &exact2, m));
        worst[1] = worst[1].max(sampler_error(&k2, SamplerMode::Blocked, Vec::new(), empty.clone(), &exact2, m));
        worst[2] = worst[2].max(sampler_error(&k3, SamplerMode::Blocked, Vec::new(), empty, &exact3, m));

        let kc = random_model(&exclusive, 2, emb, 3.0, 400 + m);
        let blocks = exclusion_blocks(&exclusive, &[0, 1], &[2, 3]).unwrap();
        let exactc = exact_marginals_constrained(&kc, &blocks).unwrap();
        let mut init = World::empty(exclusive.clone());
        for c in 0..2 {
            init.set(exclusive.unary_index(0, c), true);
        }
        worst[3] = worst[3].max(sampler_error(&kc, SamplerMode::Constrained, blocks, init, &exactc, m));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst.iter().all(|&e| e <= 0.02) && secs < 300.0;
    report(
        2,
        "sampler/oracle agreement",
        pass,
        &format!(
            "max |err| sequential {:.4}, blocked-k2 {:.4}, blocked-k3 {:.4}, constrained {:.4}, {secs:.1}s",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
    assert!(pass);
}

#[test]
fn c03_indicator_models_match_rule_counting() {
    let sig = signature(3, &[("sm", 1), ("ca", 1), ("fr", 2)]);
    let rulesets: Vec<(usize, Vec<(&str, f64)>)> = vec![
        (1, vec![("sm(x1) -> ca(x1)", 1.5)]),
        (2, vec![("sm(x1) & fr(x1,x2) -> sm(x2)", 2.0), ("ca(x1)", -0.5)]),
        (2, vec![("fr(x1,x2) <-> fr(x2,x1)", 1.2), ("!fr(x1,x1)", 0.8)]),
        (3, vec![("fr(x1,x2) & fr(x2,x3) -> fr(x1,x3)", 1.1), ("sm(x1) | ca(x2)", -0.7)]),
        (
            3,
            vec![
                ("fr(x1,x2) & fr(x1,x3) -> fr(x2,x3)", 0.9),
                ("sm(x1) & ca(x1)", 1.4),
                ("fr(x1,x2) -> !fr(x2,x1)", -0.3),
            ],
        ),
    ];
    let mut worst = 0.0f64;
    for (k, rules) in &rulesets {
        let inds: Vec<IndicatorPotential> = rules
            .iter()
            .map(|(f, w)| IndicatorPotential::new(f, *w, &sig).unwrap())
            .collect();
        let model = PotentialModel::from_indicators(sig.clone(), *k, inds.clone()).unwrap();
        let a = Distribution::of_model(&model, &[]).unwrap().probs();
        let b = model_a_distribution(sig.clone(), *k, &inds).unwrap().probs();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    let pass = worst <= 1e-9;
    report(
        3,
        "indicator potentials vs rule counting",
        pass,
        &format!("5 rulesets on n=3, max |p - p'| {worst:.2e}"),
    );
    assert!(pass);
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

#[test]
fn c04_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // Isomorphic fragment pairs.
    let big = signature(6, &[("p", 1), ("q", 1), ("r", 2)]);
    let mut frag_worst = 0.0f64;
    for i in 0..100u64 {
        let k = 1 + (i as usize % 3);
        let model = random_model(&big, k, None, 1.0, 500 + i);
        let w = random_world(&big, 0.5, &mut rng);
        let order = shuffled(6, &mut rng);
        let renamed = relabel(&w, &order);
        let mut subset = shuffled(6, &mut rng)[..k].to_vec();
        subset.sort_unstable();
        let f = nmln::relational::restrict(&w, &subset).unwrap();
        // Constant `order[i]` is called `i` in the renamed world.
        let mut image: Vec<usize> = subset
            .iter()
            .map(|&c| order.iter().position(|&o| o == c).unwrap())
            .collect();
        image.sort_unstable();
        let g = nmln::relational::restrict(&renamed, &image).unwrap();
        assert!(nmln::relational::isomorphic(&f, &g).unwrap());
        let a = symmetric_potential(&f, &model).unwrap();
        let b = symmetric_potential(&g, &model).unwrap();
        frag_worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(frag_worst, f64::max);
    }

    // Isomorphic worlds under the exact oracle.
    let small = signature(3, &[("p", 1), ("r", 2)]);
    let mut world_worst = 0.0f64;
    for (i, k) in [1usize, 2, 3].into_iter().enumerate() {
        let model = random_model(&small, k, None, 2.0, 600 + i as u64);
        let d = Distribution::of_model(&model, &[]).unwrap();
        for &idx in d.worlds() {
            let w = World::from_index(small.clone(), idx);
            for perm in permutations(3) {
                let v = relabel(&w, &perm);
                world_worst = world_worst.max((d.prob(idx) - d.prob(v.to_index())).abs());
            }
        }
    }

    // Equal embedding rows reduce to a symmetric potential whose first layer
    // bias absorbs the embedding inputs.
    let mut emb_worst = 0.0f64;
    for i in 0..20u64 {
        let k = 1 + (i as usize % 3);
        let dim = 3;
        let row: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let base = random_model(&big, k, Some(dim), 1.0, 700 + i);
        let net = base.net().unwrap().clone();
        let emb = nmln::potential::EmbeddingTable::constant(6, &row);
        let with_emb = PotentialModel::new(big.clone(), k, Some(net.clone()), Some(emb), Vec::new(), vec![1.0]).unwrap();

        let mut layers = net.layers().to_vec();
        let first = &mut layers[0];
        let code_len = first.inputs - k * dim;
        let mut weights = Vec::with_capacity(first.outputs * code_len);
        for o in 0..first.outputs {
            let w = &first.weights[o * first.inputs..(o + 1) * first.inputs];
            weights.extend_from_slice(&w[..code_len]);
            let e: f64 = (0..k * dim).map(|j| w[code_len + j] * row[j % dim]).sum();
            first.bias[o] += e;
        }
        first.weights = weights;
        first.inputs = code_len;
        let sym = PotentialModel::new(big.clone(), k, Some(DenseNet::new(layers).unwrap()), None, Vec::new(), vec![1.0])
            .unwrap();

        let w = random_world(&big, 0.5, &mut rng);
        let subset: Vec<usize> = (0..k).collect();
        let f: Fragment = nmln::relational::restrict(&w, &subset).unwrap();
        let a = general_potential(&f, &with_emb).unwrap();
        let b = symmetric_potential(&f, &sym).unwrap();
        emb_worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(emb_worst, f64::max);
    }

    let pass = frag_worst <= 1e-12 && world_worst <= 1e-12 && emb_worst <= 1e-9;
    report(
        4,
        "symmetry",
        pass,
        &format!(
            "fragments {frag_worst:.1e} (100 pairs), worlds {world_worst:.1e}, equal embeddings {emb_worst:.1e}"
        ),
    );
    assert!(pass);
}

#[test]
fn c05_max_entropy_constraints_recovered() {
    let sig = signature(3, &[("p", 1), ("r", 2)]);
    let inds = vec![
        IndicatorPotential::new("p(x1)", 1.0, &sig).unwrap(),
        IndicatorPotential::new("r(x1,x2)", 1.0, &sig).unwrap(),
        IndicatorPotential::new("r(x1,x2) -> r(x2,x1)", 1.0, &sig).unwrap(),
        IndicatorPotential::new("p(x1) & r(x1,x2) -> p(x2)", 1.0, &sig).unwrap(),
        IndicatorPotential::new("r(x1,x1)", 1.0, &sig).unwrap(),
    ];
    let data = World::from_atoms(
        sig.clone(),
        &[
            sig.atom("p", &["c0"]).unwrap(),
            sig.atom("r", &["c0", "c1"]).unwrap(),
            sig.atom("r", &["c1", "c0"]).unwrap(),
            sig.atom("r", &["c1", "c2"]).unwrap(),
            sig.atom("r", &["c2", "c2"]).unwrap(),
        ],
    )
    .unwrap();
    let mut model = PotentialModel::from_indicators(sig.clone(), 2, inds).unwrap();
    model.set_betas(&vec![0.0; 5]);
    let target = global_potential(&data, &model).unwrap();
    let config = TrainConfig {
        learning_rate: 0.05,
        epochs: 5000,
        optimizer: Optimizer::Adam,
        gradient: GradientMode::Exact,
        clip_norm: None,
        seed: 5,
        ..TrainConfig::default()
    };
    let data = [data];
    let mut trainer = Trainer::new(model, &data, config).unwrap();
    let mut steps = 0;
    trainer.train(&data, |r| steps = r.step + 1).unwrap();
    let expected = expected_potentials(trainer.model()).unwrap();
    let worst = expected.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let pass = worst < 0.01 && steps <= 5000;
    report(
        5,
        "max-entropy constraint recovery",
        pass,
        &format!("{steps} exact steps, max |E[Phi] - Phi(data)| {worst:.2e}"),
    );
    assert!(pass);
}

fn smokers_seed(seed: u64) -> (bool, String) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/smokers");
    let kb = load_kb(&dir.join("world.txt"), &dir.join("signature.txt")).unwrap();
    let sig = kb.signature().clone();
    let spec = ModelSpec {
        k: 3,
        hidden: vec![30],
        activation: Activation::Sigmoid,
        heads: 1,
        embedding_dim: None,
    };
    let model = PotentialModel::random(sig.clone(), &spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let config = TrainConfig {
        learning_rate: 0.01,
        epochs: 600,
        chains: 10,
        sampler: SamplerMode::Blocked,
        seed,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(model, std::slice::from_ref(&kb), config).unwrap();
    trainer.train(std::slice::from_ref(&kb), |_| {}).unwrap();
    let model = trainer.into_model();

    let fr = sig.predicate_id("fr").unwrap();
    let n = sig.num_constants();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && !kb.get(sig.binary_index(fr, a, b)))
        .collect();
    let absent: Vec<usize> = pairs.iter().map(|&(a, b)| sig.binary_index(fr, a, b)).collect();
    let sampler = SamplerConfig {
        mode: SamplerMode::Blocked,
        chains: 4,
        burn_in: 200,
        sweeps: 2000,
        seed,
        ..SamplerConfig::default()
    };
    let scorer = Scorer::cached(&model).unwrap();
    let m = query_marginals(&scorer, &kb, &absent, &sampler, &[]).unwrap();
    let reverse_given = |&(a, b): &(usize, usize)| kb.get(sig.binary_index(fr, b, a));
    let lowest_symmetric = pairs
        .iter()
        .zip(&m)
        .filter(|(p, _)| reverse_given(p))
        .map(|(_, &x)| x)
        .fold(f64::INFINITY, f64::min);
    let highest_other = pairs
        .iter()
        .zip(&m)
        .filter(|(p, _)| !reverse_given(p))
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    (
        lowest_symmetric > highest_other,
        format!("{lowest_symmetric:.3}>{highest_other:.3}"),
    )
}

#[test]
fn c06_smokers_learns_symmetric_friendship() {
    let start = std::time::Instant::now();
    let results: Vec<(bool, String)> = (0..10).map(smokers_seed).collect();
    let passed = results.iter().filter(|r| r.0).count();
    let secs = start.elapsed().as_secs_f64();
    let pass = passed >= 9 && secs < 600.0;
    let margins: Vec<&str> = results.iter().map(|r| r.1.as_str()).collect();
    report(
        6,
        "smokers completion",
        pass,
        &format!("{passed}/10 seeds, {secs:.0}s, min reverse vs max other: {}", margins.join(" ")),
    );
    assert!(pass);
}

#[test]
fn c07_noise_flip_rate() {
    let sig = signature(100, &[("r", 2)]);
    assert_eq!(sig.atom_count(), 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = random_world(&sig, 0.3, &mut rng);
    let n = base.len() as f64;
    let mut details = Vec::new();
    let mut pass = true;
    for pi in [0.01, 0.1, 0.5] {
        let noisy = apply_noise(&base, pi, &mut rng).unwrap();
        let flips = (0..base.len()).filter(|&i| base.get(i) != noisy.get(i)).count() as f64;
        let half = 2.576 * (n * pi * (1.0 - pi)).sqrt();
        let ok = (flips - n * pi).abs() <= half;
        pass &= ok;
        details.push(format!("pi={pi}: {flips} flips in [{:.0}, {:.0}]", n * pi - half, n * pi + half));
    }
    report(7, "noise flip rate", pass, &details.join(", "));
    assert!(pass);
}

#[test]
fn c08_k3_schedules() {
    let mut pass = true;
    let mut checked = Vec::new();
    for n in 2..=12 {
        let sig = signature(n, &[("p", 1), ("r", 2)]);
        let s = build_schedule(&sig, 3).unwrap();
        let pair_groups: Vec<_> = s.groups.iter().filter(|g| g.blocks.iter().all(|b| b.constants.len() == 2)).collect();
        let want = if n % 2 == 0 { n - 1 } else { n };
        let mut seen = vec![vec![0usize; n]; n];
        for g in &pair_groups {
            let mut used = vec![false; n];
            for b in &g.blocks {
                for &c in &b.constants {
                    pass &= !used[c];
                    used[c] = true;
                }
                seen[b.constants[0]][b.constants[1]] += 1;
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                pass &= seen[a][b] == 1;
            }
        }
        pass &= pair_groups.len() == want;
        let mut atoms: Vec<usize> = s
            .groups
            .iter()
            .flat_map(|g| g.blocks.iter().flat_map(|b| b.atoms.iter().copied()))
            .collect();
        atoms.sort_unstable();
        pass &= atoms == (0..sig.atom_count()).collect::<Vec<_>>();
        checked.push(format!("n={n}:{}", pair_groups.len()));
    }
    report(8, "k=3 schedules", pass, &format!("pair groups {}", checked.join(" ")));
    assert!(pass);
}

#[test]
fn c09_generation_on_zero_model() {
    let sig = signature(2, &[("p", 1)]);
    assert_eq!(sig.atom_count(), 2);
    let model = PotentialModel::zero(sig.clone(), 1).unwrap();
    let scorer = Scorer::cached(&model).unwrap();
    let cfg = SamplerConfig {
        mode: SamplerMode::Sequential,
        chains: 4,
        burn_in: 10,
        sweeps: 10_000,
        seed: 9,
        ..SamplerConfig::default()
    };
    let log = collect_generations(&scorer, &World::empty(sig.clone()), &cfg, Vec::new()).unwrap();
    let total = log.total() as f64;
    let mut pass = log.distinct() == 3 && log.total() == 40_000;
    let mut details = Vec::new();
    for e in log.entries() {
        // Isomorphism classes: no atom, one atom (two worlds), both atoms.
        let p = match e.world.count_true() {
            1 => 0.5,
            _ => 0.25,
        };
        let sigma = (total * p * (1.0 - p)).sqrt();
        let dev = (e.count as f64 - total * p).abs() / sigma;
        pass &= dev <= 3.0;
        details.push(format!("{} true: {} ({dev:.2} sigma)", e.world.count_true(), e.count));
    }
    details.sort();
    report(
        9,
        "generation plumbing",
        pass,
        &format!("{} entries; {}", log.distinct(), details.join(", ")),
    );
    assert!(pass);
}

fn nmln(args: &[&str], threads: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_nmln"))
        .args(args)
        .env("NMLN_THREADS", threads)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "nmln {args:?} failed");
}

fn artifacts(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for d in ["metrics", "samples", "model"] {
        let Ok(entries) = std::fs::read_dir(root.join(d)) else { continue };
        let mut files: Vec<PathBuf> = entries.map(|e| e.unwrap().path()).collect();
        files.sort();
        for f in files {
            let rel = f.strip_prefix(root).unwrap().to_path_buf();
            out.push((rel, std::fs::read(&f).unwrap()));
        }
    }
    out
}

#[test]
fn c10_subcommands_are_deterministic() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let c = |name: &str| cfg.join(name).to_string_lossy().into_owned();
    let tmp = tempfile::tempdir().unwrap();
    let out = |run: usize, task: &str| tmp.path().join(format!("{task}-{run}")).to_string_lossy().into_owned();

    let mut identical = Vec::new();
    let mut pass = true;
    for (run, threads) in [(0, "1"), (1, "4")] {
        let model = format!("{}/model/model.json", out(run, "train"));
        nmln(&["train", "--config", &c("kinship_train.toml"), "--epochs", "40", "--out", &out(run, "train")], threads);
        nmln(
            &["complete", "--config", &c("kinship_complete.toml"), "--model", &model, "--sweeps", "100", "--out", &out(run, "complete")],
            threads,
        );
        nmln(
            &["classify", "--config", &c("kinship_classify.toml"), "--model", &model, "--sweeps", "100", "--out", &out(run, "classify")],
            threads,
        );
        nmln(&["generate", "--config", &c("molecules_skipbond.toml"), "--epochs", "20", "--out", &out(run, "generate")], threads);
        nmln(&["oracle", "--config", &c("oracle_rules.toml"), "--out", &out(run, "oracle")], threads);
        nmln(&["eval", "--config", &c("oracle_rules.toml"), "--train", &c("oracle_world.txt"), "--out", &out(run, "eval")], threads);
    }
    for task in ["train", "complete", "classify", "generate", "oracle", "eval"] {
        let a = artifacts(Path::new(&out(0, task)));
        let b = artifacts(Path::new(&out(1, task)));
        let same = !a.is_empty() && a == b;
        pass &= same;
        identical.push(format!("{task}:{}", if same { a.len().to_string() } else { "differs".into() }));
    }
    report(
        10,
        "determinism",
        pass,
        &format!("identical artifacts across runs (1 vs 4 threads) {}", identical.join(" ")),
    );
    assert!(pass);
}
