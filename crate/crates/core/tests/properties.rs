use std::sync::Arc;

use nmln::gibbs::{apply_noise, round_robin};
use nmln::io::{format_world, model_from_json, model_to_json, parse_worlds, to_world};
use nmln::potential::{Activation, ModelSpec, PotentialModel, Scorer};
use nmln::relational::{binomial, KSubsets, Signature, World};
use nmln::tasks::{best_threshold, canonical_form, corruptions, rank_of, relabel, ScoredTriple};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sig(n: usize) -> Arc<Signature> {
    let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    Arc::new(Signature::new(names, [("p".to_string(), 1), ("r".to_string(), 2)]).unwrap())
}

fn world_of(sig: &Arc<Signature>, bits: &[bool]) -> World {
    let mut w = World::empty(sig.clone());
    for (i, &b) in bits.iter().enumerate().take(w.len()) {
        w.set(i, b);
    }
    w
}

fn model(sig: &Arc<Signature>, k: usize, seed: u64) -> PotentialModel {
    let spec = ModelSpec {
        k,
        hidden: vec![4],
        activation: Activation::Sigmoid,
        heads: 1,
        embedding_dim: None,
    };
    PotentialModel::random(sig.clone(), &spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn world_strategy(n: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), n + n * n)
}

fn perm_strategy(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn atom_index_is_a_bijection(n in 1usize..7) {
        let s = sig(n);
        for i in 0..s.atom_count() {
            prop_assert_eq!(s.atom_index(&s.atom_at(i)), i);
        }
    }

    #[test]
    fn world_index_round_trips(index in 0u64..4096) {
        let s = sig(3);
        prop_assert_eq!(World::from_index(s, index).to_index(), index);
    }

    #[test]
    fn k_subsets_are_sorted_and_counted(n in 1usize..9, k in 1usize..4) {
        prop_assume!(k <= n);
        let subsets: Vec<Vec<usize>> = KSubsets::new(n, k).collect();
        prop_assert_eq!(subsets.len(), binomial(n, k));
        for s in &subsets {
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn score_delta_matches_rescoring(bits in world_strategy(4), atom in 0usize..20, k in 1usize..4, seed in 0u64..1000) {
        let s = sig(4);
        let m = model(&s, k, seed);
        let w = world_of(&s, &bits);
        let scorer = Scorer::cached(&m).unwrap();
        let mut flipped = w.clone();
        flipped.flip(atom);
        let delta = scorer.score_delta(&w, atom).unwrap();
        let direct = scorer.world_score(&flipped).unwrap() - scorer.world_score(&w).unwrap();
        prop_assert!((delta - direct).abs() < 1e-9, "{} vs {}", delta, direct);
    }

    #[test]
    fn symmetric_scores_ignore_constant_names(bits in world_strategy(5), perm in perm_strategy(5), k in 1usize..4, seed in 0u64..1000) {
        let s = sig(5);
        let m = model(&s, k, seed);
        let w = world_of(&s, &bits);
        let scorer = Scorer::cached(&m).unwrap();
        let a = scorer.world_score(&w).unwrap();
        let b = scorer.world_score(&relabel(&w, &perm)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn canonical_form_is_a_complete_invariant_on_relabelings(bits in world_strategy(5), perm in perm_strategy(5)) {
        let s = sig(5);
        let w = world_of(&s, &bits);
        let v = relabel(&w, &perm);
        let (kw, ow) = canonical_form(&w).unwrap();
        let (kv, ov) = canonical_form(&v).unwrap();
        prop_assert_eq!(&kw, &kv);
        prop_assert_eq!(relabel(&w, &ow), relabel(&v, &ov));
    }

    #[test]
    fn noise_extremes(bits in world_strategy(4), seed in 0u64..1000) {
        let s = sig(4);
        let w = world_of(&s, &bits);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(apply_noise(&w, 0.0, &mut rng).unwrap(), w.clone());
        let all = apply_noise(&w, 1.0, &mut rng).unwrap();
        prop_assert!((0..w.len()).all(|i| all.get(i) != w.get(i)));
        prop_assert!(apply_noise(&w, 1.5, &mut rng).is_err());
    }

    #[test]
    fn text_round_trip(bits in world_strategy(4)) {
        let s = sig(4);
        let w = world_of(&s, &bits);
        let text = format_world(&w);
        let raw = parse_worlds(&text).unwrap();
        let atoms: Vec<_> = raw.into_iter().flatten().collect();
        prop_assert_eq!(to_world(&s, &atoms).unwrap(), w);
    }

    #[test]
    fn model_json_round_trip(k in 1usize..4, seed in 0u64..1000) {
        let m = model(&sig(3), k, seed);
        let back = model_from_json(&model_to_json(&m)).unwrap();
        prop_assert_eq!(model_to_json(&back), model_to_json(&m));
        prop_assert_eq!(back.params(), m.params());
    }

    #[test]
    fn round_robin_is_a_one_factorization(n in 2usize..20) {
        let rounds = round_robin(n);
        prop_assert_eq!(rounds.len(), if n % 2 == 0 { n - 1 } else { n });
        let mut seen = std::collections::BTreeSet::new();
        for r in &rounds {
            let mut used = vec![false; n];
            for &(a, b) in r {
                prop_assert!(a < b && !used[a] && !used[b]);
                used[a] = true;
                used[b] = true;
                prop_assert!(seen.insert((a, b)));
            }
        }
        prop_assert_eq!(seen.len(), n * (n - 1) / 2);
    }

    #[test]
    fn corruptions_skip_fact_and_known_atoms(bits in world_strategy(5), a in 0usize..5, b in 0usize..5) {
        let s = sig(5);
        let kb = world_of(&s, &bits);
        let fact = nmln::relational::Atom::new(1, &[a, b]);
        let cs = corruptions(&fact, &kb).unwrap();
        for c in &cs {
            prop_assert!(c != &fact && !kb.holds(c));
            prop_assert!(c.args[0] == a || c.args[1] == b);
        }
    }

    #[test]
    fn rank_is_bounded(gold in 0.0f64..1.0, others in prop::collection::vec(0.0f64..1.0, 0..30)) {
        let r = rank_of(gold, &others);
        prop_assert!(r >= 1.0 && r <= 1.0 + others.len() as f64);
    }

    #[test]
    fn fitted_threshold_beats_constant_prediction(items in prop::collection::vec((0.0f64..1.0, any::<bool>()), 1..40)) {
        let triples: Vec<ScoredTriple> = items
            .iter()
            .map(|&(score, label)| ScoredTriple { relation: 0, score, label })
            .collect();
        let refs: Vec<&ScoredTriple> = triples.iter().collect();
        let th = best_threshold(&refs);
        let acc = triples.iter().filter(|t| (t.score > th) == t.label).count();
        let pos = triples.iter().filter(|t| t.label).count();
        prop_assert!(acc >= pos.max(triples.len() - pos));
    }
}
