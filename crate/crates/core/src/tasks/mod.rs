//! Evaluation protocols: knowledge-base completion ranking, triple
//! classification, and structure generation.

mod chem;
mod classify;
mod generate;
mod kbc;
mod query;

pub use chem::skip_bond_augment;
pub use classify::{best_threshold, classify_triples, fit_thresholds, ClassificationResult, ScoredTriple, Thresholds};
pub use generate::{
    canonical_form, collect_generations, relabel, train_and_collect, SampleEntry, SampleLog,
    MAX_CANONICAL_CONSTANTS,
};
pub use kbc::{corruptions, kbc_metrics, rank_fact, rank_facts, rank_of, KbcMetrics, RankResult};
pub use query::query_marginals;
