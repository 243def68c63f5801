//! JSON model container.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{DenseNet, EmbeddingTable, IndicatorPotential, Layer, PotentialModel};
use crate::relational::{Predicate, Signature};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct IndicatorRecord {
    formula: String,
    weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ModelRecord {
    version: u32,
    /// Over predicates, and over constants too for embedding models.
    signature_hash: String,
    predicates: Vec<Predicate>,
    constants: Vec<String>,
    k: usize,
    layers: Option<Vec<Layer>>,
    embeddings: Option<EmbeddingTable>,
    indicators: Vec<IndicatorRecord>,
    betas: Vec<f64>,
}

fn hash_for(sig: &Signature, embedded: bool) -> String {
    sig.hash(embedded)
}

pub fn model_to_json(model: &PotentialModel) -> String {
    let sig = model.signature();
    let rec = ModelRecord {
        version: MODEL_FORMAT_VERSION,
        signature_hash: hash_for(sig, model.embeddings().is_some()),
        predicates: sig.predicates().to_vec(),
        constants: sig.constants().to_vec(),
        k: model.k(),
        layers: model.net().map(|n| n.layers().to_vec()),
        embeddings: model.embeddings().cloned(),
        indicators: model
            .indicators()
            .iter()
            .map(|i| IndicatorRecord {
                formula: i.source().to_string(),
                weight: i.weight,
            })
            .collect(),
        betas: model.betas().to_vec(),
    };
    serde_json::to_string_pretty(&rec).expect("model serialises")
}

pub fn model_from_json(text: &str) -> Result<PotentialModel> {
    let rec: ModelRecord = serde_json::from_str(text)?;
    if rec.version != MODEL_FORMAT_VERSION {
        return Err(Error::Version(rec.version));
    }
    let sig = Arc::new(Signature::new(
        rec.constants,
        rec.predicates.into_iter().map(|p| (p.name, p.arity)),
    )?);
    let found = hash_for(&sig, rec.embeddings.is_some());
    if found != rec.signature_hash {
        return Err(Error::HashMismatch {
            expected: rec.signature_hash,
            found,
        });
    }
    let net = rec.layers.map(DenseNet::new).transpose()?;
    let indicators = rec
        .indicators
        .iter()
        .map(|i| IndicatorPotential::new(&i.formula, i.weight, &sig))
        .collect::<Result<_>>()?;
    PotentialModel::new(sig, rec.k, net, rec.embeddings, indicators, rec.betas)
}

pub fn save_model(model: &PotentialModel, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<PotentialModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}

/// Checks that `model` can score worlds of `signature`: same predicates,
/// and for embedding models the same constants.
pub fn check_compatible(model: &PotentialModel, signature: &Signature) -> Result<()> {
    let embedded = model.embeddings().is_some();
    let want = hash_for(model.signature(), embedded);
    let found = hash_for(signature, embedded);
    if want != found {
        return Err(Error::HashMismatch { expected: want, found });
    }
    Ok(())
}
