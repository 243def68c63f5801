//! Text formats, model persistence, configuration and task runs.

mod config;
mod model_file;
mod run;
mod text;

pub use config::{
    DataConfig, GenerateConfig, GenerateSource, IndicatorConfig, KbcConfig, ModelConfig, OracleConfig, RunConfig,
    SkipBondConfig, Task,
};
pub use model_file::{check_compatible, load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT_VERSION};
pub use run::{run, RunSummary};
pub use text::{
    format_signature, format_world, format_worlds, intern, parse_atom, parse_signature, parse_worlds,
    resolve_signature, to_labeled, to_world, RawAtom, SignatureFile,
};

use std::path::Path;
use std::sync::Arc;

use crate::error::Result;
use crate::relational::World;

/// Reads a single-world knowledge base against a signature file.
pub fn load_kb(path: &Path, signature: &Path) -> Result<World> {
    let sf = parse_signature(&std::fs::read_to_string(signature)?)?;
    let worlds = parse_worlds(&std::fs::read_to_string(path)?)?;
    let sig = Arc::new(resolve_signature(Some(&sf), worlds.iter().flatten(), false)?);
    let atoms: Vec<RawAtom> = worlds.into_iter().flatten().collect();
    to_world(&sig, &atoms)
}
