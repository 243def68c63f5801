//! Fragment potentials: neural networks over anonymized codes, logical
//! indicator potentials, and their aggregation into world scores.

mod formula;
mod model;
mod net;
mod scorer;

pub use formula::{indicator_potential, Formula, IndicatorPotential};
pub use model::{EmbeddingTable, ModelSpec, ParamLayout, PotentialModel};
pub use net::{sigmoid, Activation, BackwardScratch, DenseNet, Layer, Tape};
pub use scorer::{
    general_potential, global_potential, score_delta, symmetric_potential, world_score,
    GradAccumulator, ScoreGrad, Scorer, Scratch, TABLE_MAX_BITS,
};
