use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::formula::IndicatorPotential;
use super::net::{Activation, DenseNet};
use crate::error::{Error, Result};
use crate::relational::{CodeLayout, Signature};

/// One real vector per constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    rows: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, rows: Vec<f64>) -> Result<Self> {
        if dim == 0 || rows.len() % dim != 0 {
            return Err(Error::InvalidArgument("embedding rows do not match dimension".into()));
        }
        if rows.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite embedding entry".into()));
        }
        Ok(EmbeddingTable { dim, rows })
    }

    pub fn random<R: Rng + ?Sized>(constants: usize, dim: usize, rng: &mut R) -> Self {
        let s = (dim as f64).powf(-0.5);
        let rows = (0..constants * dim).map(|_| rng.random_range(-s..=s)).collect();
        EmbeddingTable { dim, rows }
    }

    /// All rows equal to `row`.
    pub fn constant(constants: usize, row: &[f64]) -> Self {
        EmbeddingTable {
            dim: row.len(),
            rows: row.iter().copied().cycle().take(constants * row.len()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.rows[c * self.dim..(c + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rows
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.rows
    }
}

/// Architecture knobs for [`PotentialModel::random`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub k: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Number of neural potential heads `m`.
    pub heads: usize,
    /// Embedding dimension; `None` gives a symmetric model.
    pub embedding_dim: Option<usize>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            k: 2,
            hidden: vec![75, 50],
            activation: Activation::Relu,
            heads: 1,
            embedding_dim: None,
        }
    }
}

/// Ranges of the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub net: Range<usize>,
    pub embeddings: Range<usize>,
    pub betas: Range<usize>,
}

impl ParamLayout {
    pub fn len(&self) -> usize {
        self.betas.end
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Neural fragment potentials plus optional logical indicators, mixed by
/// per-potential weights `betas` (heads first, then indicators).
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialModel {
    signature: Arc<Signature>,
    k: usize,
    net: Option<DenseNet>,
    embeddings: Option<EmbeddingTable>,
    indicators: Vec<IndicatorPotential>,
    betas: Vec<f64>,
}

impl PotentialModel {
    pub fn new(
        signature: Arc<Signature>,
        k: usize,
        net: Option<DenseNet>,
        embeddings: Option<EmbeddingTable>,
        indicators: Vec<IndicatorPotential>,
        betas: Vec<f64>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("fragment size must be positive".into()));
        }
        let code_len = CodeLayout::new(&signature, k).len();
        if let Some(e) = &embeddings {
            if net.is_none() {
                return Err(Error::Mode("embeddings require a neural potential".into()));
            }
            if e.len() != signature.num_constants() {
                return Err(Error::InvalidArgument(format!(
                    "embedding table has {} rows for {} constants",
                    e.len(),
                    signature.num_constants()
                )));
            }
        }
        if let Some(net) = &net {
            let want = code_len + k * embeddings.as_ref().map_or(0, EmbeddingTable::dim);
            if net.input_width() != want {
                return Err(Error::InvalidArgument(format!(
                    "network input width {} but codes need {want}",
                    net.input_width()
                )));
            }
        }
        for ind in &indicators {
            if ind.arity() > k {
                return Err(Error::InvalidArgument(format!(
                    "indicator `{}` needs {} variables, fragments have {k}",
                    ind.source(),
                    ind.arity()
                )));
            }
        }
        let heads = net.as_ref().map_or(0, DenseNet::output_width);
        if betas.len() != heads + indicators.len() {
            return Err(Error::InvalidArgument(format!(
                "{} betas for {} potentials",
                betas.len(),
                heads + indicators.len()
            )));
        }
        if betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numeric("non-finite beta".into()));
        }
        Ok(PotentialModel {
            signature,
            k,
            net,
            embeddings,
            indicators,
            betas,
        })
    }

    /// Randomly initialised neural model with all betas at 1.
    pub fn random<R: Rng + ?Sized>(
        signature: Arc<Signature>,
        spec: &ModelSpec,
        rng: &mut R,
    ) -> Result<Self> {
        let code_len = CodeLayout::new(&signature, spec.k).len();
        let dim = spec.embedding_dim.unwrap_or(0);
        let net = DenseNet::random(code_len + spec.k * dim, &spec.hidden, spec.activation, spec.heads, rng);
        let embeddings = spec
            .embedding_dim
            .map(|d| EmbeddingTable::random(signature.num_constants(), d, rng));
        PotentialModel::new(signature, spec.k, Some(net), embeddings, Vec::new(), vec![1.0; spec.heads])
    }

    /// A model made only of indicator potentials, each with `beta = 1`.
    pub fn from_indicators(
        signature: Arc<Signature>,
        k: usize,
        indicators: Vec<IndicatorPotential>,
    ) -> Result<Self> {
        let betas = vec![1.0; indicators.len()];
        PotentialModel::new(signature, k, None, None, indicators, betas)
    }

    /// The zero model (uniform distribution): one head, zero network.
    pub fn zero(signature: Arc<Signature>, k: usize) -> Result<Self> {
        let code_len = CodeLayout::new(&signature, k).len();
        let net = DenseNet::zeros(code_len, &[], Activation::Identity, 1);
        PotentialModel::new(signature, k, Some(net), None, Vec::new(), vec![0.0])
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn net(&self) -> Option<&DenseNet> {
        self.net.as_ref()
    }

    pub fn embeddings(&self) -> Option<&EmbeddingTable> {
        self.embeddings.as_ref()
    }

    pub fn indicators(&self) -> &[IndicatorPotential] {
        &self.indicators
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn set_betas(&mut self, betas: &[f64]) {
        assert_eq!(betas.len(), self.betas.len());
        self.betas.copy_from_slice(betas);
    }

    pub fn is_symmetric(&self) -> bool {
        self.embeddings.is_none()
    }

    /// Neural heads `m`.
    pub fn heads(&self) -> usize {
        self.net.as_ref().map_or(0, DenseNet::output_width)
    }

    /// Heads plus indicators.
    pub fn num_potentials(&self) -> usize {
        self.betas.len()
    }

    pub fn param_layout(&self) -> ParamLayout {
        let n = self.net.as_ref().map_or(0, DenseNet::param_count);
        let e = self.embeddings.as_ref().map_or(0, |t| t.as_slice().len());
        ParamLayout {
            net: 0..n,
            embeddings: n..n + e,
            betas: n + e..n + e + self.betas.len(),
        }
    }

    /// Trainable parameters: network, embeddings, betas. Indicator weights
    /// are fixed.
    pub fn params(&self) -> Vec<f64> {
        let mut out = self.net.as_ref().map(DenseNet::params).unwrap_or_default();
        if let Some(e) = &self.embeddings {
            out.extend_from_slice(e.as_slice());
        }
        out.extend_from_slice(&self.betas);
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        let layout = self.param_layout();
        if flat.len() != layout.len() {
            return Err(Error::InvalidArgument(format!(
                "{} parameters for a model with {}",
                flat.len(),
                layout.len()
            )));
        }
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite parameter update".into()));
        }
        if let Some(net) = &mut self.net {
            net.set_params(&flat[layout.net.clone()]);
        }
        if let Some(e) = &mut self.embeddings {
            e.as_mut_slice().copy_from_slice(&flat[layout.embeddings.clone()]);
        }
        self.betas.copy_from_slice(&flat[layout.betas]);
        Ok(())
    }

    /// Same model over a different constant set with the same predicates.
    /// Only symmetric models transfer.
    pub fn with_signature(&self, signature: Arc<Signature>) -> Result<Self> {
        if self.signature.predicates() != signature.predicates() {
            return Err(Error::SignatureMismatch("predicate lists differ".into()));
        }
        if self.embeddings.is_some() && signature.num_constants() != self.signature.num_constants() {
            return Err(Error::Mode("embedding models are tied to their constants".into()));
        }
        let mut m = self.clone();
        m.signature = signature;
        Ok(m)
    }
}
