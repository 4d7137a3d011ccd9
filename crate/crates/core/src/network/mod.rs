//! The MPCANet feature pipeline.
//!
//! Each layer learns a projection dictionary from sliding patches and encodes
//! its input into `L` real-valued feature maps. The last layer's maps are
//! binarized, packed into one integer map per parent (bit `l` set when map
//! `l` is positive) and pooled into block histograms. Earlier layers fan out:
//! with layers `L_1, …, L_k` the feature vector holds
//! `L_1 · … · L_{k-1}` pooled blocks of length `2^{L_k} · B`.
//!
//! PCANet is the configuration whose dictionaries are learned on flattened
//! patches.

mod format;
mod layer;
mod pooling;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpca::EnergyPolicy;
use crate::patch::PatchGeometry;
use crate::tensor::DenseTensor;

pub use format::{
    decode_model, encode_model, read_model, write_model, ModelFile, MODEL_MAGIC, MODEL_VERSION,
};
pub use layer::{encode_layer, learn_layer_dictionary, DictionaryKind, LayerConfig, LayerDictionary};
pub use pooling::{binarize, pool_histograms, weight_maps, PoolingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "mpcanet1")]
    Mpcanet1,
    #[serde(rename = "mpcanet2-vector")]
    Mpcanet2Vector,
    #[serde(rename = "mpcanet2-cuboid")]
    Mpcanet2Cuboid,
    #[serde(rename = "pcanet1")]
    Pcanet1,
    #[serde(rename = "pcanet2")]
    Pcanet2,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::Mpcanet1,
        Architecture::Mpcanet2Vector,
        Architecture::Mpcanet2Cuboid,
        Architecture::Pcanet1,
        Architecture::Pcanet2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Mpcanet1 => "mpcanet1",
            Architecture::Mpcanet2Vector => "mpcanet2-vector",
            Architecture::Mpcanet2Cuboid => "mpcanet2-cuboid",
            Architecture::Pcanet1 => "pcanet1",
            Architecture::Pcanet2 => "pcanet2",
        }
    }

    /// Dictionary kind of each stage.
    pub fn stage_kinds(self) -> &'static [DictionaryKind] {
        use DictionaryKind::*;
        match self {
            Architecture::Mpcanet1 => &[TensorMpca],
            Architecture::Mpcanet2Vector => &[TensorMpca, VectorPca],
            Architecture::Mpcanet2Cuboid => &[TensorMpca, TensorMpca],
            Architecture::Pcanet1 => &[VectorPca],
            Architecture::Pcanet2 => &[VectorPca, VectorPca],
        }
    }

    pub fn stages(self) -> usize {
        self.stage_kinds().len()
    }

    pub fn tag(self) -> u8 {
        match self {
            Architecture::Mpcanet1 => 1,
            Architecture::Mpcanet2Vector => 2,
            Architecture::Mpcanet2Cuboid => 3,
            Architecture::Pcanet1 => 4,
            Architecture::Pcanet2 => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.tag() == tag)
            .ok_or_else(|| Error::Corrupt(format!("unknown architecture tag {tag}")))
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::arg(format!(
                    "unknown architecture {s:?} (expected one of mpcanet1, mpcanet2-vector, \
                     mpcanet2-cuboid, pcanet1, pcanet2)"
                ))
            })
    }
}

/// Per-stage settings; the dictionary kind comes from the architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub geometry: PatchGeometry,
    pub encoders: usize,
    pub energy: EnergyPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub architecture: Architecture,
    pub layers: Vec<LayerSpec>,
    pub pooling: PoolingConfig,
}

impl NetworkConfig {
    pub fn layer_configs(&self) -> Result<Vec<LayerConfig>> {
        let kinds = self.architecture.stage_kinds();
        if kinds.len() != self.layers.len() {
            return Err(Error::arg(format!(
                "{} needs {} layer(s), config has {}",
                self.architecture,
                kinds.len(),
                self.layers.len()
            )));
        }
        Ok(self
            .layers
            .iter()
            .zip(kinds)
            .map(|(s, &kind)| LayerConfig {
                geometry: s.geometry.clone(),
                encoders: s.encoders,
                kind,
                energy: s.energy.clone(),
            })
            .collect())
    }

    /// Input dims of every layer followed by the final map dims.
    pub fn stage_dims(&self, input_dims: &[usize]) -> Result<Vec<Vec<usize>>> {
        let configs = self.layer_configs()?;
        let mut dims = vec![input_dims.to_vec()];
        for c in &configs {
            c.validate()?;
            let next = c.geometry.map_dims(dims.last().expect("non-empty"))?;
            dims.push(next);
        }
        Ok(dims)
    }

    /// Feature length `2^{L_last} · B · Π L_earlier`, from geometry alone.
    pub fn feature_dim(&self, input_dims: &[usize]) -> Result<usize> {
        let dims = self.stage_dims(input_dims)?;
        let blocks = self.pooling.block_count(dims.last().expect("non-empty"))?;
        feature_len(&self.encoder_counts(), blocks)
    }

    pub fn validate(&self, input_dims: &[usize]) -> Result<()> {
        self.pooling.validate()?;
        self.feature_dim(input_dims).map(|_| ())
    }

    fn encoder_counts(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.encoders).collect()
    }
}

fn feature_len(encoders: &[usize], blocks: usize) -> Result<usize> {
    let (&last, earlier) = encoders
        .split_last()
        .ok_or_else(|| Error::arg("network has no layers"))?;
    if last > 30 {
        return Err(Error::arg(format!("{last} encoders in the last layer is too many to pool")));
    }
    let parents: usize = earlier.iter().product();
    (1usize << last)
        .checked_mul(blocks)
        .and_then(|v| v.checked_mul(parents))
        .ok_or_else(|| Error::ExtentOverflow("feature length overflows".into()))
}

/// A trained network; immutable and shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    architecture: Architecture,
    layers: Vec<LayerDictionary>,
    pooling: PoolingConfig,
}

impl Network {
    pub fn from_parts(
        architecture: Architecture,
        layers: Vec<LayerDictionary>,
        pooling: PoolingConfig,
    ) -> Result<Self> {
        let kinds = architecture.stage_kinds();
        if kinds.len() != layers.len() {
            return Err(Error::Corrupt(format!(
                "{architecture} needs {} layers, found {}",
                kinds.len(),
                layers.len()
            )));
        }
        for (i, (l, &k)) in layers.iter().zip(kinds).enumerate() {
            if l.config().kind != k {
                return Err(Error::Corrupt(format!("layer {i} has the wrong dictionary kind")));
            }
            if i > 0 && layers[i - 1].map_dims() != l.source_dims() {
                return Err(Error::Corrupt(format!(
                    "layer {i} expects {:?} but receives {:?}",
                    l.source_dims(),
                    layers[i - 1].map_dims()
                )));
            }
        }
        let net = Self {
            architecture,
            layers,
            pooling,
        };
        net.pooling.block_count(&net.map_dims())?;
        Ok(net)
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn layers(&self) -> &[LayerDictionary] {
        &self.layers
    }

    pub fn pooling(&self) -> &PoolingConfig {
        &self.pooling
    }

    pub fn input_dims(&self) -> &[usize] {
        self.layers[0].source_dims()
    }

    /// Dims of the final feature maps.
    pub fn map_dims(&self) -> Vec<usize> {
        self.layers.last().expect("at least one layer").map_dims()
    }

    pub fn block_count(&self) -> usize {
        self.pooling
            .block_count(&self.map_dims())
            .expect("validated at construction")
    }

    pub fn feature_dim(&self) -> usize {
        let encoders: Vec<usize> = self.layers.iter().map(|l| l.encoders()).collect();
        feature_len(&encoders, self.block_count()).expect("validated at construction")
    }

    /// Real-valued maps of every non-last layer, parent-major.
    fn hidden_maps(&self, t: &DenseTensor) -> Result<Vec<DenseTensor>> {
        let mut current = vec![t.clone()];
        for layer in &self.layers[..self.layers.len() - 1] {
            let mut next = Vec::with_capacity(current.len() * layer.encoders());
            for m in &current {
                next.extend(encode_layer(m, layer)?);
            }
            current = next;
        }
        Ok(current)
    }

    /// Binary-weighted decimal map of every last-layer parent.
    pub fn decimal_maps(&self, t: &DenseTensor) -> Result<Vec<DenseTensor>> {
        if t.dims() != self.input_dims() {
            return Err(Error::mismatch(format!(
                "network expects {:?}, got {:?}",
                self.input_dims(),
                t.dims()
            )));
        }
        let last = self.layers.last().expect("at least one layer");
        self.hidden_maps(t)?
            .iter()
            .map(|parent| {
                let children: Vec<DenseTensor> =
                    encode_layer(parent, last)?.iter().map(binarize).collect();
                weight_maps(&children)
            })
            .collect()
    }

    /// Feature vector of `t`: pooled histograms of each decimal map, in
    /// parent order.
    pub fn forward(&self, t: &DenseTensor) -> Result<Vec<f64>> {
        let l = self.layers.last().expect("at least one layer").encoders();
        let mut f = Vec::with_capacity(self.feature_dim());
        for w in self.decimal_maps(t)? {
            f.extend(pool_histograms(&w, &self.pooling, l)?);
        }
        Ok(f)
    }

    /// [`forward`](Self::forward) over many inputs in parallel; output order
    /// follows input order.
    pub fn forward_batch(&self, inputs: &[DenseTensor]) -> Result<Vec<Vec<f64>>> {
        inputs.par_iter().map(|t| self.forward(t)).collect()
    }
}

/// Trains every stage in turn. Stage `k+1` learns from all stage-`k` maps of
/// all training inputs (real-valued, not binarized).
pub fn train_network(train: &[DenseTensor], cfg: &NetworkConfig) -> Result<Network> {
    let first = train
        .first()
        .ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    cfg.validate(first.dims())?;
    let configs = cfg.layer_configs()?;

    let mut layers: Vec<LayerDictionary> = Vec::with_capacity(configs.len());
    let mut inputs: Vec<DenseTensor> = train.to_vec();
    for (i, c) in configs.iter().enumerate() {
        let dict = learn_layer_dictionary(&inputs, c)?;
        if i + 1 < configs.len() {
            let encoded: Vec<Vec<DenseTensor>> = inputs
                .par_iter()
                .map(|t| encode_layer(t, &dict))
                .collect::<Result<_>>()?;
            inputs = encoded.into_iter().flatten().collect();
        }
        layers.push(dict);
    }
    Network::from_parts(cfg.architecture, layers, cfg.pooling.clone())
}
