//! Binary model container.
//!
//! ```text
//! "MPCM" | version u8 | architecture u8
//! layer count u32, then per layer:
//!   patch dims (u32 list) | slide modes (u32 list) | padding u8
//!   encoders u32 | dictionary kind u8 | energy q f64 | min dims (u32 list, empty = none)
//!   source dims (u32 list) | mean patch (tensor)
//!   model mean (tensor) | factor count u32, each (rows u32, cols u32, f64 data)
//!   per-mode eigenvalues (u32 count, f64 values) | variance order (u32 list)
//!   captured scatter f64
//! pooling: box dims (u32 list) | overlap f64 | normalized u8
//! classifier flag u8, then optionally:
//!   "CLSF" | kind u8 | label names (u32 count, each u32 length + UTF-8)
//!   ridge (kind 0): classes (u32 list) | weights (matrix) | bias (u32 count, f64 values)
//!   1-NN  (kind 1): features (matrix) | labels (u32 list)
//! ```
//!
//! Lists are a `u32` count followed by entries, tensors a dims list followed
//! by row-major `f64` payload. Everything is little-endian.

use std::fs;
use std::path::Path;

use super::{Architecture, DictionaryKind, LayerConfig, LayerDictionary, Network, PoolingConfig};
use crate::classifier::{Classifier, LinearModel, NearestNeighbor};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::mpca::{EnergyPolicy, MpcaModel};
use crate::patch::{Padding, PatchGeometry};

pub const MODEL_MAGIC: [u8; 4] = *b"MPCM";
pub const MODEL_VERSION: u8 = 1;
const CLASSIFIER_MAGIC: [u8; 4] = *b"CLSF";

/// Serializes a network, an optional classifier and its label names.
pub fn encode_model(net: &Network, classifier: Option<(&Classifier, &[String])>) -> Result<Vec<u8>> {
    let mut w = ByteWriter::new();
    w.bytes(&MODEL_MAGIC);
    w.u8(MODEL_VERSION);
    w.u8(net.architecture().tag());
    w.len(net.layers().len())?;
    for layer in net.layers() {
        write_layer(&mut w, layer)?;
    }
    let p = net.pooling();
    w.usizes(&p.box_dims)?;
    w.f64(p.overlap);
    w.u8(p.normalized as u8);
    match classifier {
        None => w.u8(0),
        Some((c, names)) => {
            w.u8(1);
            write_classifier(&mut w, c, names)?;
        }
    }
    Ok(w.into_bytes())
}

fn write_layer(w: &mut ByteWriter, layer: &LayerDictionary) -> Result<()> {
    let cfg = layer.config();
    w.usizes(cfg.geometry.patch_dims())?;
    w.usizes(cfg.geometry.slide_modes())?;
    w.u8(match cfg.geometry.padding() {
        Padding::ZeroPadSame => 0,
        Padding::Valid => 1,
    });
    w.len(cfg.encoders)?;
    w.u8(cfg.kind.tag());
    w.f64(cfg.energy.q);
    w.usizes(cfg.energy.min_dims.as_deref().unwrap_or(&[]))?;
    w.usizes(layer.source_dims())?;
    w.tensor(layer.mean_patch())?;

    let m = layer.model();
    w.tensor(m.mean())?;
    w.len(m.factors().len())?;
    for f in m.factors() {
        w.matrix(f)?;
    }
    for ev in m.mode_eigenvalues() {
        w.len(ev.len())?;
        w.f64s(ev);
    }
    w.usizes(m.variance_order().ok_or(Error::MissingVarianceOrder)?)?;
    w.f64(m.captured_scatter());
    Ok(())
}

fn write_classifier(w: &mut ByteWriter, c: &Classifier, names: &[String]) -> Result<()> {
    w.bytes(&CLASSIFIER_MAGIC);
    w.u8(match c {
        Classifier::Ridge(_) => 0,
        Classifier::NearestNeighbor(_) => 1,
    });
    w.len(names.len())?;
    for n in names {
        w.string(n)?;
    }
    match c {
        Classifier::Ridge(m) => {
            w.usizes(m.classes())?;
            w.matrix(m.weights())?;
            w.len(m.bias().len())?;
            w.f64s(m.bias());
        }
        Classifier::NearestNeighbor(m) => {
            w.matrix(m.features())?;
            w.usizes(m.labels())?;
        }
    }
    Ok(())
}

/// A decoded model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub network: Network,
    pub classifier: Option<Classifier>,
    pub label_names: Vec<String>,
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelFile> {
    let mut r = ByteReader::new(bytes);
    r.magic(MODEL_MAGIC)?;
    let version = r.u8("version")?;
    if version != MODEL_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let arch = Architecture::from_tag(r.u8("architecture")?)?;
    let n_layers = r.len("layer count")?;
    if n_layers > 64 {
        return Err(Error::Corrupt(format!("{n_layers} layers")));
    }
    let layers = (0..n_layers)
        .map(|_| read_layer(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let pooling = PoolingConfig {
        box_dims: r.usizes("box dims")?,
        overlap: r.f64("overlap")?,
        normalized: read_bool(&mut r, "normalized")?,
    };
    pooling
        .validate()
        .map_err(|e| Error::Corrupt(format!("pooling: {e}")))?;
    let network = Network::from_parts(arch, layers, pooling)?;

    let (classifier, label_names) = if read_bool(&mut r, "classifier flag")? {
        let (c, names) = read_classifier(&mut r)?;
        if c.feature_dim() != network.feature_dim() {
            return Err(Error::Corrupt(format!(
                "classifier takes {} features, network produces {}",
                c.feature_dim(),
                network.feature_dim()
            )));
        }
        (Some(c), names)
    } else {
        (None, Vec::new())
    };
    r.finish()?;
    Ok(ModelFile {
        network,
        classifier,
        label_names,
    })
}

fn read_bool(r: &mut ByteReader<'_>, what: &str) -> Result<bool> {
    match r.u8(what)? {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(Error::Corrupt(format!("{what}: flag value {v}"))),
    }
}

fn read_layer(r: &mut ByteReader<'_>) -> Result<LayerDictionary> {
    let patch_dims = r.usizes("patch dims")?;
    let slide = r.usizes("slide modes")?;
    let padding = match r.u8("padding")? {
        0 => Padding::ZeroPadSame,
        1 => Padding::Valid,
        v => return Err(Error::Corrupt(format!("padding tag {v}"))),
    };
    let geometry = PatchGeometry::new(patch_dims, slide, padding)?;
    let encoders = r.len("encoders")?;
    let kind = DictionaryKind::from_tag(r.u8("dictionary kind")?)?;
    let q = r.f64("energy")?;
    let floor = r.usizes("min dims")?;
    let mut energy = EnergyPolicy::new(q).map_err(|e| Error::Corrupt(e.to_string()))?;
    if !floor.is_empty() {
        energy = energy.with_min_dims(floor);
    }
    let source_dims = r.usizes("source dims")?;
    let mean_patch = r.tensor("mean patch")?;

    let mean = r.tensor("model mean")?;
    let n_factors = r.len("factor count")?;
    if n_factors != mean.order() {
        return Err(Error::Corrupt(format!(
            "{n_factors} factors for an order-{} model",
            mean.order()
        )));
    }
    let factors = (0..n_factors)
        .map(|_| r.matrix("factor"))
        .collect::<Result<Vec<_>>>()?;
    let eigenvalues = (0..n_factors)
        .map(|_| {
            let n = r.len("eigenvalue count")?;
            r.f64s(n, "eigenvalues")
        })
        .collect::<Result<Vec<_>>>()?;
    let order = r.usizes("variance order")?;
    let captured = r.f64("captured scatter")?;
    let model = MpcaModel::from_parts(factors, mean, eigenvalues, Some(order), captured)?;

    let config = LayerConfig {
        geometry,
        encoders,
        kind,
        energy,
    };
    LayerDictionary::from_parts(config, source_dims, model, mean_patch)
}

fn read_classifier(r: &mut ByteReader<'_>) -> Result<(Classifier, Vec<String>)> {
    r.magic(CLASSIFIER_MAGIC)?;
    let kind = r.u8("classifier kind")?;
    let n_names = r.len("label count")?;
    if n_names > r.remaining() / 4 {
        return Err(Error::Truncated(format!("{n_names} label names")));
    }
    let names = (0..n_names)
        .map(|_| r.string("label name"))
        .collect::<Result<Vec<_>>>()?;
    let check_label = |l: usize| -> Result<()> {
        if l >= names.len() {
            return Err(Error::Corrupt(format!("label id {l} has no name")));
        }
        Ok(())
    };
    let c = match kind {
        0 => {
            let classes = r.usizes("classes")?;
            classes.iter().try_for_each(|&c| check_label(c))?;
            let weights = r.matrix("weights")?;
            let nb = r.len("bias count")?;
            let bias = r.f64s(nb, "bias")?;
            Classifier::Ridge(LinearModel::from_parts(classes, weights, bias)?)
        }
        1 => {
            let features = r.matrix("features")?;
            let labels = r.usizes("labels")?;
            labels.iter().try_for_each(|&c| check_label(c))?;
            Classifier::NearestNeighbor(NearestNeighbor::fit(&features, &labels)?)
        }
        k => return Err(Error::Corrupt(format!("classifier kind {k}"))),
    };
    Ok((c, names))
}

pub fn write_model(
    path: &Path,
    net: &Network,
    classifier: Option<(&Classifier, &[String])>,
) -> Result<()> {
    fs::write(path, encode_model(net, classifier)?)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let bytes = fs::read(path).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    decode_model(&bytes)
}
