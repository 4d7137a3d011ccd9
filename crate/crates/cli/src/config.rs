//! JSON run configuration and its resolution into a network config.

use std::path::Path;

use mpcanet_core::network::LayerSpec;
use mpcanet_core::{Architecture, EnergyPolicy, NetworkConfig, Padding, PatchGeometry, PoolingConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_ENERGY: f64 = 0.97;
pub const DEFAULT_SPLITS: usize = 5;
pub const DEFAULT_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub architecture: Architecture,
    pub layers: Vec<LayerEntry>,
    pub pooling: PoolingEntry,
    #[serde(default)]
    pub classifier: ClassifierEntry,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_splits")]
    pub splits: usize,
    /// Train fraction. `train` uses the whole manifest when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub patch: Vec<usize>,
    /// 0-based modes the patch slides along; defaults to every mode where
    /// the patch is shorter than the stage input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slide_modes: Option<Vec<usize>>,
    pub encoders: usize,
    #[serde(default = "default_energy")]
    pub energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_dims: Option<Vec<usize>>,
    #[serde(default)]
    pub padding: Padding,
}

/// Either `box` or `box_unit` with `box_multiple` (absolute extent is
/// `unit · multiple` per mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolingEntry {
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub box_dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_unit: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_multiple: Option<usize>,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
    #[serde(default)]
    pub normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    #[default]
    Ridge,
    NearestNeighbor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierEntry {
    #[serde(default)]
    pub kind: ClassifierKind,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

impl Default for ClassifierEntry {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::Ridge,
            lambda: default_lambda(),
        }
    }
}

fn default_splits() -> usize {
    DEFAULT_SPLITS
}

fn default_energy() -> f64 {
    DEFAULT_ENERGY
}

fn default_overlap() -> f64 {
    0.5
}

fn default_lambda() -> f64 {
    mpcanet_core::classifier::DEFAULT_RIDGE_LAMBDA
}

impl PoolingEntry {
    pub fn absolute_box(&self) -> Result<Vec<usize>, CliError> {
        match (&self.box_dims, &self.box_unit, self.box_multiple) {
            (Some(b), None, None) => Ok(b.clone()),
            (None, Some(unit), Some(k)) => Ok(unit.iter().map(|u| u * k).collect()),
            _ => Err(CliError::usage(
                "pooling needs either \"box\" or both \"box_unit\" and \"box_multiple\"",
            )),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn ratio_or_default(&self) -> f64 {
        self.ratio.unwrap_or(DEFAULT_RATIO)
    }

    /// Builds the network config for inputs of `input_dims` and returns it
    /// with the effective run config (absolute box, explicit slide modes).
    pub fn resolve(&self, input_dims: &[usize]) -> Result<(NetworkConfig, RunConfig), CliError> {
        let box_dims = self.pooling.absolute_box()?;
        let pooling = PoolingConfig {
            box_dims: box_dims.clone(),
            overlap: self.pooling.overlap,
            normalized: self.pooling.normalized,
        };
        if self.layers.len() != self.architecture.stages() {
            return Err(CliError::usage(format!(
                "{} needs {} layer(s), config has {}",
                self.architecture,
                self.architecture.stages(),
                self.layers.len()
            )));
        }
        let mut effective = self.clone();
        effective.pooling = PoolingEntry {
            box_dims: Some(box_dims),
            box_unit: None,
            box_multiple: None,
            ..self.pooling.clone()
        };
        let mut stage_dims = input_dims.to_vec();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (k, entry) in self.layers.iter().enumerate() {
            let geometry = match &entry.slide_modes {
                Some(modes) => PatchGeometry::new(entry.patch.clone(), modes.clone(), entry.padding),
                None => PatchGeometry::sliding_where_smaller(entry.patch.clone(), &stage_dims, entry.padding),
            }
            .map_err(|e| CliError::usage(format!("layer {k}: {e}")))?;
            let mut energy =
                EnergyPolicy::new(entry.energy).map_err(|e| CliError::usage(format!("layer {k}: {e}")))?;
            if let Some(floor) = &entry.min_dims {
                energy = energy.with_min_dims(floor.clone());
            }
            effective.layers[k].slide_modes = Some(geometry.slide_modes().to_vec());
            stage_dims = geometry
                .map_dims(&stage_dims)
                .map_err(|e| CliError::usage(format!("layer {k}: {e}")))?;
            layers.push(LayerSpec {
                geometry,
                encoders: entry.encoders,
                energy,
            });
        }
        let net = NetworkConfig {
            architecture: self.architecture,
            layers,
            pooling,
        };
        net.validate(input_dims)
            .map_err(|e| CliError::usage(format!("config does not fit inputs {input_dims:?}: {e}")))?;
        if !(self.classifier.lambda > 0.0) {
            return Err(CliError::usage("classifier lambda must be positive"));
        }
        if let Some(r) = self.ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(CliError::usage(format!("ratio must lie in (0, 1), got {r}")));
            }
        }
        Ok((net, effective))
    }

    /// Copy whose every layer patch has its leading extents replaced by
    /// `patch` (as far as each layer's patch order allows).
    pub fn with_patch(&self, patch: &[usize]) -> RunConfig {
        let mut out = self.clone();
        for layer in &mut out.layers {
            for (dst, &src) in layer.patch.iter_mut().zip(patch) {
                *dst = src;
            }
        }
        out
    }
}

/// Parses `3x3x8` style extents.
pub fn parse_extents(s: &str) -> Result<Vec<usize>, String> {
    s.split(['x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad extent {p:?} in {s:?}"))
                .and_then(|v| if v == 0 { Err(format!("zero extent in {s:?}")) } else { Ok(v) })
        })
        .collect()
}

pub fn format_extents(d: &[usize]) -> String {
    d.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}
