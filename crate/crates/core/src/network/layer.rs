use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpca::{fit_mpca_traced, sample_mean, EnergyPolicy, FitOptions, MpcaModel};
use crate::patch::{extract_patches, patch_at, PatchGeometry};
use crate::tensor::{increment_index, DenseTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DictionaryKind {
    /// MPCA over patch tensors.
    TensorMpca,
    /// PCA over flattened patches (order-1 MPCA).
    VectorPca,
}

impl DictionaryKind {
    pub fn tag(self) -> u8 {
        match self {
            DictionaryKind::TensorMpca => 0,
            DictionaryKind::VectorPca => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(DictionaryKind::TensorMpca),
            1 => Ok(DictionaryKind::VectorPca),
            t => Err(Error::Corrupt(format!("unknown dictionary kind {t}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerConfig {
    pub geometry: PatchGeometry,
    /// Number of encoders `L` (feature maps produced per input).
    pub encoders: usize,
    pub kind: DictionaryKind,
    pub energy: EnergyPolicy,
}

impl LayerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.encoders == 0 {
            return Err(Error::arg("a layer needs at least one encoder"));
        }
        self.energy.validate()?;
        let available = self.geometry.patch_len();
        if self.encoders > available {
            return Err(Error::InsufficientCoreDims {
                requested: self.encoders,
                available,
            });
        }
        Ok(())
    }
}

/// Learned projection dictionary of one encoder layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerDictionary {
    config: LayerConfig,
    source_dims: Vec<usize>,
    model: MpcaModel,
    mean_patch: DenseTensor,
}

impl LayerDictionary {
    pub fn from_parts(
        config: LayerConfig,
        source_dims: Vec<usize>,
        model: MpcaModel,
        mean_patch: DenseTensor,
    ) -> Result<Self> {
        config.validate()?;
        config.geometry.check_source(&source_dims)?;
        if mean_patch.dims() != config.geometry.patch_dims() {
            return Err(Error::Corrupt("mean patch does not match patch dims".into()));
        }
        let expected_input: Vec<usize> = match config.kind {
            DictionaryKind::TensorMpca => config.geometry.patch_dims().to_vec(),
            DictionaryKind::VectorPca => vec![config.geometry.patch_len()],
        };
        if model.input_dims() != expected_input.as_slice() {
            return Err(Error::Corrupt(format!(
                "dictionary model expects {:?}, layer patches are {:?}",
                model.input_dims(),
                expected_input
            )));
        }
        if model.variance_order().is_none() {
            return Err(Error::MissingVarianceOrder);
        }
        if model.core_len() < config.encoders {
            return Err(Error::InsufficientCoreDims {
                requested: config.encoders,
                available: model.core_len(),
            });
        }
        Ok(Self {
            config,
            source_dims,
            model,
            mean_patch,
        })
    }

    pub fn config(&self) -> &LayerConfig {
        &self.config
    }

    pub fn encoders(&self) -> usize {
        self.config.encoders
    }

    pub fn source_dims(&self) -> &[usize] {
        &self.source_dims
    }

    pub fn model(&self) -> &MpcaModel {
        &self.model
    }

    pub fn mean_patch(&self) -> &DenseTensor {
        &self.mean_patch
    }

    /// Dims of each feature map this layer produces.
    pub fn map_dims(&self) -> Vec<usize> {
        self.config
            .geometry
            .map_dims(&self.source_dims)
            .expect("geometry validated against source dims")
    }

    /// Centered (and for vector-pca flattened) form of a raw patch.
    fn prepare(&self, patch: &DenseTensor) -> Result<DenseTensor> {
        let centered = patch.sub(&self.mean_patch)?;
        Ok(match self.config.kind {
            DictionaryKind::TensorMpca => centered,
            DictionaryKind::VectorPca => centered.flatten(),
        })
    }
}

/// Learns one layer's dictionary from every patch of every input.
///
/// Patches are centered by their ensemble mean (kept as the layer's mean
/// patch), then MPCA is fitted with enough core coordinates for `encoders`.
pub fn learn_layer_dictionary(inputs: &[DenseTensor], cfg: &LayerConfig) -> Result<LayerDictionary> {
    cfg.validate()?;
    let first = inputs
        .first()
        .ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    let source_dims = first.dims().to_vec();
    if let Some(bad) = inputs.iter().find(|t| t.dims() != source_dims.as_slice()) {
        return Err(Error::mismatch(format!(
            "layer inputs mix dims {:?} and {:?}",
            source_dims,
            bad.dims()
        )));
    }
    cfg.geometry.check_source(&source_dims)?;

    let per_input: Vec<Vec<DenseTensor>> = inputs
        .par_iter()
        .map(|t| extract_patches(t, &cfg.geometry).map(|ps| ps.patches))
        .collect::<Result<_>>()?;
    let patches: Vec<DenseTensor> = per_input.into_iter().flatten().collect();
    if patches.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: patches.len(),
        });
    }

    let mean_patch = sample_mean(&patches)?;
    let centered: Vec<DenseTensor> = patches
        .iter()
        .map(|p| {
            let c = p.sub(&mean_patch)?;
            Ok(match cfg.kind {
                DictionaryKind::TensorMpca => c,
                DictionaryKind::VectorPca => c.flatten(),
            })
        })
        .collect::<Result<_>>()?;
    drop(patches);

    let scatter: f64 = centered.iter().map(DenseTensor::frobenius_norm_sq).sum();
    if scatter == 0.0 {
        return Err(Error::ZeroVariance);
    }

    let opts = FitOptions {
        min_core_size: cfg.encoders,
        ..FitOptions::default()
    };
    let mut model = fit_mpca_traced(&centered, &cfg.energy, &opts)?.model;
    model.compute_variance_order(&centered)?;
    LayerDictionary::from_parts(cfg.clone(), source_dims, model, mean_patch)
}

/// Encodes `t` into `L` feature maps.
///
/// At every grid position the centered patch is projected, vectorized by
/// variance order, and truncated to the first `L` coefficients; map `l`
/// collects coefficient `l` over all positions.
pub fn encode_layer(t: &DenseTensor, d: &LayerDictionary) -> Result<Vec<DenseTensor>> {
    if t.dims() != d.source_dims.as_slice() {
        return Err(Error::mismatch(format!(
            "layer expects {:?}, got {:?}",
            d.source_dims,
            t.dims()
        )));
    }
    let geometry = &d.config.geometry;
    let grid = geometry.grid_dims(t.dims())?;
    let map_dims = d.map_dims();
    let positions: usize = map_dims.iter().product();
    let l = d.config.encoders;
    let order = d
        .model
        .variance_order()
        .ok_or(Error::MissingVarianceOrder)?;

    let mut maps = vec![vec![0.0; positions]; l];
    let mut pos = vec![0usize; grid.len()];
    for q in 0..positions {
        let patch = patch_at(t, geometry, &pos);
        let core = d.model.project(&d.prepare(&patch)?)?;
        let data = core.data();
        for (map, &k) in maps.iter_mut().zip(order.iter()) {
            map[q] = data[k];
        }
        increment_index(&mut pos, &grid);
    }
    maps.into_iter()
        .map(|m| DenseTensor::new(map_dims.clone(), m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::Padding;

    fn noise(dims: &[usize], seed: u64) -> DenseTensor {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        DenseTensor::from_fn(dims, |_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .unwrap()
    }

    fn cfg(patch: Vec<usize>, slide: Vec<usize>, padding: Padding, l: usize, kind: DictionaryKind) -> LayerConfig {
        LayerConfig {
            geometry: PatchGeometry::new(patch, slide, padding).unwrap(),
            encoders: l,
            kind,
            energy: EnergyPolicy::new(0.97).unwrap(),
        }
    }

    #[test]
    fn constant_patches_are_rejected() {
        let t = DenseTensor::filled(&[4, 4], 2.0).unwrap();
        let c = cfg(vec![2, 2], vec![0, 1], Padding::Valid, 2, DictionaryKind::TensorMpca);
        assert!(matches!(
            learn_layer_dictionary(&[t.clone(), t], &c),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn too_many_encoders_rejected() {
        let t = noise(&[4, 4], 1);
        let c = cfg(vec![2, 2], vec![0, 1], Padding::Valid, 5, DictionaryKind::TensorMpca);
        assert!(matches!(
            learn_layer_dictionary(&[t], &c),
            Err(Error::InsufficientCoreDims {
                requested: 5,
                available: 4
            })
        ));
    }

    #[test]
    fn guarantees_l_core_coordinates() {
        let inputs: Vec<_> = (0..4).map(|s| noise(&[6, 6, 2], s)).collect();
        let mut c = cfg(vec![3, 3, 2], vec![0, 1], Padding::ZeroPadSame, 8, DictionaryKind::TensorMpca);
        c.energy = EnergyPolicy::new(0.05).unwrap();
        let d = learn_layer_dictionary(&inputs, &c).unwrap();
        assert!(d.model().core_len() >= 8);
    }

    #[test]
    fn full_span_geometry_is_plain_mpca() {
        let inputs: Vec<_> = (0..6).map(|s| noise(&[3, 2], s + 10)).collect();
        let c = cfg(vec![3, 2], vec![], Padding::Valid, 2, DictionaryKind::TensorMpca);
        let d = learn_layer_dictionary(&inputs, &c).unwrap();
        let direct = crate::mpca::fit_mpca_traced(
            &inputs,
            &c.energy,
            &FitOptions {
                min_core_size: 2,
                ..FitOptions::default()
            },
        )
        .unwrap()
        .model;
        assert_eq!(d.model().output_dims(), direct.output_dims());
        for (a, b) in d.model().factors().iter().zip(direct.factors()) {
            assert!(a.max_abs_diff(b) < 1e-10);
        }
        assert_eq!(d.map_dims(), vec![1]);
    }

    #[test]
    fn encode_matches_per_position_oracle() {
        let inputs: Vec<_> = (0..3).map(|s| noise(&[5, 5, 2], s + 20)).collect();
        let c = cfg(vec![3, 3, 2], vec![0, 1], Padding::ZeroPadSame, 4, DictionaryKind::TensorMpca);
        let d = learn_layer_dictionary(&inputs, &c).unwrap();
        let t = noise(&[5, 5, 2], 99);
        let maps = encode_layer(&t, &d).unwrap();
        assert_eq!(maps.len(), 4);
        let ps = extract_patches(&t, &c.geometry).unwrap();
        for (q, p) in ps.patches.iter().enumerate() {
            let core = d.model().project(&p.sub(d.mean_patch()).unwrap()).unwrap();
            let z = d.model().vectorize_core(&core).unwrap();
            for l in 0..4 {
                assert_eq!(maps[l].data()[q], z[l]);
            }
        }
        assert_eq!(maps[0].dims(), &[5, 5]);
    }

    #[test]
    fn mean_tiling_encodes_to_zero() {
        let inputs: Vec<_> = (0..5).map(|s| noise(&[3, 3], s + 30)).collect();
        let c = cfg(vec![3, 3], vec![], Padding::Valid, 2, DictionaryKind::TensorMpca);
        let d = learn_layer_dictionary(&inputs, &c).unwrap();
        let maps = encode_layer(d.mean_patch(), &d).unwrap();
        for m in maps {
            assert!(m.data().iter().all(|&v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn encode_rejects_wrong_dims() {
        let inputs: Vec<_> = (0..2).map(|s| noise(&[4, 4], s)).collect();
        let c = cfg(vec![2, 2], vec![0, 1], Padding::Valid, 2, DictionaryKind::TensorMpca);
        let d = learn_layer_dictionary(&inputs, &c).unwrap();
        assert!(encode_layer(&noise(&[4, 5], 0), &d).is_err());
    }

    #[test]
    fn full_core_encoding_is_lossless_reindexing() {
        let inputs: Vec<_> = (0..4).map(|s| noise(&[4, 4], s + 40)).collect();
        let mut c = cfg(vec![2, 2], vec![0, 1], Padding::Valid, 4, DictionaryKind::TensorMpca);
        c.energy = EnergyPolicy::new(1.0).unwrap();
        let d = learn_layer_dictionary(&inputs, &c).unwrap();
        assert_eq!(d.model().core_len(), 4);
        let maps = encode_layer(&inputs[0], &d).unwrap();
        let positions = 9;
        assert_eq!(maps.iter().map(|m| m.len()).sum::<usize>(), 4 * positions);
        // every position's coefficients reconstruct the original patch
        let ps = extract_patches(&inputs[0], &c.geometry).unwrap();
        for (q, p) in ps.patches.iter().enumerate() {
            let z: Vec<f64> = maps.iter().map(|m| m.data()[q]).collect();
            let core = d.model().unvectorize(&z).unwrap();
            let rec = d.model().reconstruct(&core).unwrap().add(d.mean_patch()).unwrap();
            let err = frob(&rec, p);
            assert!(err < 1e-10);
        }
    }

    fn frob(a: &DenseTensor, b: &DenseTensor) -> f64 {
        crate::tensor::frobenius_sq_distance(a, b).unwrap().sqrt()
    }
}
