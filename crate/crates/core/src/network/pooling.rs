//! Heaviside binarization, binary weighting of map stacks, and block-wise
//! histogram pooling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{increment_index, DenseTensor};

/// Positive entries become 1, everything else (including exact zero) 0.
pub fn binarize(map: &DenseTensor) -> DenseTensor {
    map.map(|v| if v > 0.0 { 1.0 } else { 0.0 })
}

/// `W = Σ_l 2^l · map_l` (maps indexed from zero), so every entry is an
/// integer in `[0, 2^L − 1]`.
pub fn weight_maps(maps: &[DenseTensor]) -> Result<DenseTensor> {
    let first = maps
        .first()
        .ok_or_else(|| Error::arg("weighting needs at least one map"))?;
    if maps.len() > 52 {
        return Err(Error::arg(format!(
            "{} maps exceed the exact integer range of f64",
            maps.len()
        )));
    }
    let mut out = vec![0.0; first.len()];
    let mut weight = 1.0;
    for (l, m) in maps.iter().enumerate() {
        if m.dims() != first.dims() {
            return Err(Error::mismatch(format!(
                "map {l} has dims {:?}, expected {:?}",
                m.dims(),
                first.dims()
            )));
        }
        for (o, &v) in out.iter_mut().zip(m.data()) {
            if v == 1.0 {
                *o += weight;
            } else if v != 0.0 {
                return Err(Error::arg(format!("map {l} holds non-binary value {v}")));
            }
        }
        weight *= 2.0;
    }
    DenseTensor::new(first.dims().to_vec(), out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingConfig {
    pub box_dims: Vec<usize>,
    pub overlap: f64,
    #[serde(default)]
    pub normalized: bool,
}

impl PoolingConfig {
    pub fn new(box_dims: Vec<usize>, overlap: f64) -> Result<Self> {
        let p = Self {
            box_dims,
            overlap,
            normalized: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.box_dims.is_empty() || self.box_dims.contains(&0) {
            return Err(Error::arg(format!("bad box dims {:?}", self.box_dims)));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::arg(format!(
                "overlap ratio must lie in [0, 1), got {}",
                self.overlap
            )));
        }
        Ok(())
    }

    /// Per-mode stride `max(1, round(box · (1 − overlap)))`.
    pub fn strides(&self) -> Vec<usize> {
        self.box_dims
            .iter()
            .map(|&b| ((b as f64 * (1.0 - self.overlap)).round() as usize).max(1))
            .collect()
    }

    /// Box anchors per mode for a map of `map_dims`.
    pub fn anchors(&self, map_dims: &[usize]) -> Result<Vec<Vec<usize>>> {
        self.validate()?;
        if map_dims.len() != self.box_dims.len() {
            return Err(Error::mismatch(format!(
                "order-{} box for order-{} map",
                self.box_dims.len(),
                map_dims.len()
            )));
        }
        map_dims
            .iter()
            .zip(&self.box_dims)
            .zip(self.strides())
            .map(|((&extent, &b), s)| {
                if b > extent {
                    return Err(Error::mismatch(format!(
                        "box extent {b} exceeds map extent {extent}"
                    )));
                }
                Ok(axis_anchors(extent, b, s))
            })
            .collect()
    }

    /// Number of boxes `B` on a map of `map_dims`.
    pub fn block_count(&self, map_dims: &[usize]) -> Result<usize> {
        Ok(self.anchors(map_dims)?.iter().map(Vec::len).product())
    }

    pub fn box_volume(&self) -> usize {
        self.box_dims.iter().product()
    }
}

/// Multiples of `stride` that fit, plus a final anchor flush with the end.
fn axis_anchors(extent: usize, box_len: usize, stride: usize) -> Vec<usize> {
    let last = extent - box_len;
    let mut out: Vec<usize> = (0..=last).step_by(stride).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

/// Concatenated `2^L`-bin histograms of every box, in row-major anchor order.
pub fn pool_histograms(decimal: &DenseTensor, p: &PoolingConfig, encoders: usize) -> Result<Vec<f64>> {
    if encoders == 0 || encoders > 30 {
        return Err(Error::arg(format!("unsupported encoder count {encoders}")));
    }
    let bins = 1usize << encoders;
    let anchors = p.anchors(decimal.dims())?;
    let counts: Vec<usize> = anchors.iter().map(Vec::len).collect();
    let blocks: usize = counts.iter().product();

    let mut codes = Vec::with_capacity(decimal.len());
    for &v in decimal.data() {
        if v < 0.0 || v.fract() != 0.0 || v >= bins as f64 {
            return Err(Error::arg(format!(
                "decimal map value {v} is not an integer in [0, {}]",
                bins - 1
            )));
        }
        codes.push(v as usize);
    }

    let dims = decimal.dims();
    let strides = decimal.strides();
    let order = dims.len();
    let box_dims = &p.box_dims;
    let scale = if p.normalized {
        1.0 / p.box_volume() as f64
    } else {
        1.0
    };

    let mut out = vec![0.0; bins * blocks];
    let mut a = vec![0usize; order];
    for block in 0..blocks {
        let hist = &mut out[block * bins..(block + 1) * bins];
        let origin: Vec<usize> = (0..order).map(|n| anchors[n][a[n]]).collect();
        let mut off = vec![0usize; order];
        for _ in 0..p.box_volume() {
            let k: usize = (0..order).map(|n| (origin[n] + off[n]) * strides[n]).sum();
            hist[codes[k]] += scale;
            increment_index(&mut off, box_dims);
        }
        increment_index(&mut a, &counts);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(dims: &[usize], data: &[f64]) -> DenseTensor {
        DenseTensor::new(dims.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn binarize_examples() {
        let m = t(&[2, 2], &[-1.0, 0.5, 0.0, 2.0]);
        assert_eq!(binarize(&m).data(), &[0.0, 1.0, 0.0, 1.0]);
        let neg = t(&[3], &[-1.0, -2.0, -0.0]);
        assert_eq!(binarize(&neg).data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn weighting_examples() {
        let z = t(&[2], &[0.0, 0.0]);
        assert_eq!(weight_maps(&[z.clone(), z.clone()]).unwrap().data(), &[0.0, 0.0]);
        let m1 = t(&[1], &[1.0]);
        let m2 = t(&[1], &[0.0]);
        let m3 = t(&[1], &[1.0]);
        assert_eq!(weight_maps(&[m1, m2, m3]).unwrap().data(), &[5.0]);
    }

    #[test]
    fn weighting_errors() {
        assert!(weight_maps(&[]).is_err());
        let a = t(&[2], &[0.0, 1.0]);
        let b = t(&[1], &[1.0]);
        assert!(matches!(weight_maps(&[a.clone(), b]), Err(Error::DimensionMismatch(_))));
        let c = t(&[2], &[0.5, 1.0]);
        assert!(matches!(weight_maps(&[a, c]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_box_histogram() {
        let m = t(&[2, 2], &[0.0, 1.0, 1.0, 3.0]);
        let p = PoolingConfig::new(vec![2, 2], 0.0).unwrap();
        assert_eq!(pool_histograms(&m, &p, 2).unwrap(), vec![1.0, 2.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_map_gives_one_hot_boxes() {
        let m = DenseTensor::filled(&[6, 5], 3.0).unwrap();
        let p = PoolingConfig::new(vec![4, 2], 0.5).unwrap();
        let f = pool_histograms(&m, &p, 2).unwrap();
        let blocks = p.block_count(&[6, 5]).unwrap();
        assert_eq!(f.len(), 4 * blocks);
        for h in f.chunks(4) {
            assert_eq!(h, &[0.0, 0.0, 0.0, 8.0]);
        }
    }

    #[test]
    fn anchors_clamp_last_box() {
        // extent 7, box 4, stride 2: 0, 2, then clamp 3
        assert_eq!(axis_anchors(7, 4, 2), vec![0, 2, 3]);
        assert_eq!(axis_anchors(8, 4, 2), vec![0, 2, 4]);
        assert_eq!(axis_anchors(4, 4, 2), vec![0]);
        // protocol shape: 80x50 maps, 16x10 boxes, 50% overlap
        let p = PoolingConfig::new(vec![16, 10], 0.5).unwrap();
        assert_eq!(p.strides(), vec![8, 5]);
        assert_eq!(p.block_count(&[80, 50]).unwrap(), 81);
    }

    #[test]
    fn pooling_errors() {
        let p = PoolingConfig::new(vec![3, 3], 0.5).unwrap();
        let small = DenseTensor::zeros(&[2, 4]).unwrap();
        assert!(pool_histograms(&small, &p, 2).is_err());
        let bad = t(&[3, 3], &[0.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(pool_histograms(&bad, &p, 2).is_err());
        assert!(PoolingConfig::new(vec![2], 1.0).is_err());
        assert!(PoolingConfig::new(vec![0], 0.0).is_err());
    }

    #[test]
    fn normalized_histograms_sum_to_one() {
        let m = t(&[2, 2], &[0.0, 1.0, 1.0, 3.0]);
        let mut p = PoolingConfig::new(vec![2, 2], 0.0).unwrap();
        p.normalized = true;
        let f = pool_histograms(&m, &p, 2).unwrap();
        assert_eq!(f, vec![0.25, 0.5, 0.0, 0.25]);
    }
}
