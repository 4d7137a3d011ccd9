//! Sliding-window tensor patches.
//!
//! The window moves with stride 1 along the slid modes only. Every other mode
//! must be covered entirely by the patch and contributes no positions, so the
//! position grid (and every feature map built on it) has one axis per slid
//! mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpca::sample_mean;
use crate::tensor::{increment_index, DenseTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Padding {
    /// One position per element: `floor(k/2)` leading and `k-1-floor(k/2)`
    /// trailing zeros along each slid mode.
    #[default]
    ZeroPadSame,
    /// Only windows fully inside the tensor: `I - k + 1` positions.
    Valid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGeometry {
    patch_dims: Vec<usize>,
    slide_modes: Vec<usize>,
    padding: Padding,
}

impl PatchGeometry {
    /// `slide_modes` is sorted and deduplicated.
    pub fn new(patch_dims: Vec<usize>, mut slide_modes: Vec<usize>, padding: Padding) -> Result<Self> {
        if patch_dims.is_empty() || patch_dims.contains(&0) {
            return Err(Error::shape(format!("bad patch dims {patch_dims:?}")));
        }
        slide_modes.sort_unstable();
        slide_modes.dedup();
        if let Some(&m) = slide_modes.iter().find(|&&m| m >= patch_dims.len()) {
            return Err(Error::ModeOutOfRange {
                mode: m,
                order: patch_dims.len(),
            });
        }
        Ok(Self {
            patch_dims,
            slide_modes,
            padding,
        })
    }

    /// Slides along every mode where the patch is smaller than `source_dims`.
    pub fn sliding_where_smaller(
        patch_dims: Vec<usize>,
        source_dims: &[usize],
        padding: Padding,
    ) -> Result<Self> {
        if patch_dims.len() != source_dims.len() {
            return Err(Error::mismatch(format!(
                "patch {patch_dims:?} vs source {source_dims:?}"
            )));
        }
        let slide = (0..patch_dims.len())
            .filter(|&n| patch_dims[n] < source_dims[n])
            .collect();
        Self::new(patch_dims, slide, padding)
    }

    pub fn patch_dims(&self) -> &[usize] {
        &self.patch_dims
    }

    pub fn slide_modes(&self) -> &[usize] {
        &self.slide_modes
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    pub fn patch_len(&self) -> usize {
        self.patch_dims.iter().product()
    }

    /// Checks the geometry against a source tensor's extents.
    pub fn check_source(&self, source_dims: &[usize]) -> Result<()> {
        if source_dims.len() != self.patch_dims.len() {
            return Err(Error::mismatch(format!(
                "order-{} patch for order-{} tensor",
                self.patch_dims.len(),
                source_dims.len()
            )));
        }
        for (n, (&k, &i)) in self.patch_dims.iter().zip(source_dims).enumerate() {
            if k > i {
                return Err(Error::mismatch(format!(
                    "patch extent {k} exceeds tensor extent {i} on mode {n}"
                )));
            }
            if !self.slide_modes.contains(&n) && k != i {
                return Err(Error::mismatch(format!(
                    "mode {n} is not slid, so the patch must span it ({k} != {i})"
                )));
            }
        }
        Ok(())
    }

    /// Position counts per slid mode.
    pub fn grid_dims(&self, source_dims: &[usize]) -> Result<Vec<usize>> {
        self.check_source(source_dims)?;
        Ok(self
            .slide_modes
            .iter()
            .map(|&n| match self.padding {
                Padding::ZeroPadSame => source_dims[n],
                Padding::Valid => source_dims[n] - self.patch_dims[n] + 1,
            })
            .collect())
    }

    /// Feature-map dims for this geometry: the grid, or `[1]` when nothing slides.
    pub fn map_dims(&self, source_dims: &[usize]) -> Result<Vec<usize>> {
        let grid = self.grid_dims(source_dims)?;
        Ok(if grid.is_empty() { vec![1] } else { grid })
    }

    /// Leading pad along `mode` (zero for non-slid modes and `valid`).
    fn lead_pad(&self, mode: usize) -> usize {
        match self.padding {
            Padding::ZeroPadSame if self.slide_modes.contains(&mode) => self.patch_dims[mode] / 2,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub patches: Vec<DenseTensor>,
    pub grid_dims: Vec<usize>,
    pub source_dims: Vec<usize>,
}

/// Enumerates every window position in row-major grid order.
pub fn extract_patches(t: &DenseTensor, g: &PatchGeometry) -> Result<PatchSet> {
    let grid = g.grid_dims(t.dims())?;
    let count: usize = grid.iter().product();
    let mut patches = Vec::with_capacity(count);
    let mut pos = vec![0usize; grid.len()];
    for _ in 0..count {
        patches.push(patch_at(t, g, &pos));
        increment_index(&mut pos, &grid);
    }
    Ok(PatchSet {
        patches,
        grid_dims: grid,
        source_dims: t.dims().to_vec(),
    })
}

/// The patch at grid position `pos` (one coordinate per slid mode).
pub(crate) fn patch_at(t: &DenseTensor, g: &PatchGeometry, pos: &[usize]) -> DenseTensor {
    let dims = t.dims();
    let order = dims.len();
    let strides = t.strides();
    // origin of the window in (possibly negative) source coordinates
    let mut origin = vec![0isize; order];
    for (slot, &n) in g.slide_modes.iter().enumerate() {
        origin[n] = pos[slot] as isize - g.lead_pad(n) as isize;
    }
    let pdims = &g.patch_dims;
    let inner = pdims[order - 1];
    let mut out = vec![0.0; g.patch_len()];
    let src = t.data();
    let mut idx = vec![0usize; order];
    let rows = out.len() / inner;
    for r in 0..rows {
        // row base over the first order-1 modes
        let mut base = 0isize;
        let mut inside = true;
        for n in 0..order - 1 {
            let s = origin[n] + idx[n] as isize;
            if s < 0 || s >= dims[n] as isize {
                inside = false;
                break;
            }
            base += s * strides[n] as isize;
        }
        if inside {
            let dst = &mut out[r * inner..(r + 1) * inner];
            let o = origin[order - 1];
            for (j, d) in dst.iter_mut().enumerate() {
                let s = o + j as isize;
                if s >= 0 && s < dims[order - 1] as isize {
                    *d = src[(base + s) as usize];
                }
            }
        }
        // advance idx over modes 0..order-1
        for n in (0..order - 1).rev() {
            idx[n] += 1;
            if idx[n] < pdims[n] {
                break;
            }
            idx[n] = 0;
        }
    }
    DenseTensor::new(pdims.clone(), out).expect("patch dims are consistent")
}

/// Subtracts `mean` (or the ensemble mean when `None`) from every patch.
pub fn center_patches(ps: &PatchSet, mean: Option<&DenseTensor>) -> Result<(PatchSet, DenseTensor)> {
    let mean = match mean {
        Some(m) => m.clone(),
        None => sample_mean(&ps.patches)?,
    };
    let patches = ps
        .patches
        .iter()
        .map(|p| p.sub(&mean))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        PatchSet {
            patches,
            grid_dims: ps.grid_dims.clone(),
            source_dims: ps.source_dims.clone(),
        },
        mean,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(dims: &[usize]) -> DenseTensor {
        let n: usize = dims.iter().product();
        DenseTensor::new(dims.to_vec(), (1..=n).map(|v| v as f64).collect()).unwrap()
    }

    /// Brute-force window read with explicit zero padding.
    fn oracle_patch(t: &DenseTensor, g: &PatchGeometry, pos: &[usize]) -> DenseTensor {
        let dims = t.dims().to_vec();
        DenseTensor::from_fn(g.patch_dims(), |off| {
            let mut src = Vec::new();
            for n in 0..dims.len() {
                let start = match g.slide_modes().iter().position(|&m| m == n) {
                    Some(slot) => {
                        let lead = match g.padding() {
                            Padding::ZeroPadSame => g.patch_dims()[n] / 2,
                            Padding::Valid => 0,
                        };
                        pos[slot] as isize - lead as isize
                    }
                    None => 0,
                };
                src.push(start + off[n] as isize);
            }
            if src.iter().zip(&dims).all(|(&s, &d)| s >= 0 && s < d as isize) {
                let idx: Vec<usize> = src.iter().map(|&s| s as usize).collect();
                t.get(&idx)
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn full_window_is_single_patch() {
        let t = seq(&[3, 2, 2]);
        for padding in [Padding::Valid, Padding::ZeroPadSame] {
            let g = PatchGeometry::new(vec![3, 2, 2], vec![], padding).unwrap();
            let ps = extract_patches(&t, &g).unwrap();
            assert_eq!(ps.patches.len(), 1);
            assert_eq!(ps.patches[0], t);
            assert!(ps.grid_dims.is_empty());
        }
    }

    #[test]
    fn valid_and_same_counts() {
        let t = seq(&[4, 4, 2]);
        let valid = PatchGeometry::new(vec![3, 3, 2], vec![0, 1], Padding::Valid).unwrap();
        let ps = extract_patches(&t, &valid).unwrap();
        assert_eq!(ps.patches.len(), 4);
        assert_eq!(ps.grid_dims, vec![2, 2]);

        let same = PatchGeometry::new(vec![3, 3, 2], vec![0, 1], Padding::ZeroPadSame).unwrap();
        let ps = extract_patches(&t, &same).unwrap();
        assert_eq!(ps.patches.len(), 16);
        assert_eq!(ps.patches[0], oracle_patch(&t, &same, &[0, 0]));
        // top-left corner: first row and column of the window are padding
        let corner = &ps.patches[0];
        for a in 0..3 {
            for c in 0..2 {
                assert_eq!(corner.get(&[0, a, c]), 0.0);
                assert_eq!(corner.get(&[a, 0, c]), 0.0);
            }
        }
        assert_eq!(corner.get(&[1, 1, 0]), t.get(&[0, 0, 0]));
    }

    #[test]
    fn every_patch_matches_oracle() {
        let t = seq(&[5, 4, 3]);
        for padding in [Padding::Valid, Padding::ZeroPadSame] {
            for (pd, slide) in [
                (vec![3, 2, 3], vec![0, 1]),
                (vec![2, 4, 1], vec![0, 2]),
                (vec![1, 1, 1], vec![0, 1, 2]),
                (vec![4, 3, 2], vec![0, 1, 2]),
            ] {
                let g = PatchGeometry::new(pd, slide, padding).unwrap();
                let ps = extract_patches(&t, &g).unwrap();
                let mut pos = vec![0; ps.grid_dims.len()];
                for p in &ps.patches {
                    assert_eq!(p, &oracle_patch(&t, &g, &pos));
                    increment_index(&mut pos, &ps.grid_dims);
                }
            }
        }
    }

    #[test]
    fn nonconforming_geometry_rejected() {
        let t = seq(&[4, 4, 2]);
        // third mode not slid but not spanned
        let g = PatchGeometry::new(vec![3, 3, 1], vec![0, 1], Padding::Valid).unwrap();
        assert!(extract_patches(&t, &g).is_err());
        let g = PatchGeometry::new(vec![5, 3, 2], vec![0, 1], Padding::Valid).unwrap();
        assert!(extract_patches(&t, &g).is_err());
        let g = PatchGeometry::new(vec![3, 3], vec![0, 1], Padding::Valid).unwrap();
        assert!(extract_patches(&t, &g).is_err());
        assert!(PatchGeometry::new(vec![3, 3], vec![2], Padding::Valid).is_err());
    }

    #[test]
    fn centering_examples() {
        let p = seq(&[2, 2]);
        let ps = PatchSet {
            patches: vec![p.clone(), p.clone(), p.clone()],
            grid_dims: vec![3],
            source_dims: vec![4, 2],
        };
        let (c, mean) = center_patches(&ps, None).unwrap();
        assert_eq!(mean, p);
        assert!(c.patches.iter().all(|q| q.data().iter().all(|&v| v == 0.0)));

        let two = PatchSet {
            patches: vec![
                DenseTensor::filled(&[2], 0.0).unwrap(),
                DenseTensor::filled(&[2], 2.0).unwrap(),
            ],
            grid_dims: vec![2],
            source_dims: vec![3],
        };
        let (c, mean) = center_patches(&two, None).unwrap();
        assert_eq!(mean, DenseTensor::filled(&[2], 1.0).unwrap());
        assert_eq!(c.patches[0], DenseTensor::filled(&[2], -1.0).unwrap());
        assert_eq!(c.patches[1], DenseTensor::filled(&[2], 1.0).unwrap());

        let bad = DenseTensor::zeros(&[3]).unwrap();
        assert!(center_patches(&two, Some(&bad)).is_err());
    }
}
