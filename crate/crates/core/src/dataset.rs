//! Tensor files, dataset manifests, stratified splits and the synthetic
//! tensor-classification generator.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::linalg::orthonormalize_columns;
use crate::rng::SeededRng;
use crate::tensor::{mode_multiply, DenseMatrix, DenseTensor};

pub const TENSOR_MAGIC: [u8; 4] = *b"TOBJ";
pub const TENSOR_VERSION: u8 = 1;

/// `"TOBJ" | version u8 | order u8 | extents u32… | payload f64…`, little-endian.
pub fn encode_tensor(t: &DenseTensor) -> Result<Vec<u8>> {
    let order = u8::try_from(t.order())
        .map_err(|_| Error::ExtentOverflow(format!("order {} exceeds 255", t.order())))?;
    let mut w = ByteWriter::new();
    w.bytes(&TENSOR_MAGIC);
    w.u8(TENSOR_VERSION);
    w.u8(order);
    for &d in t.dims() {
        w.len(d)?;
    }
    w.f64s(t.data());
    Ok(w.into_bytes())
}

pub fn decode_tensor(bytes: &[u8]) -> Result<DenseTensor> {
    let mut r = ByteReader::new(bytes);
    r.magic(TENSOR_MAGIC)?;
    let version = r.u8("version")?;
    if version != TENSOR_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let order = r.u8("order")? as usize;
    if order == 0 {
        return Err(Error::Corrupt("order-0 tensor".into()));
    }
    let dims = (0..order)
        .map(|_| r.len("extent"))
        .collect::<Result<Vec<_>>>()?;
    if dims.contains(&0) {
        return Err(Error::Corrupt(format!("zero extent in {dims:?}")));
    }
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::ExtentOverflow(format!("volume of {dims:?} overflows")))?;
    let data = r.f64s(len, "payload")?;
    r.finish()?;
    DenseTensor::new(dims, data)
}

pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<()> {
    fs::write(path, encode_tensor(t)?)?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<DenseTensor> {
    decode_tensor(&fs::read(path)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Labelled tensors. Labels are dense ids into `label_names`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<DenseTensor>,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn dims(&self) -> Option<&[usize]> {
        self.samples.first().map(DenseTensor::dims)
    }

    /// Rows at `indices`, keeping the full label table.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_names: self.label_names.clone(),
        }
    }
}

/// Loads every tensor in a manifest; relative paths resolve against the
/// manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::Data {
        path: manifest_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let manifest = Manifest::from_json(&text)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    load_manifest(&manifest, base)
}

pub fn load_manifest(manifest: &Manifest, base: &Path) -> Result<Dataset> {
    let mut ds = Dataset::default();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut expected = manifest.dims.clone();
    for entry in &manifest.entries {
        let path = resolve(base, &entry.path);
        let t = read_tensor(&path).map_err(|e| Error::Data {
            path: path.clone(),
            message: e.to_string(),
        })?;
        match &expected {
            Some(d) if d.as_slice() != t.dims() => {
                return Err(Error::Data {
                    path,
                    message: format!("dims {:?} differ from expected {:?}", t.dims(), d),
                })
            }
            Some(_) => {}
            None => expected = Some(t.dims().to_vec()),
        }
        let next = ids.len();
        let id = *ids.entry(entry.label.clone()).or_insert_with(|| {
            ds.label_names.push(entry.label.clone());
            next
        });
        ds.samples.push(t);
        ds.labels.push(id);
    }
    Ok(ds)
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Writes one tensor file per sample plus `manifest.json` into `dir`.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(ds.len());
    for (i, (t, &l)) in ds.samples.iter().zip(&ds.labels).enumerate() {
        let name = format!("sample_{i:05}.tobj");
        write_tensor(&dir.join(&name), t)?;
        entries.push(ManifestEntry {
            path: name,
            label: ds.label_names[l].clone(),
        });
    }
    let manifest = Manifest {
        dims: ds.dims().map(<[usize]>::to_vec),
        entries,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, manifest.to_json()? + "\n")?;
    Ok(path)
}

/// Stratified split into (train, test) index lists, each sorted ascending.
///
/// Classes are visited in label-id order. A class of `n` samples sends
/// `ratio · n` to training; when that is fractional the first such class
/// rounds up, the next down, and so on alternately. Every class keeps at
/// least one sample on each side. Within a class the indices are shuffled
/// by one [`SeededRng`] stream before the cut.
pub fn split(labels: &[usize], ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::arg(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = SeededRng::new(seed);
    let mut round_up = true;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (c, mut members) in by_class.into_iter().enumerate() {
        let n = members.len();
        if n == 0 {
            continue;
        }
        if n < 2 {
            return Err(Error::arg(format!("class {c} has fewer than 2 samples")));
        }
        let exact = ratio * n as f64;
        let mut k = if exact.fract() == 0.0 {
            exact as usize
        } else {
            let k = if round_up { exact.ceil() } else { exact.floor() };
            round_up = !round_up;
            k as usize
        };
        k = k.clamp(1, n - 1);
        rng.shuffle(&mut members);
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dims: Vec<usize>,
    pub num_classes: usize,
    pub samples_per_class: usize,
    /// Template rank per mode.
    pub template_rank: Vec<usize>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        crate::tensor::checked_volume(&self.dims)?;
        if self.template_rank.len() != self.dims.len() {
            return Err(Error::arg(format!(
                "template rank {:?} for dims {:?}",
                self.template_rank, self.dims
            )));
        }
        if let Some(n) = (0..self.dims.len())
            .find(|&n| self.template_rank[n] == 0 || self.template_rank[n] > self.dims[n])
        {
            return Err(Error::arg(format!(
                "rank {} on mode {n} must lie in 1..={}",
                self.template_rank[n], self.dims[n]
            )));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::arg(format!("noise sigma {} must be >= 0", self.noise_sigma)));
        }
        if self.num_classes == 0 || self.samples_per_class == 0 {
            return Err(Error::arg("need at least one class and one sample per class"));
        }
        Ok(())
    }
}

/// Class templates are random low-rank Tucker tensors; samples add i.i.d.
/// Gaussian noise.
///
/// For each class, in order: one orthonormalized Gaussian factor per mode
/// (`I_n × r_n`, drawn row-major), a Gaussian core (row-major) scaled by
/// `sqrt(ΠI / Πr)` so templates have unit RMS entry on average, then the
/// noise of each of its samples (row-major). Samples are class-major and
/// labelled `class_0`, `class_1`, ….
pub fn synth_generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let volume: usize = spec.dims.iter().product();
    let core_volume: usize = spec.template_rank.iter().product();
    let scale = (volume as f64 / core_volume as f64).sqrt();

    let mut ds = Dataset {
        label_names: (0..spec.num_classes).map(|c| format!("class_{c}")).collect(),
        ..Dataset::default()
    };
    for c in 0..spec.num_classes {
        let factors = spec
            .dims
            .iter()
            .zip(&spec.template_rank)
            .map(|(&i, &r)| {
                let g = DenseMatrix::from_fn(i, r, |_, _| rng.normal());
                orthonormalize_columns(&g)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut template = DenseTensor::from_fn(&spec.template_rank, |_| scale * rng.normal())?;
        for (n, u) in factors.iter().enumerate() {
            template = mode_multiply(&template, u, n)?;
        }
        for _ in 0..spec.samples_per_class {
            let sample = if spec.noise_sigma == 0.0 {
                template.clone()
            } else {
                template.map(|v| v)
                    .add(&DenseTensor::from_fn(&spec.dims, |_| spec.noise_sigma * rng.normal())?)?
            };
            ds.samples.push(sample);
            ds.labels.push(c);
        }
    }
    Ok(ds)
}
