//! Multilinear PCA: per-mode orthonormal projections maximizing the total
//! scatter of the projected cores, fitted by alternating mode-wise
//! eigendecomposition.

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::tensor::{unfold, DenseMatrix, DenseTensor};

/// Relative slack when comparing cumulative energy ratios to the threshold.
const ENERGY_SLACK: f64 = 1e-12;

/// Per-mode cumulative-eigenvalue energy threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyPolicy {
    pub q: f64,
    pub min_dims: Option<Vec<usize>>,
}

impl EnergyPolicy {
    pub fn new(q: f64) -> Result<Self> {
        let p = Self { q, min_dims: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_min_dims(mut self, floor: Vec<usize>) -> Self {
        self.min_dims = Some(floor);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::arg(format!(
                "energy threshold must lie in (0, 1], got {}",
                self.q
            )));
        }
        Ok(())
    }

    /// Dimension kept for `mode`: the energy selection raised to the floor,
    /// never beyond the number of eigenvalues.
    pub fn dims_for_mode(&self, mode: usize, eigvals: &[f64]) -> usize {
        let p = select_mode_dims(eigvals, self.q);
        let floor = self
            .min_dims
            .as_ref()
            .and_then(|f| f.get(mode).copied())
            .unwrap_or(1);
        p.max(floor).min(eigvals.len()).max(1)
    }
}

impl Default for EnergyPolicy {
    fn default() -> Self {
        Self {
            q: 0.97,
            min_dims: None,
        }
    }
}

/// Smallest `P` whose leading eigenvalues hold at least a `q` fraction of the
/// total. Returns 1 when the total is zero.
///
/// With `q = 1` trailing (numerically) zero eigenvalues are not counted, so the
/// result is the numerical rank.
pub fn select_mode_dims(eigvals: &[f64], q: f64) -> usize {
    let total: f64 = eigvals.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 || eigvals.is_empty() {
        return 1;
    }
    let mut cum = 0.0;
    for (i, v) in eigvals.iter().enumerate() {
        cum += v.max(0.0);
        if cum / total >= q - ENERGY_SLACK {
            return i + 1;
        }
    }
    eigvals.len()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Lower bound on `P_1·…·P_N`; dims are enlarged greedily to reach it.
    pub min_core_size: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 10,
            tol: 1e-6,
            min_core_size: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcaModel {
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
    factors: Vec<DenseMatrix>,
    /// Transposed factors, cached for projection.
    projections: Vec<DenseMatrix>,
    mean: DenseTensor,
    mode_eigenvalues: Vec<Vec<f64>>,
    variance_order: Option<Vec<usize>>,
    captured_scatter: f64,
}

impl MpcaModel {
    /// Assembles a model from stored parts, checking every structural invariant.
    pub fn from_parts(
        factors: Vec<DenseMatrix>,
        mean: DenseTensor,
        mode_eigenvalues: Vec<Vec<f64>>,
        variance_order: Option<Vec<usize>>,
        captured_scatter: f64,
    ) -> Result<Self> {
        let input_dims = mean.dims().to_vec();
        if factors.len() != input_dims.len() || mode_eigenvalues.len() != input_dims.len() {
            return Err(Error::mismatch(format!(
                "order-{} mean with {} factors and {} eigenvalue lists",
                input_dims.len(),
                factors.len(),
                mode_eigenvalues.len()
            )));
        }
        let mut output_dims = Vec::with_capacity(factors.len());
        for (n, (v, &i_n)) in factors.iter().zip(&input_dims).enumerate() {
            if v.rows() != i_n || v.cols() > i_n {
                return Err(Error::mismatch(format!(
                    "factor {n} is {}x{} for extent {i_n}",
                    v.rows(),
                    v.cols()
                )));
            }
            if mode_eigenvalues[n].len() != i_n {
                return Err(Error::mismatch(format!(
                    "mode {n} has {} eigenvalues for extent {i_n}",
                    mode_eigenvalues[n].len()
                )));
            }
            output_dims.push(v.cols());
        }
        let core_len: usize = output_dims.iter().product();
        if let Some(order) = &variance_order {
            validate_permutation(order, core_len)?;
        }
        let projections = factors.iter().map(DenseMatrix::transpose).collect();
        Ok(Self {
            input_dims,
            output_dims,
            factors,
            projections,
            mean,
            mode_eigenvalues,
            variance_order,
            captured_scatter,
        })
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    pub fn core_len(&self) -> usize {
        self.output_dims.iter().product()
    }

    /// Projection matrices `V(n)`, each `I_n × P_n` with orthonormal columns.
    pub fn factors(&self) -> &[DenseMatrix] {
        &self.factors
    }

    pub fn mean(&self) -> &DenseTensor {
        &self.mean
    }

    /// Per-mode eigenvalues of the full-projection mode scatter, descending.
    pub fn mode_eigenvalues(&self) -> &[Vec<f64>] {
        &self.mode_eigenvalues
    }

    pub fn variance_order(&self) -> Option<&[usize]> {
        self.variance_order.as_deref()
    }

    pub fn captured_scatter(&self) -> f64 {
        self.captured_scatter
    }

    /// Core `(t − mean) ×_n V(n)ᵀ` for every mode.
    pub fn project(&self, t: &DenseTensor) -> Result<DenseTensor> {
        if t.dims() != self.input_dims.as_slice() {
            return Err(Error::mismatch(format!(
                "model expects {:?}, got {:?}",
                self.input_dims,
                t.dims()
            )));
        }
        let centered = t.sub(&self.mean)?;
        self.project_centered(&centered)
    }

    /// Projection of an already-centered tensor.
    pub(crate) fn project_centered(&self, centered: &DenseTensor) -> Result<DenseTensor> {
        project_all_modes(centered, &self.projections, None)
    }

    /// Maps a core back to input space: `core ×_n V(n) + mean`.
    pub fn reconstruct(&self, core: &DenseTensor) -> Result<DenseTensor> {
        if core.dims() != self.output_dims.as_slice() {
            return Err(Error::mismatch(format!(
                "core must be {:?}, got {:?}",
                self.output_dims,
                core.dims()
            )));
        }
        let back = project_all_modes(core, &self.factors, None)?;
        back.add(&self.mean)
    }

    /// Reorders a core by descending training variance.
    pub fn vectorize_core(&self, core: &DenseTensor) -> Result<Vec<f64>> {
        let order = self
            .variance_order
            .as_ref()
            .ok_or(Error::MissingVarianceOrder)?;
        if core.dims() != self.output_dims.as_slice() {
            return Err(Error::mismatch(format!(
                "core must be {:?}, got {:?}",
                self.output_dims,
                core.dims()
            )));
        }
        let data = core.data();
        Ok(order.iter().map(|&k| data[k]).collect())
    }

    /// Inverse of [`vectorize_core`](Self::vectorize_core).
    pub fn unvectorize(&self, z: &[f64]) -> Result<DenseTensor> {
        let order = self
            .variance_order
            .as_ref()
            .ok_or(Error::MissingVarianceOrder)?;
        if z.len() != order.len() {
            return Err(Error::mismatch("vector length differs from core size"));
        }
        let mut data = vec![0.0; z.len()];
        for (&k, &v) in order.iter().zip(z) {
            data[k] = v;
        }
        DenseTensor::new(self.output_dims.clone(), data)
    }

    /// Computes and stores the variance order over `samples`.
    ///
    /// Coordinates of the projected core (row-major linear index) are sorted
    /// by descending population variance; ties keep ascending index order.
    pub fn compute_variance_order(&mut self, samples: &[DenseTensor]) -> Result<&[usize]> {
        let variances = self.core_variances(samples)?;
        let order = order_by_variance(&variances);
        self.variance_order = Some(order);
        Ok(self.variance_order.as_deref().unwrap_or_default())
    }

    /// Population variance of each core coordinate over `samples`.
    pub fn core_variances(&self, samples: &[DenseTensor]) -> Result<Vec<f64>> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        let len = self.core_len();
        let mut mean = vec![0.0; len];
        let mut m2 = vec![0.0; len];
        for (count, s) in samples.iter().enumerate() {
            let core = self.project(s)?;
            let k = (count + 1) as f64;
            for ((mu, acc), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(core.data()) {
                let delta = x - *mu;
                *mu += delta / k;
                *acc += delta * (x - *mu);
            }
        }
        let m = samples.len() as f64;
        Ok(m2.into_iter().map(|v| v / m).collect())
    }
}

/// Indices sorted by descending value, ascending index on ties.
pub fn order_by_variance(variances: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..variances.len()).collect();
    order.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]));
    order
}

fn validate_permutation(order: &[usize], len: usize) -> Result<()> {
    if order.len() != len {
        return Err(Error::Corrupt(format!(
            "variance order has {} entries for a core of {len}",
            order.len()
        )));
    }
    let mut seen = vec![false; len];
    for &k in order {
        if k >= len || std::mem::replace(&mut seen[k], true) {
            return Err(Error::Corrupt("variance order is not a permutation".into()));
        }
    }
    Ok(())
}

/// Multiplies `t` along every mode (except `skip`) by the matching matrix.
fn project_all_modes(
    t: &DenseTensor,
    mats: &[DenseMatrix],
    skip: Option<usize>,
) -> Result<DenseTensor> {
    let mut out: Option<DenseTensor> = None;
    for (n, m) in mats.iter().enumerate() {
        if Some(n) == skip {
            continue;
        }
        let src = out.as_ref().unwrap_or(t);
        out = Some(crate::tensor::mode_multiply(src, m, n)?);
    }
    Ok(out.unwrap_or_else(|| t.clone()))
}

/// Mode-`mode` scatter `Σ_m Z_m Z_mᵀ` where `Z_m` unfolds sample `m`
/// projected through `projections` on every other mode.
///
/// `projections[k]` is the `P_k × I_k` matrix applied along mode `k`; the
/// entry for `mode` itself is ignored. Samples are expected to be centered.
pub fn mode_scatter(
    centered: &[DenseTensor],
    projections: &[DenseMatrix],
    mode: usize,
) -> Result<DenseMatrix> {
    let first = centered
        .first()
        .ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    let extent = *first
        .dims()
        .get(mode)
        .ok_or(Error::ModeOutOfRange {
            mode,
            order: first.order(),
        })?;
    let mut phi = vec![0.0; extent * extent];
    for x in centered {
        let partial = project_all_modes(x, projections, Some(mode))?;
        let z = unfold(&partial, mode)?;
        let cols = z.cols();
        let zd = z.data();
        for i in 0..extent {
            let ri = &zd[i * cols..(i + 1) * cols];
            for j in i..extent {
                let rj = &zd[j * cols..(j + 1) * cols];
                phi[i * extent + j] += crate::linalg::dot(ri, rj);
            }
        }
    }
    for i in 0..extent {
        for j in 0..i {
            phi[i * extent + j] = phi[j * extent + i];
        }
    }
    DenseMatrix::new(extent, extent, phi)
}

/// Total scatter `Σ_m ‖Y_m‖²` of centered samples under `projections`.
fn captured(centered: &[DenseTensor], projections: &[DenseMatrix]) -> Result<f64> {
    centered.iter().try_fold(0.0, |acc, x| {
        Ok(acc + project_all_modes(x, projections, None)?.frobenius_norm_sq())
    })
}

/// A fitted model plus the total captured scatter after initialization and
/// after every alternating sweep.
#[derive(Debug, Clone)]
pub struct MpcaFit {
    pub model: MpcaModel,
    pub scatter_trace: Vec<f64>,
}

pub fn fit_mpca(
    samples: &[DenseTensor],
    policy: &EnergyPolicy,
    max_iter: usize,
    tol: f64,
) -> Result<MpcaModel> {
    let opts = FitOptions {
        max_iter,
        tol,
        ..FitOptions::default()
    };
    Ok(fit_mpca_traced(samples, policy, &opts)?.model)
}

/// Fits MPCA by alternating per-mode eigendecomposition.
///
/// 1. Full-projection initialization: the mode-`n` scatter of the centered
///    samples, with no other mode projected, is eigendecomposed. Its
///    eigenvalues are the stored `mode_eigenvalues` and fix `P_n` through the
///    energy policy (enlarged greedily if `min_core_size` demands it).
/// 2. Alternation: with `P_n` fixed, each `V(n)` is replaced by the top `P_n`
///    eigenvectors of the scatter of samples projected through every other
///    mode's current factor. Stops once the relative change in captured
///    scatter falls below `tol` or after `max_iter` sweeps.
pub fn fit_mpca_traced(
    samples: &[DenseTensor],
    policy: &EnergyPolicy,
    opts: &FitOptions,
) -> Result<MpcaFit> {
    policy.validate()?;
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let dims = samples[0].dims().to_vec();
    if let Some(bad) = samples.iter().find(|s| s.dims() != dims.as_slice()) {
        return Err(Error::mismatch(format!(
            "samples mix dims {:?} and {:?}",
            dims,
            bad.dims()
        )));
    }
    let order = dims.len();

    let mean = sample_mean(samples)?;
    let centered: Vec<DenseTensor> = samples
        .iter()
        .map(|s| s.sub(&mean))
        .collect::<Result<_>>()?;

    let mut mode_eigenvalues = Vec::with_capacity(order);
    let mut init_vectors = Vec::with_capacity(order);
    let identities: Vec<DenseMatrix> = dims.iter().map(|&d| DenseMatrix::identity(d)).collect();
    for n in 0..order {
        let phi = mode_scatter(&centered, &identities, n)?;
        let eig = symmetric_eigen(&phi)?;
        mode_eigenvalues.push(eig.values.iter().map(|v| v.max(0.0)).collect::<Vec<_>>());
        init_vectors.push(eig.vectors);
    }

    let mut out_dims: Vec<usize> = (0..order)
        .map(|n| policy.dims_for_mode(n, &mode_eigenvalues[n]))
        .collect();
    enlarge_to_core_size(&mut out_dims, &mode_eigenvalues, opts.min_core_size)?;

    let mut factors: Vec<DenseMatrix> = init_vectors
        .iter()
        .zip(&out_dims)
        .map(|(v, &p)| v.leading_columns(p))
        .collect();
    let mut projections: Vec<DenseMatrix> = factors.iter().map(DenseMatrix::transpose).collect();

    let mut psi = captured(&centered, &projections)?;
    let mut trace = vec![psi];
    for _ in 0..opts.max_iter {
        for n in 0..order {
            let phi = mode_scatter(&centered, &projections, n)?;
            let eig = symmetric_eigen(&phi)?;
            factors[n] = eig.vectors.leading_columns(out_dims[n]);
            projections[n] = factors[n].transpose();
        }
        let next = captured(&centered, &projections)?;
        trace.push(next);
        let converged = psi <= 0.0 || ((next - psi) / psi).abs() < opts.tol;
        psi = next;
        if converged {
            break;
        }
    }

    let model = MpcaModel::from_parts(factors, mean, mode_eigenvalues, None, psi)?;
    Ok(MpcaFit {
        model,
        scatter_trace: trace,
    })
}

/// Raises per-mode dims until their product reaches `min_core`, each step
/// taking the mode whose next eigenvalue is largest (lowest mode on ties).
pub fn enlarge_to_core_size(
    dims: &mut [usize],
    eigenvalues: &[Vec<f64>],
    min_core: usize,
) -> Result<()> {
    let available: usize = eigenvalues.iter().map(Vec::len).product();
    if min_core > available {
        return Err(Error::InsufficientCoreDims {
            requested: min_core,
            available,
        });
    }
    while dims.iter().product::<usize>() < min_core {
        let mut best: Option<(usize, f64)> = None;
        for (n, ev) in eigenvalues.iter().enumerate() {
            if let Some(&next) = ev.get(dims[n]) {
                if best.map_or(true, |(_, b)| next > b) {
                    best = Some((n, next));
                }
            }
        }
        match best {
            Some((n, _)) => dims[n] += 1,
            None => {
                return Err(Error::InsufficientCoreDims {
                    requested: min_core,
                    available,
                })
            }
        }
    }
    Ok(())
}

pub fn sample_mean(samples: &[DenseTensor]) -> Result<DenseTensor> {
    let first = samples
        .first()
        .ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    let mut acc = vec![0.0; first.len()];
    for s in samples {
        if s.dims() != first.dims() {
            return Err(Error::mismatch(format!(
                "{:?} vs {:?}",
                first.dims(),
                s.dims()
            )));
        }
        for (a, &v) in acc.iter_mut().zip(s.data()) {
            *a += v;
        }
    }
    let m = samples.len() as f64;
    acc.iter_mut().for_each(|a| *a /= m);
    DenseTensor::new(first.dims().to_vec(), acc)
}
