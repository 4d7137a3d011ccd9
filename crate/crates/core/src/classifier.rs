//! Deterministic classifiers over feature vectors: one-vs-rest ridge
//! regression, 1-nearest-neighbour, and regularized Fisher LDA.

use crate::error::{Error, Result};
use crate::linalg::{
    backward_substitute_transposed, cholesky, dot, forward_substitute, gram_of_columns,
    gram_of_rows, solve_spd, symmetric_eigen,
};
use crate::tensor::DenseMatrix;

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-2;

/// Sorted distinct labels.
fn distinct_classes(labels: &[usize]) -> Vec<usize> {
    let mut c = labels.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

fn check_samples(x: &DenseMatrix, labels: &[usize]) -> Result<()> {
    if x.rows() != labels.len() {
        return Err(Error::mismatch(format!(
            "{} feature rows for {} labels",
            x.rows(),
            labels.len()
        )));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite feature value".into()));
    }
    Ok(())
}

fn column_means(x: &DenseMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; x.cols()];
    for r in 0..x.rows() {
        for (m, &v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    let n = x.rows() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

fn centered(x: &DenseMatrix, mean: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j) - mean[j])
}

/// Index of the largest score; the first wins ties.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    classes: Vec<usize>,
    /// `classes.len() × feature_dim`.
    weights: DenseMatrix,
    bias: Vec<f64>,
}

impl LinearModel {
    pub fn from_parts(classes: Vec<usize>, weights: DenseMatrix, bias: Vec<f64>) -> Result<Self> {
        if weights.rows() != classes.len() || bias.len() != classes.len() {
            return Err(Error::Corrupt(format!(
                "{} classes with {}x{} weights and {} biases",
                classes.len(),
                weights.rows(),
                weights.cols(),
                bias.len()
            )));
        }
        if weights.data().iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Corrupt("non-finite classifier parameter".into()));
        }
        Ok(Self {
            classes,
            weights,
            bias,
        })
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn scores(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.feature_dim() {
            return Err(Error::mismatch(format!(
                "classifier expects {} features, got {}",
                self.feature_dim(),
                f.len()
            )));
        }
        Ok((0..self.classes.len())
            .map(|c| dot(self.weights.row(c), f) + self.bias[c])
            .collect())
    }

    /// Highest-scoring class; ties go to the earlier class.
    pub fn predict(&self, f: &[f64]) -> Result<usize> {
        Ok(self.classes[argmax(&self.scores(f)?)])
    }
}

/// One-vs-rest ridge regression with ±1 targets and an unpenalized bias.
///
/// Features and targets are centered, then each class solves
/// `(XᵀX + λI) w = Xᵀy`; when there are fewer samples than features the
/// equivalent Gram-side system `(XXᵀ + λI) α = y`, `w = Xᵀα` is used.
pub fn fit_ridge_ovr(x: &DenseMatrix, labels: &[usize], lambda: f64) -> Result<LinearModel> {
    check_samples(x, labels)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::arg(format!("ridge lambda must be positive, got {lambda}")));
    }
    let classes = distinct_classes(labels);
    if classes.len() < 2 {
        return Err(Error::arg("ridge classifier needs at least two classes"));
    }
    let (n, d) = (x.rows(), x.cols());
    let c = classes.len();

    let x_mean = column_means(x);
    let xc = centered(x, &x_mean);
    let targets = DenseMatrix::from_fn(n, c, |i, k| if labels[i] == classes[k] { 1.0 } else { -1.0 });
    let y_mean = column_means(&targets);
    let yc = centered(&targets, &y_mean);

    // weights as d × c
    let w = if n < d {
        let mut k = gram_of_rows(&xc);
        for i in 0..n {
            k.set(i, i, k.get(i, i) + lambda);
        }
        let alpha = solve_spd(&k, &yc)?;
        xc.transpose().matmul(&alpha)?
    } else {
        let mut g = gram_of_columns(&xc);
        for i in 0..d {
            g.set(i, i, g.get(i, i) + lambda);
        }
        let rhs = xc.transpose().matmul(&yc)?;
        solve_spd(&g, &rhs)?
    };
    let weights = w.transpose();
    let bias = (0..c)
        .map(|k| y_mean[k] - dot(weights.row(k), &x_mean))
        .collect();
    LinearModel::from_parts(classes, weights, bias)
}

/// 1-NN under Euclidean distance; the earliest training sample wins ties.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestNeighbor {
    features: DenseMatrix,
    labels: Vec<usize>,
}

impl NearestNeighbor {
    pub fn fit(x: &DenseMatrix, labels: &[usize]) -> Result<Self> {
        check_samples(x, labels)?;
        Ok(Self {
            features: x.clone(),
            labels: labels.to_vec(),
        })
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn predict(&self, f: &[f64]) -> Result<usize> {
        if f.len() != self.features.cols() {
            return Err(Error::mismatch(format!(
                "classifier expects {} features, got {}",
                self.features.cols(),
                f.len()
            )));
        }
        let mut best = (f64::INFINITY, 0);
        for r in 0..self.features.rows() {
            let dist: f64 = self
                .features
                .row(r)
                .iter()
                .zip(f)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist < best.0 {
                best = (dist, self.labels[r]);
            }
        }
        Ok(best.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Ridge(LinearModel),
    NearestNeighbor(NearestNeighbor),
}

impl Classifier {
    pub fn predict(&self, f: &[f64]) -> Result<usize> {
        match self {
            Classifier::Ridge(m) => m.predict(f),
            Classifier::NearestNeighbor(m) => m.predict(f),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            Classifier::Ridge(m) => m.feature_dim(),
            Classifier::NearestNeighbor(m) => m.feature_dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Classifier::Ridge(_) => "ridge",
            Classifier::NearestNeighbor(_) => "nearest-neighbor",
        }
    }
}

/// Fisher discriminant projection with nearest-class-mean prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    classes: Vec<usize>,
    /// `feature_dim × d`.
    projection: DenseMatrix,
    class_means: Vec<Vec<f64>>,
}

impl LdaModel {
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn projection(&self) -> &DenseMatrix {
        &self.projection
    }

    pub fn class_means(&self) -> &[Vec<f64>] {
        &self.class_means
    }

    pub fn transform(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.projection.rows() {
            return Err(Error::mismatch(format!(
                "LDA expects {} features, got {}",
                self.projection.rows(),
                f.len()
            )));
        }
        Ok((0..self.projection.cols())
            .map(|j| (0..f.len()).map(|i| f[i] * self.projection.get(i, j)).sum())
            .collect())
    }

    pub fn predict(&self, f: &[f64]) -> Result<usize> {
        let z = self.transform(f)?;
        let neg_dist: Vec<f64> = self
            .class_means
            .iter()
            .map(|m| -m.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .collect();
        Ok(self.classes[argmax(&neg_dist)])
    }
}

/// Fits `d` Fisher directions.
///
/// Solves `S_b v = λ (S_w + εI) v` with `ε = 1e-6 · tr(S_w) / dim` via the
/// Cholesky factor of the regularized within-class scatter.
pub fn fit_lda(x: &DenseMatrix, labels: &[usize], d: usize) -> Result<LdaModel> {
    check_samples(x, labels)?;
    let classes = distinct_classes(labels);
    if classes.len() < 2 {
        return Err(Error::arg("LDA needs at least two classes"));
    }
    let dim = x.cols();
    if d == 0 || d > classes.len() - 1 || d > dim {
        return Err(Error::arg(format!(
            "LDA dimension {d} must lie in 1..={}",
            (classes.len() - 1).min(dim)
        )));
    }

    let mut means = Vec::with_capacity(classes.len());
    let mut counts = Vec::with_capacity(classes.len());
    for &c in &classes {
        let rows: Vec<usize> = (0..x.rows()).filter(|&i| labels[i] == c).collect();
        if rows.len() < 2 {
            return Err(Error::SingletonClass(c.to_string()));
        }
        let mut m = vec![0.0; dim];
        for &i in &rows {
            for (a, &v) in m.iter_mut().zip(x.row(i)) {
                *a += v;
            }
        }
        m.iter_mut().for_each(|a| *a /= rows.len() as f64);
        means.push(m);
        counts.push(rows.len());
    }
    let overall = column_means(x);

    let class_pos = |label: usize| classes.binary_search(&label).expect("known class");
    let within_dev = DenseMatrix::from_fn(x.rows(), dim, |i, j| x.get(i, j) - means[class_pos(labels[i])][j]);
    let mut sw = gram_of_columns(&within_dev);
    let between_dev = DenseMatrix::from_fn(classes.len(), dim, |k, j| {
        (counts[k] as f64).sqrt() * (means[k][j] - overall[j])
    });
    let sb = gram_of_columns(&between_dev);

    let trace: f64 = (0..dim).map(|i| sw.get(i, i)).sum();
    let eps = if trace > 0.0 { 1e-6 * trace / dim as f64 } else { 1e-6 };
    for i in 0..dim {
        sw.set(i, i, sw.get(i, i) + eps);
    }

    // C = L⁻¹ S_b L⁻ᵀ
    let l = cholesky(&sw)?;
    let mut tmp = DenseMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut col = sb.column(j);
        forward_substitute(&l, &mut col);
        for (i, v) in col.into_iter().enumerate() {
            tmp.set(i, j, v);
        }
    }
    let mut c = DenseMatrix::zeros(dim, dim);
    for i in 0..dim {
        let mut row = tmp.row(i).to_vec();
        forward_substitute(&l, &mut row);
        for (j, v) in row.into_iter().enumerate() {
            c.set(i, j, v);
        }
    }
    let eig = symmetric_eigen(&c)?;

    let mut projection = DenseMatrix::zeros(dim, d);
    for k in 0..d {
        let mut v = eig.vectors.column(k);
        backward_substitute_transposed(&l, &mut v);
        for (i, val) in v.into_iter().enumerate() {
            projection.set(i, k, val);
        }
    }
    let mut model = LdaModel {
        classes,
        projection,
        class_means: Vec::new(),
    };
    model.class_means = means
        .iter()
        .map(|m| model.transform(m))
        .collect::<Result<_>>()?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<Evaluation> {
    if predictions.len() != labels.len() {
        return Err(Error::mismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::arg("nothing to evaluate"));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    let mut correct = 0;
    for (&p, &t) in predictions.iter().zip(labels) {
        if p >= num_classes || t >= num_classes {
            return Err(Error::arg(format!("label {} out of range", p.max(t))));
        }
        confusion[t][p] += 1;
        if p == t {
            correct += 1;
        }
    }
    Ok(Evaluation {
        accuracy: correct as f64 / labels.len() as f64,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(data: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(data).unwrap()
    }

    fn pseudo(n: usize, d: usize, seed: u64) -> DenseMatrix {
        let mut s = seed | 1;
        DenseMatrix::from_fn(n, d, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn ridge_two_points() {
        let x = rows(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let m = fit_ridge_ovr(&x, &[0, 1], 1e-6).unwrap();
        assert_eq!(m.predict(&[1.0, 0.0]).unwrap(), 0);
        assert_eq!(m.predict(&[-1.0, 0.0]).unwrap(), 1);
        assert_eq!(m.predict(&[0.3, 5.0]).unwrap(), 0);
        assert_eq!(m.predict(&[-0.3, -5.0]).unwrap(), 1);
    }

    #[test]
    fn huge_lambda_predicts_majority() {
        let x = pseudo(7, 3, 3);
        let labels = [0, 1, 1, 1, 0, 2, 1];
        let m = fit_ridge_ovr(&x, &labels, 1e9).unwrap();
        assert!(m.weights().data().iter().all(|w| w.abs() < 1e-8));
        for i in 0..7 {
            assert_eq!(m.predict(x.row(i)).unwrap(), 1);
        }
    }

    #[test]
    fn ridge_normal_equation_residual() {
        for (n, d) in [(12, 5), (6, 20)] {
            let x = pseudo(n, d, n as u64 + d as u64);
            let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
            let lambda = 0.3;
            let m = fit_ridge_ovr(&x, &labels, lambda).unwrap();
            let mean = column_means(&x);
            let xc = centered(&x, &mean);
            let g = xc.transpose().matmul(&xc).unwrap();
            for (k, &c) in m.classes().iter().enumerate() {
                let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
                let ybar = y.iter().sum::<f64>() / n as f64;
                let w = m.weights().row(k);
                for j in 0..d {
                    let lhs: f64 = (0..d).map(|i| g.get(j, i) * w[i]).sum::<f64>() + lambda * w[j];
                    let rhs: f64 = (0..n).map(|i| xc.get(i, j) * (y[i] - ybar)).sum();
                    assert!((lhs - rhs).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn ridge_duplication_invariance() {
        for (n, d) in [(10, 4), (5, 9)] {
            let x = pseudo(n, d, 77);
            let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let a = fit_ridge_ovr(&x, &labels, 0.1).unwrap();
            let doubled = DenseMatrix::from_fn(2 * n, d, |i, j| x.get(i % n, j));
            let labels2: Vec<usize> = (0..2 * n).map(|i| labels[i % n]).collect();
            let b = fit_ridge_ovr(&doubled, &labels2, 0.2).unwrap();
            assert!(a.weights().max_abs_diff(b.weights()) < 1e-10);
            for (p, q) in a.bias().iter().zip(b.bias()) {
                assert!((p - q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ridge_errors() {
        let x = pseudo(4, 2, 1);
        assert!(fit_ridge_ovr(&x, &[0, 1, 0, 1], 0.0).is_err());
        assert!(fit_ridge_ovr(&x, &[0, 0, 0, 0], 1.0).is_err());
        assert!(fit_ridge_ovr(&x, &[0, 1, 0], 1.0).is_err());
    }

    #[test]
    fn predict_tie_break_and_oracle() {
        let m = LinearModel::from_parts(vec![3, 5], DenseMatrix::zeros(2, 2), vec![0.0, 0.0]).unwrap();
        assert_eq!(m.predict(&[1.0, 2.0]).unwrap(), 3);
        assert!(m.predict(&[1.0]).is_err());

        let w = pseudo(4, 6, 9);
        let bias = vec![0.1, -0.2, 0.05, 0.0];
        let m = LinearModel::from_parts(vec![0, 1, 2, 3], w.clone(), bias.clone()).unwrap();
        let shifted = DenseMatrix::from_fn(4, 6, |i, j| w.get(i, j) + 0.0 * i as f64);
        let m_shift = LinearModel::from_parts(vec![0, 1, 2, 3], shifted, bias.iter().map(|b| b + 3.0).collect()).unwrap();
        let m_scaled = LinearModel::from_parts(
            vec![0, 1, 2, 3],
            DenseMatrix::from_fn(4, 6, |i, j| 2.5 * w.get(i, j)),
            bias.iter().map(|b| 2.5 * b).collect(),
        )
        .unwrap();
        let probes = pseudo(20, 6, 10);
        for r in 0..20 {
            let f = probes.row(r);
            let naive: Vec<f64> = (0..4)
                .map(|c| (0..6).map(|j| w.get(c, j) * f[j]).sum::<f64>() + bias[c])
                .collect();
            let mut best = 0;
            for c in 1..4 {
                if naive[c] > naive[best] {
                    best = c;
                }
            }
            assert_eq!(m.predict(f).unwrap(), best);
            assert_eq!(m_shift.predict(f).unwrap(), best);
            assert_eq!(m_scaled.predict(f).unwrap(), best);
        }
    }

    #[test]
    fn nearest_neighbor() {
        let x = rows(&[&[0.0, 0.0], &[5.0, 5.0], &[0.0, 0.0]]);
        let nn = NearestNeighbor::fit(&x, &[2, 1, 0]).unwrap();
        assert_eq!(nn.predict(&[4.0, 4.0]).unwrap(), 1);
        assert_eq!(nn.predict(&[0.1, 0.0]).unwrap(), 2);
    }

    #[test]
    fn lda_two_clusters() {
        let mut data = Vec::new();
        let mut labels = Vec::new();
        let jitter = pseudo(20, 3, 5);
        for i in 0..20 {
            let c = i % 2;
            let center = if c == 0 { [-3.0, 1.0, 0.0] } else { [3.0, 1.5, 0.5] };
            data.extend((0..3).map(|j| center[j] + jitter.get(i, j)));
            labels.push(c);
        }
        let x = DenseMatrix::new(20, 3, data).unwrap();
        let m = fit_lda(&x, &labels, 1).unwrap();
        // 1-D threshold oracle: projected classes separate
        let z: Vec<f64> = (0..20).map(|i| m.transform(x.row(i)).unwrap()[0]).collect();
        let max0 = (0..20).filter(|&i| labels[i] == 0).map(|i| z[i]).fold(f64::MIN, f64::max);
        let min0 = (0..20).filter(|&i| labels[i] == 0).map(|i| z[i]).fold(f64::MAX, f64::min);
        let max1 = (0..20).filter(|&i| labels[i] == 1).map(|i| z[i]).fold(f64::MIN, f64::max);
        let min1 = (0..20).filter(|&i| labels[i] == 1).map(|i| z[i]).fold(f64::MAX, f64::min);
        assert!(max0 < min1 || max1 < min0);
        for i in 0..20 {
            assert_eq!(m.predict(x.row(i)).unwrap(), labels[i]);
        }
    }

    #[test]
    fn lda_class_means_are_projected_means() {
        let x = pseudo(12, 4, 21);
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let m = fit_lda(&x, &labels, 2).unwrap();
        for (k, &c) in m.classes().iter().enumerate() {
            let rows: Vec<usize> = (0..12).filter(|&i| labels[i] == c).collect();
            let mut avg = vec![0.0; 2];
            for &i in &rows {
                for (a, v) in avg.iter_mut().zip(m.transform(x.row(i)).unwrap()) {
                    *a += v / rows.len() as f64;
                }
            }
            for j in 0..2 {
                assert!((avg[j] - m.class_means()[k][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lda_errors() {
        let x = pseudo(5, 2, 3);
        assert!(matches!(
            fit_lda(&x, &[0, 0, 1, 1, 2], 1),
            Err(Error::SingletonClass(_))
        ));
        assert!(fit_lda(&x, &[0, 0, 1, 1, 1], 2).is_err());
        assert!(fit_lda(&x, &[0, 0, 1, 1, 1], 0).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let e = evaluate(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(e.accuracy, 1.0);
        assert_eq!(e.confusion, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        let e = evaluate(&[1, 1, 1, 1], &[0, 1, 1, 2], 3).unwrap();
        assert_eq!(e.accuracy, 0.5);
        assert!(evaluate(&[0], &[0, 1], 2).is_err());
        assert!(evaluate(&[], &[], 2).is_err());
    }

    #[test]
    fn evaluate_matches_pair_counting() {
        let preds = [0, 2, 1, 1, 0, 2, 2, 0, 1, 1];
        let truth = [0, 1, 1, 2, 0, 2, 0, 0, 1, 2];
        let e = evaluate(&preds, &truth, 3).unwrap();
        for t in 0..3 {
            for p in 0..3 {
                let n = preds.iter().zip(&truth).filter(|(&a, &b)| a == p && b == t).count();
                assert_eq!(e.confusion[t][p], n);
            }
        }
        assert_eq!(e.accuracy, 6.0 / 10.0);
    }
}
