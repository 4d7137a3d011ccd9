//! Train / score loops shared by the commands and the acceptance suite.

use mpcanet_core::classifier::{fit_ridge_ovr, NearestNeighbor};
use mpcanet_core::{
    evaluate, fit_lda, fit_mpca, split, train_network, Classifier, Dataset, DenseMatrix,
    EnergyPolicy, Network, NetworkConfig,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{format_extents, ClassifierEntry, ClassifierKind, RunConfig};
use crate::error::CliError;

pub fn feature_matrix(features: &[Vec<f64>]) -> Result<DenseMatrix, CliError> {
    let rows: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    Ok(DenseMatrix::from_rows(&rows)?)
}

pub fn fit_classifier(
    entry: &ClassifierEntry,
    features: &[Vec<f64>],
    labels: &[usize],
) -> Result<Classifier, CliError> {
    let x = feature_matrix(features)?;
    Ok(match entry.kind {
        ClassifierKind::Ridge => Classifier::Ridge(fit_ridge_ovr(&x, labels, entry.lambda)?),
        ClassifierKind::NearestNeighbor => Classifier::NearestNeighbor(NearestNeighbor::fit(&x, labels)?),
    })
}

/// Trains the network and classifier on `train`.
pub fn train_model(
    net_cfg: &NetworkConfig,
    clf: &ClassifierEntry,
    train: &Dataset,
) -> Result<(Network, Classifier), CliError> {
    let net = train_network(&train.samples, net_cfg)?;
    let features = net.forward_batch(&train.samples)?;
    let classifier = fit_classifier(clf, &features, &train.labels)?;
    Ok((net, classifier))
}

/// Test accuracy after training on `train`.
pub fn fit_and_score(
    net_cfg: &NetworkConfig,
    clf: &ClassifierEntry,
    train: &Dataset,
    test: &Dataset,
) -> Result<f64, CliError> {
    let (net, classifier) = train_model(net_cfg, clf, train)?;
    let preds = net
        .forward_batch(&test.samples)?
        .iter()
        .map(|f| classifier.predict(f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(evaluate(&preds, &test.labels, train.num_classes())?.accuracy)
}

fn split_dataset(ds: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset), CliError> {
    let (train, test) = split(&ds.labels, ratio, seed).map_err(|e| CliError::data(e.to_string()))?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

fn require_samples(ds: &Dataset) -> Result<&[usize], CliError> {
    ds.dims().ok_or_else(|| CliError::data("dataset is empty"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub architecture: String,
    pub patch: String,
    #[serde(rename = "L")]
    pub encoders: String,
    #[serde(rename = "box")]
    pub box_dims: String,
    /// Split index, or `None` for the per-configuration mean row.
    pub split: Option<usize>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub patch: String,
    pub mean: f64,
    /// Population standard deviation over splits.
    pub std: f64,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub configs: Vec<RunConfig>,
    pub rows: Vec<BenchRow>,
    pub summaries: Vec<BenchSummary>,
}

/// Runs `cfg.splits` stratified splits (seeds `cfg.seed + s`) for the
/// config itself, or once per entry of `patches` with the leading patch
/// extents replaced. Splits run in parallel; rows come out in split order.
pub fn bench(cfg: &RunConfig, ds: &Dataset, patches: &[Vec<usize>]) -> Result<BenchReport, CliError> {
    if cfg.splits == 0 {
        return Err(CliError::usage("splits must be at least 1"));
    }
    let dims = require_samples(ds)?.to_vec();
    let variants: Vec<RunConfig> = if patches.is_empty() {
        vec![cfg.clone()]
    } else {
        patches.iter().map(|p| cfg.with_patch(p)).collect()
    };
    let ratio = cfg.ratio_or_default();

    let mut report = BenchReport {
        configs: Vec::new(),
        rows: Vec::new(),
        summaries: Vec::new(),
    };
    for variant in &variants {
        let (net_cfg, effective) = variant.resolve(&dims)?;
        let accuracies = (0..cfg.splits)
            .into_par_iter()
            .map(|s| {
                let (train, test) = split_dataset(ds, ratio, cfg.seed.wrapping_add(s as u64))?;
                fit_and_score(&net_cfg, &variant.classifier, &train, &test)
            })
            .collect::<Result<Vec<f64>, CliError>>()?;

        let patch = format_extents(&variant.layers[0].patch);
        let encoders = variant
            .layers
            .iter()
            .map(|l| l.encoders.to_string())
            .collect::<Vec<_>>()
            .join("-");
        let box_dims = format_extents(&net_cfg.pooling.box_dims);
        let row = |split, accuracy| BenchRow {
            architecture: variant.architecture.to_string(),
            patch: patch.clone(),
            encoders: encoders.clone(),
            box_dims: box_dims.clone(),
            split,
            accuracy,
        };
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let std = (accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n).sqrt();
        report
            .rows
            .extend(accuracies.iter().enumerate().map(|(s, &a)| row(Some(s), a)));
        report.rows.push(row(None, mean));
        report.summaries.push(BenchSummary {
            patch,
            mean,
            std,
            accuracies,
        });
        report.configs.push(effective);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub split: usize,
    pub d: usize,
    /// `None` when `d` exceeds the available core coordinates.
    pub accuracy: Option<f64>,
}

/// `C − 1` followed by 10, 20, …, 100.
pub fn sweep_dims(num_classes: usize) -> Vec<usize> {
    let mut d: Vec<usize> = std::iter::once(num_classes.saturating_sub(1).max(1))
        .chain((1..=10).map(|k| 10 * k))
        .collect();
    d.sort_unstable();
    d.dedup();
    d
}

/// MPCA on whole training tensors, cores vectorized by variance order and
/// truncated to `d`, then LDA down to `min(C − 1, d)` dimensions.
pub fn sweep_mpca_lda(
    ds: &Dataset,
    splits: usize,
    seed: u64,
    ratio: f64,
    energy: f64,
) -> Result<Vec<SweepRow>, CliError> {
    if splits == 0 {
        return Err(CliError::usage("splits must be at least 1"));
    }
    require_samples(ds)?;
    let policy = EnergyPolicy::new(energy).map_err(|e| CliError::usage(e.to_string()))?;
    let classes = ds.num_classes();
    let dims = sweep_dims(classes);
    let per_split = (0..splits)
        .into_par_iter()
        .map(|s| {
            let (train, test) = split_dataset(ds, ratio, seed.wrapping_add(s as u64))?;
            let mut model = fit_mpca(&train.samples, &policy, 10, 1e-6)?;
            model.compute_variance_order(&train.samples)?;
            let vectorize = |set: &Dataset| {
                set.samples
                    .iter()
                    .map(|x| model.vectorize_core(&model.project(x)?))
                    .collect::<Result<Vec<_>, _>>()
            };
            let (ztrain, ztest) = (vectorize(&train)?, vectorize(&test)?);
            dims.iter()
                .map(|&d| {
                    if d > model.core_len() {
                        return Ok(SweepRow { split: s, d, accuracy: None });
                    }
                    let cut = |z: &[Vec<f64>]| z.iter().map(|v| v[..d].to_vec()).collect::<Vec<_>>();
                    let lda = fit_lda(&feature_matrix(&cut(&ztrain))?, &train.labels, (classes - 1).min(d))?;
                    let preds = cut(&ztest)
                        .iter()
                        .map(|v| lda.predict(v))
                        .collect::<Result<Vec<_>, _>>()?;
                    let acc = evaluate(&preds, &test.labels, classes)?.accuracy;
                    Ok(SweepRow { split: s, d, accuracy: Some(acc) })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(per_split.into_iter().flatten().collect())
}

/// Mean accuracy per `d` over splits; `None` where any split skipped.
pub fn sweep_means(rows: &[SweepRow]) -> Vec<(usize, Option<f64>)> {
    let mut ds: Vec<usize> = rows.iter().map(|r| r.d).collect();
    ds.sort_unstable();
    ds.dedup();
    ds.into_iter()
        .map(|d| {
            let accs: Option<Vec<f64>> = rows.iter().filter(|r| r.d == d).map(|r| r.accuracy).collect();
            (d, accs.map(|a| a.iter().sum::<f64>() / a.len() as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_dims_include_minimum_row() {
        assert_eq!(sweep_dims(4), vec![3, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
        assert_eq!(sweep_dims(11).len(), 10);
        assert_eq!(sweep_dims(2)[0], 1);
    }

    #[test]
    fn means_mark_skipped() {
        let rows = vec![
            SweepRow { split: 0, d: 3, accuracy: Some(0.5) },
            SweepRow { split: 1, d: 3, accuracy: Some(1.0) },
            SweepRow { split: 0, d: 10, accuracy: None },
            SweepRow { split: 1, d: 10, accuracy: None },
        ];
        assert_eq!(sweep_means(&rows), vec![(3, Some(0.75)), (10, None)]);
    }
}
