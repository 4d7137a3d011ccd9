//! Command implementations. Each writes its report to `out` and returns
//! a [`CliError`] carrying the exit code on failure.

use std::fs;
use std::io::Write;
use std::path::Path;

use mpcanet_core::network::DictionaryKind;
use mpcanet_core::{
    evaluate, load_dataset, read_model, split, synth_generate, write_model, Classifier, Dataset,
    Network, SynthSpec,
};
use serde_json::{json, Value};

use crate::config::{format_extents, RunConfig, DEFAULT_ENERGY};
use crate::error::CliError;
use crate::pipeline::{bench, sweep_means, sweep_mpca_lda, train_model, BenchReport, SweepRow};

fn load(data: &Path) -> Result<Dataset, CliError> {
    let ds = load_dataset(data).map_err(|e| CliError::data(e.to_string()))?;
    if ds.is_empty() {
        return Err(CliError::data(format!("{}: manifest has no entries", data.display())));
    }
    Ok(ds)
}

fn write_err(e: std::io::Error) -> CliError {
    CliError::data(format!("writing output: {e}"))
}

fn to_json(v: &impl serde::Serialize) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn kind_name(k: DictionaryKind) -> &'static str {
    match k {
        DictionaryKind::TensorMpca => "tensor-mpca",
        DictionaryKind::VectorPca => "vector-pca",
    }
}

fn layer_summary(net: &Network) -> Vec<Value> {
    net.layers()
        .iter()
        .map(|d| {
            let g = &d.config().geometry;
            json!({
                "patch": g.patch_dims(),
                "slide_modes": g.slide_modes(),
                "padding": g.padding(),
                "kind": kind_name(d.config().kind),
                "encoders": d.encoders(),
                "source_dims": d.source_dims(),
                "core_dims": d.model().output_dims(),
                "map_dims": d.map_dims(),
            })
        })
        .collect()
}

fn print_layers(out: &mut dyn Write, net: &Network) -> std::io::Result<()> {
    for (k, d) in net.layers().iter().enumerate() {
        let g = &d.config().geometry;
        writeln!(
            out,
            "layer {k}: {} patch {} slide {:?} L={} input {} core {} maps {}",
            kind_name(d.config().kind),
            format_extents(g.patch_dims()),
            g.slide_modes(),
            d.encoders(),
            format_extents(d.source_dims()),
            format_extents(d.model().output_dims()),
            format_extents(&d.map_dims()),
        )?;
    }
    Ok(())
}

/// Trains on the manifest (or its training split when `ratio` is set) and
/// writes the model file.
pub fn cmd_train(
    cfg: &RunConfig,
    data: &Path,
    model_out: &Path,
    json_out: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let ds = load(data)?;
    let dims = ds.dims().expect("non-empty").to_vec();
    let (net_cfg, effective) = cfg.resolve(&dims)?;
    let train = match cfg.ratio {
        Some(r) => {
            let (idx, _) = split(&ds.labels, r, cfg.seed).map_err(|e| CliError::data(e.to_string()))?;
            ds.subset(&idx)
        }
        None => ds.clone(),
    };
    let (net, classifier) = train_model(&net_cfg, &cfg.classifier, &train)?;
    write_model(model_out, &net, Some((&classifier, &ds.label_names)))
        .map_err(|e| CliError::data(format!("{}: {e}", model_out.display())))?;

    if json_out {
        let v = json!({
            "config": effective,
            "feature_dim": net.feature_dim(),
            "blocks": net.block_count(),
            "train_samples": train.len(),
            "layers": layer_summary(&net),
            "model": model_out.display().to_string(),
        });
        writeln!(out, "{}", to_json(&v)).map_err(write_err)?;
    } else {
        (|| -> std::io::Result<()> {
            writeln!(out, "config: {}", to_json(&effective))?;
            writeln!(out, "trained on {} samples, {} classes", train.len(), ds.num_classes())?;
            print_layers(out, &net)?;
            writeln!(out, "blocks: {}", net.block_count())?;
            writeln!(out, "feature_dim: {}", net.feature_dim())?;
            writeln!(out, "model: {}", model_out.display())
        })()
        .map_err(write_err)?;
    }
    Ok(())
}

pub fn cmd_eval(model: &Path, data: &Path, json_out: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let file = read_model(model)?;
    let classifier: Classifier = file
        .classifier
        .ok_or_else(|| CliError::data(format!("{}: model has no classifier", model.display())))?;
    let ds = load(data)?;
    let net = &file.network;
    if ds.dims() != Some(net.input_dims()) {
        return Err(CliError::data(format!(
            "model expects inputs {:?}, data has {:?}",
            net.input_dims(),
            ds.dims().unwrap_or_default()
        )));
    }
    let labels = ds
        .labels
        .iter()
        .map(|&l| {
            let name = &ds.label_names[l];
            file.label_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| CliError::data(format!("label {name:?} is unknown to the model")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let preds = net
        .forward_batch(&ds.samples)?
        .iter()
        .map(|f| classifier.predict(f))
        .collect::<Result<Vec<_>, _>>()?;
    let ev = evaluate(&preds, &labels, file.label_names.len())?;

    let res = if json_out {
        let v = json!({
            "model": model.display().to_string(),
            "architecture": net.architecture().name(),
            "samples": ds.len(),
            "labels": file.label_names,
            "accuracy": ev.accuracy,
            "confusion": ev.confusion,
        });
        writeln!(out, "{}", to_json(&v))
    } else {
        (|| {
            writeln!(out, "architecture: {}", net.architecture())?;
            writeln!(out, "samples: {}", ds.len())?;
            writeln!(out, "accuracy: {}", ev.accuracy)?;
            writeln!(out, "confusion (rows = true, columns = predicted):")?;
            writeln!(out, "  labels: {}", file.label_names.join(" "))?;
            for (name, row) in file.label_names.iter().zip(&ev.confusion) {
                let cells: Vec<String> = row.iter().map(usize::to_string).collect();
                writeln!(out, "  {name}: {}", cells.join(" "))?;
            }
            Ok(())
        })()
    };
    res.map_err(write_err)
}

pub const BENCH_CSV_HEADER: &str = "architecture,patch,L,box,split,accuracy";

pub fn bench_csv(report: &BenchReport) -> String {
    let mut s = format!("# config: {}\n{BENCH_CSV_HEADER}\n", to_json(&report.configs));
    for r in &report.rows {
        let split = r.split.map_or_else(|| "mean".to_string(), |k| k.to_string());
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.architecture, r.patch, r.encoders, r.box_dims, split, r.accuracy
        ));
    }
    s
}

pub fn cmd_bench(
    cfg: &RunConfig,
    data: &Path,
    patches: &[Vec<usize>],
    csv: Option<&Path>,
    json_out: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let ds = load(data)?;
    let report = bench(cfg, &ds, patches)?;
    if let Some(path) = csv {
        fs::write(path, bench_csv(&report)).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    }
    let res = if json_out {
        writeln!(out, "{}", to_json(&report))
    } else {
        (|| {
            writeln!(out, "config: {}", to_json(&report.configs))?;
            writeln!(out, "{:<16} {:<10} {:<6} {:<8} {:<6} accuracy", "architecture", "patch", "L", "box", "split")?;
            for r in &report.rows {
                let split = r.split.map_or_else(|| "mean".to_string(), |k| k.to_string());
                writeln!(
                    out,
                    "{:<16} {:<10} {:<6} {:<8} {:<6} {:.4}",
                    r.architecture, r.patch, r.encoders, r.box_dims, split, r.accuracy
                )?;
            }
            for s in &report.summaries {
                writeln!(out, "patch {}: mean {:.4} ± {:.4}", s.patch, s.mean, s.std)?;
            }
            Ok(())
        })()
    };
    res.map_err(write_err)
}

pub const SWEEP_CSV_HEADER: &str = "d,split,accuracy,status";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        match r.accuracy {
            Some(a) => s.push_str(&format!("{},{},{a},ok\n", r.d, r.split)),
            None => s.push_str(&format!("{},{},,skipped\n", r.d, r.split)),
        }
    }
    s
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_sweep(
    data: &Path,
    splits: usize,
    seed: u64,
    ratio: f64,
    energy: f64,
    csv: Option<&Path>,
    json_out: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CliError::usage(format!("ratio must lie in (0, 1), got {ratio}")));
    }
    let ds = load(data)?;
    let rows = sweep_mpca_lda(&ds, splits, seed, ratio, energy)?;
    let means = sweep_means(&rows);
    let provenance = json!({"splits": splits, "seed": seed, "ratio": ratio, "energy": energy});
    if let Some(path) = csv {
        fs::write(path, sweep_csv(&rows)).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    }
    let res = if json_out {
        let summary: Vec<Value> = means.iter().map(|(d, m)| json!({"d": d, "mean_accuracy": m})).collect();
        writeln!(out, "{}", to_json(&json!({"config": provenance, "rows": rows, "summary": summary})))
    } else {
        (|| {
            writeln!(out, "config: {provenance}")?;
            writeln!(out, "{:>4} mean accuracy", "d")?;
            for (d, m) in &means {
                match m {
                    Some(a) => writeln!(out, "{d:>4} {a:.4}")?,
                    None => writeln!(out, "{d:>4} skipped")?,
                }
            }
            Ok(())
        })()
    };
    res.map_err(write_err)
}

pub fn cmd_synth(spec: &SynthSpec, out_dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let ds = synth_generate(spec).map_err(|e| CliError::usage(e.to_string()))?;
    let manifest = mpcanet_core::dataset::write_dataset(&ds, out_dir)
        .map_err(|e| CliError::data(format!("{}: {e}", out_dir.display())))?;
    writeln!(out, "spec: {}", to_json(spec))
        .and_then(|_| writeln!(out, "wrote {} tensors and {}", ds.len(), manifest.display()))
        .map_err(write_err)
}

/// Per-mode marginal energy ratios `λ_k / Σλ`.
pub fn energy_ratios(eigenvalues: &[f64]) -> Vec<f64> {
    let total: f64 = eigenvalues.iter().sum();
    eigenvalues
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect()
}

pub fn cmd_inspect(model: &Path, json_out: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let file = read_model(model)?;
    let net = &file.network;
    let energies: Vec<Vec<Vec<f64>>> = net
        .layers()
        .iter()
        .map(|d| d.model().mode_eigenvalues().iter().map(|ev| energy_ratios(ev)).collect())
        .collect();
    let res = if json_out {
        let mut layers = layer_summary(net);
        for (l, e) in layers.iter_mut().zip(&energies) {
            l["energy_ratios"] = json!(e);
        }
        let v = json!({
            "architecture": net.architecture().name(),
            "input_dims": net.input_dims(),
            "layers": layers,
            "pooling": net.pooling(),
            "blocks": net.block_count(),
            "feature_dim": net.feature_dim(),
            "classifier": file.classifier.as_ref().map(Classifier::kind_name),
            "labels": file.label_names,
        });
        writeln!(out, "{}", to_json(&v))
    } else {
        (|| {
            writeln!(out, "architecture: {}", net.architecture())?;
            writeln!(out, "input: {}", format_extents(net.input_dims()))?;
            print_layers(out, net)?;
            for (k, (d, e)) in net.layers().iter().zip(&energies).enumerate() {
                for (n, ratios) in e.iter().enumerate() {
                    let p = d.model().output_dims()[n];
                    let cells: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
                    writeln!(out, "layer {k} mode {n}: P={p} energy {}", cells.join(" "))?;
                }
            }
            writeln!(
                out,
                "pooling: box {} overlap {} normalized {}",
                format_extents(&net.pooling().box_dims),
                net.pooling().overlap,
                net.pooling().normalized
            )?;
            writeln!(out, "blocks: {}", net.block_count())?;
            writeln!(out, "feature_dim: {}", net.feature_dim())?;
            match &file.classifier {
                Some(c) => writeln!(out, "classifier: {} ({} labels)", c.kind_name(), file.label_names.len()),
                None => writeln!(out, "classifier: none"),
            }
        })()
    };
    res.map_err(write_err)
}

/// Default energy for the MPCA+LDA sweep.
pub const SWEEP_ENERGY: f64 = DEFAULT_ENERGY;
