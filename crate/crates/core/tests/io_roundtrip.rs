mod common;

use common::*;
use mpcanet_core::dataset::{decode_tensor, encode_tensor, read_tensor, write_tensor};
use mpcanet_core::network::{decode_model, encode_model, LayerSpec};
use mpcanet_core::{
    fit_ridge_ovr, read_model, split, synth_generate, train_network, write_model, Architecture,
    Classifier, DenseMatrix, DenseTensor, EnergyPolicy, Error, NetworkConfig, Padding,
    PatchGeometry, PoolingConfig, SeededRng, SynthSpec,
};

#[test]
fn tensors_round_trip_bitwise_across_orders() {
    let mut rng = SeededRng::new(99);
    let dir = tempfile::tempdir().unwrap();
    for i in 0..100 {
        let order = 1 + rng.below(4);
        let dims: Vec<usize> = (0..order).map(|_| 1 + rng.below(6)).collect();
        let t = DenseTensor::from_fn(&dims, |_| f64::from_bits(rng.next_u64())).unwrap();
        let back = decode_tensor(&encode_tensor(&t).unwrap()).unwrap();
        assert_eq!(back.dims(), t.dims());
        assert!(back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        if i % 10 == 0 {
            let path = dir.path().join(format!("t{i}.tobj"));
            write_tensor(&path, &t).unwrap();
            let back = read_tensor(&path).unwrap();
            assert!(back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
    // long single mode
    let long = DenseTensor::from_fn(&[1 << 16], |i| i[0] as f64).unwrap();
    assert_eq!(decode_tensor(&encode_tensor(&long).unwrap()).unwrap(), long);
}

fn trained(arch: Architecture) -> (mpcanet_core::Network, Vec<DenseTensor>, Vec<usize>) {
    let ds = synth_generate(&SynthSpec {
        dims: vec![8, 8, 3],
        num_classes: 2,
        samples_per_class: 4,
        template_rank: vec![2, 2, 1],
        noise_sigma: 0.1,
        seed: 4,
    })
    .unwrap();
    let geometry = |p: Vec<usize>, src: &[usize]| PatchGeometry::sliding_where_smaller(p, src, Padding::ZeroPadSame).unwrap();
    let mut layers = vec![LayerSpec { geometry: geometry(vec![3, 3, 3], &[8, 8, 3]), encoders: 3, energy: EnergyPolicy::new(0.97).unwrap() }];
    if arch.stages() == 2 {
        layers.push(LayerSpec { geometry: geometry(vec![3, 3], &[8, 8]), encoders: 2, energy: EnergyPolicy::new(0.9).unwrap() });
    }
    if matches!(arch, Architecture::Pcanet1 | Architecture::Pcanet2) {
        layers[0].energy = EnergyPolicy::new(0.97).unwrap().with_min_dims(vec![4]);
    }
    let cfg = NetworkConfig { architecture: arch, layers, pooling: PoolingConfig::new(vec![4, 4], 0.5).unwrap() };
    (train_network(&ds.samples, &cfg).unwrap(), ds.samples, ds.labels)
}

#[test]
fn every_architecture_round_trips_with_classifier() {
    let mut rng = SeededRng::new(1);
    for arch in Architecture::ALL {
        let (net, xs, labels) = trained(arch);
        let feats = net.forward_batch(&xs).unwrap();
        let rows: Vec<&[f64]> = feats.iter().map(Vec::as_slice).collect();
        let clf = Classifier::Ridge(fit_ridge_ovr(&DenseMatrix::from_rows(&rows).unwrap(), &labels, 1e-2).unwrap());
        let names = vec!["a".to_string(), "b".to_string()];
        let bytes = encode_model(&net, Some((&clf, &names))).unwrap();
        let back = decode_model(&bytes).unwrap();
        assert_eq!(back.network, net, "{arch}");
        assert_eq!(back.classifier.as_ref(), Some(&clf));
        assert_eq!(back.label_names, names);
        assert_eq!(encode_model(&back.network, Some((&clf, &names))).unwrap(), bytes);
        for _ in 0..5 {
            let x = random_tensor(&mut rng, &[8, 8, 3]);
            assert_eq!(net.forward(&x).unwrap(), back.network.forward(&x).unwrap());
        }
        // every strict prefix is rejected
        for cut in [0, 3, 5, bytes.len() / 2, bytes.len() - 1] {
            assert!(decode_model(&bytes[..cut]).is_err(), "{arch} prefix {cut}");
        }
    }
}

#[test]
fn model_file_errors_are_typed() {
    let (net, _, _) = trained(Architecture::Mpcanet1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    write_model(&path, &net, None).unwrap();
    let file = read_model(&path).unwrap();
    assert!(file.classifier.is_none());
    assert_eq!(file.network, net);

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'Z';
    assert!(matches!(decode_model(&bytes), Err(Error::BadMagic { .. })));
    bytes[0] = b'M';
    bytes[4] = 7;
    assert!(matches!(decode_model(&bytes), Err(Error::UnsupportedVersion(7))));
    bytes[4] = 1;
    bytes.push(0);
    assert!(decode_model(&bytes).is_err());
    assert!(matches!(read_model(&dir.path().join("missing")), Err(Error::Data { .. })));
}

#[test]
fn splits_differ_across_seeds() {
    let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
    let mut seen = std::collections::HashSet::new();
    for seed in 0..100 {
        let (train, test) = split(&labels, 0.5, seed).unwrap();
        assert_eq!(train.len(), 20);
        assert!(train.iter().all(|i| !test.contains(i)));
        seen.insert(train);
    }
    assert!(seen.len() >= 95, "{} distinct splits", seen.len());
}
