//! Fixtures shared by the pipeline benchmarks.

use mpcanet_core::network::LayerSpec;
use mpcanet_core::{
    synth_generate, Architecture, Dataset, EnergyPolicy, NetworkConfig, Padding, PatchGeometry,
    PoolingConfig, SynthSpec,
};

/// The synthetic task used by the acceptance suite.
pub fn synthetic_task(sigma: f64) -> Dataset {
    synth_generate(&SynthSpec {
        dims: vec![16, 16, 8],
        num_classes: 4,
        samples_per_class: 20,
        template_rank: vec![2, 2, 2],
        noise_sigma: sigma,
        seed: 7,
    })
    .expect("valid spec")
}

pub fn network_config(arch: Architecture) -> NetworkConfig {
    let layer = |patch: Vec<usize>, source: &[usize]| LayerSpec {
        geometry: PatchGeometry::sliding_where_smaller(patch, source, Padding::ZeroPadSame)
            .expect("patch fits"),
        encoders: 8,
        energy: EnergyPolicy::new(0.97).expect("valid energy"),
    };
    let mut layers = vec![layer(vec![3, 3, 8], &[16, 16, 8])];
    if arch.stages() == 2 {
        layers.push(layer(vec![3, 3], &[16, 16]));
    }
    NetworkConfig {
        architecture: arch,
        layers,
        pooling: PoolingConfig::new(vec![4, 4], 0.5).expect("valid pooling"),
    }
}
