//! Multilinear PCA and the MPCANet tensor feature pipeline.
//!
//! The crate covers dense tensor algebra, MPCA fitting, sliding tensor
//! patches, the projected-encoder / binary-hashing / block-histogram network
//! (with PCANet as the vectorized-patch configuration), linear classifiers,
//! and dataset tooling.

pub mod classifier;
mod codec;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod mpca;
pub mod network;
pub mod patch;
pub mod rng;
pub mod tensor;

pub use classifier::{evaluate, fit_lda, fit_ridge_ovr, Classifier, Evaluation, LdaModel, LinearModel, NearestNeighbor};
pub use dataset::{load_dataset, split, synth_generate, Dataset, SynthSpec};
pub use error::{Error, Result};
pub use mpca::{fit_mpca, EnergyPolicy, MpcaModel};
pub use network::{
    read_model, train_network, write_model, Architecture, LayerSpec, Network, NetworkConfig,
    PoolingConfig,
};
pub use patch::{extract_patches, PatchGeometry, Padding};
pub use rng::SeededRng;
pub use tensor::{DenseMatrix, DenseTensor};
