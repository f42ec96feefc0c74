//! Deterministic multimodal representation learning at desk scale.
//!
//! The crate trains a three-modality autoencoder (image, audio, text encoders
//! joined at one shared latent space, trained by joint reconstruction),
//! provides the linear baselines it is compared against (PCA over single and
//! fused modalities), and evaluates everything with a common clustering
//! protocol (K-Means, silhouette, ARI, NMI) plus exact t-SNE projections.
//!
//! Every randomized operation is a pure function of its seed; repeated runs
//! produce bit-identical artifacts.

// Index-coupled loops over several parallel containers read better here than
// iterator chains; the kernels in `matrix` cover the hot paths.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod data;
pub mod error;
pub mod matrix;
pub mod mmae;
pub mod nn;
pub mod projection;
pub mod reference;
pub mod rng;

pub use error::{Error, Result};
pub use matrix::Matrix;
