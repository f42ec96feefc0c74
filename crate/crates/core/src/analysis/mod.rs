//! Linear baselines (PCA over single and fused modalities) and the shared
//! clustering evaluation protocol (K-Means, silhouette, ARI, NMI).

pub mod eigen;
pub mod fusion;
pub mod kmeans;
pub mod metrics;
pub mod pca;
pub mod report;

pub use fusion::{fuse_concat, FusionWeights};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use metrics::{ari, nmi, nmi_with, silhouette, silhouette_subsampled, NmiNorm};
pub use pca::{pca_fit, pca_inverse_transform, pca_transform, PcaModel};
pub use report::{
    grid_report, grid_report_with_options, read_report_csv, write_report_csv, ClusterReport,
    ReportRow,
};
