//! Unsupervised point cloud normal estimation and denoising by multi-sample
//! consensus.
//!
//! For every query point a set of random hypotheses is drawn from its
//! neighborhood (planes through a few neighbors for normals, centroids of a
//! few neighbors for positions). Hypotheses poorly supported by the
//! neighborhood are rejected, and the estimate is the main mode of the
//! survivors, found by minimizing a Gaussian-kernel consensus loss. Near
//! sharp features this selects the dominant surface instead of averaging
//! across it.
//!
//! ```
//! use msune::{estimate_all, gen_shape, rms_angle, EstimationParams, ShapeKind, ShapeSpec};
//!
//! let cloud = gen_shape(&ShapeSpec::new(ShapeKind::Plane, 300, 1)).unwrap();
//! let est = estimate_all(&cloud, &EstimationParams::default()).unwrap();
//! let rms = rms_angle(est.cloud.normals().unwrap(), cloud.normals().unwrap()).unwrap();
//! assert!(rms < 0.1);
//! ```

pub mod baseline;
pub mod candidate;
pub mod cloud;
pub mod config;
pub mod consensus;
pub mod error;
pub mod geom;
pub mod io;
pub mod knn;
pub mod metrics;
pub mod noise;
pub mod pipeline;
pub mod suite;
pub mod synth;

pub use baseline::pca_baseline;
pub use cloud::PointCloud;
pub use config::RunConfig;
pub use error::{Error, Result};
pub use geom::{Point3, UnitVec3, Vec3};
pub use knn::NeighborIndex;
pub use metrics::{chamfer, pgp, rms_angle, rms_tau, EvalReport, NormalMetrics};
pub use pipeline::{denoise_all, estimate_all, EstimationParams, PointDiagnostics};
pub use synth::{add_noise, gen_shape, p2s, NoiseSpec, ShapeKind, ShapeSpec};
