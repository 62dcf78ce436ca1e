//! Per-point noise level (local surface variation) and the global
//! neighborhood size and rejection switch derived from it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{covariance, eigen_sym3, Point3};
use crate::knn::NeighborIndex;

/// Neighborhood used to measure the noise level, independent of k̂.
pub const DEFAULT_NOISE_K: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    pub per_point_f: Vec<f64>,
    pub cloud_f: f64,
}

/// Interval table mapping the cloud noise level to a neighborhood size.
///
/// `sizes[i]` is used for `thresholds[i] <= f < thresholds[i + 1]`; values at
/// or above the last threshold clamp to the last size.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub thresholds: [f64; 5],
    pub sizes: [usize; 4],
    /// Rejection runs only while f falls in the first this-many intervals.
    pub rejection_interval_max: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            thresholds: [0.0, 0.02, 0.14, 0.16, 0.3],
            sizes: [32, 128, 256, 450],
            rejection_interval_max: 2,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.thresholds.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParams(
                "adaptive thresholds must be strictly increasing".into(),
            ));
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) || self.sizes[0] == 0 {
            return Err(Error::InvalidParams(
                "adaptive sizes must be positive and strictly increasing".into(),
            ));
        }
        if self.rejection_interval_max > self.sizes.len() {
            return Err(Error::InvalidParams(
                "rejection_interval_max exceeds the number of intervals".into(),
            ));
        }
        Ok(())
    }
}

fn surface_variation(points: &[Point3]) -> f64 {
    let (cov, _) = covariance(points);
    if cov.is_zero() {
        return 0.0;
    }
    let values = eigen_sym3(&cov).values.map(|v| v.max(0.0));
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        0.0
    } else {
        values[0] / total
    }
}

/// Surface variation `λ1 / (λ1 + λ2 + λ3)` of point `t` together with its
/// `k_f` nearest neighbors.
pub fn point_noise_level(index: &NeighborIndex, t: usize, k_f: usize) -> Result<f64> {
    let neighbors = index.knn(t, k_f)?;
    let mut pts = Vec::with_capacity(k_f + 1);
    pts.push(*index.point(t));
    pts.extend(neighbors.iter().map(|n| *index.point(n.index)));
    Ok(surface_variation(&pts))
}

pub fn cloud_noise_scale(index: &NeighborIndex, k_f: usize) -> Result<NoiseProfile> {
    let per_point_f = (0..index.len())
        .into_par_iter()
        .map(|t| point_noise_level(index, t, k_f))
        .collect::<Result<Vec<f64>>>()?;
    // Sequential sum keeps the mean independent of the thread schedule.
    let cloud_f = per_point_f.iter().sum::<f64>() / per_point_f.len() as f64;
    Ok(NoiseProfile {
        per_point_f,
        cloud_f,
    })
}

fn interval(f: f64, cfg: &AdaptiveConfig) -> usize {
    let last = cfg.sizes.len() - 1;
    (0..last)
        .find(|&i| f < cfg.thresholds[i + 1])
        .unwrap_or(last)
}

pub fn adaptive_k(f: f64, cfg: &AdaptiveConfig) -> usize {
    cfg.sizes[interval(f, cfg)]
}

pub fn rejection_enabled(f: f64, cfg: &AdaptiveConfig) -> bool {
    interval(f, cfg) < cfg.rejection_interval_max
}
