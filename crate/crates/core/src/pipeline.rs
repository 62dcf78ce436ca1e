//! Whole-cloud normal estimation and denoising.
//!
//! Per query point: neighborhood → random candidates → neighbor-consensus
//! scoring and rejection → candidate-consensus mode. Points are processed in
//! parallel, each with its own generator derived from the seed and the point
//! index, so outputs do not depend on the thread count.

use rand::Rng;
use rayon::prelude::*;

use crate::candidate::{
    point_rng, reject_candidates, rejection_sigma, sample_normal_candidates,
    sample_position_candidates, score_all, score_position_candidate, sort_by_score,
    SamplingParams,
};
use crate::cloud::PointCloud;
use crate::consensus::{normal_mode, position_mode, ConsensusParams};
use crate::error::{Error, Result};
use crate::geom::{canonical_unit, Point3, UnitVec3};
use crate::knn::NeighborIndex;
use crate::noise::{adaptive_k, cloud_noise_scale, rejection_enabled, AdaptiveConfig, DEFAULT_NOISE_K};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationParams {
    pub adaptive: AdaptiveConfig,
    pub sampling: SamplingParams,
    pub consensus: ConsensusParams,
    /// Neighborhood of the PCA baseline.
    pub input_k: usize,
    pub seed: u64,
    /// Neighborhood used to measure the noise level.
    pub noise_k: usize,
    pub denoise_k: usize,
    /// Neighbors averaged into the denoising kernel bandwidth.
    pub denoise_sigma_k: usize,
}

impl Default for EstimationParams {
    fn default() -> Self {
        Self {
            adaptive: AdaptiveConfig::default(),
            sampling: SamplingParams::default(),
            consensus: ConsensusParams::default(),
            input_k: 256,
            seed: 0,
            noise_k: DEFAULT_NOISE_K,
            denoise_k: 64,
            denoise_sigma_k: 12,
        }
    }
}

impl EstimationParams {
    pub fn validate(&self) -> Result<()> {
        self.adaptive.validate()?;
        self.sampling.validate()?;
        self.consensus.validate()?;
        if self.input_k < self.sampling.k_s {
            return Err(Error::InvalidParams("input_k must be at least k_s".into()));
        }
        if self.noise_k < 2 {
            return Err(Error::InvalidParams("noise_k must be at least 2".into()));
        }
        if self.denoise_k < 4 {
            return Err(Error::InvalidParams("denoise_k must be at least 4".into()));
        }
        if self.denoise_sigma_k == 0 || self.denoise_sigma_k > self.denoise_k {
            return Err(Error::InvalidParams(
                "denoise_sigma_k must lie in 1..=denoise_k".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointDiagnostics {
    pub k_hat: usize,
    /// k̂ was reduced to fit a small cloud.
    pub k_clamped: bool,
    pub n_feasible: usize,
    pub rejection: bool,
    pub solver_iters: usize,
    pub converged: bool,
    pub final_loss: f64,
}

#[derive(Debug, Clone)]
pub struct Estimation {
    pub cloud: PointCloud,
    pub diagnostics: Vec<PointDiagnostics>,
    pub cloud_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsSummary {
    pub points: usize,
    pub mean_k_hat: f64,
    pub clamped: usize,
    pub rejection_points: usize,
    pub mean_feasible: f64,
    pub mean_iters: f64,
    pub converged_fraction: f64,
}

pub fn summarize(diag: &[PointDiagnostics]) -> DiagnosticsSummary {
    let n = diag.len().max(1) as f64;
    DiagnosticsSummary {
        points: diag.len(),
        mean_k_hat: diag.iter().map(|d| d.k_hat as f64).sum::<f64>() / n,
        clamped: diag.iter().filter(|d| d.k_clamped).count(),
        rejection_points: diag.iter().filter(|d| d.rejection).count(),
        mean_feasible: diag.iter().map(|d| d.n_feasible as f64).sum::<f64>() / n,
        mean_iters: diag.iter().map(|d| d.solver_iters as f64).sum::<f64>() / n,
        converged_fraction: diag.iter().filter(|d| d.converged).count() as f64 / n,
    }
}

fn neighbor_points(index: &NeighborIndex, t: usize, k: usize) -> Result<Vec<Point3>> {
    Ok(index
        .knn(t, k)?
        .iter()
        .map(|n| *index.point(n.index))
        .collect())
}

/// Estimates the normal of point `t` given the cloud-wide noise level.
pub fn estimate_normal<R: Rng + ?Sized>(
    index: &NeighborIndex,
    t: usize,
    f_cloud: f64,
    params: &EstimationParams,
    rng: &mut R,
) -> Result<(UnitVec3, PointDiagnostics)> {
    let wanted = adaptive_k(f_cloud, &params.adaptive);
    let k_hat = wanted.min(index.len().saturating_sub(1));
    let neighbors = neighbor_points(index, t, k_hat)?;
    let query = index.point(t);

    let mut candidates = sample_normal_candidates(&neighbors, &params.sampling, rng)?;
    let sigma = rejection_sigma(&neighbors, query);
    let rejection = rejection_enabled(f_cloud, &params.adaptive);
    // Scores also rank the candidates for the solver start, so they are
    // computed whether or not rejection is active.
    score_all(&neighbors, &mut candidates, sigma);
    if rejection {
        candidates = reject_candidates(candidates, params.sampling.rejection_fraction_normals);
    } else {
        sort_by_score(&mut candidates);
    }

    let normals: Vec<UnitVec3> = candidates.iter().map(|c| c.normal()).collect();
    let mode = normal_mode(
        &normals,
        params.consensus.tau_normal(),
        &params.consensus,
        &normals[0],
    )?;
    let diag = PointDiagnostics {
        k_hat,
        k_clamped: k_hat < wanted,
        n_feasible: normals.len(),
        rejection,
        solver_iters: mode.iterations,
        converged: mode.converged,
        final_loss: mode.loss,
    };
    Ok((canonical_unit(&mode.value), diag))
}

pub fn estimate_all(cloud: &PointCloud, params: &EstimationParams) -> Result<Estimation> {
    params.validate()?;
    let index = NeighborIndex::build(cloud)?;
    if cloud.len() <= params.sampling.k_s {
        return Err(Error::TooFewNeighbors {
            needed: params.sampling.k_s + 1,
            got: cloud.len(),
        });
    }
    let noise_k = params.noise_k.min(cloud.len() - 1);
    let cloud_f = cloud_noise_scale(&index, noise_k)?.cloud_f;
    estimate_all_at_level(cloud, &index, cloud_f, params)
}

/// As [`estimate_all`], with the cloud noise level already known.
pub fn estimate_all_at_level(
    cloud: &PointCloud,
    index: &NeighborIndex,
    cloud_f: f64,
    params: &EstimationParams,
) -> Result<Estimation> {
    let results = (0..cloud.len())
        .into_par_iter()
        .map(|t| {
            let mut rng = point_rng(params.seed, t);
            estimate_normal(index, t, cloud_f, params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let (normals, diagnostics): (Vec<UnitVec3>, Vec<PointDiagnostics>) = results.into_iter().unzip();
    let mut out = cloud.clone();
    out.set_normals(normals)?;
    Ok(Estimation {
        cloud: out,
        diagnostics,
        cloud_f,
    })
}

/// Moves point `t` to the main mode of its position candidates.
pub fn denoise_point<R: Rng + ?Sized>(
    index: &NeighborIndex,
    t: usize,
    params: &EstimationParams,
    rng: &mut R,
) -> Result<Point3> {
    let k = params.denoise_k.min(index.len().saturating_sub(1));
    let hits = index.knn(t, k)?;
    let query = *index.point(t);
    let sigma_k = params.denoise_sigma_k.min(hits.len());
    let sigma = hits[..sigma_k].iter().map(|n| n.distance).sum::<f64>() / sigma_k as f64;
    if !(sigma > 0.0) {
        return Ok(query);
    }
    let radius = hits.last().map_or(0.0, |n| n.distance);
    let neighbors: Vec<Point3> = hits.iter().map(|n| *index.point(n.index)).collect();

    let mut candidates = sample_position_candidates(&neighbors, &params.sampling, rng)?;
    for c in &mut candidates {
        c.score = Some(score_position_candidate(&neighbors, &c.q, sigma));
    }
    let candidates = reject_candidates(candidates, params.sampling.rejection_fraction_positions);
    let positions: Vec<Point3> = candidates.iter().map(|c| c.q).collect();
    let mode = position_mode(&positions, sigma, &params.consensus, radius, &query)?;
    Ok(mode.value)
}

pub fn denoise_all(cloud: &PointCloud, params: &EstimationParams) -> Result<PointCloud> {
    params.validate()?;
    if cloud.len() < 5 {
        return Err(Error::TooFewNeighbors {
            needed: 5,
            got: cloud.len(),
        });
    }
    let index = NeighborIndex::build(cloud)?;
    let points = (0..cloud.len())
        .into_par_iter()
        .map(|t| {
            let mut rng = point_rng(params.seed, t);
            denoise_point(&index, t, params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    cloud.with_points(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{angle_unoriented, Vec3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid_plane(n: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts = (0..n)
            .map(|_| Point3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), 0.0))
            .collect();
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn plane_normals_are_exact() {
        let cloud = grid_plane(400);
        let est = estimate_all(&cloud, &EstimationParams::default()).unwrap();
        assert!(est.cloud_f.abs() < 1e-12);
        for n in est.cloud.normals().unwrap() {
            assert!(angle_unoriented(n, &Vec3::z_axis()) < 0.1);
        }
        assert!(est.diagnostics.iter().all(|d| d.k_hat == 32 && d.rejection && d.n_feasible == 80));
    }

    #[test]
    fn small_cloud_clamps_k_hat() {
        let cloud = grid_plane(20);
        let est = estimate_all(&cloud, &EstimationParams::default()).unwrap();
        assert!(est.diagnostics.iter().all(|d| d.k_hat == 19 && d.k_clamped));
        let s = summarize(&est.diagnostics);
        assert_eq!(s.clamped, 20);
        assert_eq!(s.points, 20);
    }

    #[test]
    fn estimate_rejects_tiny_cloud() {
        let cloud = PointCloud::new(vec![Point3::origin(); 3]).unwrap();
        assert!(estimate_all(&cloud, &EstimationParams::default()).is_err());
    }

    #[test]
    fn same_seed_same_output() {
        let cloud = grid_plane(300);
        let mut noisy = cloud.points().to_vec();
        let g = Normal::new(0.0, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in &mut noisy {
            p.z += g.sample(&mut rng);
        }
        let noisy = PointCloud::new(noisy).unwrap();
        let params = EstimationParams {
            seed: 7,
            ..EstimationParams::default()
        };
        let a = estimate_all(&noisy, &params).unwrap();
        let b = estimate_all(&noisy, &params).unwrap();
        assert_eq!(a.cloud, b.cloud);
    }

    #[test]
    fn clean_plane_denoise_is_identity_on_plane() {
        let cloud = grid_plane(500);
        let out = denoise_all(&cloud, &EstimationParams::default()).unwrap();
        for p in out.points() {
            assert!(p.z.abs() < 1e-9);
        }
    }

    #[test]
    fn outlier_is_pulled_back() {
        let cloud = grid_plane(800);
        let mut pts = cloud.points().to_vec();
        pts[0] = Point3::new(0.5, 0.5, 0.05);
        let index = NeighborIndex::from_points(&pts).unwrap();
        let params = EstimationParams::default();
        let hits = index.knn(0, 12).unwrap();
        let sigma = hits.iter().map(|n| n.distance).sum::<f64>() / 12.0;
        let p = denoise_point(&index, 0, &params, &mut point_rng(0, 0)).unwrap();
        assert!(p.z.abs() < 3.0 * sigma, "z = {}, sigma = {sigma}", p.z);
        assert!(p.z.abs() < 0.05);
    }

    #[test]
    fn params_validation() {
        EstimationParams::default().validate().unwrap();
        let bad = EstimationParams {
            input_k: 2,
            ..EstimationParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
