//! The standard synthetic benchmark: every shape at several noise levels and
//! seeds, used to track accuracy as the candidate count changes.

use crate::cloud::PointCloud;
use crate::error::Result;
use crate::knn::NeighborIndex;
use crate::metrics::rms_angle;
use crate::noise::cloud_noise_scale;
use crate::pipeline::{estimate_all_at_level, EstimationParams};
use crate::synth::{add_noise, gen_shape, NoiseSpec, ShapeKind, ShapeSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub shapes: Vec<ShapeKind>,
    /// Noise standard deviations in percent of the bounding-box diagonal.
    pub noise_pcts: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_points: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            shapes: vec![
                ShapeKind::Plane,
                ShapeKind::Sphere,
                ShapeKind::Cylinder,
                ShapeKind::Cube,
                ShapeKind::Wedge { dihedral_deg: 90.0 },
            ],
            noise_pcts: vec![0.0, 0.5, 1.0],
            seeds: vec![1, 2, 3],
            n_points: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteCase {
    pub shape: ShapeKind,
    pub noise_pct: f64,
    pub seed: u64,
    pub clean: PointCloud,
    pub noisy: PointCloud,
}

impl SuiteConfig {
    pub fn cases(&self) -> Result<Vec<SuiteCase>> {
        let mut out = Vec::new();
        for &shape in &self.shapes {
            for &noise_pct in &self.noise_pcts {
                for &seed in &self.seeds {
                    let clean = gen_shape(&ShapeSpec::new(shape, self.n_points, seed))?;
                    let noisy = add_noise(&clean, &NoiseSpec::gaussian(noise_pct, seed.wrapping_add(1_000_003)))?;
                    out.push(SuiteCase {
                        shape,
                        noise_pct,
                        seed,
                        clean,
                        noisy,
                    });
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub n_candidates: usize,
    pub mean_rms: f64,
    /// RMS per case, in [`SuiteConfig::cases`] order.
    pub case_rms: Vec<f64>,
}

/// Mean RMS over the suite for each candidate count. Each case's index and
/// noise level are computed once and shared across counts.
pub fn candidate_trend(
    suite: &SuiteConfig,
    counts: &[usize],
    params: &EstimationParams,
) -> Result<Vec<TrendRow>> {
    let cases = suite.cases()?;
    let mut rows: Vec<TrendRow> = counts
        .iter()
        .map(|&n| TrendRow {
            n_candidates: n,
            mean_rms: 0.0,
            case_rms: Vec::with_capacity(cases.len()),
        })
        .collect();
    for case in &cases {
        let index = NeighborIndex::build(&case.noisy)?;
        let noise_k = params.noise_k.min(case.noisy.len() - 1);
        let f = cloud_noise_scale(&index, noise_k)?.cloud_f;
        let gt = case.clean.normals().expect("synthetic shapes carry normals");
        for row in &mut rows {
            let mut p = params.clone();
            p.sampling.n_candidates = row.n_candidates;
            let est = estimate_all_at_level(&case.noisy, &index, f, &p)?;
            row.case_rms.push(rms_angle(est.cloud.normals().unwrap_or_default(), gt)?);
        }
    }
    for row in &mut rows {
        row.mean_rms = row.case_rms.iter().sum::<f64>() / row.case_rms.len().max(1) as f64;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_shape() {
        let suite = SuiteConfig {
            n_points: 50,
            ..SuiteConfig::default()
        };
        let cases = suite.cases().unwrap();
        assert_eq!(cases.len(), 45);
        assert!(cases.iter().all(|c| c.clean.normals().is_some()));
    }

    #[test]
    fn tiny_trend_runs() {
        let suite = SuiteConfig {
            shapes: vec![ShapeKind::Plane],
            noise_pcts: vec![0.0],
            seeds: vec![1],
            n_points: 200,
        };
        let rows = candidate_trend(&suite, &[10, 20], &EstimationParams::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.mean_rms < 0.1));
    }
}
