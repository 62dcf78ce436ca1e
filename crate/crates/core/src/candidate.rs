//! Random hypothesis generation and neighbor-consensus scoring.
//!
//! Normal candidates are planes fit to `k_s` random neighbors; position
//! candidates are centroids of four random neighbors. Both are scored by a
//! Gaussian kernel sum over the neighborhood, and the lowest-scoring fraction
//! is dropped before mode determination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{centroid, fit_plane, point_plane_distance, Plane, Point3, UnitVec3};

/// Deterministic generator used for all candidate sampling.
pub type CandidateRng = ChaCha8Rng;

/// Points averaged into one position candidate.
pub const POSITION_SAMPLE_SIZE: usize = 4;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator for point `t`: seeded with `seed ^ hash(t)`, so the stream of
/// every point is independent of scheduling order.
pub fn point_rng(seed: u64, t: usize) -> CandidateRng {
    CandidateRng::seed_from_u64(seed ^ splitmix64(t as u64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingParams {
    pub k_s: usize,
    pub n_candidates: usize,
    pub rejection_fraction_normals: f64,
    pub rejection_fraction_positions: f64,
    pub max_resample_attempts: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            k_s: 4,
            n_candidates: 100,
            rejection_fraction_normals: 0.20,
            rejection_fraction_positions: 0.10,
            max_resample_attempts: 20,
        }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_s < 3 {
            return Err(Error::InvalidParams("k_s must be at least 3".into()));
        }
        if self.n_candidates == 0 {
            return Err(Error::InvalidParams("n_candidates must be positive".into()));
        }
        for f in [self.rejection_fraction_normals, self.rejection_fraction_positions] {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::InvalidParams(format!(
                    "rejection fraction {f} outside [0, 1)"
                )));
            }
        }
        if self.max_resample_attempts == 0 {
            return Err(Error::InvalidParams(
                "max_resample_attempts must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub trait Scored {
    fn score(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePlane {
    pub plane: Plane,
    pub score: Option<f64>,
}

impl CandidatePlane {
    pub fn normal(&self) -> UnitVec3 {
        self.plane.normal
    }
}

impl Scored for CandidatePlane {
    fn score(&self) -> f64 {
        self.score.unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionCandidate {
    pub q: Point3,
    pub score: Option<f64>,
}

impl Scored for PositionCandidate {
    fn score(&self) -> f64 {
        self.score.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Fills `out` with `k` distinct indices drawn uniformly from `0..n`.
fn draw_distinct<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, out: &mut Vec<usize>) {
    out.clear();
    while out.len() < k {
        let i = rng.random_range(0..n);
        if !out.contains(&i) {
            out.push(i);
        }
    }
}

pub fn sample_normal_candidates<R: Rng + ?Sized>(
    neighbors: &[Point3],
    params: &SamplingParams,
    rng: &mut R,
) -> Result<Vec<CandidatePlane>> {
    if neighbors.len() < params.k_s {
        return Err(Error::TooFewNeighbors {
            needed: params.k_s,
            got: neighbors.len(),
        });
    }
    let mut picks = Vec::with_capacity(params.k_s);
    let mut sample = Vec::with_capacity(params.k_s);
    let mut out = Vec::with_capacity(params.n_candidates);
    for _ in 0..params.n_candidates {
        let mut plane = None;
        for _ in 0..params.max_resample_attempts {
            draw_distinct(rng, neighbors.len(), params.k_s, &mut picks);
            sample.clear();
            sample.extend(picks.iter().map(|&i| neighbors[i]));
            match fit_plane(&sample) {
                Ok(p) => {
                    plane = Some(p);
                    break;
                }
                Err(Error::DegenerateSample) => continue,
                Err(e) => return Err(e),
            }
        }
        let plane = plane.ok_or(Error::PersistentDegeneracy {
            attempts: params.max_resample_attempts,
        })?;
        out.push(CandidatePlane { plane, score: None });
    }
    Ok(out)
}

/// Kernel consensus of the neighborhood with a plane: `Σ exp(−d²/σ²)`.
pub fn score_candidate(neighbors: &[Point3], plane: &Plane, sigma: f64) -> f64 {
    let inv = 1.0 / (sigma * sigma);
    neighbors
        .iter()
        .map(|p| {
            let d = point_plane_distance(p, plane);
            (-d * d * inv).exp()
        })
        .sum()
}

/// One percent of the neighborhood radius (distance to the farthest neighbor).
pub fn rejection_sigma(neighbors: &[Point3], query: &Point3) -> f64 {
    let radius = neighbors
        .iter()
        .map(|p| (p - query).norm())
        .fold(0.0, f64::max);
    0.01 * radius
}

pub fn score_all(neighbors: &[Point3], candidates: &mut [CandidatePlane], sigma: f64) {
    for c in candidates {
        c.score = Some(score_candidate(neighbors, &c.plane, sigma));
    }
}

fn rejected_count(n: usize, fraction: f64) -> usize {
    // Small epsilon absorbs products like 0.3 * 10 = 2.9999999999999996.
    ((fraction * n as f64) + 1e-9).floor() as usize
}

/// Orders candidates by descending score (stable on ties) and drops the
/// lowest `floor(fraction · n)`.
pub fn reject_candidates<C: Scored>(mut candidates: Vec<C>, fraction: f64) -> Vec<C> {
    sort_by_score(&mut candidates);
    let drop = rejected_count(candidates.len(), fraction).min(candidates.len());
    candidates.truncate(candidates.len() - drop);
    candidates
}

/// Stable sort by descending score.
pub fn sort_by_score<C: Scored>(candidates: &mut [C]) {
    candidates.sort_by(|a, b| b.score().total_cmp(&a.score()));
}

pub fn sample_position_candidates<R: Rng + ?Sized>(
    neighbors: &[Point3],
    params: &SamplingParams,
    rng: &mut R,
) -> Result<Vec<PositionCandidate>> {
    if neighbors.len() < POSITION_SAMPLE_SIZE {
        return Err(Error::TooFewNeighbors {
            needed: POSITION_SAMPLE_SIZE,
            got: neighbors.len(),
        });
    }
    let mut picks = Vec::with_capacity(POSITION_SAMPLE_SIZE);
    let mut sample = Vec::with_capacity(POSITION_SAMPLE_SIZE);
    let out = (0..params.n_candidates)
        .map(|_| {
            draw_distinct(rng, neighbors.len(), POSITION_SAMPLE_SIZE, &mut picks);
            sample.clear();
            sample.extend(picks.iter().map(|&i| neighbors[i]));
            PositionCandidate {
                q: centroid(&sample),
                score: None,
            }
        })
        .collect();
    Ok(out)
}

/// `Σ exp(−‖p − q‖²/σ²)` over the neighborhood.
pub fn score_position_candidate(neighbors: &[Point3], q: &Point3, sigma: f64) -> f64 {
    let inv = 1.0 / (sigma * sigma);
    neighbors
        .iter()
        .map(|p| (-(p - q).norm_squared() * inv).exp())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{eigen_sym3, angle_unoriented, SymMat3, Vec3};
    use rand_distr::{Distribution, Normal};

    fn plane_patch(rng: &mut CandidateRng, n: usize, noise: f64) -> Vec<Point3> {
        let g = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
        (0..n)
            .map(|_| {
                let z = if noise > 0.0 { g.sample(rng) } else { 0.0 };
                Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), z)
            })
            .collect()
    }

    fn principal_direction(candidates: &[CandidatePlane]) -> Vec3 {
        let mut m = SymMat3::zero();
        for c in candidates {
            m.add_weighted_outer(&c.normal(), 1.0);
        }
        eigen_sym3(&m).largest()
    }

    #[test]
    fn exact_plane_candidates_are_exact() {
        let mut rng = point_rng(3, 0);
        let pts = plane_patch(&mut rng, 64, 0.0);
        let cands = sample_normal_candidates(&pts, &SamplingParams::default(), &mut rng).unwrap();
        assert_eq!(cands.len(), 100);
        for c in &cands {
            assert!((c.normal().into_inner() - Vec3::z()).norm() < 1e-9);
        }
    }

    #[test]
    fn noisy_plane_candidates_center_on_true_normal() {
        let mut rng = point_rng(4, 0);
        let pts = plane_patch(&mut rng, 256, 0.01);
        let params = SamplingParams {
            n_candidates: 10_000,
            ..SamplingParams::default()
        };
        let cands = sample_normal_candidates(&pts, &params, &mut rng).unwrap();
        let d = nalgebra::Unit::new_normalize(principal_direction(&cands));
        assert!(angle_unoriented(&d, &Vec3::z_axis()) < 2.0);
    }

    #[test]
    fn collinear_neighbors_never_yield_a_plane() {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        let params = SamplingParams {
            k_s: 3,
            ..SamplingParams::default()
        };
        let r = sample_normal_candidates(&pts, &params, &mut point_rng(0, 0));
        assert!(matches!(r, Err(Error::PersistentDegeneracy { attempts: 20 })));
    }

    #[test]
    fn too_few_neighbors() {
        let pts = [Point3::origin(); 3];
        let r = sample_normal_candidates(&pts, &SamplingParams::default(), &mut point_rng(0, 0));
        assert!(matches!(r, Err(Error::TooFewNeighbors { needed: 4, got: 3 })));
        let r = sample_position_candidates(&pts, &SamplingParams::default(), &mut point_rng(0, 0));
        assert!(matches!(r, Err(Error::TooFewNeighbors { needed: 4, got: 3 })));
    }

    #[test]
    fn same_seed_same_candidates() {
        let mut rng = point_rng(8, 1);
        let pts = plane_patch(&mut rng, 50, 0.05);
        let a = sample_normal_candidates(&pts, &SamplingParams::default(), &mut point_rng(9, 2)).unwrap();
        let b = sample_normal_candidates(&pts, &SamplingParams::default(), &mut point_rng(9, 2)).unwrap();
        assert_eq!(a, b);
        let c = sample_normal_candidates(&pts, &SamplingParams::default(), &mut point_rng(9, 3)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scores_on_plane_and_one_off() {
        let z0 = Plane::new(Vec3::z_axis(), Point3::origin());
        let on: Vec<Point3> = (0..10).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!((score_candidate(&on, &z0, 0.3) - 10.0).abs() < 1e-12);

        let sigma = 0.25;
        let mut pts = on[..9].to_vec();
        pts.push(Point3::new(0.0, 0.0, sigma));
        let s = score_candidate(&pts, &z0, sigma);
        assert!((s - (9.0 + (-1f64).exp())).abs() < 1e-12);
        assert!((s - 9.3679).abs() < 1e-4);
    }

    #[test]
    fn parallel_planes_score() {
        let sigma = 0.01;
        let mut pts = Vec::new();
        for i in 0..50 {
            pts.push(Point3::new(i as f64 * 0.1, 0.0, 0.0));
            pts.push(Point3::new(i as f64 * 0.1, 0.3, 100.0 * sigma));
        }
        let s = score_candidate(&pts, &Plane::new(Vec3::z_axis(), Point3::origin()), sigma);
        // Direct summation: 50 ones plus 50 terms of exp(-10000).
        let direct: f64 = 50.0 + 50.0 * (-10_000f64).exp();
        assert!(s > 50.0 - 1e-12 && s < 50.0 + 1e-6);
        assert_eq!(s, direct);
    }

    #[test]
    fn sigma_is_one_percent_of_radius() {
        let q = Point3::origin();
        let pts = [Point3::new(0.5, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        assert!((rejection_sigma(&pts, &q) - 0.01).abs() < 1e-15);
        let ring = [Point3::new(2.0, 0.0, 0.0), Point3::new(0.0, -2.0, 0.0)];
        assert!((rejection_sigma(&ring, &q) - 0.02).abs() < 1e-15);
        assert!((rejection_sigma(&[Point3::new(0.0, 0.0, 0.5)], &q) - 0.005).abs() < 1e-15);
    }

    fn scored(scores: &[f64]) -> Vec<PositionCandidate> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| PositionCandidate {
                q: Point3::new(i as f64, 0.0, 0.0),
                score: Some(s),
            })
            .collect()
    }

    #[test]
    fn rejection_drops_lowest_fraction() {
        let cands = scored(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let kept = reject_candidates(cands.clone(), 0.2);
        let s: Vec<f64> = kept.iter().map(|c| c.score()).collect();
        assert_eq!(s, vec![10.0, 9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0]);
        let all = reject_candidates(cands, 0.0);
        assert_eq!(all.len(), 10);
    }

    #[test]
    fn rejection_is_stable_on_ties() {
        let kept = reject_candidates(scored(&[2.0, 5.0, 2.0, 5.0, 1.0]), 0.2);
        let xs: Vec<f64> = kept.iter().map(|c| c.q.x).collect();
        assert_eq!(xs, vec![1.0, 3.0, 0.0, 2.0]);
        assert_eq!(rejected_count(10, 0.3), 3);
        assert_eq!(rejected_count(9, 0.2), 1);
    }

    #[test]
    fn identical_neighbors_give_identical_centroids() {
        let p = Point3::new(1.0, -2.0, 0.5);
        let cands =
            sample_position_candidates(&[p; 10], &SamplingParams::default(), &mut point_rng(1, 1)).unwrap();
        assert_eq!(cands.len(), 100);
        assert!(cands.iter().all(|c| c.q == p));
    }

    #[test]
    fn four_neighbors_give_one_centroid() {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let c0 = centroid(&pts);
        let cands =
            sample_position_candidates(&pts, &SamplingParams::default(), &mut point_rng(2, 2)).unwrap();
        assert!(cands.iter().all(|c| (c.q - c0).norm() < 1e-15));
    }

    #[test]
    fn symmetric_neighbors_average_to_origin() {
        let mut rng = point_rng(5, 5);
        let half: Vec<Point3> = (0..32)
            .map(|_| Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let pts: Vec<Point3> = half.iter().flat_map(|p| [*p, Point3::from(-p.coords)]).collect();
        let params = SamplingParams {
            n_candidates: 10_000,
            ..SamplingParams::default()
        };
        let cands = sample_position_candidates(&pts, &params, &mut rng).unwrap();
        let n = cands.len() as f64;
        let mean = cands.iter().fold(Vec3::zeros(), |a, c| a + c.q.coords) / n;
        // Per-axis std of a 4-point centroid, estimated from the candidates.
        for axis in 0..3 {
            let var = cands.iter().map(|c| (c.q[axis] - mean[axis]).powi(2)).sum::<f64>() / n;
            assert!(mean[axis].abs() < 3.0 * (var / n).sqrt(), "axis {axis}");
        }
        let (lo, hi) = pts.iter().fold((pts[0], pts[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        for c in &cands {
            assert!(c.q >= lo && c.q <= hi);
        }
    }

    #[test]
    fn position_scores() {
        let q = Point3::new(0.3, 0.3, 0.3);
        assert!((score_position_candidate(&[q; 7], &q, 0.1) - 7.0).abs() < 1e-15);

        let sigma = 0.1;
        let pts = [
            Point3::new(0.3 + sigma, 0.3, 0.3),
            Point3::new(0.3 + 20.0 * sigma, 0.3, 0.3),
            Point3::new(0.3, 0.3 - 25.0 * sigma, 0.3),
        ];
        let s = score_position_candidate(&pts, &q, sigma);
        assert!((s - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn far_position_scores_below_cluster_centroid() {
        let mut rng = point_rng(6, 0);
        let cluster: Vec<Point3> = (0..40)
            .map(|_| Point3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)))
            .collect();
        let sigma = 0.05;
        let at_center = score_position_candidate(&cluster, &centroid(&cluster), sigma);
        let far = score_position_candidate(&cluster, &Point3::new(0.5, 0.0, 0.0), sigma);
        // Direct summation oracle.
        let direct: f64 = cluster
            .iter()
            .map(|p| (-(p - Point3::new(0.5, 0.0, 0.0)).norm_squared() / (sigma * sigma)).exp())
            .sum();
        assert!((far - direct).abs() <= 1e-12 * direct);
        assert!(far < at_center);
    }

    proptest::proptest! {
        #[test]
        fn score_is_bounded_and_monotone(seed in 0u64..500, sigma in 0.01f64..1.0, j in 0usize..30) {
            let mut rng = point_rng(seed, 0);
            let pts = plane_patch(&mut rng, 30, 0.1);
            let plane = Plane::new(Vec3::z_axis(), Point3::origin());
            let s = score_candidate(&pts, &plane, sigma);
            proptest::prop_assert!(s > 0.0 && s <= pts.len() as f64);
            let mut moved = pts.clone();
            let dz = moved[j].z.signum().max(0.0) * 2.0 - 1.0;
            moved[j].z += 0.1 * dz;
            let s2 = score_candidate(&moved, &plane, sigma);
            // Strictly farther from the plane, strictly lower score unless
            // the term is below the rounding of the sum.
            proptest::prop_assert!(s2 <= s);
            if (-(pts[j].z.abs() / sigma).powi(2)).exp() > 1e-12 * s {
                proptest::prop_assert!(s2 < s);
            }
        }

        #[test]
        fn rejection_keeps_top(scores in proptest::collection::vec(0.0f64..10.0, 1..50), frac in 0.0f64..0.99) {
            let cands = scored(&scores);
            let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let kept = reject_candidates(cands, frac);
            proptest::prop_assert!(!kept.is_empty());
            proptest::prop_assert_eq!(kept[0].score(), best);
            proptest::prop_assert!(kept.windows(2).all(|w| w[0].score() >= w[1].score()));
        }
    }

    #[test]
    fn candidate_normals_are_canonical() {
        let mut rng = point_rng(12, 0);
        let pts = plane_patch(&mut rng, 40, 0.2);
        let cands = sample_normal_candidates(&pts, &SamplingParams::default(), &mut rng).unwrap();
        for c in &cands {
            let n = c.normal().into_inner();
            assert_eq!(crate::geom::canonicalize(&n), n);
            assert!((n.norm() - 1.0).abs() < 1e-9);
        }
    }
}
