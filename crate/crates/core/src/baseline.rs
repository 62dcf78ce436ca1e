//! Classic PCA normals: smallest-eigenvalue direction of each point's local
//! covariance.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::Result;
use crate::geom::{canonical_unit, covariance, eigen_sym3, UnitVec3};
use crate::knn::NeighborIndex;

pub fn pca_normal(index: &NeighborIndex, t: usize, k: usize) -> Result<UnitVec3> {
    let hits = index.knn(t, k)?;
    let mut pts = Vec::with_capacity(k + 1);
    pts.push(*index.point(t));
    pts.extend(hits.iter().map(|n| *index.point(n.index)));
    let (cov, _) = covariance(&pts);
    Ok(canonical_unit(&eigen_sym3(&cov).smallest()))
}

pub fn pca_baseline_with_index(cloud: &PointCloud, index: &NeighborIndex, k: usize) -> Result<PointCloud> {
    let normals = (0..cloud.len())
        .into_par_iter()
        .map(|t| pca_normal(index, t, k))
        .collect::<Result<Vec<_>>>()?;
    let mut out = cloud.clone();
    out.set_normals(normals)?;
    Ok(out)
}

pub fn pca_baseline(cloud: &PointCloud, k: usize) -> Result<PointCloud> {
    let index = NeighborIndex::build(cloud)?;
    pca_baseline_with_index(cloud, &index, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::geom::{angle_unoriented, Point3, Vec3};
    use crate::metrics::rms_angle;
    use crate::synth::{add_noise, gen_shape, NoiseSpec, ShapeKind, ShapeSpec};

    #[test]
    fn exact_plane() {
        let cloud = gen_shape(&ShapeSpec::new(ShapeKind::Plane, 200, 1)).unwrap();
        let out = pca_baseline(&cloud, 16).unwrap();
        for n in out.normals().unwrap() {
            assert!(angle_unoriented(n, &Vec3::z_axis()) < 1e-6);
        }
    }

    #[test]
    fn noisy_sphere_regression_anchor() {
        let clean = gen_shape(&ShapeSpec::new(ShapeKind::Sphere, 5000, 2)).unwrap();
        let noisy = add_noise(&clean, &NoiseSpec::gaussian(0.5, 3)).unwrap();
        let out = pca_baseline(&noisy, 64).unwrap();
        let rms = rms_angle(out.normals().unwrap(), clean.normals().unwrap()).unwrap();
        assert!(rms < 10.0, "rms = {rms}");
    }

    #[test]
    fn k_out_of_range() {
        let cloud = PointCloud::new(vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)]).unwrap();
        assert!(matches!(pca_baseline(&cloud, 2), Err(Error::KOutOfRange { .. })));
    }
}
