//! Analytic test shapes with ground-truth normals, Gaussian perturbation, and
//! exact point-to-surface distances.

use std::fmt;
use std::str::FromStr;

use nalgebra::Unit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::{Point3, UnitVec3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeKind {
    /// Square of side `extent` in the z = 0 plane.
    Plane,
    /// Radius `extent / 2`.
    Sphere,
    /// Lateral surface, radius `extent / 2`, height `extent`, axis z.
    Cylinder,
    /// Surface of an axis-aligned cube of side `extent`.
    Cube,
    /// Two `extent × extent` half-planes sharing the y axis, the second
    /// rotated by `dihedral_deg` about it.
    Wedge { dihedral_deg: f64 },
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeKind::Plane => write!(f, "plane"),
            ShapeKind::Sphere => write!(f, "sphere"),
            ShapeKind::Cylinder => write!(f, "cylinder"),
            ShapeKind::Cube => write!(f, "cube"),
            ShapeKind::Wedge { dihedral_deg } => write!(f, "wedge{dihedral_deg}"),
        }
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    /// Accepts `plane`, `sphere`, `cylinder`, `cube`, `wedge` (90°) and
    /// `wedge<deg>` / `wedge:<deg>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "plane" => Ok(ShapeKind::Plane),
            "sphere" => Ok(ShapeKind::Sphere),
            "cylinder" => Ok(ShapeKind::Cylinder),
            "cube" => Ok(ShapeKind::Cube),
            "wedge" => Ok(ShapeKind::Wedge { dihedral_deg: 90.0 }),
            other => {
                let deg = other
                    .strip_prefix("wedge")
                    .map(|r| r.trim_start_matches(':'))
                    .and_then(|r| r.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidSpec(format!("unknown shape '{s}'")))?;
                Ok(ShapeKind::Wedge { dihedral_deg: deg })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub n_points: usize,
    pub extent: f64,
    pub seed: u64,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, n_points: usize, seed: u64) -> Self {
        Self {
            kind,
            n_points,
            extent: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 10 {
            return Err(Error::InvalidSpec("n_points must be at least 10".into()));
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(Error::InvalidSpec("extent must be positive".into()));
        }
        if let ShapeKind::Wedge { dihedral_deg } = self.kind {
            if !(dihedral_deg > 0.0 && dihedral_deg < 180.0) {
                return Err(Error::InvalidSpec(format!(
                    "dihedral angle {dihedral_deg} outside (0, 180)"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    /// Standard deviation in percent of the bounding-box diagonal.
    pub std_pct_bbox_diag: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn gaussian(std_pct_bbox_diag: f64, seed: u64) -> Self {
        Self {
            model: NoiseModel::Gaussian,
            std_pct_bbox_diag,
            seed,
        }
    }
}

/// Axis-aligned or rotated rectangle `origin + s·u + t·v`, `s ∈ [0, a]`,
/// `t ∈ [0, b]` with `u`, `v` orthonormal.
#[derive(Debug, Clone, Copy)]
struct Rect {
    origin: Point3,
    u: Vec3,
    v: Vec3,
    a: f64,
    b: f64,
    normal: Vec3,
}

impl Rect {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point3 {
        self.origin + self.u * rng.random_range(0.0..=self.a) + self.v * rng.random_range(0.0..=self.b)
    }

    fn distance(&self, p: &Point3) -> f64 {
        let d = p - self.origin;
        let s = d.dot(&self.u).clamp(0.0, self.a);
        let t = d.dot(&self.v).clamp(0.0, self.b);
        (p - (self.origin + self.u * s + self.v * t)).norm()
    }
}

fn cube_faces(extent: f64) -> Vec<Rect> {
    let h = extent / 2.0;
    let mut faces = Vec::with_capacity(6);
    for axis in 0..3 {
        let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
        let u = Vec3::ith(i, 1.0);
        let v = Vec3::ith(j, 1.0);
        for sign in [1.0, -1.0] {
            let mut origin = Vec3::from_element(-h);
            origin[axis] = sign * h;
            faces.push(Rect {
                origin: Point3::from(origin),
                u,
                v,
                a: extent,
                b: extent,
                normal: Vec3::ith(axis, sign),
            });
        }
    }
    faces
}

fn wedge_faces(extent: f64, dihedral_deg: f64) -> [Rect; 2] {
    let phi = dihedral_deg.to_radians();
    let origin = Point3::new(0.0, -extent / 2.0, 0.0);
    let y = Vec3::y();
    [
        Rect {
            origin,
            u: Vec3::x(),
            v: y,
            a: extent,
            b: extent,
            normal: Vec3::z(),
        },
        Rect {
            origin,
            u: Vec3::new(phi.cos(), 0.0, phi.sin()),
            v: y,
            a: extent,
            b: extent,
            normal: Vec3::new(-phi.sin(), 0.0, phi.cos()),
        },
    ]
}

fn sample_faces<R: Rng + ?Sized>(faces: &[Rect], n: usize, rng: &mut R) -> (Vec<Point3>, Vec<UnitVec3>) {
    // All faces of the supported shapes have equal area.
    (0..n)
        .map(|_| {
            let f = &faces[rng.random_range(0..faces.len())];
            (f.sample(rng), Unit::new_normalize(f.normal))
        })
        .unzip()
}

/// Uniform surface sample with analytic normals. Points on a piecewise-flat
/// shape carry the normal of the face they were drawn from.
pub fn gen_shape(spec: &ShapeSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let e = spec.extent;
    let n = spec.n_points;
    let (points, normals): (Vec<Point3>, Vec<UnitVec3>) = match spec.kind {
        ShapeKind::Plane => (0..n)
            .map(|_| {
                let p = Point3::new(rng.random_range(-e / 2.0..=e / 2.0), rng.random_range(-e / 2.0..=e / 2.0), 0.0);
                (p, Vec3::z_axis())
            })
            .unzip(),
        ShapeKind::Sphere => {
            let r = e / 2.0;
            (0..n)
                .map(|_| {
                    let dir = loop {
                        let v = Vec3::new(
                            StandardNormal.sample(&mut rng),
                            StandardNormal.sample(&mut rng),
                            StandardNormal.sample(&mut rng),
                        );
                        if v.norm() > 1e-12 {
                            break Unit::new_normalize(v);
                        }
                    };
                    (Point3::from(dir.into_inner() * r), dir)
                })
                .unzip()
        }
        ShapeKind::Cylinder => {
            let r = e / 2.0;
            (0..n)
                .map(|_| {
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    let z = rng.random_range(-e / 2.0..=e / 2.0);
                    let dir = Vec3::new(a.cos(), a.sin(), 0.0);
                    (Point3::new(r * dir.x, r * dir.y, z), Unit::new_normalize(dir))
                })
                .unzip()
        }
        ShapeKind::Cube => sample_faces(&cube_faces(e), n, &mut rng),
        ShapeKind::Wedge { dihedral_deg } => sample_faces(&wedge_faces(e, dihedral_deg), n, &mut rng),
    };
    PointCloud::with_normals(points, normals)
}

/// Adds i.i.d. isotropic Gaussian offsets with standard deviation
/// `std_pct_bbox_diag / 100 × bbox diagonal`. Normals are left untouched.
pub fn add_noise(cloud: &PointCloud, spec: &NoiseSpec) -> Result<PointCloud> {
    let std = spec.std_pct_bbox_diag / 100.0 * cloud.bbox_diagonal();
    if !(std > 0.0) {
        return Ok(cloud.clone());
    }
    let g = Normal::new(0.0, std).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let points = cloud
        .points()
        .iter()
        .map(|p| p + Vec3::new(g.sample(&mut rng), g.sample(&mut rng), g.sample(&mut rng)))
        .collect();
    cloud.with_points(points)
}

/// Exact distance from `p` to the clean surface of `spec`.
pub fn surface_distance(p: &Point3, spec: &ShapeSpec) -> f64 {
    let e = spec.extent;
    match spec.kind {
        ShapeKind::Plane => p.z.abs(),
        ShapeKind::Sphere => (p.coords.norm() - e / 2.0).abs(),
        ShapeKind::Cylinder => {
            let radial = (p.x.hypot(p.y) - e / 2.0).abs();
            let over = p.z.abs() - e / 2.0;
            if over <= 0.0 {
                radial
            } else {
                radial.hypot(over)
            }
        }
        ShapeKind::Cube => cube_faces(e)
            .iter()
            .map(|f| f.distance(p))
            .fold(f64::INFINITY, f64::min),
        ShapeKind::Wedge { dihedral_deg } => wedge_faces(e, dihedral_deg)
            .iter()
            .map(|f| f.distance(p))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Mean absolute point-to-surface distance.
pub fn p2s(cloud: &PointCloud, surface: &ShapeSpec) -> Result<f64> {
    surface.validate()?;
    let sum: f64 = cloud.points().iter().map(|p| surface_distance(p, surface)).sum();
    Ok(sum / cloud.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::angle_unoriented;

    const KINDS: [ShapeKind; 6] = [
        ShapeKind::Plane,
        ShapeKind::Sphere,
        ShapeKind::Cylinder,
        ShapeKind::Cube,
        ShapeKind::Wedge { dihedral_deg: 90.0 },
        ShapeKind::Wedge { dihedral_deg: 135.0 },
    ];

    #[test]
    fn plane_normals_equal() {
        let c = gen_shape(&ShapeSpec::new(ShapeKind::Plane, 100, 1)).unwrap();
        assert!(c.normals().unwrap().iter().all(|n| *n == Vec3::z_axis()));
    }

    #[test]
    fn sphere_normals_are_radial() {
        let c = gen_shape(&ShapeSpec::new(ShapeKind::Sphere, 500, 2)).unwrap();
        for (p, n) in c.points().iter().zip(c.normals().unwrap()) {
            assert!((p.coords / 0.5 - n.into_inner()).norm() < 1e-12);
        }
    }

    #[test]
    fn wedge_has_two_perpendicular_normals() {
        let c = gen_shape(&ShapeSpec::new(ShapeKind::Wedge { dihedral_deg: 90.0 }, 300, 3)).unwrap();
        let mut distinct: Vec<UnitVec3> = Vec::new();
        for n in c.normals().unwrap() {
            if !distinct.iter().any(|d| d == n) {
                distinct.push(*n);
            }
        }
        assert_eq!(distinct.len(), 2);
        assert!((angle_unoriented(&distinct[0], &distinct[1]) - 90.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_specs() {
        assert!(gen_shape(&ShapeSpec::new(ShapeKind::Plane, 5, 0)).is_err());
        assert!(gen_shape(&ShapeSpec::new(ShapeKind::Wedge { dihedral_deg: 180.0 }, 50, 0)).is_err());
        let mut s = ShapeSpec::new(ShapeKind::Cube, 50, 0);
        s.extent = 0.0;
        assert!(gen_shape(&s).is_err());
    }

    #[test]
    fn parse_shape_names() {
        assert_eq!("plane".parse::<ShapeKind>().unwrap(), ShapeKind::Plane);
        assert_eq!("wedge".parse::<ShapeKind>().unwrap(), ShapeKind::Wedge { dihedral_deg: 90.0 });
        assert_eq!("wedge:120".parse::<ShapeKind>().unwrap(), ShapeKind::Wedge { dihedral_deg: 120.0 });
        assert!("torus".parse::<ShapeKind>().is_err());
        for k in KINDS {
            assert_eq!(k.to_string().parse::<ShapeKind>().unwrap(), k);
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let c = gen_shape(&ShapeSpec::new(ShapeKind::Cube, 100, 4)).unwrap();
        assert_eq!(add_noise(&c, &NoiseSpec::gaussian(0.0, 9)).unwrap(), c);
    }

    #[test]
    fn noise_statistics() {
        let c = gen_shape(&ShapeSpec::new(ShapeKind::Plane, 50_000, 5)).unwrap();
        let noisy = add_noise(&c, &NoiseSpec::gaussian(1.0, 6)).unwrap();
        let target = 0.01 * c.bbox_diagonal();
        let n = c.len() as f64;
        for axis in 0..3 {
            let offs: Vec<f64> = c
                .points()
                .iter()
                .zip(noisy.points())
                .map(|(a, b)| b[axis] - a[axis])
                .collect();
            let mean = offs.iter().sum::<f64>() / n;
            let std = (offs.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!((std - target).abs() < 0.05 * target, "axis {axis} std {std}");
            assert!(mean.abs() < 3.0 * target / n.sqrt(), "axis {axis} mean {mean}");
        }
        assert_eq!(noisy.normals(), c.normals());
    }

    #[test]
    fn clean_shapes_have_zero_p2s() {
        for kind in KINDS {
            let spec = ShapeSpec::new(kind, 2000, 7);
            let c = gen_shape(&spec).unwrap();
            assert!(p2s(&c, &spec).unwrap() < 1e-12, "{kind}");
        }
    }

    #[test]
    fn p2s_closed_forms() {
        let plane = ShapeSpec::new(ShapeKind::Plane, 10, 0);
        let one = PointCloud::new(vec![Point3::new(0.1, 0.2, 0.7)]).unwrap();
        assert!((p2s(&one, &plane).unwrap() - 0.7).abs() < 1e-15);

        let cube = ShapeSpec::new(ShapeKind::Cube, 10, 0);
        let corner = Point3::new(1.5, 1.5, 1.5);
        assert!((surface_distance(&corner, &cube) - 3f64.sqrt()).abs() < 1e-12);
        assert!((surface_distance(&Point3::new(0.1, 0.0, 0.0), &cube) - 0.4).abs() < 1e-12);

        let cyl = ShapeSpec::new(ShapeKind::Cylinder, 10, 0);
        assert!((surface_distance(&Point3::new(1.5, 0.0, 0.0), &cyl) - 1.0).abs() < 1e-12);
        assert!((surface_distance(&Point3::new(0.5, 0.0, 1.5), &cyl) - 1.0).abs() < 1e-12);
        assert!((surface_distance(&Point3::new(0.0, 0.0, 0.0), &cyl) - 0.5).abs() < 1e-12);

        let sphere = ShapeSpec::new(ShapeKind::Sphere, 10, 0);
        assert!((surface_distance(&Point3::origin(), &sphere) - 0.5).abs() < 1e-15);

        let wedge = ShapeSpec::new(ShapeKind::Wedge { dihedral_deg: 90.0 }, 10, 0);
        assert!((surface_distance(&Point3::new(0.5, 0.0, 0.5), &wedge) - 0.5).abs() < 1e-12);
        assert!((surface_distance(&Point3::new(-1.0, 0.0, -1.0), &wedge) - 2f64.sqrt()).abs() < 1e-12);
    }
}
