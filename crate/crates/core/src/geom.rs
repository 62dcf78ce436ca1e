//! Geometry primitives shared by every stage: symmetric 3×3 matrices and
//! their eigen-decomposition, covariance, total-least-squares plane fitting,
//! point-plane distances and unoriented angles.

use nalgebra::{Matrix3, SymmetricEigen, Unit, Vector3};

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = Vector3<f64>;
pub type UnitVec3 = Unit<Vector3<f64>>;

/// Relative threshold on λ2/λ3 below which a sample is rank deficient.
const DEGENERACY_RATIO: f64 = 1e-12;

/// Symmetric 3×3 matrix stored as its six independent entries.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SymMat3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

impl SymMat3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::diagonal(1.0, 1.0, 1.0)
    }

    pub fn diagonal(a: f64, b: f64, c: f64) -> Self {
        Self {
            xx: a,
            yy: b,
            zz: c,
            ..Self::default()
        }
    }

    /// `w · v vᵀ`
    pub fn weighted_outer(v: &Vec3, w: f64) -> Self {
        Self {
            xx: w * v.x * v.x,
            xy: w * v.x * v.y,
            xz: w * v.x * v.z,
            yy: w * v.y * v.y,
            yz: w * v.y * v.z,
            zz: w * v.z * v.z,
        }
    }

    pub fn add_weighted_outer(&mut self, v: &Vec3, w: f64) {
        self.xx += w * v.x * v.x;
        self.xy += w * v.x * v.y;
        self.xz += w * v.x * v.z;
        self.yy += w * v.y * v.y;
        self.yz += w * v.y * v.z;
        self.zz += w * v.z * v.z;
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            xx: self.xx * s,
            xy: self.xy * s,
            xz: self.xz * s,
            yy: self.yy * s,
            yz: self.yz * s,
            zz: self.zz * s,
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn is_zero(&self) -> bool {
        [self.xx, self.xy, self.xz, self.yy, self.yz, self.zz]
            .iter()
            .all(|&v| v == 0.0)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.xx * self.xx
            + self.yy * self.yy
            + self.zz * self.zz
            + 2.0 * (self.xy * self.xy + self.xz * self.xz + self.yz * self.yz))
            .sqrt()
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.xx, self.xy, self.xz, //
            self.xy, self.yy, self.yz, //
            self.xz, self.yz, self.zz,
        )
    }

    /// Symmetrizes `m` by averaging it with its transpose.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self {
            xx: m[(0, 0)],
            xy: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            xz: 0.5 * (m[(0, 2)] + m[(2, 0)]),
            yy: m[(1, 1)],
            yz: 0.5 * (m[(1, 2)] + m[(2, 1)]),
            zz: m[(2, 2)],
        }
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        Vec3::new(
            self.xx * v.x + self.xy * v.y + self.xz * v.z,
            self.xy * v.x + self.yy * v.y + self.yz * v.z,
            self.xz * v.x + self.yz * v.y + self.zz * v.z,
        )
    }
}

impl std::ops::Add for SymMat3 {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            xx: self.xx + o.xx,
            xy: self.xy + o.xy,
            xz: self.xz + o.xz,
            yy: self.yy + o.yy,
            yz: self.yz + o.yz,
            zz: self.zz + o.zz,
        }
    }
}

impl std::ops::AddAssign for SymMat3 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Eigen-decomposition with eigenvalues sorted ascending; `vectors[i]` pairs
/// with `values[i]`.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen {
    pub values: [f64; 3],
    pub vectors: [Vec3; 3],
}

impl SymEigen {
    pub fn smallest(&self) -> Vec3 {
        self.vectors[0]
    }

    pub fn largest(&self) -> Vec3 {
        self.vectors[2]
    }
}

pub fn eigen_sym3(m: &SymMat3) -> SymEigen {
    let eig = SymmetricEigen::new(m.to_matrix());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.map(|i| eig.eigenvalues[i]);
    let vectors = order.map(|i| eig.eigenvectors.column(i).into_owned());
    SymEigen { values, vectors }
}

/// Flips `v` so that its component of largest magnitude is positive. The
/// first such component wins on exact ties.
pub fn canonicalize(v: &Vec3) -> Vec3 {
    let mut best = 0;
    for i in 1..3 {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        -v
    } else {
        *v
    }
}

/// Normalizes and sign-canonicalizes a direction.
pub fn canonical_unit(v: &Vec3) -> UnitVec3 {
    Unit::new_normalize(canonicalize(v))
}

pub fn centroid(points: &[Point3]) -> Point3 {
    let n = points.len() as f64;
    let sum = points.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords);
    Point3::from(sum / n)
}

/// Centered second-moment matrix `Σ (p−c)(p−c)ᵀ / n` and the centroid `c`.
pub fn covariance(points: &[Point3]) -> (SymMat3, Point3) {
    let c = centroid(points);
    let mut m = SymMat3::zero();
    for p in points {
        m.add_weighted_outer(&(p - c), 1.0);
    }
    (m.scale(1.0 / points.len() as f64), c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: UnitVec3,
    pub anchor: Point3,
}

impl Plane {
    pub fn new(normal: UnitVec3, anchor: Point3) -> Self {
        Self { normal, anchor }
    }
}

/// Total-least-squares plane through `points`: anchored at the centroid with
/// the smallest-eigenvalue eigenvector of the covariance as its normal.
pub fn fit_plane(points: &[Point3]) -> Result<Plane> {
    if points.len() < 3 {
        return Err(Error::DegenerateSample);
    }
    let (cov, c) = covariance(points);
    let eig = eigen_sym3(&cov);
    let [_, l2, l3] = eig.values;
    if !(l3 > 0.0) || l2 <= DEGENERACY_RATIO * l3 {
        return Err(Error::DegenerateSample);
    }
    Ok(Plane::new(canonical_unit(&eig.smallest()), c))
}

pub fn point_plane_distance(p: &Point3, plane: &Plane) -> f64 {
    (p - plane.anchor).dot(&plane.normal).abs()
}

/// Angle between two unoriented directions, in degrees within [0, 90].
pub fn angle_unoriented(u: &UnitVec3, v: &UnitVec3) -> f64 {
    u.dot(v).abs().min(1.0).acos().to_degrees()
}
