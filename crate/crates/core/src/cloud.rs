use crate::error::{Error, Result};
use crate::geom::{Point3, UnitVec3};

/// Positions with optional per-point unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Option<Vec<UnitVec3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        Ok(Self {
            points,
            normals: None,
        })
    }

    pub fn with_normals(points: Vec<Point3>, normals: Vec<UnitVec3>) -> Result<Self> {
        if points.len() != normals.len() {
            return Err(Error::LengthMismatch {
                left: points.len(),
                right: normals.len(),
            });
        }
        let mut cloud = Self::new(points)?;
        cloud.normals = Some(normals);
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[UnitVec3]> {
        self.normals.as_deref()
    }

    pub fn set_normals(&mut self, normals: Vec<UnitVec3>) -> Result<()> {
        if normals.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                left: self.points.len(),
                right: normals.len(),
            });
        }
        self.normals = Some(normals);
        Ok(())
    }

    pub fn clear_normals(&mut self) {
        self.normals = None;
    }

    /// Replaces positions, keeping normals.
    pub fn with_points(&self, points: Vec<Point3>) -> Result<Self> {
        match &self.normals {
            Some(n) => Self::with_normals(points, n.clone()),
            None => Self::new(points),
        }
    }

    pub fn bbox(&self) -> (Point3, Point3) {
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points[1..] {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(matches!(PointCloud::new(vec![]), Err(Error::EmptyCloud)));
        let r = PointCloud::with_normals(vec![Point3::origin()], vec![]);
        assert!(matches!(r, Err(Error::LengthMismatch { left: 1, right: 0 })));
    }

    #[test]
    fn bbox_diagonal_of_unit_cube_corners() {
        let c = PointCloud::with_normals(
            vec![Point3::origin(), Point3::new(1.0, 1.0, 1.0)],
            vec![Vec3::z_axis(); 2],
        )
        .unwrap();
        assert!((c.bbox_diagonal() - 3f64.sqrt()).abs() < 1e-15);
    }
}
