//! Unoriented normal-error metrics and point-set distances.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::{angle_unoriented, UnitVec3};
use crate::knn::NeighborIndex;

pub const RMS_TAUS: [f64; 3] = [10.0, 15.0, 20.0];
pub const PGP_ALPHAS: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];

pub const CSV_HEADER: &str = "rms,rms10,rms15,rms20,pgp5,pgp10,pgp15,pgp20,pgp25,cd,p2s";

fn check_lengths(est: &[UnitVec3], gt: &[UnitVec3]) -> Result<()> {
    if est.len() != gt.len() {
        return Err(Error::LengthMismatch {
            left: est.len(),
            right: gt.len(),
        });
    }
    if est.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(())
}

pub fn angle_errors(est: &[UnitVec3], gt: &[UnitVec3]) -> Result<Vec<f64>> {
    check_lengths(est, gt)?;
    Ok(est.iter().zip(gt).map(|(a, b)| angle_unoriented(a, b)).collect())
}

fn rms(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    (values.map(|v| v * v).sum::<f64>() / n as f64).sqrt()
}

pub fn rms_of_errors(errors: &[f64]) -> f64 {
    rms(errors.iter().copied(), errors.len())
}

/// RMS where errors above `tau_deg` count as 90°.
pub fn rms_tau_of_errors(errors: &[f64], tau_deg: f64) -> f64 {
    rms(
        errors.iter().map(|&e| if e > tau_deg { 90.0 } else { e }),
        errors.len(),
    )
}

/// Fraction of errors strictly below `alpha_deg`.
pub fn pgp_of_errors(errors: &[f64], alpha_deg: f64) -> f64 {
    errors.iter().filter(|&&e| e < alpha_deg).count() as f64 / errors.len() as f64
}

pub fn rms_angle(est: &[UnitVec3], gt: &[UnitVec3]) -> Result<f64> {
    Ok(rms_of_errors(&angle_errors(est, gt)?))
}

pub fn rms_tau(est: &[UnitVec3], gt: &[UnitVec3], tau_deg: f64) -> Result<f64> {
    Ok(rms_tau_of_errors(&angle_errors(est, gt)?, tau_deg))
}

pub fn pgp(est: &[UnitVec3], gt: &[UnitVec3], alpha_deg: f64) -> Result<f64> {
    Ok(pgp_of_errors(&angle_errors(est, gt)?, alpha_deg))
}

fn mean_sq_nn(from: &PointCloud, to: &NeighborIndex) -> f64 {
    let d: Vec<f64> = from
        .points()
        .par_iter()
        .map(|p| to.nearest(p).distance.powi(2))
        .collect();
    d.iter().sum::<f64>() / d.len() as f64
}

/// Symmetric mean of squared nearest-neighbor distances:
/// `½ (mean_a d²(a, B) + mean_b d²(b, A))`.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    let ia = NeighborIndex::build(a)?;
    let ib = NeighborIndex::build(b)?;
    Ok(0.5 * (mean_sq_nn(a, &ib) + mean_sq_nn(b, &ia)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalMetrics {
    pub rms_deg: f64,
    /// Indexed like [`RMS_TAUS`].
    pub rms_tau: [f64; 3],
    /// Indexed like [`PGP_ALPHAS`].
    pub pgp: [f64; 5],
}

impl NormalMetrics {
    pub fn from_errors(errors: &[f64]) -> Self {
        Self {
            rms_deg: rms_of_errors(errors),
            rms_tau: RMS_TAUS.map(|t| rms_tau_of_errors(errors, t)),
            pgp: PGP_ALPHAS.map(|a| pgp_of_errors(errors, a)),
        }
    }

    pub fn compute(est: &[UnitVec3], gt: &[UnitVec3]) -> Result<Self> {
        Ok(Self::from_errors(&angle_errors(est, gt)?))
    }
}

/// Per-cloud metric bundle. Normal metrics are absent when either cloud
/// lacks normals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalReport {
    pub normals: Option<NormalMetrics>,
    pub cd: Option<f64>,
    pub p2s: Option<f64>,
}

impl EvalReport {
    /// `key = value` lines. CD is the symmetric mean of squared
    /// nearest-neighbor distances; P2S the mean absolute distance to the
    /// analytic surface.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(m) = &self.normals {
            let _ = writeln!(s, "rms = {:.6}", m.rms_deg);
            for (t, v) in RMS_TAUS.iter().zip(m.rms_tau) {
                let _ = writeln!(s, "rms{t} = {v:.6}");
            }
            for (a, v) in PGP_ALPHAS.iter().zip(m.pgp) {
                let _ = writeln!(s, "pgp{a} = {v:.6}");
            }
        }
        if let Some(cd) = self.cd {
            let _ = writeln!(s, "# cd: symmetric mean of squared nearest-neighbor distances");
            let _ = writeln!(s, "cd = {cd:.9e}");
        }
        if let Some(p) = self.p2s {
            let _ = writeln!(s, "# p2s: mean absolute distance to the analytic surface");
            let _ = writeln!(s, "p2s = {p:.9e}");
        }
        s
    }

    /// One row matching [`CSV_HEADER`]; missing values are empty fields.
    pub fn to_csv_row(&self) -> String {
        let mut fields: Vec<String> = Vec::with_capacity(11);
        match &self.normals {
            Some(m) => {
                fields.push(m.rms_deg.to_string());
                fields.extend(m.rms_tau.iter().map(f64::to_string));
                fields.extend(m.pgp.iter().map(f64::to_string));
            }
            None => fields.extend(std::iter::repeat_n(String::new(), 9)),
        }
        fields.push(self.cd.map(|v| v.to_string()).unwrap_or_default());
        fields.push(self.p2s.map(|v| v.to_string()).unwrap_or_default());
        fields.join(",")
    }
}
