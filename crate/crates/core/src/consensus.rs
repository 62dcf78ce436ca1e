//! Mode determination over feasible candidates.
//!
//! Both solvers minimize a negated Gaussian-kernel sum (a candidate consensus
//! loss) by fixed-point iteration. For normals, each step replaces the
//! estimate by the principal eigenvector of the kernel-weighted scatter of the
//! candidates; since the kernel is convex in `(n·m)²`, this is a
//! minorize-maximize step and decreases the loss. For positions, each step is
//! a Gaussian mean-shift update. A halving line search guards against any
//! numerical increase.

use crate::error::{Error, Result};
use crate::geom::{angle_unoriented, canonical_unit, eigen_sym3, Point3, SymMat3, UnitVec3};

const SAFEGUARD_HALVINGS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusParams {
    /// Inlier half-angle of the normal kernel; its bandwidth is `sin(alpha)`.
    pub alpha_deg: f64,
    pub max_iters: usize,
    pub tol_deg: f64,
    /// Position step tolerance, relative to the neighborhood radius.
    pub tol_pos_rel: f64,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        Self {
            alpha_deg: 30.0,
            max_iters: 50,
            tol_deg: 0.01,
            tol_pos_rel: 1e-6,
        }
    }
}

impl ConsensusParams {
    pub fn tau_normal(&self) -> f64 {
        self.alpha_deg.to_radians().sin()
    }

    pub fn validate(&self) -> Result<()> {
        let tau = self.tau_normal();
        if !(tau > 0.0 && tau <= 1.0) || !(self.alpha_deg > 0.0 && self.alpha_deg <= 90.0) {
            return Err(Error::InvalidParams(format!(
                "alpha_deg {} must lie in (0, 90]",
                self.alpha_deg
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be at least 1".into()));
        }
        if !(self.tol_deg >= 0.0) || !(self.tol_pos_rel >= 0.0) {
            return Err(Error::InvalidParams("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult<T> {
    pub value: T,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Loss at the initial point followed by the loss after each accepted step.
    pub loss_trace: Vec<f64>,
}

/// `Σ −exp(−‖n × m‖² / τ²)`; invariant under `n → −n` and `m → −m`.
pub fn ccn_loss(n: &UnitVec3, candidates: &[UnitVec3], tau: f64) -> f64 {
    let inv = 1.0 / (tau * tau);
    candidates
        .iter()
        .map(|m| -(-n.cross(m).norm_squared() * inv).exp())
        .sum()
}

/// Sign-invariant least-squares loss `Σ ‖z × m‖²`.
pub fn mean_loss(z: &UnitVec3, candidates: &[UnitVec3]) -> f64 {
    candidates.iter().map(|m| z.cross(m).norm_squared()).sum()
}

fn principal(scatter: &SymMat3) -> UnitVec3 {
    canonical_unit(&eigen_sym3(scatter).largest())
}

/// Principal direction of `Σ m mᵀ`: the exact minimizer of [`mean_loss`] on
/// the unit sphere.
pub fn mean_mode_normal(candidates: &[UnitVec3]) -> Result<UnitVec3> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut scatter = SymMat3::zero();
    for m in candidates {
        scatter.add_weighted_outer(m, 1.0);
    }
    Ok(principal(&scatter))
}

pub fn normal_mode(
    candidates: &[UnitVec3],
    tau: f64,
    params: &ConsensusParams,
    init: &UnitVec3,
) -> Result<ModeResult<UnitVec3>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let inv = 1.0 / (tau * tau);
    let mut n = canonical_unit(init);
    let mut loss = ccn_loss(&n, candidates, tau);
    let mut trace = vec![loss];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iters {
        let mut scatter = SymMat3::zero();
        for m in candidates {
            let w = (-n.cross(m).norm_squared() * inv).exp();
            scatter.add_weighted_outer(m, w);
        }
        if scatter.trace() == 0.0 {
            break;
        }
        let proposal = principal(&scatter);
        let step = angle_unoriented(&n, &proposal);
        let Some((next, next_loss)) = accept_normal(&n, loss, proposal, candidates, tau) else {
            converged = step < params.tol_deg;
            break;
        };
        let change = angle_unoriented(&n, &next);
        n = next;
        loss = next_loss;
        trace.push(loss);
        iterations += 1;
        if change < params.tol_deg {
            converged = true;
            break;
        }
    }

    Ok(ModeResult {
        value: n,
        loss,
        iterations,
        converged,
        loss_trace: trace,
    })
}

/// Accepts `proposal` if it does not increase the loss, otherwise bisects
/// toward the current estimate a bounded number of times.
fn accept_normal(
    current: &UnitVec3,
    loss: f64,
    proposal: UnitVec3,
    candidates: &[UnitVec3],
    tau: f64,
) -> Option<(UnitVec3, f64)> {
    let mut p = proposal;
    for _ in 0..=SAFEGUARD_HALVINGS {
        let l = ccn_loss(&p, candidates, tau);
        if l <= loss {
            return Some((p, l));
        }
        let aligned = if p.dot(current) < 0.0 { -p.into_inner() } else { p.into_inner() };
        let mid = current.into_inner() + aligned;
        if mid.norm_squared() == 0.0 {
            return None;
        }
        p = canonical_unit(&mid);
    }
    None
}

/// `Σ −exp(−‖x − q‖² / τ²)`.
pub fn ccp_loss(x: &Point3, candidates: &[Point3], tau: f64) -> f64 {
    let inv = 1.0 / (tau * tau);
    candidates
        .iter()
        .map(|q| -(-(x - q).norm_squared() * inv).exp())
        .sum()
}

/// Gaussian mean-shift from `init`. Stops once a step is shorter than
/// `params.tol_pos_rel * scale`. If every kernel weight underflows the
/// nearest candidate is returned, flagged as not converged.
pub fn position_mode(
    candidates: &[Point3],
    tau: f64,
    params: &ConsensusParams,
    scale: f64,
    init: &Point3,
) -> Result<ModeResult<Point3>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let tol = params.tol_pos_rel * scale;
    let inv = 1.0 / (tau * tau);
    let mut x = *init;
    let mut loss = ccp_loss(&x, candidates, tau);
    let mut trace = vec![loss];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iters {
        let mut wsum = 0.0;
        let mut acc = nalgebra::Vector3::zeros();
        for q in candidates {
            let w = (-(x - q).norm_squared() * inv).exp();
            wsum += w;
            acc += w * q.coords;
        }
        if wsum == 0.0 {
            let nearest = candidates
                .iter()
                .min_by(|a, b| (x - *a).norm_squared().total_cmp(&(x - *b).norm_squared()))
                .copied()
                .unwrap_or(x);
            let nearest_loss = ccp_loss(&nearest, candidates, tau);
            trace.push(nearest_loss);
            return Ok(ModeResult {
                value: nearest,
                loss: nearest_loss,
                iterations: iterations + 1,
                converged: false,
                loss_trace: trace,
            });
        }
        let proposal = Point3::from(acc / wsum);
        let step = (proposal - x).norm();
        let Some((next, next_loss)) = accept_position(&x, loss, proposal, candidates, tau) else {
            converged = step < tol;
            break;
        };
        let moved = (next - x).norm();
        x = next;
        loss = next_loss;
        trace.push(loss);
        iterations += 1;
        if moved < tol {
            converged = true;
            break;
        }
    }

    Ok(ModeResult {
        value: x,
        loss,
        iterations,
        converged,
        loss_trace: trace,
    })
}

fn accept_position(
    current: &Point3,
    loss: f64,
    proposal: Point3,
    candidates: &[Point3],
    tau: f64,
) -> Option<(Point3, f64)> {
    let mut p = proposal;
    for _ in 0..=SAFEGUARD_HALVINGS {
        let l = ccp_loss(&p, candidates, tau);
        if l <= loss {
            return Some((p, l));
        }
        p = nalgebra::center(current, &p);
    }
    None
}
