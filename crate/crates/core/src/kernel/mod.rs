//! Biot-Savart kernel and velocity summation.
//!
//! The kernel is K(z) = (1/2π) z^⊥ / |z|² with z^⊥ = (-z_y, z_x), so a
//! positive vortex turns the fluid counterclockwise. The blob variant
//! K_δ(z) = (1/2π) z^⊥ / (|z|² + δ²) is smooth, exactly antisymmetric and
//! vanishes at z = 0, so particle self-interaction needs no special case.

mod tree;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::particles::{LabelFilter, ParticleCloud};
use crate::vector::PlaneVector;

pub use tree::{velocity_tree, Quadtree, TreecodeParams};

pub(crate) const INV_2PI: f64 = 0.5 / PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMode {
    Singular,
    Blob,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub delta: f64,
    pub mode: KernelMode,
}

impl BlobSpec {
    pub fn singular() -> Self {
        BlobSpec {
            delta: 0.0,
            mode: KernelMode::Singular,
        }
    }

    pub fn blob(delta: f64) -> Result<Self> {
        check_param(
            delta > 0.0 && delta.is_finite(),
            "delta",
            delta,
            "blob width must be positive and finite",
        )?;
        Ok(BlobSpec {
            delta,
            mode: KernelMode::Blob,
        })
    }

    fn validate(&self) -> Result<()> {
        match self.mode {
            KernelMode::Singular => Ok(()),
            KernelMode::Blob => check_param(
                self.delta > 0.0 && self.delta.is_finite(),
                "delta",
                self.delta,
                "blob width must be positive and finite",
            ),
        }
    }

    /// The δ² added to |z|² in the denominator (zero for the singular kernel).
    #[inline]
    pub(crate) fn delta_sq(&self) -> f64 {
        match self.mode {
            KernelMode::Singular => 0.0,
            KernelMode::Blob => self.delta * self.delta,
        }
    }
}

/// Whether target loops run on the rayon pool. Both modes produce the same
/// bits: each target's sum is accumulated in a fixed order regardless of
/// which thread computes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Serial,
    #[default]
    Parallel,
}

/// Evaluates K(z) (singular) or K_δ(z) (blob).
pub fn biot_savart(z: PlaneVector, spec: BlobSpec) -> Result<PlaneVector> {
    if !z.is_finite() {
        return Err(Error::NonFinite("biot_savart argument"));
    }
    spec.validate()?;
    let r2 = z.norm_sq() + spec.delta_sq();
    if r2 == 0.0 {
        // only reachable in singular mode
        return Err(Error::SingularAtOrigin);
    }
    Ok(z.perp() * (INV_2PI / r2))
}

/// Structure-of-arrays view of source points and their circulations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceSet {
    pub(crate) xs: Vec<f64>,
    pub(crate) ys: Vec<f64>,
    pub(crate) ws: Vec<f64>,
}

impl SourceSet {
    pub fn new(positions: &[PlaneVector], weights: &[f64]) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::Invalid(format!(
                "{} source positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if positions.iter().any(|p| !p.is_finite()) || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("source set"));
        }
        Ok(SourceSet {
            xs: positions.iter().map(|p| p.x).collect(),
            ys: positions.iter().map(|p| p.y).collect(),
            ws: weights.to_vec(),
        })
    }

    pub fn from_cloud(cloud: &ParticleCloud) -> Self {
        Self::from_cloud_filtered(cloud, LabelFilter::All)
    }

    pub fn from_cloud_filtered(cloud: &ParticleCloud, filter: LabelFilter) -> Self {
        let mut set = SourceSet::default();
        for p in cloud.particles.iter().filter(|p| filter.matches(p.label)) {
            set.xs.push(p.position.x);
            set.ys.push(p.position.y);
            set.ws.push(p.weight);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.ws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ws.is_empty()
    }

    pub fn position(&self, i: usize) -> PlaneVector {
        PlaneVector::new(self.xs[i], self.ys[i])
    }

    pub fn weights(&self) -> &[f64] {
        &self.ws
    }
}

/// Σ_i w_i (x - y_i)^⊥ / (|x - y_i|² + δ²) without the 1/(2π) factor,
/// accumulated in source index order.
#[inline]
pub(crate) fn blob_sum(tx: f64, ty: f64, xs: &[f64], ys: &[f64], ws: &[f64], d2: f64) -> (f64, f64) {
    let (mut ax, mut ay) = (0.0, 0.0);
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        let dx = tx - x;
        let dy = ty - y;
        let s = w / (dx * dx + dy * dy + d2);
        ax -= dy * s;
        ay += dx * s;
    }
    (ax, ay)
}

fn singular_sum(target: PlaneVector, target_index: usize, sources: &SourceSet) -> Result<PlaneVector> {
    let mut acc = PlaneVector::ZERO;
    for i in 0..sources.len() {
        let dx = target.x - sources.xs[i];
        let dy = target.y - sources.ys[i];
        let r2 = dx * dx + dy * dy;
        if r2 == 0.0 {
            return Err(Error::Coincident {
                first: target_index,
                second: i,
            });
        }
        let s = sources.ws[i] / r2;
        acc.x -= dy * s;
        acc.y += dx * s;
    }
    Ok(acc * INV_2PI)
}

pub(crate) fn map_targets<F>(targets: &[PlaneVector], exec: ExecMode, f: F) -> Vec<PlaneVector>
where
    F: Fn(PlaneVector) -> PlaneVector + Sync + Send,
{
    match exec {
        ExecMode::Serial => targets.iter().map(|&t| f(t)).collect(),
        ExecMode::Parallel => targets.par_iter().map(|&t| f(t)).collect(),
    }
}

/// Direct O(N·M) Biot-Savart sum at every target.
pub fn velocity_direct(
    sources: &SourceSet,
    targets: &[PlaneVector],
    spec: BlobSpec,
    exec: ExecMode,
) -> Result<Vec<PlaneVector>> {
    spec.validate()?;
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("velocity targets"));
    }
    match spec.mode {
        KernelMode::Blob => {
            let d2 = spec.delta_sq();
            Ok(map_targets(targets, exec, |t| {
                let (sx, sy) = blob_sum(t.x, t.y, &sources.xs, &sources.ys, &sources.ws, d2);
                PlaneVector::new(sx, sy) * INV_2PI
            }))
        }
        KernelMode::Singular => {
            let run = |(j, t): (usize, &PlaneVector)| singular_sum(*t, j, sources);
            match exec {
                ExecMode::Serial => targets.iter().enumerate().map(run).collect(),
                ExecMode::Parallel => targets.par_iter().enumerate().map(run).collect(),
            }
        }
    }
}

/// Upper bound on |(1/2π) ∫ (x-y)^⊥/|x-y|² f(y) dy| from ‖f‖₁ and ‖f‖_q.
///
/// Splitting the integral at radius R and applying Hölder inside gives
/// (1/2π)[(2π/(2-q'))^{1/q'} R^{(2-q')/q'} ‖f‖_q + ‖f‖₁/R] for any R > 0,
/// with q' = q/(q-1). The value returned uses R = (‖f‖₁/‖f‖_q)^{q'/2}.
pub fn velocity_bound(l1_norm: f64, lq_norm: f64, q: f64) -> Result<f64> {
    check_param(q > 2.0 && q.is_finite(), "q", q, "Lebesgue exponent must exceed 2")?;
    check_param(l1_norm >= 0.0 && l1_norm.is_finite(), "l1_norm", l1_norm, "must be finite and nonnegative")?;
    check_param(lq_norm >= 0.0 && lq_norm.is_finite(), "lq_norm", lq_norm, "must be finite and nonnegative")?;
    if l1_norm == 0.0 || lq_norm == 0.0 {
        if l1_norm == lq_norm {
            return Ok(0.0);
        }
        return Err(Error::Invalid(
            "exactly one of the L1 and Lq norms is zero".to_string(),
        ));
    }
    let qp = q / (q - 1.0);
    let radius = (l1_norm / lq_norm).powf(0.5 * qp);
    let inner_constant = (2.0 * PI / (2.0 - qp)).powf(1.0 / qp);
    let near = inner_constant * radius.powf((2.0 - qp) / qp) * lq_norm;
    let far = l1_norm / radius;
    Ok(INV_2PI * (near + far))
}

/// Bound on |∇u| at points whose distance from all vorticity is at least
/// `delta_sep / 2`: (4/(2π)) ‖ω‖₁ / δ².
///
/// The Jacobian of K is (1/2π)/|z|² times a symmetric traceless matrix with
/// eigenvalues ±1, so its operator norm is (1/2π)/|z|²; with |z| ≥ δ/2 this
/// is at most (4/(2π))/δ². Comparisons use the spectral norm of ∇u.
pub fn lipschitz_farfield_bound(l1_norm: f64, delta_sep: f64) -> Result<f64> {
    check_param(delta_sep > 0.0 && delta_sep.is_finite(), "delta_sep", delta_sep, "separation must be positive")?;
    check_param(l1_norm >= 0.0 && l1_norm.is_finite(), "l1_norm", l1_norm, "must be finite and nonnegative")?;
    Ok(4.0 * INV_2PI * l1_norm / (delta_sep * delta_sep))
}

/// Spectral norm of a 2×2 matrix [[a, b], [c, d]].
pub fn spectral_norm_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (s + disc)).sqrt()
}

#[cfg(test)]
mod tests;
