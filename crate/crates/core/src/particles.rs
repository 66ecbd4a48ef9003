//! Labeled vortex particles.
//!
//! A particle's label records which piece of the initial vorticity it was
//! sampled from: one of the concentrated vortices, or the perturbation.
//! Labels, weights and carried vorticity values are fixed at sampling time
//! and never rewritten by the flow; only positions move.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::PlaneVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Vortex(usize),
    Perturbation,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Vortex(m) => write!(f, "{m}"),
            Label::Perturbation => f.write_str("p"),
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "p" {
            return Ok(Label::Perturbation);
        }
        s.parse::<usize>()
            .map(Label::Vortex)
            .map_err(|_| Error::Invalid(format!("unrecognized particle label `{s}`")))
    }
}

/// Selects the particles whose induced field is wanted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelFilter {
    All,
    Only(Label),
    /// Every vortex label except `m`; the perturbation is excluded.
    OtherVortices(usize),
    /// Every vortex label; the perturbation is excluded.
    AllVortices,
}

impl LabelFilter {
    #[inline]
    pub fn matches(self, label: Label) -> bool {
        match self {
            LabelFilter::All => true,
            LabelFilter::Only(l) => l == label,
            LabelFilter::OtherVortices(m) => matches!(label, Label::Vortex(k) if k != m),
            LabelFilter::AllVortices => matches!(label, Label::Vortex(_)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexParticle {
    pub position: PlaneVector,
    /// Circulation carried by the particle (vorticity times cell area).
    pub weight: f64,
    pub label: Label,
    /// Initial vorticity value at the particle's quadrature node.
    pub omega0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleCloud {
    pub particles: Vec<VortexParticle>,
    pub grid_h: f64,
    pub blob_delta: f64,
    pub time: f64,
}

impl ParticleCloud {
    pub fn new(particles: Vec<VortexParticle>, grid_h: f64, blob_delta: f64) -> Result<Self> {
        let cloud = ParticleCloud {
            particles,
            grid_h,
            blob_delta,
            time: 0.0,
        };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.blob_delta > 0.0 && self.blob_delta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "blob_delta",
                value: self.blob_delta,
                reason: "must be positive and finite",
            });
        }
        if !(self.grid_h > 0.0 && self.grid_h.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "grid_h",
                value: self.grid_h,
                reason: "must be positive and finite",
            });
        }
        if self
            .particles
            .iter()
            .any(|p| !p.position.is_finite() || !p.weight.is_finite() || !p.omega0.is_finite())
        {
            return Err(Error::NonFinite("particle cloud"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn positions(&self) -> Vec<PlaneVector> {
        self.particles.iter().map(|p| p.position).collect()
    }

    /// Sorted, deduplicated list of labels present in the cloud.
    pub fn labels(&self) -> Vec<Label> {
        let mut labels: Vec<Label> = self.particles.iter().map(|p| p.label).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    /// Number of distinct vortex labels, assuming they are numbered from zero.
    pub fn vortex_count(&self) -> usize {
        self.particles
            .iter()
            .filter_map(|p| match p.label {
                Label::Vortex(m) => Some(m + 1),
                Label::Perturbation => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn with_label(&self, label: Label) -> impl Iterator<Item = &VortexParticle> {
        self.particles.iter().filter(move |p| p.label == label)
    }

    /// Sum of weights over particles carrying `label`, in index order.
    pub fn label_circulation(&self, label: Label) -> f64 {
        self.with_label(label).map(|p| p.weight).fold(0.0, |a, x| a + x)
    }

    pub fn total_circulation(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).fold(0.0, |a, x| a + x)
    }

    /// Σ w_i x_i.
    pub fn linear_impulse(&self) -> PlaneVector {
        self.particles
            .iter()
            .fold(PlaneVector::ZERO, |acc, p| acc + p.weight * p.position)
    }

    /// Σ w_i |x_i|².
    pub fn angular_impulse(&self) -> f64 {
        self.particles
            .iter()
            .map(|p| p.weight * p.position.norm_sq())
            .fold(0.0, |a, x| a + x)
    }
}
