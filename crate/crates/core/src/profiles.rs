//! Radial vortex profiles, concentrated initial data and its splitting into
//! core and tail, and deterministic particle sampling.
//!
//! Every profile η is radial, nonnegative and has unit mass. A vortex of
//! circulation γ and size ε at p contributes (γ/ε²) η((x − p)/ε).
//!
//! Tail-bound constants C with η(y)(1 + |y|^{2+σ}) ≤ C:
//!
//! | kind            | C                                                  |
//! |-----------------|----------------------------------------------------|
//! | Cauchy (σ = 2)  | 1/π                                                |
//! | AlgebraicTail σ | c_σ (the normalization itself)                     |
//! | Gaussian        | (1/π)(1 + (k/2)^{k/2} e^{−k/2}), k = 2 + σ         |
//! | CompactBump     | 2c/e, c the normalization                          |
//!
//! Gaussian and CompactBump decay faster than any power; their `sigma` is a
//! nominal tail exponent that only feeds the choice of β.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::particles::{Label, ParticleCloud, VortexParticle};
use crate::quadrature;
use crate::vector::PlaneVector;

/// ∫_0^1 e^{−1/u} du = e^{−1} − E₁(1).
const BUMP_INTEGRAL: f64 = 0.367_879_441_171_442_33 - 0.219_383_934_395_520_27;

const QUAD_TOL: f64 = 1e-13;
const QUAD_REL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Cauchy,
    AlgebraicTail,
    Gaussian,
    CompactBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub kind: ProfileKind,
    pub sigma: f64,
    /// Multiplicative constant making the total mass one.
    pub normalization: f64,
}

impl RadialProfile {
    /// (1/π)(1 + r²)^{−2}
    pub fn cauchy() -> Self {
        RadialProfile {
            kind: ProfileKind::Cauchy,
            sigma: 2.0,
            normalization: 1.0 / PI,
        }
    }

    /// c_σ (1 + r^{2+σ})^{−1}
    pub fn algebraic_tail(sigma: f64) -> Result<Self> {
        check_param(sigma > 0.0 && sigma.is_finite(), "sigma", sigma, "must be positive")?;
        let k = 2.0 + sigma;
        Ok(RadialProfile {
            kind: ProfileKind::AlgebraicTail,
            sigma,
            normalization: k * (2.0 * PI / k).sin() / (2.0 * PI * PI),
        })
    }

    /// (1/π) e^{−r²}
    pub fn gaussian(nominal_sigma: f64) -> Result<Self> {
        check_param(nominal_sigma > 0.0 && nominal_sigma.is_finite(), "sigma", nominal_sigma, "must be positive")?;
        Ok(RadialProfile {
            kind: ProfileKind::Gaussian,
            sigma: nominal_sigma,
            normalization: 1.0 / PI,
        })
    }

    /// c exp(−1/(1 − r²)) on r < 1, zero outside.
    pub fn compact_bump(nominal_sigma: f64) -> Result<Self> {
        check_param(nominal_sigma > 0.0 && nominal_sigma.is_finite(), "sigma", nominal_sigma, "must be positive")?;
        Ok(RadialProfile {
            kind: ProfileKind::CompactBump,
            sigma: nominal_sigma,
            normalization: 1.0 / (PI * BUMP_INTEGRAL),
        })
    }

    pub fn new(kind: ProfileKind, sigma: f64) -> Result<Self> {
        match kind {
            ProfileKind::Cauchy => {
                check_param(sigma == 2.0, "sigma", sigma, "the Cauchy profile has sigma = 2")?;
                Ok(Self::cauchy())
            }
            ProfileKind::AlgebraicTail => Self::algebraic_tail(sigma),
            ProfileKind::Gaussian => Self::gaussian(sigma),
            ProfileKind::CompactBump => Self::compact_bump(sigma),
        }
    }

    #[inline]
    pub fn eval_radial(&self, r: f64) -> f64 {
        let c = self.normalization;
        match self.kind {
            ProfileKind::Cauchy => {
                let s = 1.0 + r * r;
                c / (s * s)
            }
            ProfileKind::AlgebraicTail => c / (1.0 + r.powf(2.0 + self.sigma)),
            ProfileKind::Gaussian => c * (-r * r).exp(),
            ProfileKind::CompactBump => {
                if r >= 1.0 {
                    0.0
                } else {
                    c * (-1.0 / (1.0 - r * r)).exp()
                }
            }
        }
    }

    #[inline]
    pub fn eval(&self, y: PlaneVector) -> f64 {
        self.eval_radial(y.norm())
    }

    pub fn tail_bound_constant(&self) -> f64 {
        match self.kind {
            ProfileKind::Cauchy | ProfileKind::AlgebraicTail => self.normalization,
            ProfileKind::Gaussian => {
                let k = 2.0 + self.sigma;
                self.normalization * (1.0 + (0.5 * k).powf(0.5 * k) * (-0.5 * k).exp())
            }
            ProfileKind::CompactBump => 2.0 * self.normalization / E,
        }
    }

    /// ∫_{|y|≤ρ} η.
    pub fn mass_within(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        match self.kind {
            ProfileKind::Cauchy => rho * rho / (1.0 + rho * rho),
            ProfileKind::Gaussian => -(-rho * rho).exp_m1(),
            ProfileKind::CompactBump if rho >= 1.0 => 1.0,
            _ => 1.0 - self.tail_mass(rho),
        }
    }

    /// ∫_{|y|>ρ} η, computed directly rather than as 1 − mass.
    pub fn tail_mass(&self, rho: f64) -> f64 {
        let rho = rho.max(0.0);
        match self.kind {
            ProfileKind::Cauchy => 1.0 / (1.0 + rho * rho),
            ProfileKind::Gaussian => (-rho * rho).exp(),
            ProfileKind::CompactBump => {
                if rho >= 1.0 {
                    0.0
                } else {
                    quadrature::integrate(
                        |r| 2.0 * PI * r * self.eval_radial(r),
                        rho,
                        1.0,
                        QUAD_TOL,
                    )
                }
            }
            ProfileKind::AlgebraicTail => {
                quadrature::radial_integral_outside_relative(|r| self.eval_radial(r), rho, QUAD_REL)
            }
        }
    }

    /// Smallest ρ with mass_within(ρ) ≥ fraction.
    pub fn radius_for_mass(&self, fraction: f64) -> Result<f64> {
        check_param(
            fraction > 0.0 && fraction < 1.0,
            "mass_capture",
            fraction,
            "must lie in (0, 1)",
        )?;
        let tail = 1.0 - fraction;
        match self.kind {
            ProfileKind::Cauchy => Ok((fraction / tail).sqrt()),
            ProfileKind::Gaussian => Ok((-tail.ln()).sqrt()),
            _ => {
                let mut hi: f64 = 1.0;
                while self.tail_mass(hi) > tail {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.tail_mass(mid) > tail {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(hi)
            }
        }
    }

    /// (∫_{|y|>ρ} η^p)^{1/p}.
    pub fn lp_norm_outside(&self, rho: f64, p: f64) -> f64 {
        let value = match self.kind {
            ProfileKind::CompactBump if rho >= 1.0 => 0.0,
            ProfileKind::CompactBump => quadrature::integrate(
                |r| 2.0 * PI * r * self.eval_radial(r).powf(p),
                rho.max(0.0),
                1.0,
                QUAD_TOL,
            ),
            _ => quadrature::radial_integral_outside_relative(
                |r| self.eval_radial(r).powf(p),
                rho.max(0.0),
                QUAD_REL,
            ),
        };
        value.powf(1.0 / p)
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_norm_outside(0.0, p)
    }
}

/// β(σ) = 2/(σ + 2).
pub fn beta_opt(sigma: f64) -> Result<f64> {
    check_param(sigma > 0.0 && sigma.is_finite(), "sigma", sigma, "must be positive")?;
    Ok(2.0 / (sigma + 2.0))
}

/// Exponent σ²/(σ+2) of the rate at which the concentrated data approaches
/// a sum of point masses.
pub fn concentration_exponent(sigma: f64) -> f64 {
    sigma * sigma / (sigma + 2.0)
}

/// a₀(γ₁, σ) = ½ min{1 − γ₁/σ, γ₁ + γ₁/σ − 1} on σ/(σ+1) < γ₁ < σ.
pub fn a0_exponent(gamma1: f64, sigma: f64) -> Result<f64> {
    check_param(sigma > 0.0 && sigma.is_finite(), "sigma", sigma, "must be positive")?;
    check_param(
        gamma1 > sigma / (sigma + 1.0) && gamma1 < sigma,
        "gamma1",
        gamma1,
        "must lie strictly between sigma/(sigma+1) and sigma",
    )?;
    Ok(0.5 * (1.0 - gamma1 / sigma).min(gamma1 + gamma1 / sigma - 1.0))
}

/// max{‖f‖_q^{q/(2q−2)} ‖f‖₁^{(q−2)/(2q−2)}, ε}
pub fn a_quantity(l1: f64, lq: f64, q: f64, epsilon: f64) -> f64 {
    let d = 2.0 * q - 2.0;
    let interp = if l1 == 0.0 || lq == 0.0 {
        0.0
    } else {
        lq.powf(q / d) * l1.powf((q - 2.0) / d)
    };
    interp.max(epsilon)
}

pub const DEFAULT_Q: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub epsilon: f64,
    pub beta: f64,
    pub core_mass: f64,
    pub tail_mass: f64,
    /// ε^{1−β}, in physical coordinates.
    pub cutoff_radius: f64,
    pub a_eps: f64,
    pub q: f64,
    /// (p, ‖tail‖_p) in physical coordinates, for p = 1 and p = q.
    pub lp_norms: Vec<(f64, f64)>,
}

impl DecompositionResult {
    pub fn lp_norm(&self, p: f64) -> Option<f64> {
        self.lp_norms.iter().find(|(e, _)| *e == p).map(|(_, v)| *v)
    }
}

/// Splits the unit-circulation vortex (1/ε²) η(x/ε) into a core inside
/// |x| ≤ ε^{1−β} and the tail outside it (sharp cutoff).
pub fn decompose(profile: &RadialProfile, epsilon: f64, beta: f64) -> Result<DecompositionResult> {
    decompose_with_q(profile, epsilon, beta, DEFAULT_Q)
}

pub fn decompose_with_q(
    profile: &RadialProfile,
    epsilon: f64,
    beta: f64,
    q: f64,
) -> Result<DecompositionResult> {
    check_param(epsilon > 0.0 && epsilon < 1.0, "epsilon", epsilon, "must lie in (0, 1)")?;
    check_param(beta > 0.0 && beta < 1.0, "beta", beta, "must lie in (0, 1)")?;
    check_param(q > 2.0 && q.is_finite(), "q", q, "must be finite and greater than 2")?;
    let rho = epsilon.powf(-beta);
    let tail_mass = profile.tail_mass(rho);
    let core_mass = profile.mass_within(rho);
    let l1 = tail_mass;
    let lq = epsilon.powf(-2.0 + 2.0 / q) * profile.lp_norm_outside(rho, q);
    Ok(DecompositionResult {
        epsilon,
        beta,
        core_mass,
        tail_mass,
        cutoff_radius: epsilon.powf(1.0 - beta),
        a_eps: a_quantity(l1, lq, q, epsilon),
        q,
        lp_norms: vec![(1.0, l1), (q, lq)],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexSpec {
    pub center: PlaneVector,
    pub gamma: f64,
    pub profile: RadialProfile,
    pub epsilon: f64,
}

impl VortexSpec {
    /// (γ/ε²) η((x − p)/ε)
    #[inline]
    pub fn vorticity(&self, x: PlaneVector) -> f64 {
        let e = self.epsilon;
        self.gamma / (e * e) * self.profile.eval((x - self.center) * (1.0 / e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    /// Relabels everything farther than ε^{1−β} from each center as
    /// perturbation. The vorticity itself is unchanged.
    TailSplit { beta: f64 },
    /// An extra radial patch (Γ/r²) η((x − c)/r).
    Patch {
        center: PlaneVector,
        circulation: f64,
        radius: f64,
        profile: RadialProfile,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub vortices: Vec<VortexSpec>,
    pub perturbation: Option<Perturbation>,
}

impl InitialData {
    pub fn new(vortices: Vec<VortexSpec>, perturbation: Option<Perturbation>) -> Result<Self> {
        let data = InitialData { vortices, perturbation };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vortices.is_empty() {
            return Err(Error::Invalid("initial data needs at least one vortex".into()));
        }
        for v in &self.vortices {
            if !v.center.is_finite() {
                return Err(Error::NonFinite("vortex center"));
            }
            check_param(v.gamma != 0.0 && v.gamma.is_finite(), "gamma", v.gamma, "must be nonzero and finite")?;
            check_param(v.epsilon > 0.0 && v.epsilon.is_finite(), "epsilon", v.epsilon, "must be positive")?;
        }
        for i in 0..self.vortices.len() {
            for j in i + 1..self.vortices.len() {
                if self.vortices[i].center == self.vortices[j].center {
                    return Err(Error::Coincident { first: i, second: j });
                }
            }
        }
        match self.perturbation {
            Some(Perturbation::TailSplit { beta }) => {
                check_param(beta > 0.0 && beta < 1.0, "beta", beta, "must lie in (0, 1)")
            }
            Some(Perturbation::Patch { center, circulation, radius, .. }) => {
                if !center.is_finite() || !circulation.is_finite() {
                    return Err(Error::NonFinite("perturbation patch"));
                }
                check_param(radius > 0.0 && radius.is_finite(), "radius", radius, "must be positive")
            }
            None => Ok(()),
        }
    }

    pub fn centers(&self) -> Vec<PlaneVector> {
        self.vortices.iter().map(|v| v.center).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.vortices.iter().map(|v| v.gamma).collect()
    }

    /// Largest vortex size; the runs use a common ε, so this is that ε.
    pub fn epsilon(&self) -> f64 {
        self.vortices.iter().map(|v| v.epsilon).fold(0.0, f64::max)
    }

    /// (‖ω_p‖₁, ‖ω_p‖_q) of the perturbation. For a tail split the
    /// L^q norm is the Minkowski sum over the vortex tails, an upper bound
    /// that is exact when the tails do not overlap.
    pub fn perturbation_norms(&self, q: f64) -> (f64, f64) {
        match self.perturbation {
            None => (0.0, 0.0),
            Some(Perturbation::TailSplit { beta }) => self.vortices.iter().fold((0.0, 0.0), |(l1, lq), v| {
                let rho = v.epsilon.powf(-beta);
                let g = v.gamma.abs();
                (
                    l1 + g * v.profile.tail_mass(rho),
                    lq + g * v.epsilon.powf(-2.0 + 2.0 / q) * v.profile.lp_norm_outside(rho, q),
                )
            }),
            Some(Perturbation::Patch { circulation, radius, profile, .. }) => {
                let g = circulation.abs();
                (g, g * radius.powf(-2.0 + 2.0 / q) * profile.lp_norm(q))
            }
        }
    }

    /// A_ε computed from the perturbation's norms.
    pub fn a_eps(&self, q: f64) -> f64 {
        let (l1, lq) = self.perturbation_norms(q);
        a_quantity(l1, lq, q, self.epsilon())
    }
}

/// Σ_m (γ_m/ε²) η((x − p_m)/ε) plus the perturbation patch, if any.
pub fn eval_initial_vorticity(data: &InitialData, x: PlaneVector) -> f64 {
    let mut w: f64 = data.vortices.iter().map(|v| v.vorticity(x)).sum();
    if let Some(Perturbation::Patch { center, circulation, radius, profile }) = data.perturbation {
        w += circulation / (radius * radius) * profile.eval((x - center) * (1.0 / radius));
    }
    w
}

pub const DEFAULT_MAX_PARTICLES: usize = 1_000_000;
pub const WEIGHT_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub grid_h: f64,
    /// Each vortex is truncated at the radius holding this fraction of
    /// its profile mass.
    pub mass_capture: f64,
    pub max_particles: usize,
}

impl SamplingSpec {
    pub fn new(grid_h: f64, mass_capture: f64) -> Result<Self> {
        let spec = SamplingSpec {
            grid_h,
            mass_capture,
            max_particles: DEFAULT_MAX_PARTICLES,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_max_particles(mut self, max_particles: usize) -> Self {
        self.max_particles = max_particles;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_param(self.grid_h > 0.0 && self.grid_h.is_finite(), "grid_h", self.grid_h, "must be positive")?;
        check_param(
            self.mass_capture > 0.0 && self.mass_capture < 1.0,
            "mass_capture",
            self.mass_capture,
            "must lie in (0, 1)",
        )
    }
}

/// One block of cells around a center: offsets (i h, j h) with
/// |offset| ≤ radius, rows (j) outermost.
struct Block {
    radius: f64,
    n: i64,
}

impl Block {
    fn new(radius: f64, h: f64) -> Self {
        Block {
            radius,
            n: (radius / h).floor() as i64,
        }
    }

    fn offsets(&self, h: f64) -> impl Iterator<Item = PlaneVector> + '_ {
        let n = self.n;
        (-n..=n).flat_map(move |j| {
            (-n..=n).filter_map(move |i| {
                let off = PlaneVector::new(i as f64 * h, j as f64 * h);
                (off.norm() <= self.radius).then_some(off)
            })
        })
    }
}

/// Midpoint-rule sampling of the initial vorticity.
///
/// Each vortex gets its own grid centered on its center, so a radial
/// profile is sampled symmetrically. A particle's weight is the vortex's
/// own vorticity at the cell center times h²; contributions of the other
/// vortices at that cell are not added, so every label carries exactly one
/// component. Cells with |weight| < 10⁻¹⁵|γ| are dropped. The blob width is
/// 2h.
pub fn sample_particles(data: &InitialData, spec: SamplingSpec) -> Result<ParticleCloud> {
    data.validate()?;
    spec.validate()?;
    let h = spec.grid_h;
    let area = h * h;

    let mut blocks = Vec::with_capacity(data.vortices.len() + 1);
    for v in &data.vortices {
        let r = v.epsilon * v.profile.radius_for_mass(spec.mass_capture)?;
        blocks.push(Block::new(r, h));
    }
    let patch = match data.perturbation {
        Some(Perturbation::Patch { radius, profile, .. }) => {
            let r = radius * profile.radius_for_mass(spec.mass_capture)?;
            blocks.push(Block::new(r, h));
            true
        }
        _ => false,
    };

    let count: usize = blocks.iter().map(|b| b.offsets(h).count()).sum();
    if count > spec.max_particles {
        return Err(Error::TooManyParticles {
            count,
            limit: spec.max_particles,
        });
    }

    let mut particles = Vec::with_capacity(count);
    for (m, (v, block)) in data.vortices.iter().zip(&blocks).enumerate() {
        let split = match data.perturbation {
            Some(Perturbation::TailSplit { beta }) => Some(v.epsilon.powf(1.0 - beta)),
            _ => None,
        };
        let floor = WEIGHT_FLOOR * v.gamma.abs();
        let scale = v.gamma / (v.epsilon * v.epsilon);
        for off in block.offsets(h) {
            let omega = scale * v.profile.eval(off * (1.0 / v.epsilon));
            let weight = omega * area;
            if weight.abs() < floor {
                continue;
            }
            let label = match split {
                Some(r) if off.norm() > r => Label::Perturbation,
                _ => Label::Vortex(m),
            };
            particles.push(VortexParticle {
                position: v.center + off,
                weight,
                label,
                omega0: omega,
            });
        }
    }
    if patch {
        if let (Some(Perturbation::Patch { center, circulation, radius, profile }), Some(block)) =
            (data.perturbation, blocks.last())
        {
            let floor = WEIGHT_FLOOR * circulation.abs();
            let scale = circulation / (radius * radius);
            for off in block.offsets(h) {
                let omega = scale * profile.eval(off * (1.0 / radius));
                let weight = omega * area;
                if weight.abs() < floor || weight == 0.0 {
                    continue;
                }
                particles.push(VortexParticle {
                    position: center + off,
                    weight,
                    label: Label::Perturbation,
                    omega0: omega,
                });
            }
        }
    }
    ParticleCloud::new(particles, h, 2.0 * h)
}
