//! Per-label diagnostics of a particle cloud and the a-priori bounds they
//! are compared against.
//!
//! For a label with particles (x_i, w_i) and Ω = Σ w_i:
//!
//! - center  p = Σ w_i x_i / Ω
//! - moment  I = Σ w_i |x_i − p|² / (2Ω)
//! - μ(R)    = Σ w_i (1 − ψ(|x_i − p|/R)) / Ω, with the cosine ramp ψ
//! - m(r)    = Σ |w_i| over |x_i − p| ≥ r

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::kernel::{lipschitz_farfield_bound, velocity_bound};
use crate::particles::{Label, ParticleCloud};
use crate::vector::PlaneVector;

/// Correctly rounded sum of `values` (Shewchuk partials, as in `math.fsum`).
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for i in 0..partials.len() {
            let mut y = partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    // round the expansion, largest part first, with the half-way correction
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// ψ(s): 1 on [0, 1], ½(1 + cos(π(s − 1))) on (1, 2), 0 beyond.
/// |ψ'| ≤ π/2 and |ψ''| ≤ π²/2, so χ_R = ψ(|x|/R) has |∇χ_R| ≤ π/(2R).
#[inline]
pub fn cutoff_profile(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * (s - 1.0)).cos())
    }
}

fn label_particles(cloud: &ParticleCloud, label: Label) -> Vec<(PlaneVector, f64)> {
    cloud
        .with_label(label)
        .map(|p| (p.position, p.weight))
        .collect()
}

fn center_of(items: &[(PlaneVector, f64)], label: Label) -> Result<(PlaneVector, f64)> {
    let omega: f64 = items.iter().map(|(_, w)| w).sum();
    if omega == 0.0 {
        return Err(Error::ZeroCirculation(label.to_string()));
    }
    let s = items
        .iter()
        .fold(PlaneVector::ZERO, |acc, (x, w)| acc + *x * *w);
    Ok((s * (1.0 / omega), omega))
}

/// Center of vorticity and second moment of one label.
pub fn center_and_moment(cloud: &ParticleCloud, label: Label) -> Result<(PlaneVector, f64)> {
    let items = label_particles(cloud, label);
    let (p, omega) = center_of(&items, label)?;
    let m: f64 = items.iter().map(|(x, w)| w * (*x - p).norm_sq()).sum();
    Ok((p, m / (2.0 * omega)))
}

/// μ(R) about the label's center.
pub fn cutoff_mass(cloud: &ParticleCloud, label: Label, radius: f64) -> Result<f64> {
    check_param(radius > 0.0, "R", radius, "must be positive")?;
    let items = label_particles(cloud, label);
    let (p, omega) = center_of(&items, label)?;
    Ok(outer_mass_about(&items, p, omega, radius))
}

fn outer_mass_about(items: &[(PlaneVector, f64)], p: PlaneVector, omega: f64, radius: f64) -> f64 {
    let s: f64 = items
        .iter()
        .map(|(x, w)| w * (1.0 - cutoff_profile((*x - p).norm() / radius)))
        .fold(0.0, |a, x| a + x);
    s / omega
}

/// m(r) about the label's center; zero for a label with no particles.
pub fn ring_mass(cloud: &ParticleCloud, label: Label, r: f64) -> Result<f64> {
    check_param(r > 0.0, "r", r, "must be positive")?;
    let items = label_particles(cloud, label);
    if items.is_empty() {
        return Ok(0.0);
    }
    let (p, _) = center_of(&items, label)?;
    Ok(ring_mass_about(&items, p, r))
}

fn ring_mass_about(items: &[(PlaneVector, f64)], p: PlaneVector, r: f64) -> f64 {
    items
        .iter()
        .filter(|(x, _)| (*x - p).norm() >= r)
        .map(|(_, w)| w.abs())
        .fold(0.0, |a, x| a + x)
}

/// Smallest radius about the label's center holding the fraction `f` of its
/// absolute circulation. f = 1 gives the farthest particle.
pub fn support_radius(cloud: &ParticleCloud, label: Label, fraction: f64) -> Result<f64> {
    let items = label_particles(cloud, label);
    if items.is_empty() {
        return Err(Error::EmptyLabel(label.to_string()));
    }
    let (p, _) = center_of(&items, label)?;
    let sorted = sorted_distances(&items, p);
    radius_for_fraction(&sorted, fraction)
}

fn sorted_distances(items: &[(PlaneVector, f64)], p: PlaneVector) -> Vec<(f64, f64)> {
    let mut d: Vec<(f64, f64)> = items
        .iter()
        .map(|(x, w)| ((*x - p).norm(), w.abs()))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    d
}

fn radius_for_fraction(sorted: &[(f64, f64)], fraction: f64) -> Result<f64> {
    check_param(
        fraction > 0.0 && fraction <= 1.0,
        "fraction",
        fraction,
        "must lie in (0, 1]",
    )?;
    if fraction == 1.0 {
        return Ok(sorted.last().map(|d| d.0).unwrap_or(0.0));
    }
    let total: f64 = sorted.iter().map(|d| d.1).sum();
    let target = fraction * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    for &(r, w) in sorted {
        acc += w;
        if acc >= target {
            return Ok(r);
        }
    }
    Ok(sorted.last().map(|d| d.0).unwrap_or(0.0))
}

/// 2e^{2Lt}[I₀ + F₂²/2 ((1 − e^{−Lt})/L)²]
pub fn theory_moment_bound(t: f64, i0: f64, l: f64, f2: f64) -> Result<f64> {
    check_param(l > 0.0 && l.is_finite(), "L", l, "must be positive")?;
    check_param(i0 >= 0.0, "I0", i0, "must be nonnegative")?;
    check_param(f2 >= 0.0, "F2", f2, "must be nonnegative")?;
    let int = -(-l * t).exp_m1() / l;
    Ok(2.0 * (2.0 * l * t).exp() * (i0 + 0.5 * f2 * f2 * int * int))
}

/// e^{Lt}[g₀ + 2L(√I₀ + F₂/(√2 L)) (t − (1 − e^{−Lt})/L)/L + F₂ (1 − e^{−Lt})/L]
pub fn theory_center_bound(t: f64, gap0: f64, i0: f64, l: f64, f2: f64) -> Result<f64> {
    check_param(l > 0.0 && l.is_finite(), "L", l, "must be positive")?;
    check_param(i0 >= 0.0, "I0", i0, "must be nonnegative")?;
    check_param(f2 >= 0.0, "F2", f2, "must be nonnegative")?;
    check_param(gap0 >= 0.0, "gap0", gap0, "must be nonnegative")?;
    let single = -(-l * t).exp_m1() / l;
    let double = (t - single) / l;
    let drive = 2.0 * l * (i0.sqrt() + f2 / (2f64.sqrt() * l));
    Ok((l * t).exp() * (gap0 + drive * double + f2 * single))
}

/// G = Σ_m |p_m(measured) − p_m(ODE)|.
pub fn gronwall_gap(cloud: &ParticleCloud, ode_positions: &[PlaneVector]) -> Result<f64> {
    let m = cloud.vortex_count();
    if m != ode_positions.len() {
        return Err(Error::LabelCountMismatch {
            expected: m,
            actual: ode_positions.len(),
        });
    }
    let mut g = 0.0;
    for (k, q) in ode_positions.iter().enumerate() {
        let (p, _) = center_and_moment(cloud, Label::Vortex(k))?;
        g += (p - *q).norm();
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfinementReport {
    pub tau_measured: f64,
    pub threshold_radius: f64,
    pub required: f64,
    pub satisfied: bool,
}

/// Confinement time of a series of per-label radii: the last record time
/// before any radius exceeds A^a (zero if the first record already does,
/// the final time if none ever does). Satisfied when τ ≥ c₀|log A|.
pub fn confinement_check(
    times: &[f64],
    radii: &[Vec<f64>],
    a_eps: f64,
    a: f64,
    c0: f64,
) -> Result<ConfinementReport> {
    if times.len() != radii.len() {
        return Err(Error::Invalid("one radius list per record is required".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Invalid("record times must be nondecreasing".into()));
    }
    check_param(a_eps > 0.0, "A_eps", a_eps, "must be positive")?;
    let threshold = a_eps.powf(a);
    let mut tau = times.last().copied().unwrap_or(0.0);
    for (k, rs) in radii.iter().enumerate() {
        if rs.iter().any(|r| *r > threshold) {
            tau = if k == 0 { 0.0 } else { times[k - 1] };
            break;
        }
    }
    let required = c0 * a_eps.ln().abs();
    Ok(ConfinementReport {
        tau_measured: tau,
        threshold_radius: threshold,
        required,
        satisfied: tau >= required,
    })
}

/// Confinement check on recorded diagnostics, using the support radius at
/// fraction `f` (which must be recorded, or 1).
pub fn confinement_from_records(
    records: &[DiagnosticsRecord],
    spec: &DiagnosticsSpec,
    fraction: f64,
) -> Result<ConfinementReport> {
    let idx = if fraction == 1.0 {
        None
    } else {
        Some(
            spec.fractions
                .iter()
                .position(|f| *f == fraction)
                .ok_or_else(|| Error::Invalid(format!("support fraction {fraction} is not recorded")))?,
        )
    };
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let radii: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            r.labels
                .iter()
                .map(|l| match idx {
                    Some(i) => l.support_radius_frac[i],
                    None => l.support_radius_100,
                })
                .collect()
        })
        .collect();
    let a_eps = records.first().map(|r| r.a_eps).unwrap_or(f64::NAN);
    confinement_check(&times, &radii, a_eps, spec.a, spec.c0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSpec {
    /// Radii R for μ(R).
    pub outer_radii: Vec<f64>,
    /// Radii r for m(r).
    pub ring_radii: Vec<f64>,
    /// Support fractions in (0, 1); f = 1 is always recorded.
    pub fractions: Vec<f64>,
    /// Confinement exponent: radius A^a.
    pub a: f64,
    /// Lebesgue exponent for A and the perturbation field bound.
    pub q: f64,
    pub c0: f64,
    /// Global |ω| mass outside the balls of radius ε^e around the ODE
    /// positions, for this e.
    pub outside_exponent: Option<f64>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            outer_radii: Vec::new(),
            ring_radii: Vec::new(),
            fractions: vec![0.99],
            a: 0.45,
            q: 4.0,
            c0: 0.1,
            outside_exponent: None,
        }
    }
}

impl DiagnosticsSpec {
    pub fn validate(&self) -> Result<()> {
        for &r in self.outer_radii.iter().chain(&self.ring_radii) {
            check_param(r > 0.0 && r.is_finite(), "radius", r, "diagnostic radii must be positive")?;
        }
        for &f in &self.fractions {
            check_param(f > 0.0 && f < 1.0, "fraction", f, "must lie in (0, 1)")?;
        }
        check_param(self.a > 0.0 && self.a.is_finite(), "a", self.a, "must be positive")?;
        check_param(self.q > 2.0 && self.q.is_finite(), "q", self.q, "must exceed 2")?;
        check_param(self.c0 >= 0.0 && self.c0.is_finite(), "c0", self.c0, "must be nonnegative")?;
        if let Some(e) = self.outside_exponent {
            check_param(e > 0.0 && e < 1.0, "outside_exponent", e, "must lie in (0, 1)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDiagnostics {
    pub circulation: f64,
    pub center: PlaneVector,
    pub moment: f64,
    pub support_radius_100: f64,
    pub support_radius_frac: Vec<f64>,
    pub outer_mass: Vec<f64>,
    pub ring_mass: Vec<f64>,
    pub ode_position: PlaneVector,
    pub gap: f64,
    pub moment_bound: f64,
    pub center_bound: f64,
}

impl LabelDiagnostics {
    pub fn moment_ratio(&self) -> f64 {
        self.moment / self.moment_bound
    }

    pub fn center_ratio(&self) -> f64 {
        if self.gap == 0.0 {
            0.0
        } else {
            self.gap / self.center_bound
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: usize,
    pub labels: Vec<LabelDiagnostics>,
    pub perturbation_circulation: f64,
    pub total_circulation: f64,
    pub linear_impulse: PlaneVector,
    pub angular_impulse: f64,
    pub gronwall_gap: f64,
    /// Smallest distance between measured label centers (∞ for one label).
    pub min_separation: f64,
    /// Smallest center separation seen so far, which sets `l_estimate`.
    pub min_separation_so_far: f64,
    pub l_estimate: f64,
    pub f2_sup: f64,
    pub a_eps: f64,
    pub outside_mass: f64,
}

/// The theory constants of a run, fixed at t = 0 except for L, which is
/// refreshed at every record from the smallest separation seen so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryBounds {
    pub a_eps: f64,
    pub l_estimate: f64,
    pub f2_sup: f64,
    pub i0: Vec<f64>,
    pub gap0: Vec<f64>,
    pub a: f64,
}

impl TheoryBounds {
    pub fn moment_bound(&self, m: usize, t: f64) -> f64 {
        theory_moment_bound(t, self.i0[m], self.l_estimate, self.f2_sup).unwrap_or(f64::NAN)
    }

    pub fn center_gap_bound(&self, m: usize, t: f64) -> f64 {
        theory_center_bound(t, self.gap0[m], self.i0[m], self.l_estimate, self.f2_sup).unwrap_or(f64::NAN)
    }

    pub fn confinement_radius(&self) -> f64 {
        self.a_eps.powf(self.a)
    }
}

/// Stateful recorder carrying the t = 0 quantities the bounds need.
#[derive(Debug, Clone)]
pub struct DiagnosticsState {
    spec: DiagnosticsSpec,
    bounds: TheoryBounds,
    gammas: Vec<f64>,
    epsilon: f64,
    min_sep: f64,
    initialized: bool,
}

impl DiagnosticsState {
    /// `perturbation_norms` are (‖ω_p‖₁, ‖ω_p‖_q) of the initial
    /// perturbation; they are conserved by the flow, so F₂ is fixed.
    pub fn new(
        spec: DiagnosticsSpec,
        gammas: Vec<f64>,
        epsilon: f64,
        a_eps: f64,
        perturbation_norms: (f64, f64),
    ) -> Result<Self> {
        spec.validate()?;
        let (l1, lq) = perturbation_norms;
        let f2_sup = velocity_bound(l1, lq, spec.q)?;
        let m = gammas.len();
        Ok(DiagnosticsState {
            bounds: TheoryBounds {
                a_eps,
                l_estimate: f64::NAN,
                f2_sup,
                i0: vec![0.0; m],
                gap0: vec![0.0; m],
                a: spec.a,
            },
            spec,
            gammas,
            epsilon,
            min_sep: f64::INFINITY,
            initialized: false,
        })
    }

    pub fn spec(&self) -> &DiagnosticsSpec {
        &self.spec
    }

    pub fn bounds(&self) -> &TheoryBounds {
        &self.bounds
    }

    fn lipschitz(&self) -> f64 {
        if self.gammas.len() < 2 || !self.min_sep.is_finite() {
            return f64::NAN;
        }
        // worst vortex: largest circulation among the others
        let total: f64 = self.gammas.iter().map(|g| g.abs()).sum();
        let others = self
            .gammas
            .iter()
            .map(|g| total - g.abs())
            .fold(0.0, f64::max);
        lipschitz_farfield_bound(others, self.min_sep).unwrap_or(f64::NAN)
    }

    /// Diagnostics of `cloud` against the ODE positions at the same time.
    pub fn record(
        &mut self,
        cloud: &ParticleCloud,
        ode_positions: &[PlaneVector],
        step: usize,
    ) -> Result<DiagnosticsRecord> {
        let m = self.gammas.len();
        if ode_positions.len() != m {
            return Err(Error::LabelCountMismatch {
                expected: m,
                actual: ode_positions.len(),
            });
        }
        let mut groups: Vec<Vec<(PlaneVector, f64)>> = vec![Vec::new(); m];
        let mut perturbation = Vec::new();
        for p in &cloud.particles {
            match p.label {
                Label::Vortex(k) if k < m => groups[k].push((p.position, p.weight)),
                Label::Vortex(k) => {
                    return Err(Error::LabelCountMismatch {
                        expected: m,
                        actual: k + 1,
                    })
                }
                Label::Perturbation => perturbation.push(p.weight),
            }
        }

        let mut centers = Vec::with_capacity(m);
        let mut partial = Vec::with_capacity(m);
        for (k, items) in groups.iter().enumerate() {
            let label = Label::Vortex(k);
            if items.is_empty() {
                return Err(Error::EmptyLabel(label.to_string()));
            }
            let (p, omega) = center_of(items, label)?;
            let moment = items.iter().map(|(x, w)| w * (*x - p).norm_sq()).sum::<f64>() / (2.0 * omega);
            let sorted = sorted_distances(items, p);
            let support_radius_100 = radius_for_fraction(&sorted, 1.0)?;
            let support_radius_frac = self
                .spec
                .fractions
                .iter()
                .map(|&f| radius_for_fraction(&sorted, f))
                .collect::<Result<Vec<_>>>()?;
            let outer_mass = self
                .spec
                .outer_radii
                .iter()
                .map(|&r| outer_mass_about(items, p, omega, r))
                .collect();
            let ring_mass = self
                .spec
                .ring_radii
                .iter()
                .map(|&r| ring_mass_about(items, p, r))
                .collect();
            centers.push(p);
            partial.push(LabelDiagnostics {
                circulation: exact_sum(items.iter().map(|(_, w)| *w)),
                center: p,
                moment,
                support_radius_100,
                support_radius_frac,
                outer_mass,
                ring_mass,
                ode_position: ode_positions[k],
                gap: (p - ode_positions[k]).norm(),
                moment_bound: f64::NAN,
                center_bound: f64::NAN,
            });
        }

        let mut sep = f64::INFINITY;
        for i in 0..m {
            for j in i + 1..m {
                sep = sep.min(centers[i].distance(centers[j]));
            }
        }
        self.min_sep = self.min_sep.min(sep);
        if !self.initialized {
            for (k, l) in partial.iter().enumerate() {
                self.bounds.i0[k] = l.moment;
                self.bounds.gap0[k] = l.gap;
            }
            self.initialized = true;
        }
        self.bounds.l_estimate = self.lipschitz();
        let t = cloud.time;
        for (k, l) in partial.iter_mut().enumerate() {
            l.moment_bound = self.bounds.moment_bound(k, t);
            l.center_bound = self.bounds.center_gap_bound(k, t);
        }

        let outside_mass = match self.spec.outside_exponent {
            Some(e) => {
                let r = self.epsilon.powf(e);
                cloud
                    .particles
                    .iter()
                    .filter(|p| ode_positions.iter().all(|q| (p.position - *q).norm() > r))
                    .map(|p| p.weight.abs())
                    .fold(0.0, |a, x| a + x)
            }
            None => f64::NAN,
        };

        Ok(DiagnosticsRecord {
            t,
            step,
            gronwall_gap: partial.iter().map(|l| l.gap).fold(0.0, |a, x| a + x),
            labels: partial,
            perturbation_circulation: exact_sum(perturbation),
            total_circulation: exact_sum(cloud.particles.iter().map(|p| p.weight)),
            linear_impulse: cloud.linear_impulse(),
            angular_impulse: cloud.angular_impulse(),
            min_separation: sep,
            min_separation_so_far: self.min_sep,
            l_estimate: self.bounds.l_estimate,
            f2_sup: self.bounds.f2_sup,
            a_eps: self.bounds.a_eps,
            outside_mass,
        })
    }
}

fn fmt_radius(r: f64) -> String {
    format!("{r}")
}

/// One column of the diagnostics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    /// Vortex label the column belongs to, if any.
    pub label: Option<usize>,
    pub quantity: String,
    /// Radius or fraction parameter of the column, if any.
    pub parameter: Option<f64>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSchema {
    pub format: String,
    pub version: u32,
    pub vortex_labels: usize,
    pub columns: Vec<ColumnSchema>,
}

pub const SCHEMA_FORMAT: &str = "vortexlab-diagnostics";
pub const SCHEMA_VERSION: u32 = 1;

/// Column layout of the CSV produced by [`csv_row`].
pub fn schema(spec: &DiagnosticsSpec, labels: usize) -> DiagnosticsSchema {
    let mut cols = Vec::new();
    let mut push = |name: String, label: Option<usize>, quantity: &str, parameter: Option<f64>, description: String| {
        cols.push(ColumnSchema {
            name,
            label,
            quantity: quantity.to_string(),
            parameter,
            description,
        })
    };
    push("t".into(), None, "time", None, "simulation time".into());
    push("step".into(), None, "step", None, "step index".into());
    for m in 0..labels {
        let l = Some(m);
        push(format!("gamma_{m}"), l, "circulation", None, format!("circulation of vortex {m}"));
        push(format!("px_{m}"), l, "center_x", None, format!("x of the center of vorticity of vortex {m}"));
        push(format!("py_{m}"), l, "center_y", None, format!("y of the center of vorticity of vortex {m}"));
        push(format!("I_{m}"), l, "moment", None, format!("second moment of vortex {m} about its center"));
        push(format!("R100_{m}"), l, "support_radius", Some(1.0), format!("distance of the farthest particle of vortex {m}"));
        for &f in &spec.fractions {
            push(
                format!("R{}_{m}", fmt_radius(f * 100.0)),
                l,
                "support_radius",
                Some(f),
                format!("radius holding fraction {f} of vortex {m}"),
            );
        }
        for &r in &spec.outer_radii {
            push(format!("mu_{m}_R{}", fmt_radius(r)), l, "cutoff_mass", Some(r), format!("smooth outer mass of vortex {m} beyond R = {r}"));
        }
        for &r in &spec.ring_radii {
            push(format!("ring_{m}_r{}", fmt_radius(r)), l, "ring_mass", Some(r), format!("absolute circulation of vortex {m} at distance >= {r}"));
        }
        push(format!("odex_{m}"), l, "ode_x", None, format!("x of point vortex {m}"));
        push(format!("odey_{m}"), l, "ode_y", None, format!("y of point vortex {m}"));
        push(format!("gap_{m}"), l, "gap", None, format!("distance from center {m} to point vortex {m}"));
        push(format!("Ibound_{m}"), l, "moment_bound", None, format!("moment bound for vortex {m}"));
        push(format!("Iratio_{m}"), l, "moment_ratio", None, format!("I_{m} / Ibound_{m}"));
        push(format!("gapbound_{m}"), l, "center_bound", None, format!("center gap bound for vortex {m}"));
        push(format!("gapratio_{m}"), l, "center_ratio", None, format!("gap_{m} / gapbound_{m}"));
    }
    push("gamma_p".into(), None, "circulation", None, "circulation of the perturbation".into());
    push("gamma_total".into(), None, "circulation", None, "total circulation".into());
    push("impulse_x".into(), None, "linear_impulse_x", None, "sum of w x".into());
    push("impulse_y".into(), None, "linear_impulse_y", None, "sum of w y".into());
    push("angular_impulse".into(), None, "angular_impulse", None, "sum of w |x|^2".into());
    push("G".into(), None, "gronwall_gap", None, "sum of the center gaps".into());
    push("min_sep".into(), None, "separation", None, "smallest distance between vortex centers".into());
    push("min_sep_so_far".into(), None, "separation", None, "smallest center distance up to this time".into());
    push("L".into(), None, "lipschitz", None, "Lipschitz estimate used in the bounds".into());
    push("F2".into(), None, "perturbation_velocity", None, "bound on the perturbation velocity".into());
    push("A_eps".into(), None, "a_eps", None, "interpolation size of the perturbation".into());
    push(
        "outside_mass".into(),
        None,
        "outside_mass",
        spec.outside_exponent,
        "absolute circulation outside the balls of radius eps^e about the point vortices".into(),
    );
    DiagnosticsSchema {
        format: SCHEMA_FORMAT.into(),
        version: SCHEMA_VERSION,
        vortex_labels: labels,
        columns: cols,
    }
}

pub fn csv_header(spec: &DiagnosticsSpec, labels: usize) -> Vec<String> {
    schema(spec, labels).columns.into_iter().map(|c| c.name).collect()
}

/// Shortest round-trip decimal; negative zero is written as 0.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// Values in the column order of [`schema`], formatted as shortest
/// round-trip decimals.
pub fn csv_row(record: &DiagnosticsRecord) -> Vec<String> {
    let f = format_float;
    let mut row = vec![f(record.t), record.step.to_string()];
    for l in &record.labels {
        row.push(f(l.circulation));
        row.push(f(l.center.x));
        row.push(f(l.center.y));
        row.push(f(l.moment));
        row.push(f(l.support_radius_100));
        row.extend(l.support_radius_frac.iter().map(|x| f(*x)));
        row.extend(l.outer_mass.iter().map(|x| f(*x)));
        row.extend(l.ring_mass.iter().map(|x| f(*x)));
        row.push(f(l.ode_position.x));
        row.push(f(l.ode_position.y));
        row.push(f(l.gap));
        row.push(f(l.moment_bound));
        row.push(f(l.moment_ratio()));
        row.push(f(l.center_bound));
        row.push(f(l.center_ratio()));
    }
    for x in [
        record.perturbation_circulation,
        record.total_circulation,
        record.linear_impulse.x,
        record.linear_impulse.y,
        record.angular_impulse,
        record.gronwall_gap,
        record.min_separation,
        record.min_separation_so_far,
        record.l_estimate,
        record.f2_sup,
        record.a_eps,
        record.outside_mass,
    ] {
        row.push(f(x));
    }
    row
}
