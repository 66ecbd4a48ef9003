//! Vortex-blob particle method for the 2D Euler equations.
//!
//! Particles move with the blob-regularized velocity of the whole cloud;
//! weights, labels and carried vorticity never change. There is no
//! remeshing. The blob kernel vanishes at zero separation, so a particle's
//! own contribution drops out of every sum without special handling.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsRecord, DiagnosticsSpec, DiagnosticsState};
use crate::error::{check_param, Error, Result};
use crate::kernel::{velocity_direct, velocity_tree, BlobSpec, ExecMode, SourceSet, TreecodeParams};
use crate::particles::{Label, LabelFilter, ParticleCloud};
use crate::pointvortex::{self, rk4_combine, time_grid};
use crate::profiles::InitialData;
use crate::vector::PlaneVector;

/// Above this many particles the automatic method switches to the treecode.
pub const DIRECT_LIMIT: usize = 4_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VelocityMethod {
    Direct,
    Tree(TreecodeParams),
}

impl VelocityMethod {
    pub fn auto(particles: usize) -> Self {
        if particles <= DIRECT_LIMIT {
            VelocityMethod::Direct
        } else {
            VelocityMethod::Tree(TreecodeParams::default())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub dt: f64,
    pub t_end: f64,
    pub velocity_method: VelocityMethod,
    pub record_every: usize,
    pub exec: ExecMode,
}

impl SimSpec {
    pub fn new(dt: f64, t_end: f64, velocity_method: VelocityMethod, record_every: usize) -> Result<Self> {
        let spec = SimSpec {
            dt,
            t_end,
            velocity_method,
            record_every,
            exec: ExecMode::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn serial(mut self) -> Self {
        self.exec = ExecMode::Serial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_param(self.dt > 0.0 && self.dt.is_finite(), "dt", self.dt, "must be positive")?;
        check_param(self.t_end >= 0.0 && self.t_end.is_finite(), "t_end", self.t_end, "must be nonnegative")?;
        if self.record_every == 0 {
            return Err(Error::Invalid("record_every must be at least 1".into()));
        }
        if let VelocityMethod::Tree(p) = self.velocity_method {
            p.validate()?;
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        time_grid(self.t_end, self.dt).len() - 1
    }
}

/// 10⁻³ min(1, d²/Γ_max), d the smallest center separation (1e-3 for a
/// single vortex).
pub fn default_dt(centers: &[PlaneVector], gammas: &[f64]) -> f64 {
    let d = pointvortex::min_pairwise_distance(centers);
    let g = gammas.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    if !d.is_finite() || g == 0.0 {
        return 1e-3;
    }
    1e-3 * (d * d / g).min(1.0)
}

/// Largest step resolving the core rotation: `fraction / Ω`, with
/// Ω = max_m |γ_m| η_m(0) / (2ε_m²) the angular velocity at the center of
/// the fastest core.
pub fn core_dt_cap(data: &InitialData, fraction: f64) -> f64 {
    let omega = data
        .vortices
        .iter()
        .map(|v| v.gamma.abs() * v.profile.eval_radial(0.0) / (2.0 * v.epsilon * v.epsilon))
        .fold(0.0, f64::max);
    if omega == 0.0 {
        f64::INFINITY
    } else {
        fraction / omega
    }
}

fn blob(cloud: &ParticleCloud) -> Result<BlobSpec> {
    BlobSpec::blob(cloud.blob_delta)
}

fn evaluate(
    sources: &SourceSet,
    targets: &[PlaneVector],
    kernel: BlobSpec,
    spec: &SimSpec,
) -> Result<Vec<PlaneVector>> {
    if sources.is_empty() {
        return Ok(vec![PlaneVector::ZERO; targets.len()]);
    }
    match spec.velocity_method {
        VelocityMethod::Direct => velocity_direct(sources, targets, kernel, spec.exec),
        VelocityMethod::Tree(params) => velocity_tree(sources, targets, kernel, params, spec.exec),
    }
}

/// Velocity induced by the particles matching `filter` at arbitrary points.
pub fn velocity_at(
    cloud: &ParticleCloud,
    filter: LabelFilter,
    targets: &[PlaneVector],
    spec: &SimSpec,
) -> Result<Vec<PlaneVector>> {
    let sources = SourceSet::from_cloud_filtered(cloud, filter);
    evaluate(&sources, targets, blob(cloud)?, spec)
}

/// Velocity of the whole cloud at every particle.
pub fn total_velocity(cloud: &ParticleCloud, spec: &SimSpec) -> Result<Vec<PlaneVector>> {
    let sources = SourceSet::from_cloud(cloud);
    evaluate(&sources, &cloud.positions(), blob(cloud)?, spec)
}

/// Velocity of the particles matching `filter`, at every particle.
pub fn labeled_velocity(cloud: &ParticleCloud, filter: LabelFilter, spec: &SimSpec) -> Result<Vec<PlaneVector>> {
    velocity_at(cloud, filter, &cloud.positions(), spec)
}

fn velocity_of(positions: &[PlaneVector], weights: &[f64], kernel: BlobSpec, spec: &SimSpec) -> Result<Vec<PlaneVector>> {
    let sources = SourceSet::new(positions, weights)?;
    evaluate(&sources, positions, kernel, spec)
}

/// One RK4 step of size `dt`, re-evaluating the full velocity at each stage.
pub fn step_by(cloud: &ParticleCloud, dt: f64, spec: &SimSpec) -> Result<ParticleCloud> {
    let kernel = blob(cloud)?;
    let x = cloud.positions();
    let w: Vec<f64> = cloud.particles.iter().map(|p| p.weight).collect();
    let shifted = |k: &[PlaneVector], h: f64| -> Vec<PlaneVector> { x.iter().zip(k).map(|(p, v)| *p + *v * h).collect() };
    let k1 = velocity_of(&x, &w, kernel, spec)?;
    let k2 = velocity_of(&shifted(&k1, 0.5 * dt), &w, kernel, spec)?;
    let k3 = velocity_of(&shifted(&k2, 0.5 * dt), &w, kernel, spec)?;
    let k4 = velocity_of(&shifted(&k3, dt), &w, kernel, spec)?;
    let next = rk4_combine(&x, &k1, &k2, &k3, &k4, dt);
    let mut out = cloud.clone();
    for (p, x) in out.particles.iter_mut().zip(next) {
        p.position = x;
    }
    out.time = cloud.time + dt;
    Ok(out)
}

/// One RK4 step of size `spec.dt`.
pub fn step(cloud: &ParticleCloud, spec: &SimSpec) -> Result<ParticleCloud> {
    step_by(cloud, spec.dt, spec)
}

/// What a run needs beyond the cloud: the point-vortex initial positions
/// to compare against and the size of the initial perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSetup {
    pub ode_centers: Vec<PlaneVector>,
    pub epsilon: f64,
    pub a_eps: f64,
    /// (‖ω_p‖₁, ‖ω_p‖_q) of the initial perturbation.
    pub perturbation_norms: (f64, f64),
    pub diagnostics: DiagnosticsSpec,
    /// Keep a snapshot every this many records (0: only first and last).
    pub snapshot_every: usize,
}

impl RunSetup {
    pub fn from_initial_data(data: &InitialData, diagnostics: DiagnosticsSpec) -> Self {
        let q = diagnostics.q;
        RunSetup {
            ode_centers: data.centers(),
            epsilon: data.epsilon(),
            a_eps: data.a_eps(q),
            perturbation_norms: data.perturbation_norms(q),
            diagnostics,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Completed,
    Aborted { step: usize, time: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<ParticleCloud>,
    pub final_cloud: ParticleCloud,
    pub outcome: RunOutcome,
    /// Circulations used for the point-vortex comparison (sampled label totals).
    pub ode_gammas: Vec<f64>,
    pub dt: f64,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.outcome == RunOutcome::Completed
    }
}

/// Runs to `spec.t_end`, recording diagnostics at t = 0, every
/// `record_every` steps and at the end.
pub fn run(cloud: ParticleCloud, spec: &SimSpec, setup: &RunSetup) -> Result<RunRecord> {
    run_with_observer(cloud, spec, setup, |_| {})
}

/// As [`run`], calling `observer` on each record as soon as it is made.
/// Errors in the set-up are returned; failures while stepping end the run
/// with [`RunOutcome::Aborted`] and keep everything recorded so far.
pub fn run_with_observer<F: FnMut(&DiagnosticsRecord)>(
    cloud: ParticleCloud,
    spec: &SimSpec,
    setup: &RunSetup,
    mut observer: F,
) -> Result<RunRecord> {
    spec.validate()?;
    cloud.validate()?;
    let m = setup.ode_centers.len();
    let ode_gammas: Vec<f64> = (0..m).map(|k| cloud.label_circulation(Label::Vortex(k))).collect();
    let mut state = DiagnosticsState::new(
        setup.diagnostics.clone(),
        ode_gammas.clone(),
        setup.epsilon,
        setup.a_eps,
        setup.perturbation_norms,
    )?;
    let grid = time_grid(spec.t_end, spec.dt);
    let steps = grid.len() - 1;

    let mut out = RunRecord {
        records: Vec::new(),
        snapshots: Vec::new(),
        final_cloud: cloud.clone(),
        outcome: RunOutcome::Completed,
        ode_gammas: ode_gammas.clone(),
        dt: spec.dt,
    };
    let mut ode = setup.ode_centers.clone();
    let first = state.record(&cloud, &ode, 0)?;
    observer(&first);
    out.records.push(first);
    out.snapshots.push(cloud.clone());

    let mut current = cloud;
    let point = BlobSpec::singular();
    for k in 1..=steps {
        let t = grid[k];
        let h = t - grid[k - 1];
        let advanced = step_by(&current, h, spec).and_then(|mut next| {
            next.time = t;
            if next.particles.iter().any(|p| !p.position.is_finite()) {
                return Err(Error::NonFiniteState { step: k, time: t });
            }
            Ok(next)
        });
        let next_ode = if m > 1 {
            pointvortex::rk4_step(&ode, &ode_gammas, h, point)
        } else {
            Ok(ode.clone())
        };
        match (advanced, next_ode) {
            (Ok(c), Ok(o)) => {
                current = c;
                ode = o;
            }
            (Err(e), _) | (_, Err(e)) => {
                out.outcome = RunOutcome::Aborted {
                    step: k,
                    time: t,
                    reason: e.to_string(),
                };
                break;
            }
        }
        if k % spec.record_every == 0 || k == steps {
            match state.record(&current, &ode, k) {
                Ok(rec) => {
                    observer(&rec);
                    out.records.push(rec);
                }
                Err(e) => {
                    out.outcome = RunOutcome::Aborted {
                        step: k,
                        time: t,
                        reason: e.to_string(),
                    };
                    break;
                }
            }
            let n = out.records.len() - 1;
            if k == steps || (setup.snapshot_every > 0 && n % setup.snapshot_every == 0) {
                out.snapshots.push(current.clone());
            }
        }
    }
    if !out.completed() && out.snapshots.last().map(|s| s.time) != Some(current.time) {
        out.snapshots.push(current.clone());
    }
    out.final_cloud = current;
    Ok(out)
}
