//! The acceptance suite: one named criterion per check, each with a fixed
//! tolerance and a runtime limit. Scenario runs are shared between
//! criteria through a [`Context`] cache.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, ensure, Context as _, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vortexlab_core::diagnostics::confinement_from_records;
use vortexlab_core::fit::fit_power_law;
use vortexlab_core::kernel::{
    biot_savart, velocity_bound, velocity_direct, velocity_tree, BlobSpec, ExecMode, SourceSet, TreecodeParams,
};
use vortexlab_core::pointvortex::{
    conserved_quantities, hamiltonian_scale, integrate, IntegratorSpec, StopReason, VortexConfiguration,
};
use vortexlab_core::profiles::{beta_opt, concentration_exponent, decompose, RadialProfile};
use vortexlab_core::simulator::{RunOutcome, RunRecord, VelocityMethod};
use vortexlab_core::{Label, PlaneVector};

use crate::config::{EndTime, ScenarioConfig, VelocityChoice};
use crate::runner::{diagnostics_csv, prepare, simulate, snapshot_csv, Member, RunOptions};
use crate::scenarios;

/// Criteria known to fail for every faithful implementation; see the
/// README for the analysis.
pub const EXPECTED_FAILURES: &[&str] = &["decomposition"];

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

fn verdict(passed: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { passed, detail })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub struct Criterion {
    pub name: &'static str,
    pub title: &'static str,
    check: fn(&mut Context) -> Result<Verdict>,
}

pub fn criteria() -> &'static [Criterion] {
    &CRITERIA
}

static CRITERIA: [Criterion; 10] = [
    Criterion {
        name: "kernel",
        title: "kernel antisymmetry and orthogonality; treecode against direct sum",
        check: kernel_identities,
    },
    Criterion {
        name: "pointvortex",
        title: "point-vortex pair motion and invariants",
        check: point_vortex_analytics,
    },
    Criterion {
        name: "velocity-bound",
        title: "velocity bound from L1 and L4 norms on random clouds",
        check: velocity_bound_lemma,
    },
    Criterion {
        name: "decomposition",
        title: "Cauchy core/tail split: tail mass and A-quantity rate",
        check: decomposition,
    },
    Criterion {
        name: "single-vortex",
        title: "single Cauchy vortex stays put and keeps its moment",
        check: single_vortex,
    },
    Criterion {
        name: "bounds",
        title: "moment and center-gap bounds on the corotating pair",
        check: bounds,
    },
    Criterion {
        name: "confinement",
        title: "R99 at T = 1 below eps^0.45 and decreasing with eps",
        check: confinement,
    },
    Criterion {
        name: "concentration",
        title: "outer mass slope against eps for a single Cauchy vortex",
        check: concentration,
    },
    Criterion {
        name: "long-time",
        title: "confinement up to c0 |log A_eps|",
        check: long_time,
    },
    Criterion {
        name: "determinism",
        title: "serial reruns byte-identical; parallel matches serial",
        check: determinism,
    },
];

/// A finished scenario member.
pub struct MemberRun {
    pub member: Member,
    pub record: RunRecord,
    pub seconds: f64,
}

/// Shares scenario runs between criteria; runs are keyed by everything
/// but the scenario's name, so identical set-ups run once.
#[derive(Default)]
pub struct Context {
    runs: HashMap<String, Arc<MemberRun>>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn run(&mut self, config: &ScenarioConfig, epsilon: f64, opts: RunOptions) -> Result<Arc<MemberRun>> {
        let mut key_config = config.clone();
        key_config.name = String::new();
        key_config.description = String::new();
        key_config.epsilon = Some(epsilon);
        key_config.epsilon_sweep = None;
        let key = format!("{}|{:?}", key_config.to_json(), opts);
        if let Some(r) = self.runs.get(&key) {
            return Ok(r.clone());
        }
        let member = prepare(config, epsilon, opts)?;
        let start = Instant::now();
        let record = simulate(&member)?;
        let run = Arc::new(MemberRun {
            member,
            record,
            seconds: start.elapsed().as_secs_f64(),
        });
        self.runs.insert(key, run.clone());
        Ok(run)
    }

    pub fn builtin(&mut self, name: &str, epsilon: f64) -> Result<Arc<MemberRun>> {
        let config = builtin(name)?;
        self.run(&config, epsilon, RunOptions::default())
    }

    /// Every ε of a built-in scenario, in file order.
    pub fn sweep(&mut self, name: &str) -> Result<Vec<Arc<MemberRun>>> {
        let config = builtin(name)?;
        config
            .epsilons()
            .into_iter()
            .map(|e| self.run(&config, e, RunOptions::default()))
            .collect()
    }
}

fn builtin(name: &str) -> Result<ScenarioConfig> {
    Ok(scenarios::builtin(name).ok_or_else(|| anyhow!("no built-in scenario {name}"))??)
}

pub fn run_criterion(c: &Criterion, ctx: &mut Context) -> CriterionResult {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| (c.check)(ctx)));
    let (passed, detail) = match outcome {
        Ok(Ok(v)) => (v.passed, v.detail),
        Ok(Err(e)) => (false, format!("error: {e:#}")),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            (false, format!("panicked: {msg}"))
        }
    };
    CriterionResult {
        name: c.name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs `suite` ("all" or one criterion name), calling `each` as results
/// come in.
pub fn run_suite(suite: &str, mut each: impl FnMut(&CriterionResult)) -> Result<Vec<CriterionResult>> {
    let selected: Vec<&Criterion> = if suite == "all" {
        CRITERIA.iter().collect()
    } else {
        let c = CRITERIA
            .iter()
            .find(|c| c.name == suite)
            .ok_or_else(|| anyhow!("unknown suite `{suite}`; expected `all` or one of: {}", suite_names().join(", ")))?;
        vec![c]
    };
    let mut ctx = Context::new();
    let mut out = Vec::new();
    for c in selected {
        let r = run_criterion(c, &mut ctx);
        each(&r);
        out.push(r);
    }
    Ok(out)
}

pub fn suite_names() -> Vec<&'static str> {
    CRITERIA.iter().map(|c| c.name).collect()
}

fn max_rel_err(approx: &[PlaneVector], exact: &[PlaneVector]) -> f64 {
    let scale = exact.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let err = approx.iter().zip(exact).map(|(a, e)| (*a - *e).norm()).fold(0.0, f64::max);
    err / scale
}

fn kernel_identities(_: &mut Context) -> Result<Verdict> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b65726e);
    let (mut anti, mut orth) = (0.0f64, 0.0f64);
    for _ in 0..100_000 {
        let z = PlaneVector::new(rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3));
        let delta: f64 = 10f64.powf(rng.gen_range(-3.0..1.0));
        for spec in [BlobSpec::singular(), BlobSpec::blob(delta)?] {
            let k = biot_savart(z, spec)?;
            let kn = biot_savart(-z, spec)?;
            anti = anti.max((k + kn).norm() / k.norm());
            orth = orth.max(z.dot(k).abs() / (z.norm() * k.norm()));
        }
    }

    let n = 10_000;
    let params = TreecodeParams::new(0.5, 64, 6)?;
    let spec = BlobSpec::blob(2.0 / (n as f64).sqrt())?;
    let mut worst = 0.0f64;
    for cloud in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(cloud);
        let pos: Vec<PlaneVector> = (0..n).map(|_| PlaneVector::new(rng.gen(), rng.gen())).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s = SourceSet::new(&pos, &w)?;
        let direct = velocity_direct(&s, &pos, spec, ExecMode::Parallel)?;
        let tree = velocity_tree(&s, &pos, spec, params, ExecMode::Parallel)?;
        worst = worst.max(max_rel_err(&tree, &direct));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        anti <= 1e-14 && orth <= 1e-14 && worst < 1e-4 && secs < 60.0,
        format!(
            "antisymmetry {anti:.1e}, orthogonality {orth:.1e} (tol 1e-14); treecode max relative error {worst:.2e} over 100 clouds of 10^4 (tol 1e-4); {secs:.1} s (limit 60 s)"
        ),
    )
}

fn point_vortex_analytics(_: &mut Context) -> Result<Verdict> {
    let start = Instant::now();
    let g = 2.0 * PI;
    let guard = 1e-6;

    // opposite pair, separation 1: both move along +x at unit speed
    let p0 = vec![PlaneVector::new(0.0, 0.5), PlaneVector::new(0.0, -0.5)];
    let pair = VortexConfiguration::new(p0.clone(), vec![g, -g])?;
    let traj = integrate(&pair, IntegratorSpec::new(1e-3, 10.0, guard)?)?;
    ensure!(traj.stop == StopReason::Completed, "translating pair stopped: {:?}", traj.stop);
    let translate = traj
        .times
        .iter()
        .zip(&traj.states)
        .flat_map(|(t, s)| s.iter().zip(&p0).map(move |(p, q)| (*p - (*q + PlaneVector::new(*t, 0.0))).norm()))
        .fold(0.0, f64::max);

    // same-sign pair, Γ = 2π each at separation 1: period π
    let q0 = vec![PlaneVector::new(0.5, 0.0), PlaneVector::new(-0.5, 0.0)];
    let co = VortexConfiguration::new(q0.clone(), vec![g, g])?;
    let traj = integrate(&co, IntegratorSpec::new(1e-3, PI, guard)?)?;
    ensure!(traj.stop == StopReason::Completed, "corotating pair stopped: {:?}", traj.stop);
    let period = traj
        .final_positions()
        .iter()
        .zip(&q0)
        .map(|(p, q)| (*p - *q).norm())
        .fold(0.0, f64::max);

    // three vortices, 10⁴ steps
    let three = VortexConfiguration::new(
        vec![PlaneVector::new(1.0, 0.0), PlaneVector::new(-0.5, 0.8), PlaneVector::new(-0.4, -0.9)],
        vec![1.0, 2.0, -0.5],
    )?;
    let traj = integrate(&three, IntegratorSpec::new(1e-3, 10.0, guard)?)?;
    ensure!(traj.stop == StopReason::Completed && traj.times.len() == 10_001, "three-vortex run stopped early");
    let c0 = conserved_quantities(&three)?;
    let scale = hamiltonian_scale(&three, c0.hamiltonian);
    let (mut dh, mut dc) = (0.0f64, 0.0f64);
    for k in 0..traj.states.len() {
        let c = conserved_quantities(&traj.configuration(k)?)?;
        dh = dh.max((c.hamiltonian - c0.hamiltonian).abs() / scale);
        dc = dc.max((c.center.value() - c0.center.value()).norm());
    }

    // zero total circulation: the linear impulse is the conserved center
    let neutral = VortexConfiguration::new(
        vec![PlaneVector::new(0.3, 0.2), PlaneVector::new(-0.6, 0.4), PlaneVector::new(0.1, -0.7)],
        vec![1.0, -1.5, 0.5],
    )?;
    let traj = integrate(&neutral, IntegratorSpec::new(1e-3, 10.0, guard)?)?;
    ensure!(traj.stop == StopReason::Completed, "neutral run stopped: {:?}", traj.stop);
    let i0 = conserved_quantities(&neutral)?.center.value();
    for k in 0..traj.states.len() {
        let c = conserved_quantities(&traj.configuration(k)?)?;
        dc = dc.max((c.center.value() - i0).norm());
    }

    let secs = start.elapsed().as_secs_f64();
    verdict(
        translate < 1e-6 && period < 1e-6 && dh < 1e-8 && dc < 1e-12,
        format!(
            "translation error {translate:.1e}, return after pi {period:.1e} (tol 1e-6); H drift {dh:.1e} (tol 1e-8); center/impulse drift {dc:.1e} (tol 1e-12); {secs:.1} s"
        ),
    )
}

/// Sum of random Gaussian and compact-bump patches with positive masses,
/// sampled on a grid: returns cell centers and weights.
fn random_field(rng: &mut ChaCha8Rng) -> Result<(Vec<PlaneVector>, Vec<f64>, f64)> {
    let k = rng.gen_range(1..=5);
    let mut patches = Vec::with_capacity(k);
    for _ in 0..k {
        let profile = if rng.gen_bool(0.5) {
            RadialProfile::gaussian(4.0)?
        } else {
            RadialProfile::compact_bump(4.0)?
        };
        let c = PlaneVector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r: f64 = rng.gen_range(0.05..0.3);
        let mass: f64 = rng.gen_range(0.1..1.0);
        patches.push((profile, c, r, mass));
    }
    let h = patches.iter().map(|p| p.2).fold(f64::INFINITY, f64::min) / 8.0;
    // Gaussian tails below 1e-15 of the peak lie beyond 6 radii
    let reach = patches.iter().map(|p| p.2).fold(0.0, f64::max) * 6.0;
    let n = ((1.0 + reach) / h).ceil() as i64;
    let mut pos = Vec::new();
    let mut w = Vec::new();
    for j in -n..=n {
        for i in -n..=n {
            let x = PlaneVector::new(i as f64 * h, j as f64 * h);
            let omega: f64 = patches
                .iter()
                .map(|(p, c, r, m)| m / (r * r) * p.eval((x - *c) * (1.0 / r)))
                .sum();
            if omega > 0.0 {
                pos.push(x);
                w.push(omega * h * h);
            }
        }
    }
    Ok((pos, w, h))
}

fn velocity_bound_lemma(_: &mut Context) -> Result<Verdict> {
    let start = Instant::now();
    let q = 4.0;
    let mut worst = f64::INFINITY;
    let mut samples = 0usize;
    for cloud in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + cloud);
        let (pos, w, h) = random_field(&mut rng)?;
        let area = h * h;
        let l1: f64 = w.iter().sum();
        let lq = w.iter().map(|x| (x / area).powf(q) * area).sum::<f64>().powf(1.0 / q);
        let bound = velocity_bound(l1, lq, q)?;
        // random points plus the densest cells
        let mut targets: Vec<PlaneVector> = (0..40)
            .map(|_| PlaneVector::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
            .collect();
        let mut order: Vec<usize> = (0..w.len()).collect();
        order.sort_by(|a, b| w[*b].total_cmp(&w[*a]));
        targets.extend(order.iter().take(10).map(|&i| pos[i]));
        let stride = (w.len() / 50).max(1);
        targets.extend(pos.iter().step_by(stride).copied());
        let s = SourceSet::new(&pos, &w)?;
        let u = velocity_direct(&s, &targets, BlobSpec::blob(h)?, ExecMode::Parallel)?;
        for v in u {
            samples += 1;
            worst = worst.min(bound / v.norm());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst >= 1.0 && secs < 60.0,
        format!("smallest bound/|u| = {worst:.3} over {samples} samples on 100 clouds (need >= 1); {secs:.1} s (limit 60 s)"),
    )
}

fn decomposition(_: &mut Context) -> Result<Verdict> {
    let profile = RadialProfile::cauchy();
    let beta = beta_opt(profile.sigma)?;
    let tail = decompose(&profile, 0.01, beta)?.tail_mass;
    let tail_err = (tail - 1.0 / 101.0).abs();
    let eps = [0.1, 0.05, 0.025, 0.0125];
    let a: Vec<f64> = eps
        .iter()
        .map(|&e| decompose(&profile, e, beta).map(|d| d.a_eps))
        .collect::<vortexlab_core::Result<_>>()?;
    let fit = fit_power_law(&eps, &a)?;
    let target = concentration_exponent(profile.sigma);
    let slope_ok = (fit.slope - target).abs() <= 0.1 * target;
    verdict(
        tail_err <= 1e-6 && slope_ok,
        format!(
            "tail mass at eps=0.01, beta={beta}: error {tail_err:.1e} (tol 1e-6); A-quantity slope {:.3} against target {target} +/- 10%",
            fit.slope
        ),
    )
}

fn single_vortex(ctx: &mut Context) -> Result<Verdict> {
    let run = ctx.builtin("single-cauchy", 0.05)?;
    let r = &run.record;
    ensure!(r.completed(), "run aborted: {:?}", r.outcome);
    let p0 = run.member.data.vortices[0].center;
    let i0 = r.records[0].labels[0].moment;
    let (mut drift, mut moment) = (0.0f64, 0.0f64);
    for rec in &r.records {
        drift = drift.max((rec.labels[0].center - p0).norm());
        moment = moment.max((rec.labels[0].moment / i0 - 1.0).abs());
    }
    let n = run.member.cloud.len();
    let t = r.records.last().map(|x| x.t).unwrap_or(0.0);
    verdict(
        drift <= 1e-3 && moment <= 0.01 && run.seconds < 120.0 && (5_000..=20_000).contains(&n),
        format!(
            "N = {n}, T = {t}: max center drift {drift:.2e} (tol 1e-3), max |I/I0 - 1| {moment:.2e} (tol 0.01); {:.1} s (limit 120 s)",
            run.seconds
        ),
    )
}

fn bounds(ctx: &mut Context) -> Result<Verdict> {
    let run = ctx.builtin("corotate", 0.05)?;
    let r = &run.record;
    ensure!(r.completed(), "run aborted: {:?}", r.outcome);
    let (mut mi, mut mc) = (0.0f64, 0.0f64);
    let mut finite = true;
    for rec in &r.records {
        for l in &rec.labels {
            let (a, b) = (l.moment_ratio(), l.center_ratio());
            finite &= a.is_finite() && b.is_finite();
            mi = mi.max(a);
            mc = mc.max(b);
        }
    }
    verdict(
        finite && mi <= 1.0 && mc <= 1.0 && run.seconds < 300.0,
        format!(
            "{} records: max I/bound {mi:.3}, max gap/bound {mc:.3} (need <= 1); {:.1} s (limit 300 s)",
            r.records.len(),
            run.seconds
        ),
    )
}

fn final_support_radius(r: &RunRecord) -> Result<f64> {
    let last = r.records.last().context("no records")?;
    Ok(last
        .labels
        .iter()
        .map(|l| l.support_radius_frac[0])
        .fold(0.0, f64::max))
}

fn confinement(ctx: &mut Context) -> Result<Verdict> {
    let runs = ctx.sweep("corotate")?;
    let mut rows = Vec::new();
    let mut ok = true;
    let mut secs = 0.0;
    for run in &runs {
        ensure!(run.record.completed(), "eps = {} aborted", run.member.epsilon);
        ensure!(
            run.member.setup.diagnostics.fractions.first() == Some(&0.99),
            "corotate must record f = 0.99"
        );
        let e = run.member.epsilon;
        let r99 = final_support_radius(&run.record)?;
        let limit = e.powf(0.45);
        ok &= r99 <= limit;
        rows.push((e, r99, limit));
        secs += run.seconds;
    }
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = rows.windows(2).all(|w| w[1].1 < w[0].1);
    let table: Vec<String> = rows.iter().map(|(e, r, l)| format!("eps {e}: R99 {r:.4} <= {l:.4}")).collect();
    verdict(
        ok && decreasing && secs < 600.0,
        format!(
            "{}; strictly decreasing: {decreasing}; {secs:.1} s (limit 600 s)",
            table.join(", ")
        ),
    )
}

fn concentration(ctx: &mut Context) -> Result<Verdict> {
    let runs = ctx.sweep("sweep-concentration")?;
    let mut eps = Vec::new();
    let mut mass = Vec::new();
    let mut secs = 0.0;
    for run in &runs {
        ensure!(run.record.completed(), "eps = {} aborted", run.member.epsilon);
        let last = run.record.records.last().context("no records")?;
        ensure!((last.t - 1.0).abs() < 1e-12, "sweep must end at T = 1");
        eps.push(run.member.epsilon);
        mass.push(last.outside_mass);
        secs += run.seconds;
    }
    let fit = fit_power_law(&eps, &mass)?;
    let residual = fit.max_residual.exp() - 1.0;
    let pairs: Vec<String> = eps.iter().zip(&mass).map(|(e, m)| format!("{e}: {m:.3e}")).collect();
    verdict(
        fit.slope >= 0.9 && residual <= 0.1 && secs < 600.0,
        format!(
            "outer mass beyond eps^0.2 [{}]; slope {:.3} (need >= 0.9), max relative residual {:.1}% (tol 10%); {secs:.1} s (limit 600 s)",
            pairs.join(", "),
            fit.slope,
            100.0 * residual
        ),
    )
}

fn long_time(ctx: &mut Context) -> Result<Verdict> {
    let config = builtin("long-time")?;
    ensure!(
        matches!(config.sim.t_end, EndTime::Rule(_)),
        "long-time must end at c0 |log A_eps|"
    );
    let run = ctx.builtin("long-time", 0.05)?;
    let r = &run.record;
    let t_end = run.member.sim.t_end;
    let report = confinement_from_records(&r.records, &run.member.setup.diagnostics, 0.99)?;
    let completed = r.outcome == RunOutcome::Completed;
    verdict(
        completed && report.satisfied && (report.tau_measured - t_end).abs() <= 1e-12 && run.seconds < 600.0,
        format!(
            "t_end = c0|log A| = {t_end:.4}, tau = {:.4}, threshold A^a = {:.4}, completed: {completed}, satisfied: {}; {:.1} s (limit 600 s)",
            report.tau_measured, report.threshold_radius, report.satisfied, run.seconds
        ),
    )
}

fn determinism(_: &mut Context) -> Result<Verdict> {
    let mut config = builtin("corotate")?;
    config.epsilon_sweep = None;
    config.epsilon = Some(0.1);
    config.sim.t_end = EndTime::Fixed(0.2);
    config.sim.record_interval = Some(0.02);
    config.diagnostics.snapshot_every = 2;

    let mut details = Vec::new();
    let mut ok = true;
    for velocity in [VelocityChoice::Direct, VelocityChoice::Tree] {
        let serial = RunOptions {
            serial: true,
            velocity: Some(velocity),
            allow_large: false,
        };
        let bytes = |opts: RunOptions| -> Result<(Vec<u8>, Vec<Vec<u8>>, RunRecord)> {
            let m = prepare(&config, 0.1, opts)?;
            let r = simulate(&m)?;
            let csv = diagnostics_csv(&r.records, &m.setup.diagnostics, m.data.vortices.len())?;
            let snaps = r.snapshots.iter().map(snapshot_csv).collect::<Result<Vec<_>>>()?;
            Ok((csv, snaps, r))
        };
        let a = bytes(serial)?;
        let b = bytes(serial)?;
        let identical = a.0 == b.0 && a.1 == b.1;

        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build()?;
        let par = pool.install(|| {
            let m = prepare(&config, 0.1, RunOptions { serial: false, ..serial })?;
            simulate(&m)
        })?;
        let xs = a.2.final_cloud.positions();
        let xp = par.final_cloud.positions();
        ensure!(xs.len() == xp.len(), "particle counts differ");
        let scale = xs.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let diff = xs.iter().zip(&xp).map(|(s, p)| (*s - *p).norm()).fold(0.0, f64::max) / scale;
        let labels_match = a.2.final_cloud.labels() == par.final_cloud.labels()
            && a.2.final_cloud.labels().iter().all(|l| matches!(l, Label::Vortex(_)));
        ok &= identical && diff <= 1e-12 && labels_match;
        let method = match prepare(&config, 0.1, serial)?.sim.velocity_method {
            VelocityMethod::Direct => "direct",
            VelocityMethod::Tree(_) => "tree",
        };
        details.push(format!(
            "{method}: serial reruns identical {identical} ({} CSV bytes, {} snapshots), parallel vs serial {diff:.1e} (tol 1e-12)",
            a.0.len(),
            a.1.len()
        ));
    }
    verdict(ok, details.join("; "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_have_unique_names() {
        let mut names = suite_names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), CRITERIA.len());
        for f in EXPECTED_FAILURES {
            assert!(names.contains(f));
        }
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(run_suite("nope", |_| {}).is_err());
    }

    #[test]
    fn panics_become_failures() {
        fn boom(_: &mut Context) -> Result<Verdict> {
            panic!("boom")
        }
        let c = Criterion {
            name: "boom",
            title: "",
            check: boom,
        };
        let r = run_criterion(&c, &mut Context::new());
        assert!(!r.passed);
        assert!(r.detail.contains("boom"));
        assert!(r.line().starts_with("[FAIL] boom: panicked: boom"));
    }

    #[test]
    fn random_fields_are_positive_and_resolved() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (pos, w, h) = random_field(&mut rng).unwrap();
        assert_eq!(pos.len(), w.len());
        assert!(w.iter().all(|x| *x > 0.0));
        assert!(h > 0.0 && h <= 0.3 / 8.0);
    }
}
