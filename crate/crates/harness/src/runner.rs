//! Running scenarios into run directories.
//!
//! Each ε of a scenario gets `<out>/<name>/eps_<ε>/` with
//!
//! - `config.json`: the scenario as parsed,
//! - `diagnostics.csv` and `diagnostics.schema.json`: one row per record,
//!   written as the run goes so an aborted run keeps its rows,
//! - `snapshots/snap_<k>.csv`: particle states (index, label, x, y,
//!   weight, omega0),
//! - `manifest.json`: what ran, when, and which files it wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vortexlab_core::diagnostics::{csv_header, csv_row, format_float, schema, DiagnosticsRecord, DiagnosticsSpec};
use vortexlab_core::profiles::{sample_particles, InitialData};
use vortexlab_core::simulator::{run, run_with_observer, RunOutcome, RunRecord, RunSetup, SimSpec, VelocityMethod};
use vortexlab_core::{Error as CoreError, ParticleCloud};

use crate::config::{ConfigError, ScenarioConfig, VelocityChoice};

pub const MANIFEST_FORMAT: &str = "vortexlab-run";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub serial: bool,
    pub velocity: Option<VelocityChoice>,
    pub allow_large: bool,
}

/// One ε of a scenario, sampled and ready to run.
#[derive(Debug, Clone)]
pub struct Member {
    pub epsilon: f64,
    pub data: InitialData,
    pub cloud: ParticleCloud,
    pub sim: SimSpec,
    pub setup: RunSetup,
}

pub fn prepare(config: &ScenarioConfig, epsilon: f64, opts: RunOptions) -> Result<Member, ConfigError> {
    let invalid = |field: &str, e: CoreError| ConfigError::Invalid {
        field: field.to_string(),
        line: None,
        message: e.to_string(),
    };
    let data = config.initial_data(epsilon).map_err(|e| invalid("vortices", e))?;
    let sampling = config.sampling_spec(epsilon, opts.allow_large)?;
    let cloud = sample_particles(&data, sampling).map_err(|e| match e {
        CoreError::TooManyParticles { count, limit } => ConfigError::OverBudget { epsilon, count, limit },
        e => invalid("grid", e),
    })?;
    let sim = config.sim_spec(&data, cloud.len(), opts.velocity, opts.serial)?;
    let mut setup = RunSetup::from_initial_data(&data, config.diagnostics.spec());
    setup.snapshot_every = config.diagnostics.snapshot_every;
    Ok(Member {
        epsilon,
        data,
        cloud,
        sim,
        setup,
    })
}

/// Runs a prepared member in memory.
pub fn simulate(member: &Member) -> Result<RunRecord> {
    Ok(run(member.cloud.clone(), &member.sim, &member.setup)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub software_version: String,
    pub scenario: String,
    pub epsilon: f64,
    /// SHA-256 of the scenario as written to `config.json`.
    pub config_hash: String,
    pub started: String,
    pub finished: String,
    pub mode: String,
    pub threads: usize,
    pub velocity_method: String,
    pub particles: usize,
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
    pub records: usize,
    pub a_eps: f64,
    /// Smallest initial center separation δ.
    pub min_separation: f64,
    pub outcome: RunOutcome,
    pub snapshot_times: Vec<f64>,
    /// Paths relative to the run directory.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn completed(&self) -> bool {
        self.outcome == RunOutcome::Completed
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn member_dir(out: &Path, name: &str, epsilon: f64) -> PathBuf {
    out.join(name).join(format!("eps_{epsilon}"))
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    format!("{:x}", Sha256::digest(config.to_json().as_bytes()))
}

fn method_name(m: &VelocityMethod) -> String {
    match m {
        VelocityMethod::Direct => "direct".into(),
        VelocityMethod::Tree(p) => format!(
            "tree(theta={}, order={}, leaf={})",
            p.opening_angle, p.expansion_order, p.max_leaf_size
        ),
    }
}

/// Streams diagnostics rows as CSV.
pub struct DiagnosticsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(out: W, spec: &DiagnosticsSpec, labels: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(csv_header(spec, labels))?;
        Ok(DiagnosticsWriter { inner })
    }

    pub fn write(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        self.inner.write_record(csv_row(record))?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn finish(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| anyhow::anyhow!("flushing diagnostics: {}", e.error()))
    }
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord], spec: &DiagnosticsSpec, labels: usize) -> Result<Vec<u8>> {
    let mut w = DiagnosticsWriter::new(Vec::new(), spec, labels)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

pub fn write_snapshot<W: Write>(out: W, cloud: &ParticleCloud) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "label", "x", "y", "weight", "omega0"])?;
    for (i, p) in cloud.particles.iter().enumerate() {
        w.write_record([
            i.to_string(),
            p.label.to_string(),
            format_float(p.position.x),
            format_float(p.position.y),
            format_float(p.weight),
            format_float(p.omega0),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn snapshot_csv(cloud: &ParticleCloud) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_snapshot(&mut out, cloud)?;
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Runs one member into `dir`, replacing earlier outputs there.
pub fn run_member(config: &ScenarioConfig, member: &Member, dir: &Path) -> Result<RunManifest> {
    let started = chrono::Utc::now().to_rfc3339();
    let snapshots_dir = dir.join("snapshots");
    if snapshots_dir.exists() {
        fs::remove_dir_all(&snapshots_dir).with_context(|| format!("clearing {}", snapshots_dir.display()))?;
    }
    fs::create_dir_all(&snapshots_dir).with_context(|| format!("creating {}", snapshots_dir.display()))?;
    let mut files = Vec::new();

    fs::write(dir.join("config.json"), config.to_json() + "\n")?;
    files.push("config.json".to_string());
    let labels = member.data.vortices.len();
    let spec = &member.setup.diagnostics;
    write_json(&dir.join("diagnostics.schema.json"), &schema(spec, labels))?;
    files.push("diagnostics.schema.json".to_string());

    let csv_path = dir.join("diagnostics.csv");
    let file = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    let mut writer = DiagnosticsWriter::new(BufWriter::new(file), spec, labels)?;
    let mut write_error = None;
    let record = run_with_observer(member.cloud.clone(), &member.sim, &member.setup, |r| {
        if write_error.is_none() {
            write_error = writer.write(r).err();
        }
    })?;
    writer.finish()?;
    if let Some(e) = write_error {
        return Err(e.context(format!("writing {}", csv_path.display())));
    }
    files.push("diagnostics.csv".to_string());

    let mut snapshot_times = Vec::new();
    for (k, snap) in record.snapshots.iter().enumerate() {
        let name = format!("snapshots/snap_{k:04}.csv");
        let file = File::create(dir.join(&name))?;
        let mut out = BufWriter::new(file);
        write_snapshot(&mut out, snap)?;
        out.flush()?;
        snapshot_times.push(snap.time);
        files.push(name);
    }

    let manifest = RunManifest {
        format: MANIFEST_FORMAT.to_string(),
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: config.name.clone(),
        epsilon: member.epsilon,
        config_hash: config_hash(config),
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        mode: format!("{:?}", member.sim.exec).to_lowercase(),
        threads: match member.sim.exec {
            vortexlab_core::kernel::ExecMode::Serial => 1,
            vortexlab_core::kernel::ExecMode::Parallel => rayon::current_num_threads(),
        },
        velocity_method: method_name(&member.sim.velocity_method),
        particles: member.cloud.len(),
        dt: member.sim.dt,
        t_end: member.sim.t_end,
        steps: member.sim.steps(),
        records: record.records.len(),
        a_eps: member.setup.a_eps,
        min_separation: config.min_separation(),
        outcome: record.outcome.clone(),
        snapshot_times,
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Validates and samples every ε, then runs them (concurrently unless
/// `opts.serial`). Returns one manifest per ε in file order.
pub fn run_scenario(config: &ScenarioConfig, out: &Path, opts: RunOptions) -> Result<Vec<(PathBuf, RunManifest)>> {
    config.validate()?;
    let members = config
        .epsilons()
        .into_iter()
        .map(|e| prepare(config, e, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let go = |m: &Member| -> Result<(PathBuf, RunManifest)> {
        let dir = member_dir(out, &config.name, m.epsilon);
        let manifest = run_member(config, m, &dir).with_context(|| format!("running epsilon = {}", m.epsilon))?;
        Ok((dir, manifest))
    };
    if opts.serial {
        members.iter().map(go).collect()
    } else {
        members.par_iter().map(go).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ScenarioConfig {
        let mut c = crate::scenarios::builtin("corotate").unwrap().unwrap();
        c.epsilon_sweep = None;
        c.epsilon = Some(0.2);
        c.grid.h_over_eps = 0.25;
        c.sim.t_end = crate::config::EndTime::Fixed(0.05);
        c.sim.dt = Some(0.01);
        c.sim.record_interval = Some(0.02);
        c
    }

    #[test]
    fn prepare_resolves_parameters() {
        let c = tiny();
        let m = prepare(&c, 0.2, RunOptions { serial: true, ..Default::default() }).unwrap();
        assert_eq!(m.sim.dt, 0.01);
        assert_eq!(m.sim.record_every, 2);
        assert_eq!(m.sim.velocity_method, VelocityMethod::Direct);
        assert_eq!(m.setup.a_eps, 0.2);
        assert_eq!(m.cloud.grid_h, 0.05);
    }

    #[test]
    fn over_budget_is_a_config_error() {
        let mut c = tiny();
        c.grid.max_particles = Some(10);
        let err = prepare(&c, 0.2, RunOptions::default()).unwrap_err();
        assert!(matches!(err, ConfigError::OverBudget { limit: 10, .. }), "{err}");
    }

    #[test]
    fn in_memory_csv_matches_streamed_rows() {
        let c = tiny();
        let m = prepare(&c, 0.2, RunOptions { serial: true, ..Default::default() }).unwrap();
        let r = simulate(&m).unwrap();
        let bytes = diagnostics_csv(&r.records, &m.setup.diagnostics, 2).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + r.records.len());
        assert!(lines[0].starts_with("t,step,gamma_0,"));
        let snap = String::from_utf8(snapshot_csv(&r.final_cloud).unwrap()).unwrap();
        assert_eq!(snap.lines().next(), Some("index,label,x,y,weight,omega0"));
        assert_eq!(snap.lines().count(), 1 + m.cloud.len());
    }
}
