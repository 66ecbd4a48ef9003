//! Scenario files.
//!
//! A scenario is a JSON object describing the initial vortices, the ε
//! values to run, sampling, time stepping and diagnostics. Unknown keys are
//! rejected. A minimal example:
//!
//! ```json
//! {
//!   "name": "pair",
//!   "vortices": [
//!     {"center": [0.0, 0.5], "gamma": 6.283185307179586, "profile": "compact_bump", "sigma": 4},
//!     {"center": [0.0, -0.5], "gamma": -6.283185307179586, "profile": "compact_bump", "sigma": 4}
//!   ],
//!   "epsilon": 0.05,
//!   "grid": {"h_over_eps": 0.2, "mass_capture": 0.999999999},
//!   "sim": {"t_end": 1.0}
//! }
//! ```
//!
//! `sim.t_end` is either a number or `"c0_log_a"`, meaning c₀|log A_ε| with
//! c₀ from `diagnostics.c0`. The step is `sim.dt` if given, otherwise
//! min(`sim.dt_max` or 10⁻³ min(1, δ²/Γ_max), `core_dt_fraction`/Ω) with Ω
//! the core angular velocity of the fastest vortex.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vortexlab_core::diagnostics::DiagnosticsSpec;
use vortexlab_core::kernel::TreecodeParams;
use vortexlab_core::pointvortex::min_pairwise_distance;
use vortexlab_core::profiles::{
    beta_opt, InitialData, Perturbation, ProfileKind, RadialProfile, SamplingSpec, VortexSpec,
};
use vortexlab_core::simulator::{core_dt_cap, default_dt, SimSpec, VelocityMethod};
use vortexlab_core::PlaneVector;

/// Desk-scale particle budget; larger runs need `allow_large`.
pub const PARTICLE_BUDGET: usize = 100_000;

/// Nominal σ for profiles without an algebraic tail when none is given.
pub const DEFAULT_NOMINAL_SIGMA: f64 = 4.0;

/// Records per run when neither `record_every` nor `record_interval` is set.
pub const DEFAULT_RECORDS: usize = 100;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}{field}: {message}", at(.line))]
    Invalid {
        field: String,
        line: Option<usize>,
        message: String,
    },

    #[error("{}vortices {first} and {second} have coincident centers", at(.line))]
    CoincidentCenters {
        first: usize,
        second: usize,
        line: Option<usize>,
    },

    #[error("sampling at epsilon = {epsilon} needs {count} particles, above the budget of {limit} (pass --allow-large to override)")]
    OverBudget {
        epsilon: f64,
        count: usize,
        limit: usize,
    },
}

fn at(line: &Option<usize>) -> String {
    match line {
        Some(l) => format!("line {l}: "),
        None => String::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VelocityChoice {
    /// Direct sum up to a few thousand particles, treecode above.
    #[default]
    Auto,
    Direct,
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexEntry {
    pub center: [f64; 2],
    pub gamma: f64,
    pub profile: ProfileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationEntry {
    /// Relabel each vortex's tail beyond ε^{1−β}; β defaults to 2/(σ+2)
    /// of the first vortex.
    TailSplit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    /// A separate radial patch of size `radius`.
    Patch {
        center: [f64; 2],
        circulation: f64,
        radius: f64,
        profile: ProfileKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    /// Grid spacing in units of ε.
    pub h_over_eps: f64,
    pub mass_capture: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_particles: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndRule {
    C0LogA,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EndTime {
    Fixed(f64),
    Rule(EndRule),
}

fn default_core_fraction() -> f64 {
    0.25
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimEntry {
    pub t_end: EndTime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(default = "default_core_fraction")]
    pub core_dt_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_interval: Option<f64>,
    #[serde(default)]
    pub velocity: VelocityChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreecodeParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsEntry {
    pub outer_radii: Vec<f64>,
    pub ring_radii: Vec<f64>,
    pub fractions: Vec<f64>,
    pub a: f64,
    pub q: f64,
    pub c0: f64,
    pub outside_exponent: Option<f64>,
    /// Keep a particle snapshot every this many records (0: first and last).
    pub snapshot_every: usize,
}

impl Default for DiagnosticsEntry {
    fn default() -> Self {
        let d = DiagnosticsSpec::default();
        DiagnosticsEntry {
            outer_radii: d.outer_radii,
            ring_radii: d.ring_radii,
            fractions: d.fractions,
            a: d.a,
            q: d.q,
            c0: d.c0,
            outside_exponent: d.outside_exponent,
            snapshot_every: 0,
        }
    }
}

impl DiagnosticsEntry {
    pub fn spec(&self) -> DiagnosticsSpec {
        DiagnosticsSpec {
            outer_radii: self.outer_radii.clone(),
            ring_radii: self.ring_radii.clone(),
            fractions: self.fractions.clone(),
            a: self.a,
            q: self.q,
            c0: self.c0,
            outside_exponent: self.outside_exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub vortices: Vec<VortexEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_sweep: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationEntry>,
    pub grid: GridEntry,
    pub sim: SimEntry,
    #[serde(default)]
    pub diagnostics: DiagnosticsEntry,
}

fn profile_of(kind: ProfileKind, sigma: Option<f64>) -> vortexlab_core::Result<RadialProfile> {
    let sigma = match (kind, sigma) {
        (_, Some(s)) => s,
        (ProfileKind::Cauchy, None) => 2.0,
        (ProfileKind::AlgebraicTail, None) => f64::NAN,
        (_, None) => DEFAULT_NOMINAL_SIGMA,
    };
    RadialProfile::new(kind, sigma)
}

fn vector(c: [f64; 2]) -> PlaneVector {
    PlaneVector::new(c[0], c[1])
}

impl ScenarioConfig {
    /// Parses and validates; error lines refer to `src`.
    pub fn from_json(src: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = serde_json::from_str(src).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.check(Some(src))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&src)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario configs always serialize")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.check(None)
    }

    fn check(&self, src: Option<&str>) -> Result<(), ConfigError> {
        let line = |path: &[&str], nth: usize| src.and_then(|s| locate(s, path, nth));
        let invalid = |field: String, l: Option<usize>, message: String| ConfigError::Invalid {
            field,
            line: l,
            message,
        };

        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
        {
            return Err(invalid(
                "name".into(),
                line(&["name"], 0),
                "must be nonempty and use only letters, digits, '-', '_' and '.'".into(),
            ));
        }
        if self.vortices.is_empty() {
            return Err(invalid("vortices".into(), line(&["vortices"], 0), "at least one vortex is required".into()));
        }
        for (i, v) in self.vortices.iter().enumerate() {
            if !v.center.iter().all(|x| x.is_finite()) {
                return Err(invalid(
                    format!("vortices[{i}].center"),
                    line(&["vortices", "center"], i),
                    "must be finite".into(),
                ));
            }
            if !(v.gamma != 0.0 && v.gamma.is_finite()) {
                return Err(invalid(
                    format!("vortices[{i}].gamma"),
                    line(&["vortices", "gamma"], i),
                    "must be nonzero and finite".into(),
                ));
            }
            if let Err(e) = profile_of(v.profile, v.sigma) {
                return Err(invalid(
                    format!("vortices[{i}].sigma"),
                    line(&["vortices", "profile"], i),
                    e.to_string(),
                ));
            }
        }
        for i in 0..self.vortices.len() {
            for j in i + 1..self.vortices.len() {
                if self.vortices[i].center == self.vortices[j].center {
                    return Err(ConfigError::CoincidentCenters {
                        first: i,
                        second: j,
                        line: line(&["vortices", "center"], j),
                    });
                }
            }
        }

        match (&self.epsilon, &self.epsilon_sweep) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(invalid(
                    "epsilon".into(),
                    line(&["epsilon"], 0).or(line(&["epsilon_sweep"], 0)),
                    "give exactly one of `epsilon` and `epsilon_sweep`".into(),
                ))
            }
            (None, Some(sweep)) if sweep.is_empty() => {
                return Err(invalid("epsilon_sweep".into(), line(&["epsilon_sweep"], 0), "must not be empty".into()))
            }
            _ => {}
        }
        let eps = self.epsilons();
        for (k, e) in eps.iter().enumerate() {
            if !(*e > 0.0 && *e < 1.0) {
                let field = if self.epsilon.is_some() { "epsilon".to_string() } else { format!("epsilon_sweep[{k}]") };
                let key = if self.epsilon.is_some() { "epsilon" } else { "epsilon_sweep" };
                return Err(invalid(field, line(&[key], 0), format!("{e} is outside (0, 1)")));
            }
            if eps[..k].contains(e) {
                return Err(invalid(
                    format!("epsilon_sweep[{k}]"),
                    line(&["epsilon_sweep"], 0),
                    format!("{e} is repeated"),
                ));
            }
        }

        match self.perturbation {
            Some(PerturbationEntry::TailSplit { beta: Some(b) }) if !(b > 0.0 && b < 1.0) => {
                return Err(invalid(
                    "perturbation.beta".into(),
                    line(&["perturbation", "beta"], 0),
                    "must lie in (0, 1)".into(),
                ))
            }
            Some(PerturbationEntry::TailSplit { beta: None }) => {
                if let Err(e) = self.default_beta() {
                    return Err(invalid("perturbation.beta".into(), line(&["perturbation"], 0), e.to_string()));
                }
            }
            Some(PerturbationEntry::Patch {
                center,
                circulation,
                radius,
                profile,
                sigma,
            }) => {
                let field = |f: &str| (format!("perturbation.{f}"), line(&["perturbation", f], 0));
                if !center.iter().all(|x| x.is_finite()) || !circulation.is_finite() {
                    let (f, l) = field("center");
                    return Err(invalid(f, l, "center and circulation must be finite".into()));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    let (f, l) = field("radius");
                    return Err(invalid(f, l, "must be positive".into()));
                }
                if let Err(e) = profile_of(profile, sigma) {
                    let (f, l) = field("profile");
                    return Err(invalid(f, l, e.to_string()));
                }
            }
            _ => {}
        }

        let g = &self.grid;
        if !(g.h_over_eps > 0.0 && g.h_over_eps.is_finite()) {
            return Err(invalid("grid.h_over_eps".into(), line(&["grid", "h_over_eps"], 0), "must be positive".into()));
        }
        if !(g.mass_capture > 0.0 && g.mass_capture < 1.0) {
            return Err(invalid(
                "grid.mass_capture".into(),
                line(&["grid", "mass_capture"], 0),
                "must lie in (0, 1)".into(),
            ));
        }
        if g.max_particles == Some(0) {
            return Err(invalid("grid.max_particles".into(), line(&["grid", "max_particles"], 0), "must be positive".into()));
        }

        let s = &self.sim;
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if let EndTime::Fixed(t) = s.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("sim.t_end".into(), line(&["sim", "t_end"], 0), "must be nonnegative".into()));
            }
        }
        for (name, value) in [("dt", s.dt), ("dt_max", s.dt_max), ("record_interval", s.record_interval)] {
            if let Some(x) = value {
                if !positive(x) {
                    return Err(invalid(format!("sim.{name}"), line(&["sim", name], 0), "must be positive".into()));
                }
            }
        }
        if !positive(s.core_dt_fraction) {
            return Err(invalid(
                "sim.core_dt_fraction".into(),
                line(&["sim", "core_dt_fraction"], 0),
                "must be positive".into(),
            ));
        }
        if s.record_every == Some(0) {
            return Err(invalid("sim.record_every".into(), line(&["sim", "record_every"], 0), "must be at least 1".into()));
        }
        if s.record_every.is_some() && s.record_interval.is_some() {
            return Err(invalid(
                "sim.record_every".into(),
                line(&["sim", "record_every"], 0),
                "give at most one of `record_every` and `record_interval`".into(),
            ));
        }
        if let Some(t) = s.tree {
            if let Err(e) = t.validate() {
                return Err(invalid("sim.tree".into(), line(&["sim", "tree"], 0), e.to_string()));
            }
        }

        if let Err(e) = self.diagnostics.spec().validate() {
            return Err(invalid("diagnostics".into(), line(&["diagnostics"], 0), e.to_string()));
        }
        Ok(())
    }

    /// ε values in file order.
    pub fn epsilons(&self) -> Vec<f64> {
        match (&self.epsilon, &self.epsilon_sweep) {
            (Some(e), _) => vec![*e],
            (None, Some(s)) => s.clone(),
            (None, None) => Vec::new(),
        }
    }

    /// Smallest distance between initial centers (∞ for one vortex).
    pub fn min_separation(&self) -> f64 {
        let c: Vec<PlaneVector> = self.vortices.iter().map(|v| vector(v.center)).collect();
        min_pairwise_distance(&c)
    }

    fn default_beta(&self) -> vortexlab_core::Result<f64> {
        let v = &self.vortices[0];
        beta_opt(profile_of(v.profile, v.sigma)?.sigma)
    }

    /// Initial data at one ε.
    pub fn initial_data(&self, epsilon: f64) -> vortexlab_core::Result<InitialData> {
        let vortices = self
            .vortices
            .iter()
            .map(|v| {
                Ok(VortexSpec {
                    center: vector(v.center),
                    gamma: v.gamma,
                    profile: profile_of(v.profile, v.sigma)?,
                    epsilon,
                })
            })
            .collect::<vortexlab_core::Result<Vec<_>>>()?;
        let perturbation = match self.perturbation {
            None => None,
            Some(PerturbationEntry::TailSplit { beta }) => Some(Perturbation::TailSplit {
                beta: match beta {
                    Some(b) => b,
                    None => self.default_beta()?,
                },
            }),
            Some(PerturbationEntry::Patch {
                center,
                circulation,
                radius,
                profile,
                sigma,
            }) => Some(Perturbation::Patch {
                center: vector(center),
                circulation,
                radius,
                profile: profile_of(profile, sigma)?,
            }),
        };
        InitialData::new(vortices, perturbation)
    }

    pub fn sampling_spec(&self, epsilon: f64, allow_large: bool) -> Result<SamplingSpec, ConfigError> {
        let limit = self.grid.max_particles.unwrap_or(PARTICLE_BUDGET);
        if limit > PARTICLE_BUDGET && !allow_large {
            return Err(ConfigError::Invalid {
                field: "grid.max_particles".into(),
                line: None,
                message: format!("{limit} exceeds the budget of {PARTICLE_BUDGET} (pass --allow-large to override)"),
            });
        }
        let spec = SamplingSpec::new(self.grid.h_over_eps * epsilon, self.grid.mass_capture).map_err(|e| {
            ConfigError::Invalid {
                field: "grid".into(),
                line: None,
                message: e.to_string(),
            }
        })?;
        Ok(spec.with_max_particles(limit))
    }

    /// Step size at one ε for `data`.
    pub fn time_step(&self, data: &InitialData) -> f64 {
        if let Some(dt) = self.sim.dt {
            return dt;
        }
        let base = self
            .sim
            .dt_max
            .unwrap_or_else(|| default_dt(&data.centers(), &data.gammas()));
        base.min(core_dt_cap(data, self.sim.core_dt_fraction))
    }

    /// Final time at one ε; the `c0_log_a` rule uses A_ε of `data`.
    pub fn end_time(&self, data: &InitialData) -> f64 {
        match self.sim.t_end {
            EndTime::Fixed(t) => t,
            EndTime::Rule(EndRule::C0LogA) => self.diagnostics.c0 * data.a_eps(self.diagnostics.q).ln().abs(),
        }
    }

    /// Simulation parameters for `particles` particles; `velocity`
    /// overrides the configured method.
    pub fn sim_spec(
        &self,
        data: &InitialData,
        particles: usize,
        velocity: Option<VelocityChoice>,
        serial: bool,
    ) -> Result<SimSpec, ConfigError> {
        let dt = self.time_step(data);
        let t_end = self.end_time(data);
        let tree = self.sim.tree.unwrap_or_default();
        let method = match velocity.unwrap_or(self.sim.velocity) {
            VelocityChoice::Auto => match VelocityMethod::auto(particles) {
                VelocityMethod::Tree(_) => VelocityMethod::Tree(tree),
                direct => direct,
            },
            VelocityChoice::Direct => VelocityMethod::Direct,
            VelocityChoice::Tree => VelocityMethod::Tree(tree),
        };
        let mut spec = SimSpec::new(dt, t_end, method, 1).map_err(|e| ConfigError::Invalid {
            field: "sim".into(),
            line: None,
            message: e.to_string(),
        })?;
        let steps = spec.steps();
        spec.record_every = match (self.sim.record_every, self.sim.record_interval) {
            (Some(k), _) => k,
            (None, Some(interval)) => ((interval / dt).round() as usize).max(1),
            (None, None) => (steps / DEFAULT_RECORDS).max(1),
        };
        if serial {
            spec = spec.serial();
        }
        Ok(spec)
    }
}

/// Line of the `nth` occurrence of the last key in `path`, searching after
/// the first occurrence of each earlier key. A text search, good enough to
/// point at the offending entry of a hand-written file.
pub fn locate(src: &str, path: &[&str], nth: usize) -> Option<usize> {
    let (last, outer) = path.split_last()?;
    let mut pos = 0;
    for key in outer {
        pos += find_key(&src[pos..], key)?;
    }
    for _ in 0..nth {
        pos += find_key(&src[pos..], last)? + last.len() + 2;
    }
    pos += find_key(&src[pos..], last)?;
    Some(src[..pos].matches('\n').count() + 1)
}

fn find_key(src: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    let mut from = 0;
    while let Some(i) = src[from..].find(&quoted) {
        let at = from + i;
        let rest = src[at + quoted.len()..].trim_start();
        if rest.starts_with(':') {
            return Some(at);
        }
        from = at + quoted.len();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"{
  "name": "pair",
  "vortices": [
    {"center": [0.0, 0.5], "gamma": 1.0, "profile": "compact_bump"},
    {"center": [0.0, -0.5], "gamma": -1.0, "profile": "compact_bump"}
  ],
  "epsilon": 0.1,
  "grid": {"h_over_eps": 0.25, "mass_capture": 0.999999},
  "sim": {"t_end": 0.5}
}"#;

    #[test]
    fn parses_minimal_file() {
        let c = ScenarioConfig::from_json(PAIR).unwrap();
        assert_eq!(c.epsilons(), vec![0.1]);
        assert_eq!(c.sim.core_dt_fraction, 0.25);
        assert_eq!(c.sim.velocity, VelocityChoice::Auto);
        assert_eq!(c.diagnostics.fractions, vec![0.99]);
        assert_eq!(c.min_separation(), 1.0);
        let again = ScenarioConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn coincident_centers_are_named() {
        let src = PAIR.replace("[0.0, -0.5]", "[0.0, 0.5]");
        let err = ScenarioConfig::from_json(&src).unwrap_err();
        match err {
            ConfigError::CoincidentCenters { first, second, line } => {
                assert_eq!((first, second), (0, 1));
                assert_eq!(line, Some(5));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn errors_carry_lines() {
        let err = ScenarioConfig::from_json(&PAIR.replace("0.1,", "1.5,")).unwrap_err();
        assert!(err.to_string().starts_with("line 7: epsilon"), "{err}");
        let err = ScenarioConfig::from_json(&PAIR.replace("\"gamma\": -1.0", "\"gamma\": 0.0")).unwrap_err();
        assert!(err.to_string().starts_with("line 5: vortices[1].gamma"), "{err}");
        let err = ScenarioConfig::from_json(&PAIR.replace("\"t_end\"", "\"t_stop\"")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 9, .. }), "{err}");
        let err = ScenarioConfig::from_json(&PAIR.replace("compact_bump\"}", "cauchy\", \"sigma\": 3}")).unwrap_err();
        assert!(err.to_string().contains("vortices[0].sigma"), "{err}");
    }

    #[test]
    fn epsilon_fields_are_exclusive() {
        let both = PAIR.replace("\"epsilon\": 0.1,", "\"epsilon\": 0.1, \"epsilon_sweep\": [0.1, 0.05],");
        assert!(ScenarioConfig::from_json(&both).is_err());
        let none = PAIR.replace("\"epsilon\": 0.1,", "");
        assert!(ScenarioConfig::from_json(&none).is_err());
        let repeated = PAIR.replace("\"epsilon\": 0.1,", "\"epsilon_sweep\": [0.1, 0.1],");
        assert!(ScenarioConfig::from_json(&repeated).is_err());
    }

    #[test]
    fn log_rule_end_time() {
        let src = PAIR.replace("\"t_end\": 0.5", "\"t_end\": \"c0_log_a\"");
        let c = ScenarioConfig::from_json(&src).unwrap();
        let data = c.initial_data(0.1).unwrap();
        // no perturbation: A = ε
        assert!((c.end_time(&data) - 0.1 * 10f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn time_step_rules() {
        let c = ScenarioConfig::from_json(PAIR).unwrap();
        let data = c.initial_data(0.1).unwrap();
        let cap = core_dt_cap(&data, 0.25);
        assert_eq!(c.time_step(&data), 1e-3f64.min(cap));
        let mut d = c.clone();
        d.sim.dt = Some(0.02);
        assert_eq!(d.time_step(&data), 0.02);
        d.sim.dt = None;
        d.sim.dt_max = Some(1.0);
        assert_eq!(d.time_step(&data), cap);
        let spec = c.sim_spec(&data, 100, None, true).unwrap();
        assert_eq!(spec.velocity_method, VelocityMethod::Direct);
        assert_eq!(spec.record_every, (spec.steps() / DEFAULT_RECORDS).max(1));
    }

    #[test]
    fn budget_needs_override() {
        let src = PAIR.replace("\"mass_capture\": 0.999999", "\"mass_capture\": 0.999999, \"max_particles\": 200000");
        let c = ScenarioConfig::from_json(&src).unwrap();
        assert!(c.sampling_spec(0.1, false).is_err());
        assert_eq!(c.sampling_spec(0.1, true).unwrap().max_particles, 200_000);
        let c = ScenarioConfig::from_json(PAIR).unwrap();
        assert_eq!(c.sampling_spec(0.1, false).unwrap().max_particles, PARTICLE_BUDGET);
    }

    #[test]
    fn perturbation_defaults() {
        let src = PAIR.replace("\"epsilon\": 0.1,", "\"epsilon\": 0.1, \"perturbation\": {\"kind\": \"tail_split\"},");
        let c = ScenarioConfig::from_json(&src).unwrap();
        let data = c.initial_data(0.1).unwrap();
        assert_eq!(data.perturbation, Some(Perturbation::TailSplit { beta: 2.0 / 6.0 }));
        let bad = PAIR.replace("\"epsilon\": 0.1,", "\"epsilon\": 0.1, \"perturbation\": {\"kind\": \"patch\", \"center\": [2, 0], \"circulation\": 0.1, \"radius\": 0, \"profile\": \"gaussian\"},");
        let err = ScenarioConfig::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("perturbation.radius"), "{err}");
    }

    #[test]
    fn locate_finds_nth_key() {
        let src = "{\n \"a\": {\"k\": 1},\n \"b\": [\n {\"k\": 2},\n {\"k\": 3}\n ]\n}";
        assert_eq!(locate(src, &["k"], 0), Some(2));
        assert_eq!(locate(src, &["b", "k"], 0), Some(4));
        assert_eq!(locate(src, &["b", "k"], 1), Some(5));
        assert_eq!(locate(src, &["b", "k"], 2), None);
    }
}
