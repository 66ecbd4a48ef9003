//! Sweep summaries: power-law fits against ε, bound ratios and
//! confinement times, from run directories or in-memory records.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vortexlab_core::diagnostics::{confinement_check, ConfinementReport, DiagnosticsRecord, DiagnosticsSchema, DiagnosticsSpec};
use vortexlab_core::fit::{fit_power_law, PowerLawFit};

use crate::config::ScenarioConfig;
use crate::runner::RunManifest;

pub const MIN_SWEEP: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("a sweep report needs at least {MIN_SWEEP} epsilon values, got {found}")]
    InsufficientSweep { found: usize },
    #[error("runs from different scenarios: {0} and {1}")]
    MixedScenarios(String, String),
    #[error("epsilon = {0} appears more than once")]
    DuplicateEpsilon(f64),
}

/// Time series of one run needed for the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberSeries {
    pub times: Vec<f64>,
    /// Per record, the support radius of each label at the summary fraction.
    pub support_radii: Vec<Vec<f64>>,
    pub outside_mass: Vec<f64>,
    pub moment_ratios: Vec<Vec<f64>>,
    pub center_ratios: Vec<Vec<f64>>,
    pub a_eps: f64,
}

/// Fraction used for support radii: the first recorded one, or 1.
pub fn summary_fraction(spec: &DiagnosticsSpec) -> f64 {
    spec.fractions.first().copied().unwrap_or(1.0)
}

impl MemberSeries {
    pub fn from_records(records: &[DiagnosticsRecord], spec: &DiagnosticsSpec) -> Self {
        let idx = spec.fractions.first().map(|_| 0);
        MemberSeries {
            times: records.iter().map(|r| r.t).collect(),
            support_radii: records
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
                .collect(),
            outside_mass: records.iter().map(|r| r.outside_mass).collect(),
            moment_ratios: records
                .iter()
                .map(|r| r.labels.iter().map(|l| l.moment_ratio()).collect())
                .collect(),
            center_ratios: records
                .iter()
                .map(|r| r.labels.iter().map(|l| l.center_ratio()).collect())
                .collect(),
            a_eps: records.first().map(|r| r.a_eps).unwrap_or(f64::NAN),
        }
    }

    /// Reads `diagnostics.csv`, locating columns through the schema.
    pub fn from_csv(path: &Path, schema: &DiagnosticsSchema, fraction: f64) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(File::open(path).with_context(|| format!("opening {}", path.display()))?);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let position: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
        let column = |quantity: &str, label: Option<usize>, parameter: Option<f64>| -> Result<usize> {
            let c = schema
                .columns
                .iter()
                .find(|c| c.quantity == quantity && c.label == label && (parameter.is_none() || c.parameter == parameter))
                .with_context(|| format!("schema has no {quantity} column for label {label:?}"))?;
            position
                .get(c.name.as_str())
                .copied()
                .with_context(|| format!("{} lacks column {}", path.display(), c.name))
        };
        let m = schema.vortex_labels;
        let t = column("time", None, None)?;
        let outside = column("outside_mass", None, None)?;
        let a = column("a_eps", None, None)?;
        let radius: Vec<usize> = (0..m).map(|k| column("support_radius", Some(k), Some(fraction))).collect::<Result<_>>()?;
        let mratio: Vec<usize> = (0..m).map(|k| column("moment_ratio", Some(k), None)).collect::<Result<_>>()?;
        let cratio: Vec<usize> = (0..m).map(|k| column("center_ratio", Some(k), None)).collect::<Result<_>>()?;

        let mut s = MemberSeries {
            times: Vec::new(),
            support_radii: Vec::new(),
            outside_mass: Vec::new(),
            moment_ratios: Vec::new(),
            center_ratios: Vec::new(),
            a_eps: f64::NAN,
        };
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .with_context(|| format!("row {} is short", row + 1))?
                    .parse::<f64>()
                    .with_context(|| format!("row {} column {} is not a number", row + 1, header[i]))
            };
            let many = |cols: &[usize]| cols.iter().map(|&i| get(i)).collect::<Result<Vec<f64>>>();
            s.times.push(get(t)?);
            s.outside_mass.push(get(outside)?);
            s.support_radii.push(many(&radius)?);
            s.moment_ratios.push(many(&mratio)?);
            s.center_ratios.push(many(&cratio)?);
            if row == 0 {
                s.a_eps = get(a)?;
            }
        }
        Ok(s)
    }
}

/// Largest finite-or-infinite value, ignoring NaN; NaN if there is none.
fn max_ignoring_nan<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values.into_iter().fold(f64::NAN, |a, &x| a.max(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub scenario: String,
    pub epsilon: f64,
    pub dir: Option<String>,
    pub completed: bool,
    pub t_final: f64,
    pub support_fraction: f64,
    /// Largest label support radius at the final record.
    pub support_radius: f64,
    /// Mass outside the balls about the point vortices at the final record.
    pub outer_mass: f64,
    pub max_moment_ratio: f64,
    pub max_center_ratio: f64,
    pub confinement: ConfinementReport,
}

impl MemberSummary {
    pub fn new(
        scenario: &str,
        epsilon: f64,
        series: &MemberSeries,
        spec: &DiagnosticsSpec,
        completed: bool,
    ) -> Result<Self> {
        let confinement = confinement_check(&series.times, &series.support_radii, series.a_eps, spec.a, spec.c0)?;
        Ok(MemberSummary {
            scenario: scenario.to_string(),
            epsilon,
            dir: None,
            completed,
            t_final: series.times.last().copied().unwrap_or(f64::NAN),
            support_fraction: summary_fraction(spec),
            support_radius: series
                .support_radii
                .last()
                .map(|r| max_ignoring_nan(r))
                .unwrap_or(f64::NAN),
            outer_mass: series.outside_mass.last().copied().unwrap_or(f64::NAN),
            max_moment_ratio: max_ignoring_nan(series.moment_ratios.iter().flatten()),
            max_center_ratio: max_ignoring_nan(series.center_ratios.iter().flatten()),
            confinement,
        })
    }

    /// Summary of a run directory written by the runner.
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = RunManifest::load(dir)?;
        let config = ScenarioConfig::load(&dir.join("config.json"))?;
        let schema_path = dir.join("diagnostics.schema.json");
        let schema: DiagnosticsSchema = serde_json::from_str(
            &std::fs::read_to_string(&schema_path).with_context(|| format!("reading {}", schema_path.display()))?,
        )
        .with_context(|| format!("parsing {}", schema_path.display()))?;
        let spec = config.diagnostics.spec();
        let series = MemberSeries::from_csv(&dir.join("diagnostics.csv"), &schema, summary_fraction(&spec))?;
        let mut s = MemberSummary::new(&manifest.scenario, manifest.epsilon, &series, &spec, manifest.completed())?;
        s.dir = Some(dir.display().to_string());
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenario: String,
    /// Sorted by decreasing ε.
    pub members: Vec<MemberSummary>,
    /// log(outer mass) against log ε; absent when some mass is not positive.
    pub outer_mass_fit: Option<PowerLawFit>,
    pub support_radius_fit: Option<PowerLawFit>,
    pub max_moment_ratio: f64,
    pub max_center_ratio: f64,
    pub all_confined: bool,
    pub notes: Vec<String>,
}

fn fit_or_note(eps: &[f64], values: &[f64], what: &str, notes: &mut Vec<String>) -> Option<PowerLawFit> {
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        notes.push(format!("{what}: no fit, some values are zero or not finite"));
        return None;
    }
    match fit_power_law(eps, values) {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    }
}

/// Fits and extremes over a sweep; independent of the input order.
pub fn sweep_summary(mut members: Vec<MemberSummary>) -> Result<SweepReport, ReportError> {
    if members.len() < MIN_SWEEP {
        return Err(ReportError::InsufficientSweep { found: members.len() });
    }
    members.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    for w in members.windows(2) {
        if w[0].scenario != w[1].scenario {
            return Err(ReportError::MixedScenarios(w[0].scenario.clone(), w[1].scenario.clone()));
        }
        if w[0].epsilon == w[1].epsilon {
            return Err(ReportError::DuplicateEpsilon(w[0].epsilon));
        }
    }
    let eps: Vec<f64> = members.iter().map(|m| m.epsilon).collect();
    let mut notes = Vec::new();
    for m in members.iter().filter(|m| !m.completed) {
        notes.push(format!("epsilon = {} did not complete", m.epsilon));
    }
    let outer: Vec<f64> = members.iter().map(|m| m.outer_mass).collect();
    let radius: Vec<f64> = members.iter().map(|m| m.support_radius).collect();
    let outer_mass_fit = fit_or_note(&eps, &outer, "outer mass", &mut notes);
    let support_radius_fit = fit_or_note(&eps, &radius, "support radius", &mut notes);
    Ok(SweepReport {
        scenario: members[0].scenario.clone(),
        max_moment_ratio: max_ignoring_nan(members.iter().map(|m| &m.max_moment_ratio)),
        max_center_ratio: max_ignoring_nan(members.iter().map(|m| &m.max_center_ratio)),
        all_confined: members.iter().all(|m| m.confinement.satisfied),
        members,
        outer_mass_fit,
        support_radius_fit,
        notes,
    })
}

pub fn sweep_report(dirs: &[PathBuf]) -> Result<SweepReport> {
    let members = dirs
        .iter()
        .map(|d| MemberSummary::load(d).with_context(|| format!("summarizing {}", d.display())))
        .collect::<Result<Vec<_>>>()?;
    Ok(sweep_summary(members)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn member(eps: f64, outer: f64, radius: f64) -> MemberSummary {
        MemberSummary {
            scenario: "s".into(),
            epsilon: eps,
            dir: None,
            completed: true,
            t_final: 1.0,
            support_fraction: 0.99,
            support_radius: radius,
            outer_mass: outer,
            max_moment_ratio: 0.5,
            max_center_ratio: f64::NAN,
            confinement: ConfinementReport {
                tau_measured: 1.0,
                threshold_radius: 1.0,
                required: 0.1,
                satisfied: true,
            },
        }
    }

    #[test]
    fn exact_power_law_slope() {
        let ms: Vec<MemberSummary> = [0.2, 0.1, 0.05, 0.025].iter().map(|&e| member(e, 3.0 * e, e.powf(0.5))).collect();
        let r = sweep_summary(ms).unwrap();
        let f = r.outer_mass_fit.unwrap();
        assert!((f.slope - 1.0).abs() < 1e-6);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((r.support_radius_fit.unwrap().slope - 0.5).abs() < 1e-6);
        assert_eq!(r.max_moment_ratio, 0.5);
        assert!(r.max_center_ratio.is_nan());
    }

    #[test]
    fn needs_three_members() {
        let ms = vec![member(0.1, 0.1, 0.1), member(0.05, 0.05, 0.05)];
        assert_eq!(sweep_summary(ms).unwrap_err(), ReportError::InsufficientSweep { found: 2 });
    }

    #[test]
    fn permutation_invariant() {
        let base: Vec<MemberSummary> = [0.1, 0.05, 0.025].iter().map(|&e| member(e, e * e, e)).collect();
        let a = sweep_summary(base.clone()).unwrap();
        let mut rev = base;
        rev.reverse();
        rev.swap(0, 1);
        let b = sweep_summary(rev).unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), serde_json::to_string(&a).unwrap());
    }

    #[test]
    fn zero_mass_gives_note_not_fit() {
        let ms: Vec<MemberSummary> = [0.1, 0.05, 0.025].iter().map(|&e| member(e, 0.0, e)).collect();
        let r = sweep_summary(ms).unwrap();
        assert!(r.outer_mass_fit.is_none());
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn rejects_mixed_and_duplicate() {
        let mut ms: Vec<MemberSummary> = [0.1, 0.05, 0.025].iter().map(|&e| member(e, e, e)).collect();
        ms[1].scenario = "other".into();
        assert!(matches!(sweep_summary(ms).unwrap_err(), ReportError::MixedScenarios(..)));
        let ms: Vec<MemberSummary> = [0.1, 0.05, 0.05].iter().map(|&e| member(e, e, e)).collect();
        assert_eq!(sweep_summary(ms).unwrap_err(), ReportError::DuplicateEpsilon(0.05));
    }
}
