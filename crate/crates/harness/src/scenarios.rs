//! Built-in scenarios, stored as the JSON files under `scenarios/`.

use crate::config::{ConfigError, ScenarioConfig};

const SOURCES: [(&str, &str); 5] = [
    ("pair-translate", include_str!("../scenarios/pair-translate.json")),
    ("corotate", include_str!("../scenarios/corotate.json")),
    ("single-cauchy", include_str!("../scenarios/single-cauchy.json")),
    ("sweep-concentration", include_str!("../scenarios/sweep-concentration.json")),
    ("long-time", include_str!("../scenarios/long-time.json")),
];

pub fn names() -> Vec<&'static str> {
    SOURCES.iter().map(|(n, _)| *n).collect()
}

/// JSON text of a built-in scenario.
pub fn source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Option<Result<ScenarioConfig, ConfigError>> {
    source(name).map(ScenarioConfig::from_json)
}

pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    SOURCES
        .iter()
        .map(|(n, s)| ScenarioConfig::from_json(s).unwrap_or_else(|e| panic!("built-in scenario {n}: {e}")))
        .collect()
}
