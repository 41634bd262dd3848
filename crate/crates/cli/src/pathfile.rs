//! Path files: the JSON document written by `ariadne plan`.
//!
//! Layout is fixed so that equal inputs give byte-identical files: one
//! key per line at the top level and one configuration per line inside the
//! `waypoints` and `landmarks` arrays.

use std::fmt::Write as _;

use ariadne_core::planner::{Outcome, PlanResult};
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "ariadne-path/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub configuration: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub evaluations: usize,
    pub searches: usize,
    pub landmarks: usize,
    /// Spread of the last explored landmark; absent if none was explored.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub format: String,
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub outcome: Outcome,
    pub stats: Stats,
    pub waypoints: Vec<Vec<f64>>,
    pub landmarks: Vec<LandmarkRecord>,
}

impl PathFile {
    pub fn new(scenario: &str, scenario_hash: &str, seed: u64, r: &PlanResult) -> Self {
        Self {
            format: FORMAT.to_string(),
            scenario: scenario.to_string(),
            scenario_hash: scenario_hash.to_string(),
            seed,
            outcome: r.outcome,
            stats: Stats {
                evaluations: r.evaluations,
                searches: r.searches,
                landmarks: r.landmarks_placed(),
                epsilon: r.epsilon.is_finite().then_some(r.epsilon),
            },
            waypoints: r.path.iter().map(|q| q.0.clone()).collect(),
            landmarks: r
                .tree
                .iter()
                .map(|l| LandmarkRecord {
                    id: l.id,
                    parent: l.parent,
                    configuration: l.configuration.0.clone(),
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let file: PathFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.format != FORMAT {
            return Err(format!("unsupported path file format '{}'", file.format));
        }
        Ok(file)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("{\n");
        let fields: [(&str, String); 6] = [
            ("format", json(&self.format)),
            ("scenario", json(&self.scenario)),
            ("scenario_hash", json(&self.scenario_hash)),
            ("seed", json(&self.seed)),
            ("outcome", json(&self.outcome)),
            ("stats", json(&self.stats)),
        ];
        for (k, v) in fields {
            let _ = writeln!(out, "  \"{k}\": {v},");
        }
        out.push_str("  \"waypoints\": ");
        list(&mut out, self.waypoints.iter().map(json));
        out.push_str(",\n  \"landmarks\": ");
        list(&mut out, self.landmarks.iter().map(json));
        out.push_str("\n}\n");
        out
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn list(out: &mut String, items: impl Iterator<Item = String>) {
    let items: Vec<String> = items.collect();
    if items.is_empty() {
        out.push_str("[]");
        return;
    }
    out.push_str("[\n");
    for (i, item) in items.iter().enumerate() {
        let sep = if i + 1 < items.len() { "," } else { "" };
        let _ = writeln!(out, "    {item}{sep}");
    }
    out.push_str("  ]");
}

#[cfg(test)]
mod tests {
    use super::*;
    use ariadne_core::scenario::fixture;
    use ariadne_core::{plan, PlannerConfig};

    #[test]
    fn round_trip_with_one_configuration_per_line() {
        let s = fixture("maze").unwrap();
        let r = plan(
            &s.robot,
            &s.world,
            &s.start,
            &s.goal,
            &PlannerConfig {
                seed: 3,
                ..s.planner.clone()
            },
        )
        .unwrap();
        let file = PathFile::new(&s.name, &s.hash, 3, &r);
        let text = file.to_text();
        assert_eq!(PathFile::parse(&text).unwrap(), file);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines.len(),
            6 + 2 + file.waypoints.len() + 2 + file.landmarks.len() + 1 + 1
        );
        assert!(PathFile::parse(&text.replace(FORMAT, "other/9")).is_err());
        assert!(PathFile::parse(&text.replacen("{", "{\"extra\": 1,", 1)).is_err());
    }
}
