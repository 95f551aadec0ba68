//! Pre-mission what-if variants: overrides applied to a base scenario, and
//! side-by-side comparison of their runs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dtn::MatrixCell;
use crate::error::{Error, Result};
use crate::scenario::{Scenario, UtilityWeights};
use crate::sensing::TeamSensingPolicy;
use crate::sim::{run, Outcome};

/// One requirement change for an unordered node pair, by node id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairOverride {
    pub a: String,
    pub b: String,
    pub c: u32,
    pub h: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub label: String,
    /// Base scenario reference (a file path for the CLI, a scenario id for
    /// the service). Defaults to the caller's base scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    /// Full replacement requirement matrix, applied before `net_overrides`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net: Option<Vec<Vec<MatrixCell>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub net_overrides: Vec<PairOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<UtilityWeights>,
    /// Node id -> team (`null` removes the node from every team).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub teams: BTreeMap<String, Option<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_policy: Option<TeamSensingPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cycles: Option<u32>,
}

impl WhatIfRequest {
    /// The base scenario with every override applied, re-validated.
    pub fn apply(&self, base: &Scenario) -> Result<Scenario> {
        let mut s = base.clone();
        s.name = Some(self.label.clone());
        if let Some(net) = &self.net {
            s.net = Some(net.clone());
        }
        for (k, o) in self.net_overrides.iter().enumerate() {
            let field = format!("net_overrides[{k}]");
            let i = s.node_index(&o.a).ok_or_else(|| Error::invalid(&field, format!("unknown node {}", o.a)))?;
            let j = s.node_index(&o.b).ok_or_else(|| Error::invalid(&field, format!("unknown node {}", o.b)))?;
            if i == j {
                return Err(Error::invalid(field, format!("({}, {}) is not a pair of distinct nodes", o.a, o.b)));
            }
            let matrix = s
                .net
                .as_mut()
                .ok_or_else(|| Error::invalid(&field, "base scenario has no net matrix"))?;
            let n = s.nodes.len();
            if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                return Err(Error::invalid("net.matrix", format!("must be {n} x {n}")));
            }
            matrix[i][j] = Some([o.c, o.h]);
            matrix[j][i] = Some([o.c, o.h]);
        }
        if let Some(w) = self.weights {
            s.weights = w;
        }
        for (id, team) in &self.teams {
            let i = s
                .node_index(id)
                .ok_or_else(|| Error::invalid(format!("teams.{id}"), format!("unknown node {id}")))?;
            s.nodes[i].team = team.clone();
        }
        if let Some(p) = self.team_policy {
            s.team_policy = Some(p);
        }
        if let Some(m) = self.max_cycles {
            s.max_cycles = m;
        }
        s.validate()?;
        Ok(s)
    }
}

/// Rejects empty or repeated labels.
pub fn check_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (k, label) in labels.into_iter().enumerate() {
        if label.is_empty() {
            return Err(Error::invalid(format!("variants[{k}].label"), "must not be empty"));
        }
        if !seen.insert(label) {
            return Err(Error::invalid(format!("variants[{k}].label"), format!("duplicate label {label}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub outcome: Option<Outcome>,
    pub detection_cycle: Option<u32>,
    pub cycles: u32,
    pub mean_f_c: Option<f64>,
    pub wall_time_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ComparisonRow {
    pub fn failed(label: impl Into<String>, error: impl ToString) -> Self {
        Self {
            label: label.into(),
            outcome: None,
            detection_cycle: None,
            cycles: 0,
            mean_f_c: None,
            wall_time_ms: 0.0,
            error: Some(error.to_string()),
        }
    }

    pub fn from_run(label: impl Into<String>, scenario: &Scenario) -> Self {
        let label = label.into();
        match run(scenario) {
            Ok(result) => {
                let summary = result.summary();
                Self {
                    label,
                    outcome: Some(result.outcome),
                    detection_cycle: summary.detection_cycle,
                    cycles: summary.cycles,
                    mean_f_c: Some(summary.mean_f_c),
                    wall_time_ms: result.wall_time.as_secs_f64() * 1e3,
                    error: None,
                }
            }
            Err(e) => Self::failed(label, e),
        }
    }
}

/// Runs the base scenario plus every variant. A failing variant yields an
/// error row; the others still run.
pub fn compare(base_label: &str, base: &Scenario, variants: &[(String, Result<Scenario>)]) -> Result<Vec<ComparisonRow>> {
    check_labels(std::iter::once(base_label).chain(variants.iter().map(|(l, _)| l.as_str())))?;
    let mut rows = vec![ComparisonRow::from_run(base_label, base)];
    for (label, scenario) in variants {
        rows.push(match scenario {
            Ok(s) => ComparisonRow::from_run(label.clone(), s),
            Err(e) => ComparisonRow::failed(label.clone(), e),
        });
    }
    Ok(rows)
}

/// Fixed-width text table of comparison rows.
pub fn render_table(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{:<16} {:<26} {:>9} {:>7} {:>9} {:>10}\n",
        "variant", "outcome", "detected", "cycles", "mean_f_c", "wall_ms"
    );
    for r in rows {
        let outcome = match (&r.outcome, &r.error) {
            (Some(o), _) => o.to_string(),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => "-".into(),
        };
        let detected = r.detection_cycle.map_or("-".into(), |c| c.to_string());
        let fc = r.mean_f_c.map_or("-".into(), |v| format!("{v:.4}"));
        out.push_str(&format!(
            "{:<16} {:<26} {:>9} {:>7} {:>9} {:>10.1}\n",
            r.label, outcome, detected, r.cycles, fc, r.wall_time_ms
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtn::NetRequirement;
    use crate::reference;

    #[test]
    fn overrides_are_symmetric_and_revalidated() {
        let base = reference::net_2();
        let req = WhatIfRequest {
            label: "relaxed".into(),
            net_overrides: vec![PairOverride { a: "UAV5".into(), b: "HVU".into(), c: 5, h: 10 }],
            ..Default::default()
        };
        let s = req.apply(&base).unwrap();
        let net = s.net_config().unwrap().unwrap();
        assert_eq!(net.get(0, 5), NetRequirement::new(5, 10));
        assert_eq!(s.name.as_deref(), Some("relaxed"));
        // Untouched entries are preserved.
        let before = base.net_config().unwrap().unwrap();
        assert_eq!(net.get(1, 2), before.get(1, 2));
    }

    #[test]
    fn unknown_pair_is_rejected() {
        let req = WhatIfRequest {
            label: "x".into(),
            net_overrides: vec![PairOverride { a: "UAV9".into(), b: "HVU".into(), c: 5, h: 10 }],
            ..Default::default()
        };
        let err = req.apply(&reference::net_1()).unwrap_err();
        assert_eq!(err.field(), Some("net_overrides[0]"));

        let zero = WhatIfRequest {
            label: "x".into(),
            net_overrides: vec![PairOverride { a: "UAV1".into(), b: "HVU".into(), c: 0, h: 10 }],
            ..Default::default()
        };
        assert!(zero.apply(&reference::net_1()).is_err());
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        assert!(check_labels(["a", "b"]).is_ok());
        assert!(check_labels(["a", "a"]).is_err());
        let base = reference::net_1();
        let variants = vec![("base".to_string(), Ok(base.clone()))];
        assert!(compare("base", &base, &variants).is_err());
    }

    #[test]
    fn failed_variant_does_not_stop_others() {
        let mut base = reference::net_1();
        base.max_cycles = 2;
        let variants = vec![
            ("bad".to_string(), Err(Error::invalid("net", "broken"))),
            ("again".to_string(), Ok(base.clone())),
        ];
        let rows = compare("base", &base, &variants).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].error.is_some());
        assert!(rows[2].outcome.is_some());
        let table = render_table(&rows);
        assert!(table.contains("error: invalid net: broken"));
    }
}
