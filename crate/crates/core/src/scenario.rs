//! Mission description as stored in scenario files, and its validation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dtn::{MatrixCell, NetConfig};
use crate::error::{Error, Result};
use crate::grid::{CapabilityParams, GridSpec, Position};
use crate::legacy::LaplacianWeighting;
use crate::sensing::{ClearingRadius, TargetPoint, TeamSensingPolicy};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    /// Follows a script (or stays put).
    Preset,
    /// Repositioned by the optimizer every cycle.
    Reactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub role: NodeRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team: Option<String>,
    pub initial: Position,
    /// Waypoints for cycles 1, 2, ..; the last one is held afterwards.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub script: Vec<Position>,
    /// Whether the node contributes sensing and can detect. Defaults to true
    /// for reactive nodes and false for preset nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub senses: Option<bool>,
}

impl NodeSpec {
    pub fn senses(&self) -> bool {
        self.senses.unwrap_or(self.role == NodeRole::Reactive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityWeights {
    pub alpha_s: f64,
    pub alpha_c: f64,
}

impl UtilityWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha_s", self.alpha_s), ("alpha_c", self.alpha_c)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("weights.{name}"), "must lie in [0, 1]"));
            }
        }
        if (self.alpha_s + self.alpha_c - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("weights", "alpha_s + alpha_c must equal 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommModel {
    Legacy,
    Dtn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RedTarget {
    pub position: Position,
    /// Defaults to `s_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingNormalization {
    /// Divide coverage by the remaining target weight.
    #[default]
    Normalized,
    Raw,
}

/// Model switches with defaults; all optional in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    pub sensing_normalization: SensingNormalization,
    pub laplacian_weighting: LaplacianWeighting,
    pub clearing_radius: ClearingRadius,
    /// Consecutive idle cycles (no movement, nothing cleared) that end a run.
    pub convergence_window: u32,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            sensing_normalization: SensingNormalization::Normalized,
            laplacian_weighting: LaplacianWeighting::Conductance,
            clearing_radius: ClearingRadius::SSuf,
            convergence_window: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub grid: GridSpec,
    pub nodes: Vec<NodeSpec>,
    pub params: CapabilityParams,
    pub weights: UtilityWeights,
    pub comm_model: CommModel,
    /// Square `[c, h]` matrix in node order; `null` on the diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net: Option<Vec<Vec<MatrixCell>>>,
    #[serde(default)]
    pub targets: Vec<TargetPoint>,
    pub red_target: RedTarget,
    pub max_cycles: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_policy: Option<TeamSensingPolicy>,
    #[serde(default)]
    pub options: ModelOptions,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    pub fn node_ids(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn initial_positions(&self) -> Vec<Position> {
        self.nodes.iter().map(|n| n.initial).collect()
    }

    pub fn reactive_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].role == NodeRole::Reactive).collect()
    }

    pub fn detection_radius(&self) -> f64 {
        self.red_target.detection_radius.unwrap_or(self.params.s_max)
    }

    pub fn clearing_radius(&self) -> f64 {
        match self.options.clearing_radius {
            ClearingRadius::SSuf => self.params.s_suf,
            ClearingRadius::SMax => self.params.s_max,
        }
    }

    /// Parsed requirement matrix; `None` when the scenario carries none.
    pub fn net_config(&self) -> Result<Option<NetConfig>> {
        self.net
            .as_ref()
            .map(|m| NetConfig::from_matrix(m, &self.node_ids()))
            .transpose()
    }

    /// Checks every field and cross-field invariant; the error names the
    /// first offending field.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.params.validate()?;
        self.weights.validate()?;
        if self.max_cycles == 0 {
            return Err(Error::invalid("max_cycles", "must be at least 1"));
        }
        if self.options.convergence_window == 0 {
            return Err(Error::invalid("options.convergence_window", "must be at least 1"));
        }
        self.validate_nodes()?;
        self.validate_targets()?;
        match self.comm_model {
            CommModel::Dtn if self.net.is_none() => {
                return Err(Error::invalid("net", "required when comm_model is dtn"));
            }
            _ => {}
        }
        self.net_config()?;
        let red = &self.red_target;
        if !self.grid.contains(red.position) {
            return Err(Error::invalid("red_target.position", format!("{} is outside the grid", red.position)));
        }
        if let Some(r) = red.detection_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid("red_target.detection_radius", "must be a positive number"));
            }
        }
        if let Some(p) = &self.team_policy {
            p.validate()?;
        }
        Ok(())
    }

    fn validate_nodes(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::invalid("nodes", "at least one node is required"));
        }
        let mut seen = BTreeSet::new();
        for (k, node) in self.nodes.iter().enumerate() {
            let field = |name: &str| format!("nodes[{k}].{name}");
            if node.id.is_empty() {
                return Err(Error::invalid(field("id"), "must not be empty"));
            }
            if !seen.insert(node.id.as_str()) {
                return Err(Error::invalid(field("id"), format!("duplicate node id {}", node.id)));
            }
            if !self.grid.is_navigable(node.initial) {
                return Err(Error::invalid(
                    field("initial"),
                    format!("{} is outside the grid or blocked", node.initial),
                ));
            }
            if node.role == NodeRole::Reactive && !node.script.is_empty() {
                return Err(Error::invalid(field("script"), "reactive nodes cannot follow a script"));
            }
            let mut prev = node.initial;
            for (s, &p) in node.script.iter().enumerate() {
                if !self.grid.is_navigable(p) {
                    return Err(Error::invalid(
                        format!("nodes[{k}].script[{s}]"),
                        format!("{p} is outside the grid or blocked"),
                    ));
                }
                if self.grid.distance(prev, p) > self.params.m_max {
                    return Err(Error::invalid(
                        format!("nodes[{k}].script[{s}]"),
                        format!("step {prev} -> {p} exceeds m_max"),
                    ));
                }
                prev = p;
            }
        }
        if !self.nodes.iter().any(|n| n.role == NodeRole::Reactive) {
            return Err(Error::invalid("nodes", "at least one reactive node is required"));
        }
        Ok(())
    }

    fn validate_targets(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (k, t) in self.targets.iter().enumerate() {
            if !seen.insert(t.id.as_str()) {
                return Err(Error::invalid(format!("targets[{k}].id"), format!("duplicate target id {}", t.id)));
            }
            if !self.grid.contains(t.position) {
                return Err(Error::invalid(
                    format!("targets[{k}].position"),
                    format!("{} is outside the grid", t.position),
                ));
            }
            if !(t.weight.is_finite() && t.weight >= 0.0) {
                return Err(Error::invalid(format!("targets[{k}].weight"), "must be a non-negative number"));
            }
        }
        Ok(())
    }
}

/// Position of a preset node at cycle `k` (cycle 0 is the initial position).
pub fn apply_preset(initial: Position, script: &[Position], k: u32) -> Position {
    if k == 0 || script.is_empty() {
        return initial;
    }
    let idx = (k as usize - 1).min(script.len() - 1);
    script[idx]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Scenario {
        Scenario::from_json(
            r#"{
                "grid": {"width": 6, "height": 6},
                "nodes": [
                    {"id": "HVU", "role": "preset", "initial": {"x": 0, "y": 0}},
                    {"id": "U1", "role": "reactive", "initial": {"x": 1, "y": 0}}
                ],
                "params": {"s_max": 4, "s_suf": 2, "c_max": 5, "m_max": 2},
                "weights": {"alpha_s": 0.5, "alpha_c": 0.5},
                "comm_model": "dtn",
                "net": [[null, [1, 1]], [[1, 1], null]],
                "targets": [{"id": "t0", "position": {"x": 5, "y": 5}}],
                "red_target": {"position": {"x": 5, "y": 0}},
                "max_cycles": 5
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn tiny_scenario_is_valid() {
        let s = tiny();
        s.validate().unwrap();
        assert_eq!(s.detection_radius(), 4.0);
        assert_eq!(s.targets[0].weight, 1.0);
        assert!(!s.nodes[0].senses());
        assert!(s.nodes[1].senses());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"grid": {"width": 6, "height": 6}, "bogus": 1}"#;
        let err = Scenario::from_json(text).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn validation_names_fields() {
        let mut s = tiny();
        s.weights.alpha_c = 0.6;
        assert_eq!(s.validate().unwrap_err().field(), Some("weights"));

        let mut s = tiny();
        s.nodes[1].initial = Position::new(6, 0);
        assert_eq!(s.validate().unwrap_err().field(), Some("nodes[1].initial"));

        let mut s = tiny();
        s.net = None;
        assert_eq!(s.validate().unwrap_err().field(), Some("net"));

        let mut s = tiny();
        s.net = Some(vec![vec![None, Some([1, 1])], vec![Some([2, 1]), None]]);
        assert_eq!(s.validate().unwrap_err().field(), Some("net.matrix[0][1]"));

        let mut s = tiny();
        s.nodes[0].script = vec![Position::new(0, 1), Position::new(5, 5)];
        assert_eq!(s.validate().unwrap_err().field(), Some("nodes[0].script[1]"));

        let mut s = tiny();
        s.nodes[1].role = NodeRole::Preset;
        assert_eq!(s.validate().unwrap_err().field(), Some("nodes"));
    }

    #[test]
    fn preset_script_examples() {
        let home = Position::new(3, 3);
        assert_eq!(apply_preset(home, &[], 7), home);
        let script = [Position::new(0, 0), Position::new(0, 1)];
        assert_eq!(apply_preset(home, &script, 2), Position::new(0, 1));
        assert_eq!(apply_preset(home, &script, 9), Position::new(0, 1));
        assert_eq!(apply_preset(home, &script, 0), home);
    }
}
