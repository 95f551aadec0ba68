//! Sensing utility: the raised-cosine range falloff per target, team
//! priority scaling, coverage aggregation and target clearing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Metric, Position};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetPoint {
    pub id: String,
    pub position: Position,
    #[serde(default = "default_weight")]
    pub weight: f64,
    /// Team whose tasked area this point belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_tag: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub cleared: bool,
}

fn default_weight() -> f64 {
    1.0
}

impl TargetPoint {
    pub fn new(id: impl Into<String>, position: Position, weight: f64) -> Self {
        Self { id: id.into(), position, weight, team_tag: None, cleared: false }
    }

    pub fn with_team(mut self, team: impl Into<String>) -> Self {
        self.team_tag = Some(team.into());
        self
    }
}

/// Priority scaling applied when teams are tasked with different areas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamSensingPolicy {
    pub assigned_weight: f64,
    pub other_weight: f64,
}

impl TeamSensingPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.assigned_weight > 0.0 && self.assigned_weight <= 1.0) {
            return Err(Error::invalid("team_policy.assigned_weight", "must lie in (0, 1]"));
        }
        if !(self.other_weight >= 0.0 && self.other_weight < 1.0) {
            return Err(Error::invalid("team_policy.other_weight", "must lie in [0, 1)"));
        }
        if self.assigned_weight <= self.other_weight {
            return Err(Error::invalid(
                "team_policy.assigned_weight",
                "must exceed other_weight",
            ));
        }
        Ok(())
    }
}

/// Raised-cosine falloff between the sufficient and maximum sensing ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingProfile {
    s_suf: f64,
    s_max: f64,
}

impl SensingProfile {
    pub fn new(s_suf: f64, s_max: f64) -> Result<Self> {
        if !(s_suf > 0.0 && s_suf < s_max && s_max.is_finite()) {
            return Err(Error::Domain("sensing range (requires 0 < s_suf < s_max)"));
        }
        Ok(Self { s_suf, s_max })
    }

    /// Utility of sensing a target of weight `w` from `r` steps away.
    pub fn value(&self, r: f64, w: f64) -> f64 {
        if r <= self.s_suf {
            w
        } else if r <= self.s_max {
            let phase = PI * (r - self.s_suf) / (self.s_max - self.s_suf);
            0.5 * w * (1.0 + phase.cos())
        } else {
            0.0
        }
    }
}

/// Checked single evaluation of the falloff.
pub fn theta(r: f64, w: f64, s_suf: f64, s_max: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain("sensing distance"));
    }
    if w.is_nan() || w < 0.0 {
        return Err(Error::Domain("target weight"));
    }
    Ok(SensingProfile::new(s_suf, s_max)?.value(r, w))
}

/// Weight a sensor on `node_team` sees for `target`. Without a policy the
/// raw target weight applies.
pub fn effective_weight(
    target: &TargetPoint,
    node_team: Option<&str>,
    policy: Option<&TeamSensingPolicy>,
) -> f64 {
    match policy {
        None => target.weight,
        Some(p) => match (target.team_tag.as_deref(), node_team) {
            (Some(tag), Some(team)) if tag == team => target.weight * p.assigned_weight,
            _ => target.weight * p.other_weight,
        },
    }
}

/// A sensing node as seen by the utility functions.
#[derive(Debug, Clone, Copy)]
pub struct Sensor<'a> {
    pub position: Position,
    pub team: Option<&'a str>,
}

/// Sum of per-target utilities for one node over all uncleared targets.
pub fn node_sensing_utility(
    sensor: Sensor<'_>,
    targets: &[TargetPoint],
    profile: &SensingProfile,
    policy: Option<&TeamSensingPolicy>,
    metric: Metric,
) -> f64 {
    targets
        .iter()
        .filter(|t| !t.cleared)
        .map(|t| {
            let w = effective_weight(t, sensor.team, policy);
            profile.value(metric.distance(sensor.position, t.position), w)
        })
        .sum()
}

/// Team-level coverage: each uncleared target counts once, at the best
/// utility any sensor achieves on it.
pub fn coverage_utility(
    sensors: &[Sensor<'_>],
    targets: &[TargetPoint],
    profile: &SensingProfile,
    policy: Option<&TeamSensingPolicy>,
    metric: Metric,
) -> f64 {
    targets
        .iter()
        .filter(|t| !t.cleared)
        .map(|t| {
            sensors
                .iter()
                .map(|s| {
                    let w = effective_weight(t, s.team, policy);
                    profile.value(metric.distance(s.position, t.position), w)
                })
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Sum of uncleared target weights.
pub fn remaining_weight(targets: &[TargetPoint]) -> f64 {
    targets.iter().filter(|t| !t.cleared).map(|t| t.weight).sum()
}

/// Which range marks a target point as searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClearingRadius {
    #[default]
    SSuf,
    SMax,
}

/// Marks every target within `radius` of a sensor as cleared. Returns the
/// updated list and the ids cleared by this call, in target order.
pub fn update_cleared(
    targets: &[TargetPoint],
    sensors: &[Position],
    radius: f64,
    metric: Metric,
) -> (Vec<TargetPoint>, Vec<String>) {
    let mut newly = Vec::new();
    let updated = targets
        .iter()
        .map(|t| {
            let mut t = t.clone();
            if !t.cleared && sensors.iter().any(|&s| metric.distance(s, t.position) <= radius) {
                t.cleared = true;
                newly.push(t.id.clone());
            }
            t
        })
        .collect();
    (updated, newly)
}
