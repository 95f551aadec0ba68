//! Joint utility and the greedy one-node-at-a-time repositioning heuristic.
//!
//! Each greedy step evaluates every unplaced reactive node over all of its
//! feasible moves (placed nodes at their new positions, unplaced nodes where
//! they started the cycle) and commits the single (node, position) with the
//! largest utility increase over staying put. Ties prefer staying put, then
//! the lexicographically smallest position, then the lowest node index.

use serde::{Deserialize, Serialize};

use crate::dtn::{ConnectivityLedger, DtnModel};
use crate::grid::{feasible_moves, CapabilityParams, GridSpec, Metric, Position, Topology};
use crate::legacy::{graph_resistance, legacy_comm_utility, LaplacianWeighting, WeightedCommGraph};
use crate::scenario::{SensingNormalization, UtilityWeights};
use crate::sensing::{coverage_utility, remaining_weight, Sensor, SensingProfile, TargetPoint, TeamSensingPolicy};

/// Utilities closer than this are treated as equal.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityBreakdown {
    pub f_s: f64,
    pub f_c: f64,
    pub j: f64,
}

/// Aggregate sensing utility of a topology.
#[derive(Debug, Clone)]
pub struct SensingObjective<'a> {
    /// `(node index, team)` of every sensing node.
    pub sensors: Vec<(usize, Option<&'a str>)>,
    pub targets: &'a [TargetPoint],
    pub profile: SensingProfile,
    pub policy: Option<&'a TeamSensingPolicy>,
    pub metric: Metric,
    pub normalization: SensingNormalization,
}

impl SensingObjective<'_> {
    pub fn value(&self, topology: &Topology) -> f64 {
        let sensors: Vec<Sensor<'_>> = self
            .sensors
            .iter()
            .map(|&(i, team)| Sensor { position: topology.get(i), team })
            .collect();
        let covered = coverage_utility(&sensors, self.targets, &self.profile, self.policy, self.metric);
        match self.normalization {
            SensingNormalization::Raw => covered,
            SensingNormalization::Normalized => {
                let total = remaining_weight(self.targets);
                if total > 0.0 {
                    covered / total
                } else {
                    0.0
                }
            }
        }
    }
}

/// Graph-resistance communications model.
#[derive(Debug, Clone, Copy)]
pub struct LegacyComm {
    pub c_max: f64,
    pub tau: f64,
    pub metric: Metric,
    pub weighting: LaplacianWeighting,
}

impl LegacyComm {
    pub fn resistance(&self, topology: &Topology) -> f64 {
        if topology.len() < 2 {
            return 0.0;
        }
        let g = WeightedCommGraph::from_topology(topology, self.c_max, self.tau, self.metric, self.weighting);
        // A non-converging eigensolve scores like a disconnected graph.
        graph_resistance(&g).unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum CommEvaluator<'a> {
    Legacy(LegacyComm),
    Dtn { model: DtnModel<'a>, ledger: &'a ConnectivityLedger },
}

impl CommEvaluator<'_> {
    /// Communications utility of placing `node` at each candidate, every
    /// other node fixed as in `base`. The legacy model normalizes across the
    /// batch, so results depend on the whole candidate set.
    pub fn batch(&self, base: &Topology, node: usize, candidates: &[Position]) -> Vec<f64> {
        match self {
            CommEvaluator::Legacy(legacy) => {
                let rs: Vec<f64> = candidates
                    .iter()
                    .map(|&p| legacy.resistance(&base.with_node_at(node, p)))
                    .collect();
                legacy_comm_utility(&rs)
            }
            CommEvaluator::Dtn { model, ledger } => {
                let links = base.adjacency(model.c_max, model.metric);
                candidates
                    .iter()
                    .map(|&p| {
                        let moved = links.with_node_moved(base, node, p, model.c_max, model.metric);
                        model.evaluate_links(&moved, ledger).utility
                    })
                    .collect()
            }
        }
    }
}

/// Everything needed to score a topology within one control cycle.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub weights: UtilityWeights,
    pub sensing: SensingObjective<'a>,
    pub comm: CommEvaluator<'a>,
}

impl Objective<'_> {
    fn combine(&self, f_s: f64, f_c: f64) -> UtilityBreakdown {
        let j = self.weights.alpha_s * f_s + self.weights.alpha_c * f_c;
        UtilityBreakdown { f_s, f_c, j }
    }

    /// Joint utility of one topology. Under the legacy model a lone topology
    /// is its own normalization batch, so `f_c` is 1 when connected, else 0.
    pub fn joint_utility(&self, topology: &Topology) -> UtilityBreakdown {
        let f_s = self.sensing.value(topology);
        let f_c = if topology.is_empty() {
            0.0
        } else {
            self.comm.batch(topology, 0, &[topology.get(0)])[0]
        };
        self.combine(f_s, f_c)
    }

    pub fn evaluate_candidates(
        &self,
        base: &Topology,
        node: usize,
        candidates: &[Position],
    ) -> Vec<UtilityBreakdown> {
        let f_c = self.comm.batch(base, node, candidates);
        candidates
            .iter()
            .zip(f_c)
            .map(|(&p, f_c)| self.combine(self.sensing.value(&base.with_node_at(node, p)), f_c))
            .collect()
    }
}

/// Best move of one node with everything else held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub node: usize,
    pub from: Position,
    pub to: Position,
    /// Utility increase over staying at `from`.
    pub gain: f64,
    pub utility: UtilityBreakdown,
    pub candidates: usize,
}

pub fn argmax_topology(
    objective: &Objective<'_>,
    base: &Topology,
    node: usize,
    grid: &GridSpec,
    params: &CapabilityParams,
) -> Placement {
    let from = base.get(node);
    let moves = feasible_moves(from, params, grid);
    let scores = objective.evaluate_candidates(base, node, &moves);
    let stay = moves.iter().position(|&p| p == from).expect("staying put is feasible");
    let mut best = stay;
    for (k, score) in scores.iter().enumerate() {
        if score.j > scores[best].j + TIE_EPS {
            best = k;
        }
    }
    Placement {
        node,
        from,
        to: moves[best],
        gain: scores[best].j - scores[stay].j,
        utility: scores[best],
        candidates: moves.len(),
    }
}

/// Placements in commit order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GreedyStepTrace {
    pub steps: Vec<Placement>,
}

impl GreedyStepTrace {
    pub fn order(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.node).collect()
    }

    pub fn gains(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.gain).collect()
    }
}

/// Moves every reactive node exactly once, best marginal gain first.
pub fn greedy_reposition(
    objective: &Objective<'_>,
    start: &Topology,
    reactive: &[usize],
    grid: &GridSpec,
    params: &CapabilityParams,
) -> (Topology, GreedyStepTrace) {
    let mut current = start.clone();
    let mut unplaced: Vec<usize> = reactive.to_vec();
    unplaced.sort_unstable();
    unplaced.dedup();
    let mut trace = GreedyStepTrace::default();
    while !unplaced.is_empty() {
        let mut best: Option<Placement> = None;
        for &node in &unplaced {
            let p = argmax_topology(objective, &current, node, grid, params);
            if best.as_ref().is_none_or(|b| p.gain > b.gain + TIE_EPS) {
                best = Some(p);
            }
        }
        let chosen = best.expect("unplaced is non-empty");
        current = current.with_node_at(chosen.node, chosen.to);
        unplaced.retain(|&n| n != chosen.node);
        trace.steps.push(chosen);
    }
    (current, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtn::{NetConfig, NetRequirement};

    fn at(x: i32, y: i32) -> Position {
        Position::new(x, y)
    }

    fn sensing<'a>(targets: &'a [TargetPoint], sensors: Vec<(usize, Option<&'a str>)>) -> SensingObjective<'a> {
        SensingObjective {
            sensors,
            targets,
            profile: SensingProfile::new(2.0, 4.0).unwrap(),
            policy: None,
            metric: Metric::Euclidean,
            normalization: SensingNormalization::Normalized,
        }
    }

    #[test]
    fn joint_utility_is_weighted_sum() {
        let net = NetConfig::from_fn(3, |i, j| match (i, j) {
            (0, 1) => NetRequirement::new(1, 1),
            _ => NetRequirement::new(2, 1),
        });
        // Pair (0,2) silent with streak 2 > c - 1: m = {1, 0, 1}.
        let ledger = ConnectivityLedger::from_streaks(3, vec![0, 2, 0]);
        let t = Topology::new(vec![at(0, 0), at(3, 0), at(7, 0)]);
        let targets: Vec<TargetPoint> = Vec::new();
        let objective = Objective {
            weights: UtilityWeights { alpha_s: 0.0, alpha_c: 1.0 },
            sensing: sensing(&targets, vec![(1, None), (2, None)]),
            comm: CommEvaluator::Dtn { model: DtnModel::new(&net, 5.0, Metric::Euclidean), ledger: &ledger },
        };
        let u = objective.joint_utility(&t);
        assert_eq!(u.f_c, 0.75);
        assert_eq!(u.j, 0.75);

        let mut cleared = vec![TargetPoint::new("t", at(0, 0), 1.0)];
        cleared[0].cleared = true;
        let objective = Objective {
            weights: UtilityWeights { alpha_s: 1.0, alpha_c: 0.0 },
            sensing: sensing(&cleared, vec![(1, None)]),
            comm: CommEvaluator::Dtn { model: DtnModel::new(&net, 5.0, Metric::Euclidean), ledger: &ledger },
        };
        assert_eq!(objective.joint_utility(&t).j, 0.0);

        let half = Objective { weights: UtilityWeights { alpha_s: 0.5, alpha_c: 0.5 }, ..objective };
        assert!((half.combine(0.4, 0.8).j - 0.6).abs() < 1e-15);
    }

    fn sensing_only<'a>(targets: &'a [TargetPoint], net: &'a NetConfig, ledger: &'a ConnectivityLedger, sensors: Vec<(usize, Option<&'a str>)>) -> Objective<'a> {
        Objective {
            weights: UtilityWeights { alpha_s: 1.0, alpha_c: 0.0 },
            sensing: sensing(targets, sensors),
            comm: CommEvaluator::Dtn { model: DtnModel::new(net, 5.0, Metric::Euclidean), ledger },
        }
    }

    #[test]
    fn argmax_approaches_single_target() {
        let grid = GridSpec::new(20, 20);
        let params = CapabilityParams::default();
        let targets = [TargetPoint::new("t", at(10, 10), 1.0)];
        let net = NetConfig::uniform(1, NetRequirement::new(1, 1));
        let ledger = ConnectivityLedger::new(1);
        let objective = sensing_only(&targets, &net, &ledger, vec![(0, None)]);
        let base = Topology::new(vec![at(4, 10)]);
        let choice = argmax_topology(&objective, &base, 0, &grid, &params);
        assert_eq!(choice.to, at(8, 10));
        assert_eq!(choice.gain, 1.0);
        assert_eq!(choice.candidates, 49);
    }

    #[test]
    fn ties_keep_current_position() {
        let grid = GridSpec::new(20, 20);
        let params = CapabilityParams::default();
        let targets: Vec<TargetPoint> = Vec::new();
        let net = NetConfig::uniform(1, NetRequirement::new(1, 1));
        let ledger = ConnectivityLedger::new(1);
        let objective = sensing_only(&targets, &net, &ledger, vec![(0, None)]);
        let base = Topology::new(vec![at(9, 9)]);
        let choice = argmax_topology(&objective, &base, 0, &grid, &params);
        assert_eq!(choice.to, at(9, 9));
        assert_eq!(choice.gain, 0.0);
        let (moved, trace) = greedy_reposition(&objective, &base, &[0], &grid, &params);
        assert_eq!(moved, base);
        assert_eq!(trace.order(), vec![0]);
    }

    #[test]
    fn single_node_greedy_is_exhaustive_argmax() {
        let grid = GridSpec::new(12, 12);
        let params = CapabilityParams::default();
        let targets = [
            TargetPoint::new("a", at(3, 9), 1.0),
            TargetPoint::new("b", at(9, 9), 2.0),
            TargetPoint::new("c", at(8, 2), 0.5),
        ];
        let net = NetConfig::uniform(2, NetRequirement::new(1, 2));
        let ledger = ConnectivityLedger::new(2);
        let objective = Objective {
            weights: UtilityWeights { alpha_s: 0.5, alpha_c: 0.5 },
            sensing: sensing(&targets, vec![(1, None)]),
            comm: CommEvaluator::Dtn { model: DtnModel::new(&net, 5.0, Metric::Euclidean), ledger: &ledger },
        };
        let base = Topology::new(vec![at(5, 5), at(6, 6)]);
        let (best, _) = greedy_reposition(&objective, &base, &[1], &grid, &params);
        let oracle = feasible_moves(at(6, 6), &params, &grid)
            .into_iter()
            .map(|p| objective.joint_utility(&base.with_node_at(1, p)).j)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((objective.joint_utility(&best).j - oracle).abs() < 1e-12);
    }

    #[test]
    fn dtn_isolated_node_restores_conformance() {
        // Relay at (5,0); node 2 has exhausted its silence allowance with node 0.
        let grid = GridSpec::new(20, 20);
        let params = CapabilityParams::default();
        let net = NetConfig::uniform(3, NetRequirement::new(1, 10));
        let ledger = ConnectivityLedger::from_streaks(3, vec![0, 1, 1]);
        let targets: Vec<TargetPoint> = Vec::new();
        let objective = Objective {
            weights: UtilityWeights { alpha_s: 0.0, alpha_c: 1.0 },
            sensing: sensing(&targets, vec![]),
            comm: CommEvaluator::Dtn { model: DtnModel::new(&net, 5.0, Metric::Euclidean), ledger: &ledger },
        };
        let base = Topology::new(vec![at(0, 0), at(5, 0), at(13, 0)]);
        let choice = argmax_topology(&objective, &base, 2, &grid, &params);
        let after = base.with_node_at(2, choice.to);
        assert_eq!(objective.joint_utility(&after).f_c, 1.0);
        assert!(crate::grid::distance(choice.to, at(5, 0)) <= 5.0);
        assert_eq!(choice.to, at(9, 0));
    }

    #[test]
    fn legacy_batch_normalizes_per_node() {
        let legacy = LegacyComm { c_max: 5.0, tau: 3.0, metric: Metric::Euclidean, weighting: LaplacianWeighting::Conductance };
        let comm = CommEvaluator::Legacy(legacy);
        let base = Topology::new(vec![at(0, 0), at(3, 0)]);
        let f = comm.batch(&base, 1, &[at(1, 0), at(3, 0), at(9, 0)]);
        assert_eq!(f, vec![1.0, 0.0, 0.0]);
    }
}
