//! Control-cycle loop: preset movement, greedy repositioning, ledger commit,
//! target clearing, detection and per-cycle records.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dtn::{pairs, ConnectivityLedger, DtnModel, NetConfig};
use crate::error::Result;
use crate::grid::{Metric, Position, Topology};
use crate::optimizer::{
    greedy_reposition, CommEvaluator, LegacyComm, Objective, Placement, SensingObjective,
    UtilityBreakdown,
};
use crate::scenario::{apply_preset, CommModel, NodeRole, RedTarget, Scenario, FORMAT_VERSION};
use crate::sensing::{update_cleared, SensingProfile, TargetPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePosition {
    pub id: String,
    pub x: i32,
    pub y: i32,
}

/// Communication state of one node pair in a committed cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub a: String,
    pub b: String,
    /// Shortest path in hops; `null` when unreachable.
    pub hops: Option<u32>,
    pub communicating: bool,
    /// Conformance of the committed topology, judged against the ledger
    /// before this cycle.
    pub m: bool,
    /// Silence streak after committing this cycle.
    pub streak: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub node: String,
    pub from: Position,
    pub to: Position,
    pub gain: f64,
    pub j: f64,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub node: String,
    pub cycle: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub format_version: u32,
    #[serde(rename = "type")]
    pub kind: String,
    pub cycle: u32,
    pub positions: Vec<NodePosition>,
    pub f_s: f64,
    pub f_c: f64,
    pub j: f64,
    /// Graph resistance of the committed topology (legacy model); `null`
    /// when disconnected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistance: Option<Option<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairRecord>,
    pub cleared: Vec<String>,
    pub detection: Option<Detection>,
    pub trace: Vec<TraceStep>,
}

impl CycleRecord {
    pub fn topology(&self) -> Topology {
        Topology::new(self.positions.iter().map(|p| Position::new(p.x, p.y)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Detected { cycle: u32 },
    Exhausted { max_cycles: u32 },
    Converged { cycle: u32 },
}

impl Outcome {
    pub fn detection_cycle(&self) -> Option<u32> {
        match *self {
            Outcome::Detected { cycle } => Some(cycle),
            _ => None,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Detected { cycle } => write!(f, "detected at cycle {cycle}"),
            Outcome::Exhausted { max_cycles } => write!(f, "exhausted after {max_cycles} cycles"),
            Outcome::Converged { cycle } => write!(f, "converged at cycle {cycle}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub name: String,
    pub records: Vec<CycleRecord>,
    pub outcome: Outcome,
    pub wall_time: Duration,
}

/// Final line of an NDJSON record stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format_version: u32,
    #[serde(rename = "type")]
    pub kind: String,
    pub name: String,
    pub outcome: Outcome,
    pub cycles: u32,
    pub detection_cycle: Option<u32>,
    pub mean_f_c: f64,
    pub mean_f_s: f64,
}

impl RunResult {
    pub fn summary(&self) -> RunSummary {
        let n = self.records.len().max(1) as f64;
        RunSummary {
            format_version: FORMAT_VERSION,
            kind: "summary".into(),
            name: self.name.clone(),
            outcome: self.outcome,
            cycles: self.records.len() as u32,
            detection_cycle: self.outcome.detection_cycle(),
            mean_f_c: self.records.iter().map(|r| r.f_c).sum::<f64>() / n,
            mean_f_s: self.records.iter().map(|r| r.f_s).sum::<f64>() / n,
        }
    }

    /// One JSON object per cycle, then the summary. Contains no timing, so
    /// identical scenarios give identical bytes.
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut out, &self.summary())?;
        out.write_all(b"\n")
    }

    pub fn to_ndjson(&self) -> String {
        let mut buf = Vec::new();
        self.write_ndjson(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

/// Lowest-index sensing node within the detection radius of the red target.
pub fn detect(
    topology: &Topology,
    sensing_nodes: &[usize],
    red: &RedTarget,
    radius: f64,
    metric: Metric,
) -> Option<usize> {
    sensing_nodes
        .iter()
        .copied()
        .filter(|&i| metric.distance(topology.get(i), red.position) <= radius)
        .min()
}

/// Scenario state carried from one cycle to the next.
#[derive(Debug, Clone)]
pub struct Engine {
    scenario: Scenario,
    net: Option<NetConfig>,
    profile: SensingProfile,
    sensing_nodes: Vec<usize>,
    reactive: Vec<usize>,
    cycle: u32,
    topology: Topology,
    targets: Vec<TargetPoint>,
    ledger: ConnectivityLedger,
    idle_cycles: u32,
    records: Vec<CycleRecord>,
    outcome: Option<Outcome>,
}

impl Engine {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let net = scenario.net_config()?;
        let profile = SensingProfile::new(scenario.params.s_suf, scenario.params.s_max)?;
        let mut sensing_nodes: Vec<usize> =
            (0..scenario.nodes.len()).filter(|&i| scenario.nodes[i].senses()).collect();
        sensing_nodes.sort_unstable();
        let n = scenario.nodes.len();
        Ok(Self {
            net,
            profile,
            sensing_nodes,
            reactive: scenario.reactive_nodes(),
            cycle: 0,
            topology: Topology::new(scenario.initial_positions()),
            targets: scenario.targets.clone(),
            ledger: ConnectivityLedger::new(n),
            idle_cycles: 0,
            records: Vec::new(),
            outcome: None,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn ledger(&self) -> &ConnectivityLedger {
        &self.ledger
    }

    pub fn targets(&self) -> &[TargetPoint] {
        &self.targets
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn records(&self) -> &[CycleRecord] {
        &self.records
    }

    fn sensing_objective<'a>(&'a self, targets: &'a [TargetPoint]) -> SensingObjective<'a> {
        SensingObjective {
            sensors: self
                .sensing_nodes
                .iter()
                .map(|&i| (i, self.scenario.nodes[i].team.as_deref()))
                .collect(),
            targets,
            profile: self.profile,
            policy: self.scenario.team_policy.as_ref(),
            metric: self.scenario.grid.metric,
            normalization: self.scenario.options.sensing_normalization,
        }
    }

    fn comm_evaluator(&self) -> CommEvaluator<'_> {
        let params = &self.scenario.params;
        let metric = self.scenario.grid.metric;
        match (self.scenario.comm_model, &self.net) {
            (CommModel::Dtn, Some(net)) => CommEvaluator::Dtn {
                model: DtnModel::new(net, params.c_max, metric),
                ledger: &self.ledger,
            },
            _ => CommEvaluator::Legacy(LegacyComm {
                c_max: params.c_max,
                tau: params.tau,
                metric,
                weighting: self.scenario.options.laplacian_weighting,
            }),
        }
    }

    /// The objective used for the next cycle's placement.
    pub fn objective(&self) -> Objective<'_> {
        Objective {
            weights: self.scenario.weights,
            sensing: self.sensing_objective(&self.targets),
            comm: self.comm_evaluator(),
        }
    }

    /// Runs one control cycle. Returns `None` once the run has finished.
    pub fn step(&mut self) -> Option<&CycleRecord> {
        if self.outcome.is_some() {
            return None;
        }
        let k = self.cycle + 1;
        let previous = self.topology.clone();

        let mut start = previous.clone();
        for (i, node) in self.scenario.nodes.iter().enumerate() {
            if node.role == NodeRole::Preset {
                start.0[i] = apply_preset(node.initial, &node.script, k);
            }
        }

        let objective = self.objective();
        let (committed, trace) = greedy_reposition(
            &objective,
            &start,
            &self.reactive,
            &self.scenario.grid,
            &self.scenario.params,
        );
        let utility = self.committed_utility(&objective, &committed, &start, &trace.steps);
        let resistance = match objective.comm {
            CommEvaluator::Legacy(legacy) => {
                let r = legacy.resistance(&committed);
                Some(r.is_finite().then_some(r))
            }
            CommEvaluator::Dtn { .. } => None,
        };
        drop(objective);

        let ids = self.scenario.node_ids();
        let mut pair_records = Vec::new();
        if let (CommModel::Dtn, Some(net)) = (self.scenario.comm_model, &self.net) {
            let model = DtnModel::new(net, self.scenario.params.c_max, self.scenario.grid.metric);
            let eval = model.evaluate(&committed, &self.ledger);
            let next = crate::dtn::commit_cycle(&eval.communicating, &self.ledger);
            for (k, (i, j)) in pairs(ids.len()).enumerate() {
                pair_records.push(PairRecord {
                    a: ids[i].clone(),
                    b: ids[j].clone(),
                    hops: eval.hops[k],
                    communicating: eval.communicating[k],
                    m: eval.conforming[k],
                    streak: next.streaks()[k],
                });
            }
            self.ledger = next;
        }

        let sensor_positions: Vec<Position> =
            self.sensing_nodes.iter().map(|&i| committed.get(i)).collect();
        let (targets, cleared) = update_cleared(
            &self.targets,
            &sensor_positions,
            self.scenario.clearing_radius(),
            self.scenario.grid.metric,
        );
        self.targets = targets;

        let detected = detect(
            &committed,
            &self.sensing_nodes,
            &self.scenario.red_target,
            self.scenario.detection_radius(),
            self.scenario.grid.metric,
        );

        let moved = committed != previous;
        self.idle_cycles = if moved || !cleared.is_empty() { 0 } else { self.idle_cycles + 1 };

        let record = CycleRecord {
            format_version: FORMAT_VERSION,
            kind: "cycle".into(),
            cycle: k,
            positions: committed
                .positions()
                .iter()
                .zip(&ids)
                .map(|(p, id)| NodePosition { id: id.clone(), x: p.x, y: p.y })
                .collect(),
            f_s: utility.f_s,
            f_c: utility.f_c,
            j: utility.j,
            resistance,
            pairs: pair_records,
            cleared,
            detection: detected.map(|i| Detection { node: ids[i].clone(), cycle: k }),
            trace: trace
                .steps
                .iter()
                .map(|s| TraceStep {
                    node: ids[s.node].clone(),
                    from: s.from,
                    to: s.to,
                    gain: s.gain,
                    j: s.utility.j,
                    candidates: s.candidates,
                })
                .collect(),
        };

        self.cycle = k;
        self.topology = committed;
        self.outcome = if detected.is_some() {
            Some(Outcome::Detected { cycle: k })
        } else if self.idle_cycles >= self.scenario.options.convergence_window {
            Some(Outcome::Converged { cycle: k })
        } else if k >= self.scenario.max_cycles {
            Some(Outcome::Exhausted { max_cycles: self.scenario.max_cycles })
        } else {
            None
        };
        self.records.push(record);
        self.records.last()
    }

    /// Utility recorded for a committed cycle. Under the legacy model `f_c`
    /// is the value the last placed node saw inside its own candidate batch.
    fn committed_utility(
        &self,
        objective: &Objective<'_>,
        committed: &Topology,
        start: &Topology,
        steps: &[Placement],
    ) -> UtilityBreakdown {
        match objective.comm {
            CommEvaluator::Dtn { .. } => objective.joint_utility(committed),
            CommEvaluator::Legacy(_) => {
                let last = steps.last().expect("at least one reactive node");
                debug_assert_eq!(start.get(last.node), last.from);
                last.utility
            }
        }
    }

    pub fn finish(self, wall_time: Duration) -> RunResult {
        RunResult {
            name: self.scenario.display_name().to_string(),
            outcome: self.outcome.unwrap_or(Outcome::Exhausted { max_cycles: self.cycle }),
            records: self.records,
            wall_time,
        }
    }
}

/// Runs a scenario to detection, convergence or `max_cycles`.
pub fn run(scenario: &Scenario) -> Result<RunResult> {
    let started = Instant::now();
    let mut engine = Engine::new(scenario.clone())?;
    while engine.step().is_some() {}
    Ok(engine.finish(started.elapsed()))
}
