//! Discretized 2-D operation space: grid bounds, node positions, distance
//! metrics, per-cycle move sets and the range-limited communication graph.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A grid vertex. Ordering is lexicographic on `(x, y)`, which the optimizer
/// relies on for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub x: i32,
    pub y: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Distance metric on grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    Chebyshev,
    Manhattan,
}

impl Metric {
    pub fn distance(self, a: Position, b: Position) -> f64 {
        let dx = f64::from(a.x - b.x).abs();
        let dy = f64::from(a.y - b.y).abs();
        match self {
            Metric::Euclidean => dx.hypot(dy),
            Metric::Chebyshev => dx.max(dy),
            Metric::Manhattan => dx + dy,
        }
    }
}

/// Euclidean distance in grid steps.
pub fn distance(a: Position, b: Position) -> f64 {
    Metric::Euclidean.distance(a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub width: u32,
    pub height: u32,
    /// Physical size of one grid step. Metadata only.
    #[serde(default = "default_step_meters")]
    pub step_meters: f64,
    #[serde(default)]
    pub metric: Metric,
    /// Non-navigable vertices. Empty in every shipped scenario.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<Position>,
}

fn default_step_meters() -> f64 {
    500.0
}

impl GridSpec {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            step_meters: default_step_meters(),
            metric: Metric::Euclidean,
            obstacles: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 2 {
            return Err(Error::invalid("grid.width", "must be at least 2"));
        }
        if self.height < 2 {
            return Err(Error::invalid("grid.height", "must be at least 2"));
        }
        if !(self.step_meters.is_finite() && self.step_meters > 0.0) {
            return Err(Error::invalid("grid.step_meters", "must be a positive number"));
        }
        for (k, p) in self.obstacles.iter().enumerate() {
            if !self.contains(*p) {
                return Err(Error::invalid(
                    format!("grid.obstacles[{k}]"),
                    format!("{p} is outside the grid"),
                ));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Position) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as i64) < self.width as i64 && (p.y as i64) < self.height as i64
    }

    pub fn is_navigable(&self, p: Position) -> bool {
        self.contains(p) && !self.obstacles.contains(&p)
    }

    pub fn distance(&self, a: Position, b: Position) -> f64 {
        self.metric.distance(a, b)
    }
}

/// Per-vehicle capability parameters, all measured in grid steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapabilityParams {
    pub s_max: f64,
    pub s_suf: f64,
    pub c_max: f64,
    pub m_max: f64,
    /// Edge-resistance decay constant.
    #[serde(default = "default_tau")]
    pub tau: f64,
}

fn default_tau() -> f64 {
    3.0
}

impl Default for CapabilityParams {
    /// UAV capabilities of the reference scenarios.
    fn default() -> Self {
        Self {
            s_max: 4.0,
            s_suf: 2.0,
            c_max: 5.0,
            m_max: 4.0,
            tau: default_tau(),
        }
    }
}

impl CapabilityParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("params.{field}"), "must be a positive number"))
            }
        };
        positive("s_max", self.s_max)?;
        positive("s_suf", self.s_suf)?;
        positive("c_max", self.c_max)?;
        positive("m_max", self.m_max)?;
        positive("tau", self.tau)?;
        if self.s_suf >= self.s_max {
            return Err(Error::invalid("params.s_suf", "must be strictly less than s_max"));
        }
        Ok(())
    }
}

/// Every navigable position reachable from `p` in one cycle, sorted
/// lexicographically. `p` itself is always included.
pub fn feasible_moves(p: Position, params: &CapabilityParams, grid: &GridSpec) -> Vec<Position> {
    let reach = params.m_max.floor() as i32;
    let mut out = Vec::new();
    for x in (p.x - reach)..=(p.x + reach) {
        for y in (p.y - reach)..=(p.y + reach) {
            let q = Position::new(x, y);
            if q == p || (grid.is_navigable(q) && grid.distance(p, q) <= params.m_max) {
                out.push(q);
            }
        }
    }
    out
}

/// Node placement for one control cycle, indexed by scenario node order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Topology(pub Vec<Position>);

impl Topology {
    pub fn new(positions: Vec<Position>) -> Self {
        Self(positions)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positions(&self) -> &[Position] {
        &self.0
    }

    pub fn get(&self, node: usize) -> Position {
        self.0[node]
    }

    pub fn with_node_at(&self, node: usize, p: Position) -> Self {
        let mut next = self.clone();
        next.0[node] = p;
        next
    }

    pub fn adjacency(&self, c_max: f64, metric: Metric) -> Adjacency {
        Adjacency::from_topology(self, c_max, metric)
    }
}

/// Symmetric boolean link matrix. Distinct co-located nodes are linked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    links: Vec<bool>,
}

impl Adjacency {
    pub fn from_topology(topology: &Topology, c_max: f64, metric: Metric) -> Self {
        let n = topology.len();
        let mut links = vec![false; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                if metric.distance(topology.get(i), topology.get(j)) <= c_max {
                    links[i * n + j] = true;
                    links[j * n + i] = true;
                }
            }
        }
        Self { n, links }
    }

    /// Links after `node` (of `topology`) moves to `p`; only that node's row
    /// and column are recomputed.
    pub fn with_node_moved(
        &self,
        topology: &Topology,
        node: usize,
        p: Position,
        c_max: f64,
        metric: Metric,
    ) -> Self {
        let n = self.n;
        let mut links = self.links.clone();
        for j in (0..n).filter(|&j| j != node) {
            let linked = metric.distance(p, topology.get(j)) <= c_max;
            links[node * n + j] = linked;
            links[j * n + node] = linked;
        }
        Self { n, links }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn linked(&self, i: usize, j: usize) -> bool {
        self.links[i * self.n + j]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.linked(i, j))
    }

    /// Breadth-first hop counts from `source`; `None` for unreachable nodes.
    pub fn hops_from(&self, source: usize) -> Vec<Option<u32>> {
        let mut hops = vec![None; self.n];
        hops[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let next = hops[u].map(|h| h + 1);
            for v in self.neighbors(u) {
                if hops[v].is_none() {
                    hops[v] = next;
                    queue.push_back(v);
                }
            }
        }
        hops
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.hops_from(0).iter().all(Option::is_some)
    }
}
