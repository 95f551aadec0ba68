//! Disruption-tolerant communications utility.
//!
//! Every unordered node pair `(i, j)` carries a requirement `(c, h)`: the pair
//! may go at most `c` consecutive control cycles without communicating, and
//! when it does communicate the shortest path may use at most `h` hops. A
//! candidate topology conforms for a pair when the pair communicates in it,
//! or when the pair's non-communication streak, extended by this cycle, is
//! still within `c`. The utility is the conformance indicator averaged over
//! pairs with weight `1 / c`, so pairs that must talk often dominate.
//!
//! Streaks live in a [`ConnectivityLedger`], which only advances when a
//! cycle's placement is committed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Adjacency, Metric, Topology};

/// Communication requirement of one node pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetRequirement {
    /// Max consecutive control cycles without communication.
    pub c: u32,
    /// Max hops when communicating.
    pub h: u32,
}

impl NetRequirement {
    pub fn new(c: u32, h: u32) -> Self {
        Self { c, h }
    }

    /// Priority weight of the pair in the utility.
    pub fn weight(&self) -> f64 {
        1.0 / f64::from(self.c)
    }
}

/// Number of unordered distinct pairs over `n` nodes.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Index of the unordered pair `{i, j}` in `(0,1), (0,2), .., (1,2), ..` order.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    assert!(i != j && i < n && j < n, "pair ({i}, {j}) invalid for {n} nodes");
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// Iterates unordered pairs `(i, j)` with `i < j` in pair-index order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
}

/// Requirements over every unordered pair of distinct nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetConfig {
    n: usize,
    reqs: Vec<NetRequirement>,
}

/// Matrix cell as written in scenario files: `null` on the diagonal,
/// `[c, h]` elsewhere.
pub type MatrixCell = Option<[u32; 2]>;

impl NetConfig {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> NetRequirement) -> Self {
        let reqs = pairs(n).map(|(i, j)| f(i, j)).collect();
        Self { n, reqs }
    }

    pub fn uniform(n: usize, req: NetRequirement) -> Self {
        Self::from_fn(n, |_, _| req)
    }

    /// Builds a config from a full square matrix, rejecting ragged, asymmetric
    /// or incomplete input. `labels` name the rows for diagnostics.
    pub fn from_matrix(matrix: &[Vec<MatrixCell>], labels: &[String]) -> Result<Self> {
        let n = labels.len();
        if matrix.len() != n {
            return Err(Error::invalid(
                "net.matrix",
                format!("expected {n} rows (one per node), found {}", matrix.len()),
            ));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(
                    format!("net.matrix[{i}]"),
                    format!("row for {} has {} entries, expected {n}", labels[i], row.len()),
                ));
            }
            if row[i].is_some() {
                return Err(Error::invalid(
                    format!("net.matrix[{i}][{i}]"),
                    format!("diagonal entry for {} must be null (no self pairs)", labels[i]),
                ));
            }
        }
        let mut reqs = Vec::with_capacity(pair_count(n));
        for (i, j) in pairs(n) {
            let field = format!("net.matrix[{i}][{j}]");
            let pair = format!("pair ({}, {})", labels[i], labels[j]);
            let (upper, lower) = (matrix[i][j], matrix[j][i]);
            let [c, h] = match (upper, lower) {
                (Some(a), Some(b)) if a == b => a,
                (Some(a), Some(b)) => {
                    return Err(Error::invalid(
                        field,
                        format!("{pair} is asymmetric: {a:?} vs {b:?}"),
                    ))
                }
                _ => return Err(Error::invalid(field, format!("{pair} has no requirement"))),
            };
            if c == 0 || h == 0 {
                return Err(Error::invalid(field, format!("{pair}: c and h must be at least 1")));
            }
            reqs.push(NetRequirement::new(c, h));
        }
        Ok(Self { n, reqs })
    }

    pub fn to_matrix(&self) -> Vec<Vec<MatrixCell>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| (i != j).then(|| {
                        let r = self.get(i, j);
                        [r.c, r.h]
                    }))
                    .collect()
            })
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> NetRequirement {
        self.reqs[pair_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, req: NetRequirement) {
        let k = pair_index(self.n, i, j);
        self.reqs[k] = req;
    }

    /// Requirements in pair-index order.
    pub fn requirements(&self) -> &[NetRequirement] {
        &self.reqs
    }

    pub fn total_weight(&self) -> f64 {
        self.reqs.iter().map(NetRequirement::weight).sum()
    }
}

/// Consecutive committed cycles, ending at the last commit, in which each
/// pair failed to communicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConnectivityLedger {
    n: usize,
    streaks: Vec<u32>,
}

impl ConnectivityLedger {
    /// Mission start: every pair is assumed compliant.
    pub fn new(n: usize) -> Self {
        Self { n, streaks: vec![0; pair_count(n)] }
    }

    pub fn from_streaks(n: usize, streaks: Vec<u32>) -> Self {
        assert_eq!(streaks.len(), pair_count(n));
        Self { n, streaks }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn streak(&self, i: usize, j: usize) -> u32 {
        self.streaks[pair_index(self.n, i, j)]
    }

    pub fn streaks(&self) -> &[u32] {
        &self.streaks
    }
}

/// Shortest-path length in hops, `None` when unreachable.
pub fn hop_distance(i: usize, j: usize, adjacency: &Adjacency) -> Option<u32> {
    adjacency.hops_from(i)[j]
}

pub fn communicates(hops: Option<u32>, req: NetRequirement) -> bool {
    hops.is_some_and(|h| h <= req.h)
}

/// Conformance indicator for one pair: communicating now, or the extended
/// silence streak stays within the allowance.
pub fn conforms(communicating: bool, streak: u32, req: NetRequirement) -> bool {
    communicating || streak + 1 <= req.c
}

/// All-pairs hop distances in pair-index order.
pub fn pair_hops(adjacency: &Adjacency) -> Vec<Option<u32>> {
    let n = adjacency.len();
    let table: Vec<Vec<Option<u32>>> = (0..n).map(|i| adjacency.hops_from(i)).collect();
    pairs(n).map(|(i, j)| table[i][j]).collect()
}

/// Per-pair evaluation of one candidate topology against a ledger snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct DtnEvaluation {
    pub hops: Vec<Option<u32>>,
    pub communicating: Vec<bool>,
    pub conforming: Vec<bool>,
    pub utility: f64,
}

/// The configured model: requirements plus the link range.
#[derive(Debug, Clone, Copy)]
pub struct DtnModel<'a> {
    pub net: &'a NetConfig,
    pub c_max: f64,
    pub metric: Metric,
}

impl<'a> DtnModel<'a> {
    pub fn new(net: &'a NetConfig, c_max: f64, metric: Metric) -> Self {
        Self { net, c_max, metric }
    }

    pub fn evaluate(&self, candidate: &Topology, ledger: &ConnectivityLedger) -> DtnEvaluation {
        self.evaluate_links(&candidate.adjacency(self.c_max, self.metric), ledger)
    }

    pub fn evaluate_links(&self, adjacency: &Adjacency, ledger: &ConnectivityLedger) -> DtnEvaluation {
        let n = self.net.node_count();
        debug_assert_eq!(adjacency.len(), n);
        debug_assert_eq!(ledger.node_count(), n);
        let hops = pair_hops(adjacency);
        let reqs = self.net.requirements();
        let communicating: Vec<bool> =
            hops.iter().zip(reqs).map(|(&h, &r)| communicates(h, r)).collect();
        let conforming: Vec<bool> = communicating
            .iter()
            .zip(ledger.streaks())
            .zip(reqs)
            .map(|((&ok, &s), &r)| conforms(ok, s, r))
            .collect();
        let utility = weighted_conformance(reqs, &conforming);
        DtnEvaluation { hops, communicating, conforming, utility }
    }

    pub fn utility(&self, candidate: &Topology, ledger: &ConnectivityLedger) -> f64 {
        self.evaluate(candidate, ledger).utility
    }

    /// Advances the ledger by one committed cycle.
    pub fn commit(&self, committed: &Topology, ledger: &ConnectivityLedger) -> ConnectivityLedger {
        let eval = self.evaluate(committed, ledger);
        commit_cycle(&eval.communicating, ledger)
    }
}

/// `Σ (1/c)·m / Σ (1/c)` over pairs.
pub fn weighted_conformance(reqs: &[NetRequirement], conforming: &[bool]) -> f64 {
    let total: f64 = reqs.iter().map(NetRequirement::weight).sum();
    if total == 0.0 {
        return 1.0;
    }
    let met: f64 = reqs
        .iter()
        .zip(conforming)
        .filter(|(_, &m)| m)
        .map(|(r, _)| r.weight())
        .sum();
    met / total
}

/// Resets streaks of communicating pairs and extends the rest.
pub fn commit_cycle(communicating: &[bool], ledger: &ConnectivityLedger) -> ConnectivityLedger {
    let streaks = ledger
        .streaks()
        .iter()
        .zip(communicating)
        .map(|(&s, &ok)| if ok { 0 } else { s + 1 })
        .collect();
    ConnectivityLedger { n: ledger.n, streaks }
}
