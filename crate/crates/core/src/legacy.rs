//! Baseline communications utility built on graph resistance: exponential
//! edge resistance, the Kirchhoff index of the conductance Laplacian, and
//! min-max normalization over one node's candidate moves.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Metric, Topology};

/// Resistance of a link whose endpoints sit `d` steps apart. Infinite past
/// `c_max`.
pub fn edge_resistance(d: f64, c_max: f64, tau: f64) -> Result<f64> {
    if d.is_nan() || d <= 0.0 {
        return Err(Error::Domain("edge distance (must be > 0)"));
    }
    Ok(edge_resistance_or_colocated(d, c_max, tau))
}

/// Same as [`edge_resistance`] but `d == 0` (distinct nodes on one vertex)
/// evaluates as the `d -> 0+` limit.
pub fn edge_resistance_or_colocated(d: f64, c_max: f64, tau: f64) -> f64 {
    if d > c_max {
        f64::INFINITY
    } else {
        1.0 - 0.9 * (-tau * d.max(0.0) / c_max).exp()
    }
}

/// How edge resistances enter the Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianWeighting {
    /// Off-diagonal weight `1 / e(d)`.
    #[default]
    Conductance,
    /// Off-diagonal weight `e(d)` itself.
    Resistance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCommGraph {
    conductances: DMatrix<f64>,
}

impl WeightedCommGraph {
    /// Panics if `weights` is not square.
    pub fn from_matrix(weights: DMatrix<f64>) -> Self {
        assert!(weights.is_square(), "conductance matrix must be square");
        Self { conductances: weights }
    }

    pub fn from_topology(
        topology: &Topology,
        c_max: f64,
        tau: f64,
        metric: Metric,
        weighting: LaplacianWeighting,
    ) -> Self {
        let n = topology.len();
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = metric.distance(topology.get(i), topology.get(j));
                let e = edge_resistance_or_colocated(d, c_max, tau);
                if e.is_finite() {
                    let v = match weighting {
                        LaplacianWeighting::Conductance => 1.0 / e,
                        LaplacianWeighting::Resistance => e,
                    };
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
        }
        Self { conductances: w }
    }

    pub fn len(&self) -> usize {
        self.conductances.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn conductances(&self) -> &DMatrix<f64> {
        &self.conductances
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut l = -self.conductances.clone();
        for i in 0..n {
            l[(i, i)] = self.conductances.row(i).sum();
        }
        l
    }
}

/// λ₂ below this fraction of λ_max counts as a disconnected graph.
const CONNECTIVITY_RTOL: f64 = 1e-9;

/// `N · Σ_{k≥2} 1/λ_k` over the Laplacian spectrum, or infinity when the
/// graph is disconnected.
pub fn graph_resistance(g: &WeightedCommGraph) -> Result<f64> {
    let n = g.len();
    if n < 2 {
        return Err(Error::Domain("graph resistance needs at least two nodes"));
    }
    let eig = SymmetricEigen::try_new(g.laplacian(), 1e-14, 10_000).ok_or(Error::Eigensolver(n))?;
    let mut lambdas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    lambdas.sort_by(f64::total_cmp);
    let lambda_max = lambdas[n - 1];
    if lambda_max <= 0.0 || lambdas[1] < CONNECTIVITY_RTOL * lambda_max {
        return Ok(f64::INFINITY);
    }
    Ok(n as f64 * lambdas[1..].iter().map(|l| 1.0 / l).sum::<f64>())
}

/// Communication utility for a batch of candidate positions of one node,
/// given each candidate's graph resistance.
pub fn legacy_comm_utility(r_values: &[f64]) -> Vec<f64> {
    let finite = r_values.iter().copied().filter(|r| r.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
    r_values
        .iter()
        .map(|&r| {
            if !r.is_finite() {
                0.0
            } else if hi > lo {
                1.0 - (r - lo) / (hi - lo)
            } else {
                1.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Position;

    #[test]
    fn edge_resistance_examples() {
        assert!((edge_resistance_or_colocated(0.0, 5.0, 3.0) - 0.1).abs() < 1e-12);
        let at_range = edge_resistance(5.0, 5.0, 3.0).unwrap();
        assert!((at_range - 0.955192).abs() < 1e-6);
        assert!(edge_resistance(5.001, 5.0, 3.0).unwrap().is_infinite());
        assert!(edge_resistance(0.0, 5.0, 3.0).is_err());
        assert!(edge_resistance(-1.0, 5.0, 3.0).is_err());
    }

    fn unit_graph(n: usize, edges: &[(usize, usize)]) -> WeightedCommGraph {
        let mut w = DMatrix::zeros(n, n);
        for &(i, j) in edges {
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
        WeightedCommGraph::from_matrix(w)
    }

    #[test]
    fn resistance_hand_cases() {
        let two = graph_resistance(&unit_graph(2, &[(0, 1)])).unwrap();
        assert!((two - 1.0).abs() < 1e-9);
        let tri = graph_resistance(&unit_graph(3, &[(0, 1), (1, 2), (0, 2)])).unwrap();
        assert!((tri - 2.0).abs() < 1e-9);
        assert!(graph_resistance(&unit_graph(2, &[])).unwrap().is_infinite());
        assert!(graph_resistance(&unit_graph(4, &[(0, 1), (2, 3)])).unwrap().is_infinite());
        assert!(graph_resistance(&unit_graph(1, &[])).is_err());
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(legacy_comm_utility(&[1.0, 2.0, 3.0]), vec![1.0, 0.5, 0.0]);
        let inf = f64::INFINITY;
        assert_eq!(legacy_comm_utility(&[inf, inf]), vec![0.0, 0.0]);
        assert_eq!(legacy_comm_utility(&[2.5]), vec![1.0]);
        assert_eq!(legacy_comm_utility(&[2.5, inf, 2.5]), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn closer_nodes_have_lower_resistance() {
        let near = Topology::new(vec![Position::new(0, 0), Position::new(1, 0)]);
        let far = Topology::new(vec![Position::new(0, 0), Position::new(4, 0)]);
        let r = |t: &Topology| {
            let g = WeightedCommGraph::from_topology(t, 5.0, 3.0, Metric::Euclidean, Default::default());
            graph_resistance(&g).unwrap()
        };
        assert!(r(&near) < r(&far));
    }

    #[test]
    fn resistance_weighting_switch() {
        let t = Topology::new(vec![Position::new(0, 0), Position::new(5, 0)]);
        let g = WeightedCommGraph::from_topology(&t, 5.0, 3.0, Metric::Euclidean, LaplacianWeighting::Resistance);
        let e = edge_resistance(5.0, 5.0, 3.0).unwrap();
        assert!((g.conductances()[(0, 1)] - e).abs() < 1e-15);
    }
}
