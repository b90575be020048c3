//! State spaces, graphs and potentials of a pairwise Markov random field.

mod graph;
mod potential;
mod space;

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

pub use graph::Graph;
pub use potential::{
    sample_mixture_ensemble, EdgePotential, EdgeTable, FlowObservation, NodePotential,
    POTENTIAL_FLOOR_REL,
};
pub use space::{Interval, StateSpace};

use crate::quadrature::Grid;
use crate::{Error, Result};

/// `p(x) ∝ prod_u psi_u(x_u) prod_(u,v) psi_uv(x_u, x_v)` with every
/// potential tabulated on the quadrature grid.
///
/// Edge potentials are shared through `Arc`: edges holding the same `Arc`
/// share one tabulation.
#[derive(Debug, Clone)]
pub struct PairwiseMrf {
    space: StateSpace,
    grid: Grid,
    graph: Graph,
    node_potentials: Vec<NodePotential>,
    edge_potentials: Vec<Arc<EdgePotential>>,
    node_tables: Vec<Vec<f64>>,
    tables: Vec<Arc<EdgeTable>>,
    edge_table_ids: Vec<usize>,
}

impl PairwiseMrf {
    pub fn new(
        space: StateSpace,
        graph: Graph,
        node_potentials: Vec<NodePotential>,
        edge_potentials: Vec<Arc<EdgePotential>>,
    ) -> Result<Self> {
        if node_potentials.len() != graph.num_nodes() {
            return Err(Error::Config(format!(
                "{} node potentials for {} nodes",
                node_potentials.len(),
                graph.num_nodes()
            )));
        }
        if edge_potentials.len() != graph.num_edges() {
            return Err(Error::Config(format!(
                "{} edge potentials for {} edges",
                edge_potentials.len(),
                graph.num_edges()
            )));
        }
        let grid = space.grid()?;
        for p in &node_potentials {
            p.validate(&space)?;
        }
        let node_tables = node_potentials
            .par_iter()
            .map(|p| p.tabulate(&grid))
            .collect::<Result<Vec<_>>>()?;

        let mut tables = Vec::new();
        let mut by_ptr: HashMap<*const EdgePotential, usize> = HashMap::new();
        let mut edge_table_ids = Vec::with_capacity(edge_potentials.len());
        for p in &edge_potentials {
            let key = Arc::as_ptr(p);
            let id = match by_ptr.get(&key) {
                Some(&id) => id,
                None => {
                    p.validate(&space)?;
                    tables.push(Arc::new(p.tabulate(&space, &grid)?));
                    by_ptr.insert(key, tables.len() - 1);
                    tables.len() - 1
                }
            };
            edge_table_ids.push(id);
        }
        Ok(Self {
            space,
            grid,
            graph,
            node_potentials,
            edge_potentials,
            node_tables,
            tables,
            edge_table_ids,
        })
    }

    /// Chain `0 - 1 - ... - (n-1)` with `n` node and `n - 1` edge potentials.
    pub fn chain(
        space: StateSpace,
        node_potentials: Vec<NodePotential>,
        edge_potentials: Vec<Arc<EdgePotential>>,
    ) -> Result<Self> {
        let n = node_potentials.len();
        if n < 2 || edge_potentials.len() + 1 != n {
            return Err(Error::Config(format!(
                "chain needs n >= 2 node potentials and n - 1 edge potentials, got {} and {}",
                n,
                edge_potentials.len()
            )));
        }
        Self::new(space, Graph::chain(n)?, node_potentials, edge_potentials)
    }

    /// 4-connected `width x height` lattice; potentials follow
    /// [`Graph::grid2d`] node and edge order.
    pub fn grid2d(
        space: StateSpace,
        width: usize,
        height: usize,
        node_potentials: Vec<NodePotential>,
        edge_potentials: Vec<Arc<EdgePotential>>,
    ) -> Result<Self> {
        Self::new(space, Graph::grid2d(width, height)?, node_potentials, edge_potentials)
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node_potential(&self, v: usize) -> &NodePotential {
        &self.node_potentials[v]
    }

    pub fn edge_potential(&self, e: usize) -> &Arc<EdgePotential> {
        &self.edge_potentials[e]
    }

    /// `psi_v` on the grid.
    pub fn node_table(&self, v: usize) -> &[f64] {
        &self.node_tables[v]
    }

    /// Tabulation of undirected edge `e` in its stored orientation.
    pub fn edge_table(&self, e: usize) -> &EdgeTable {
        &self.tables[self.edge_table_ids[e]]
    }

    pub fn table_by_id(&self, id: usize) -> &EdgeTable {
        &self.tables[id]
    }

    /// Table id and orientation such that
    /// `table.value(x_u, y_v, transposed) = psi_uv(x_u, y_v)` for directed
    /// edge `i = v -> u`.
    pub fn edge_table_key(&self, i: usize) -> (usize, bool) {
        let (e, reversed) = self.graph.undirected_of(i);
        // Stored edge (a, b); i even means v = a, u = b, so the receiving
        // variable sits in the second slot.
        (self.edge_table_ids[e], !reversed)
    }

    /// `out(x_u) = sum_y w_y psi_uv(x_u, y) h(y)` for directed edge `v -> u`.
    pub fn apply_edge(&self, i: usize, h_weighted: &[f64], out: &mut [f64]) {
        let (id, transposed) = self.edge_table_key(i);
        self.tables[id].apply(&self.grid, h_weighted, transposed, out);
    }

    /// `psi_uv(x_u, y_v)` at grid nodes for directed edge `v -> u`.
    pub fn edge_value(&self, i: usize, x_u: usize, y_v: usize) -> f64 {
        let (id, transposed) = self.edge_table_key(i);
        self.tables[id].value(&self.grid, x_u, y_v, transposed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_chain(n: usize) -> PairwiseMrf {
        let space = StateSpace::interval(-1.0, 1.0, 10).unwrap();
        let e = Arc::new(EdgePotential::Uniform);
        PairwiseMrf::chain(
            space,
            vec![NodePotential::Uniform; n],
            vec![e; n - 1],
        )
        .unwrap()
    }

    #[test]
    fn chain_shares_tables() {
        let m = uniform_chain(5);
        assert_eq!(m.graph().num_directed(), 8);
        assert_eq!(m.tables.len(), 1);
    }

    #[test]
    fn length_mismatch_is_config_error() {
        let space = StateSpace::interval(-1.0, 1.0, 10).unwrap();
        let r = PairwiseMrf::chain(
            space,
            vec![NodePotential::Uniform; 3],
            vec![Arc::new(EdgePotential::Uniform)],
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn edge_orientation_matches_potential() {
        let space = StateSpace::interval(0.0, 1.0, 2).unwrap();
        let values: Vec<f64> = (1..=9).map(|v| v as f64).collect();
        let m = PairwiseMrf::chain(
            space,
            vec![NodePotential::Uniform; 2],
            vec![Arc::new(EdgePotential::GridTable { values })],
        )
        .unwrap();
        // stored psi(x_0, x_1) = values[x0 * 3 + x1]
        let i01 = m.graph().directed_index(0, 1).unwrap();
        let i10 = m.graph().directed_index(1, 0).unwrap();
        // 0 -> 1: u = 1, v = 0, psi(x_u = 2, y_v = 0) = psi(x_0 = 0, x_1 = 2) = 3
        assert_eq!(m.edge_value(i01, 2, 0), 3.0);
        // 1 -> 0: u = 0, v = 1, psi(x_u = 2, y_v = 0) = psi(x_0 = 2, x_1 = 0) = 7
        assert_eq!(m.edge_value(i10, 2, 0), 7.0);
    }
}
