//! The evolving undirected network of experts.
//!
//! Nodes carry a bounded window of their recent absolute errors (from which
//! the node RMSE is derived) and a centrality weight used for voting. Every
//! mutation through [`ExpertNetwork::add_node_preferential`],
//! [`ExpertNetwork::add_node_by_degree`] and
//! [`ExpertNetwork::remove_node_rewire`] leaves the graph connected.

mod attachment;
mod centrality;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::{self, Write};

pub use attachment::{
    attach_probabilities, degree_attach_probabilities, node_rmse, sample_index,
    sample_without_replacement,
};
pub use centrality::{centrality, Centrality};

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

pub const DEFAULT_EDGES_PER_NODE: usize = 2;
pub const DEFAULT_ERROR_WINDOW: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct NodeStats {
    errors: VecDeque<f64>,
    capacity: usize,
    /// Centrality weight assigned at the last recomputation.
    pub zeta: f64,
    pub born_at: u64,
}

impl NodeStats {
    fn new(capacity: usize, born_at: u64) -> Self {
        Self {
            errors: VecDeque::new(),
            capacity,
            zeta: 0.0,
            born_at,
        }
    }

    pub fn record_error(&mut self, abs_error: f64) {
        if self.errors.len() == self.capacity {
            self.errors.pop_front();
        }
        self.errors.push_back(abs_error.abs());
    }

    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.errors.iter().copied()
    }

    pub fn n_errors(&self) -> usize {
        self.errors.len()
    }

    /// Node RMSE over the error window; 0 for a node that has not predicted.
    pub fn phi(&self) -> f64 {
        let (a, b) = self.errors.as_slices();
        if b.is_empty() {
            node_rmse(a)
        } else {
            node_rmse(&self.errors.iter().copied().collect::<Vec<_>>())
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpertNetwork {
    nodes: BTreeMap<NodeId, NodeStats>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    k_max: usize,
    edges_per_node: usize,
    error_window: usize,
}

impl ExpertNetwork {
    pub fn new(k_max: usize, edges_per_node: usize, error_window: usize) -> Result<Self> {
        if k_max == 0 || edges_per_node == 0 || error_window == 0 {
            return Err(Error::InvalidArgument(
                "k_max, edges per node and error window must be positive".into(),
            ));
        }
        Ok(Self {
            nodes: BTreeMap::new(),
            adjacency: BTreeMap::new(),
            k_max,
            edges_per_node,
            error_window,
        })
    }

    /// Builds an arbitrary graph on nodes `0..n`; it need not be connected.
    pub fn from_edges(n: u64, edges: &[(u64, u64)]) -> Result<Self> {
        let mut net = Self::new(n.max(1) as usize, DEFAULT_EDGES_PER_NODE, DEFAULT_ERROR_WINDOW)?;
        for id in 0..n {
            net.insert_isolated(NodeId(id), 0);
        }
        for &(a, b) in edges {
            let (a, b) = (NodeId(a), NodeId(b));
            if a == b || !net.contains(a) || !net.contains(b) {
                return Err(Error::Graph(format!("invalid edge {a}-{b}")));
            }
            net.link(a, b);
        }
        Ok(net)
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn edges_per_node(&self) -> usize {
        self.edges_per_node
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.nodes.len() >= self.k_max
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Node ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeStats> {
        self.nodes.get(&id)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeStats> {
        self.nodes.get_mut(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &NodeStats)> + '_ {
        self.nodes.iter().map(|(k, v)| (*k, v))
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency.get(&id).map_or(0, BTreeSet::len)
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency.get(&a).is_some_and(|s| s.contains(&b))
    }

    /// Each undirected edge once, as `(low, high)`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn phis(&self) -> Vec<f64> {
        self.nodes.values().map(NodeStats::phi).collect()
    }

    pub fn record_error(&mut self, id: NodeId, abs_error: f64) {
        if let Some(n) = self.nodes.get_mut(&id) {
            n.record_error(abs_error);
        }
    }

    fn insert_isolated(&mut self, id: NodeId, born_at: u64) {
        self.nodes.insert(id, NodeStats::new(self.error_window, born_at));
        self.adjacency.insert(id, BTreeSet::new());
    }

    fn link(&mut self, a: NodeId, b: NodeId) {
        self.adjacency.entry(a).or_default().insert(b);
        self.adjacency.entry(b).or_default().insert(a);
    }

    /// Adds `id`, linking it to `min(m_a, |nodes|)` distinct existing nodes
    /// drawn with the error-adapted attachment law. Returns the chosen targets.
    pub fn add_node_preferential(
        &mut self,
        id: NodeId,
        born_at: u64,
        rng: &mut StreamRng,
    ) -> Result<Vec<NodeId>> {
        let weights = if self.is_empty() {
            Vec::new()
        } else {
            attach_probabilities(&self.phis())?
        };
        self.add_node_weighted(id, born_at, &weights, rng)
    }

    /// Adds `id` using degree-proportional attachment.
    pub fn add_node_by_degree(
        &mut self,
        id: NodeId,
        born_at: u64,
        rng: &mut StreamRng,
    ) -> Result<Vec<NodeId>> {
        let weights = if self.is_empty() {
            Vec::new()
        } else {
            let degrees: Vec<usize> = self.ids().map(|n| self.degree(n)).collect();
            degree_attach_probabilities(&degrees)?
        };
        self.add_node_weighted(id, born_at, &weights, rng)
    }

    fn add_node_weighted(
        &mut self,
        id: NodeId,
        born_at: u64,
        weights: &[f64],
        rng: &mut StreamRng,
    ) -> Result<Vec<NodeId>> {
        if self.contains(id) {
            return Err(Error::Graph(format!("node {id} already in network")));
        }
        let ids: Vec<NodeId> = self.ids().collect();
        let count = self.edges_per_node.min(ids.len());
        let targets: Vec<NodeId> = sample_without_replacement(weights, count, rng)
            .into_iter()
            .map(|i| ids[i])
            .collect();
        self.insert_isolated(id, born_at);
        for &t in &targets {
            self.link(id, t);
        }
        Ok(targets)
    }

    /// Node with the highest RMSE; ties go to the lowest id.
    pub fn worst_node(&self) -> Option<NodeId> {
        let mut best: Option<(NodeId, f64)> = None;
        for (id, stats) in self.nodes() {
            let phi = stats.phi();
            if best.is_none_or(|(_, p)| phi > p) {
                best = Some((id, phi));
            }
        }
        best.map(|b| b.0)
    }

    /// Removes `victim` and reconnects any component it leaves behind: each
    /// component other than the largest gets one edge from a uniformly chosen
    /// member to a member of the largest, drawn by error-adapted attachment.
    /// Returns the edges added by rewiring.
    pub fn remove_node_rewire(
        &mut self,
        victim: NodeId,
        rng: &mut StreamRng,
    ) -> Result<Vec<(NodeId, NodeId)>> {
        if !self.contains(victim) {
            return Err(Error::Graph(format!("node {victim} not in network")));
        }
        if self.len() < 2 {
            return Err(Error::Graph("cannot remove the last node".into()));
        }
        self.nodes.remove(&victim);
        if let Some(ns) = self.adjacency.remove(&victim) {
            for n in ns {
                if let Some(s) = self.adjacency.get_mut(&n) {
                    s.remove(&victim);
                }
            }
        }

        let comps = self.components();
        if comps.len() <= 1 {
            return Ok(Vec::new());
        }
        // Components come ordered by smallest id, so max_by_key's "last max"
        // rule would break ties upward; scan manually to keep the first.
        let mut largest = 0;
        for (i, c) in comps.iter().enumerate() {
            if c.len() > comps[largest].len() {
                largest = i;
            }
        }
        let hub_side = &comps[largest];
        let phis: Vec<f64> = hub_side
            .iter()
            .map(|id| self.nodes[id].phi())
            .collect();
        let weights = attach_probabilities(&phis)?;

        let mut added = Vec::new();
        for (i, comp) in comps.iter().enumerate() {
            if i == largest {
                continue;
            }
            let from = comp[rng::index(rng, comp.len())];
            let to = hub_side[sample_index(&weights, rng)];
            added.push((from, to));
        }
        for &(a, b) in &added {
            self.link(a, b);
        }
        Ok(added)
    }

    /// Connected components, each sorted ascending, ordered by smallest id.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.ids() {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for n in self.neighbors(v) {
                    if seen.insert(n) {
                        comp.push(n);
                        queue.push_back(n);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// True for empty and single-node graphs.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.ids().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for n in self.neighbors(v) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == self.len()
    }

    /// Recomputes `zeta` for every node with the given metric.
    pub fn update_centrality(&mut self, metric: Centrality) -> Result<()> {
        let scores = centrality(self, metric)?;
        for (id, score) in scores {
            if let Some(n) = self.nodes.get_mut(&id) {
                n.zeta = score;
            }
        }
        Ok(())
    }

    /// One `u v` line per undirected edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (a, b) in self.edges() {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }

    /// `id,phi,zeta,degree` table with a header row.
    pub fn write_node_table<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "id,phi,zeta,degree")?;
        for (id, n) in self.nodes() {
            writeln!(out, "{id},{},{},{}", n.phi(), n.zeta, self.degree(id))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u64]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn seed_node_has_no_edges_and_second_gets_one() {
        let mut rng = rng::seeded(1);
        let mut net = ExpertNetwork::new(10, 2, 100).unwrap();
        assert!(net.add_node_preferential(NodeId(0), 0, &mut rng).unwrap().is_empty());
        assert_eq!(net.edge_count(), 0);
        let t = net.add_node_preferential(NodeId(1), 0, &mut rng).unwrap();
        assert_eq!(t, ids(&[0]));
        assert_eq!(net.edge_count(), 1);
        let t = net.add_node_preferential(NodeId(2), 0, &mut rng).unwrap();
        assert_eq!(t.len(), 2);
        assert!(net.is_connected());
    }

    #[test]
    fn duplicate_id_rejected() {
        let mut rng = rng::seeded(1);
        let mut net = ExpertNetwork::new(10, 2, 100).unwrap();
        net.add_node_preferential(NodeId(0), 0, &mut rng).unwrap();
        assert!(net.add_node_preferential(NodeId(0), 0, &mut rng).is_err());
    }

    #[test]
    fn remove_leaf_needs_no_rewiring() {
        let mut rng = rng::seeded(1);
        let mut net = ExpertNetwork::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(net.remove_node_rewire(NodeId(2), &mut rng).unwrap().is_empty());
        assert!(net.is_connected());
        assert_eq!(net.len(), 2);
    }

    #[test]
    fn remove_path_center_links_ends() {
        let mut rng = rng::seeded(1);
        let mut net = ExpertNetwork::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let added = net.remove_node_rewire(NodeId(1), &mut rng).unwrap();
        assert_eq!(added, vec![(NodeId(2), NodeId(0))]);
        assert!(net.has_edge(NodeId(0), NodeId(2)));
        assert_eq!(net.edge_count(), 1);
    }

    #[test]
    fn remove_star_hub_adds_three_edges() {
        let mut rng = rng::seeded(1);
        let mut net = ExpertNetwork::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let added = net.remove_node_rewire(NodeId(0), &mut rng).unwrap();
        assert_eq!(added.len(), 3);
        assert!(added.iter().all(|&(_, to)| to == NodeId(1)));
        assert!(net.is_connected());
    }

    #[test]
    fn cannot_remove_last_or_missing_node() {
        let mut rng = rng::seeded(1);
        let mut net = ExpertNetwork::from_edges(1, &[]).unwrap();
        assert!(net.remove_node_rewire(NodeId(0), &mut rng).is_err());
        assert!(net.remove_node_rewire(NodeId(7), &mut rng).is_err());
    }

    #[test]
    fn connectivity_checks() {
        assert!(ExpertNetwork::new(3, 2, 10).unwrap().is_connected());
        assert!(ExpertNetwork::from_edges(1, &[]).unwrap().is_connected());
        assert!(!ExpertNetwork::from_edges(2, &[]).unwrap().is_connected());
        assert!(ExpertNetwork::from_edges(2, &[(0, 1)]).unwrap().is_connected());
        assert!(ExpertNetwork::from_edges(2, &[(0, 0)]).is_err());
    }

    #[test]
    fn worst_node_prefers_highest_phi_then_lowest_id() {
        let mut net = ExpertNetwork::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        net.record_error(NodeId(0), 0.9);
        net.record_error(NodeId(1), 0.1);
        assert_eq!(net.worst_node(), Some(NodeId(0)));
        net.record_error(NodeId(2), 0.9);
        net.record_error(NodeId(2), 0.9);
        assert_eq!(net.worst_node(), Some(NodeId(0)));
    }

    #[test]
    fn phi_tracks_bounded_window() {
        let mut net = ExpertNetwork::new(3, 2, 4).unwrap();
        let mut rng = rng::seeded(0);
        net.add_node_preferential(NodeId(0), 0, &mut rng).unwrap();
        for e in [5.0, 5.0, 1.0, 1.0, 1.0, -1.0] {
            net.record_error(NodeId(0), e);
        }
        let n = net.node(NodeId(0)).unwrap();
        assert_eq!(n.n_errors(), 4);
        assert!((n.phi() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dumps() {
        let mut net = ExpertNetwork::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        net.update_centrality(Centrality::Degree).unwrap();
        let mut edges = Vec::new();
        net.write_edge_list(&mut edges).unwrap();
        assert_eq!(String::from_utf8(edges).unwrap(), "0 1\n1 2\n");
        let mut table = Vec::new();
        net.write_node_table(&mut table).unwrap();
        let table = String::from_utf8(table).unwrap();
        assert!(table.starts_with("id,phi,zeta,degree\n0,0,1,1\n1,0,2,2\n"));
    }
}
